//! Direction algebra and torus geometry of the von Neumann neighborhood.
//!
//! A direction is the zero vector or one of the `2d` signed unit vectors of a
//! `d`-dimensional lattice. Cells live on a torus whose sides are all greater
//! than 4; under that assumption two neighborhoods share 0, 1 or 2 cells and
//! the sharing geometry is classified by [`neighborhood_overlap`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, MAX_CELLS, MAX_DIMENSION};

pub(crate) fn check_dimension(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIMENSION {
        return Err(Error::InvalidDimension(dim));
    }
    Ok(())
}

/// One of the `2d + 1` directions of the von Neumann neighborhood.
///
/// Index encoding: `0` is the zero vector; axis `k` (1-based) contributes
/// `2k - 1` for its positive direction and `2k` for its negative direction.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Direction(u8);

impl Direction {
    /// The zero vector.
    pub const CENTER: Direction = Direction(0);

    /// Positive unit vector along `axis` (1-based).
    pub fn positive(axis: usize) -> Direction {
        assert!((1..=MAX_DIMENSION).contains(&axis));
        Direction((2 * axis - 1) as u8)
    }

    /// Negative unit vector along `axis` (1-based).
    pub fn negative(axis: usize) -> Direction {
        assert!((1..=MAX_DIMENSION).contains(&axis));
        Direction((2 * axis) as u8)
    }

    pub fn from_index(index: usize, dim: usize) -> Result<Direction> {
        check_dimension(dim)?;
        if index > 2 * dim {
            return Err(Error::InvalidDirection { index, dim });
        }
        Ok(Direction(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_center(self) -> bool {
        self.0 == 0
    }

    /// The axis this direction points along (1-based), `None` for the center.
    pub fn axis(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some((self.0 as usize).div_ceil(2))
        }
    }

    /// `+1` for positive directions, `-1` for negative ones, `0` for the center.
    pub fn sign(self) -> i32 {
        if self.0 == 0 {
            0
        } else if self.0 % 2 == 1 {
            1
        } else {
            -1
        }
    }

    /// Negation; an involution whose only fixed point is the center.
    pub fn negate(self) -> Direction {
        match self.0 {
            0 => Direction(0),
            i if i % 2 == 1 => Direction(i + 1),
            i => Direction(i - 1),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.axis(), self.sign()) {
            (None, _) => write!(f, "0"),
            (Some(axis), 1) => write!(f, "+{axis}"),
            (Some(axis), _) => write!(f, "-{axis}"),
        }
    }
}

impl fmt::Debug for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Direction({self})")
    }
}

impl FromStr for Direction {
    type Err = Error;

    /// Parses the signed axis notation: `"0"`, `"+1"`, `"-1"`, `"+2"`, ...
    fn from_str(s: &str) -> Result<Direction> {
        let invalid = || Error::Format(format!("invalid direction {s:?}"));
        if s == "0" {
            return Ok(Direction::CENTER);
        }
        let (sign, digits) = s.split_at(1.min(s.len()));
        let axis: usize = digits.parse().map_err(|_| invalid())?;
        if axis == 0 || axis > MAX_DIMENSION {
            return Err(invalid());
        }
        match sign {
            "+" => Ok(Direction::positive(axis)),
            "-" => Ok(Direction::negative(axis)),
            _ => Err(invalid()),
        }
    }
}

impl Serialize for Direction {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Direction {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All `2d + 1` directions in canonical index order.
pub fn direction_set(dim: usize) -> Result<Vec<Direction>> {
    check_dimension(dim)?;
    Ok((0..=2 * dim).map(|i| Direction(i as u8)).collect())
}

/// The `2d` nonzero directions in canonical index order.
pub fn positive_directions(dim: usize) -> Result<Vec<Direction>> {
    check_dimension(dim)?;
    Ok((1..=2 * dim).map(|i| Direction(i as u8)).collect())
}

/// An unordered pair of directions along which two von Neumann neighborhoods
/// can share exactly two cells: either the center paired with a nonzero
/// direction, or two nonzero directions on distinct axes.
///
/// Stored with the lower direction index first.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct OmegaPair {
    first: Direction,
    second: Direction,
}

impl OmegaPair {
    pub fn new(u: Direction, w: Direction, dim: usize) -> Result<OmegaPair> {
        check_dimension(dim)?;
        let bad = || Error::InvalidOmegaPair(u.to_string(), w.to_string());
        if u.index() > 2 * dim || w.index() > 2 * dim {
            return Err(bad());
        }
        if u == w || (u.axis().is_some() && u.axis() == w.axis()) {
            return Err(bad());
        }
        let (first, second) = if u.index() < w.index() { (u, w) } else { (w, u) };
        Ok(OmegaPair { first, second })
    }

    pub fn first(self) -> Direction {
        self.first
    }

    pub fn second(self) -> Direction {
        self.second
    }

    /// The pair obtained by negating both directions.
    pub fn matching(self) -> OmegaPair {
        let (a, b) = (self.first.negate(), self.second.negate());
        let (first, second) = if a.index() < b.index() { (a, b) } else { (b, a) };
        OmegaPair { first, second }
    }

    fn key(self) -> (usize, usize) {
        (self.first.index(), self.second.index())
    }
}

impl fmt::Display for OmegaPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.first, self.second)
    }
}

/// All `2d^2` pairs, sorted by their index tuples.
pub fn omega_pairs(dim: usize) -> Result<Vec<OmegaPair>> {
    check_dimension(dim)?;
    let dirs = direction_set(dim)?;
    let mut pairs = Vec::with_capacity(2 * dim * dim);
    for (i, &u) in dirs.iter().enumerate() {
        for &w in &dirs[i + 1..] {
            if let Ok(p) = OmegaPair::new(u, w, dim) {
                pairs.push(p);
            }
        }
    }
    pairs.sort_by_key(|p| p.key());
    debug_assert_eq!(pairs.len(), 2 * dim * dim);
    Ok(pairs)
}

/// A choice of one pair out of each of the `d^2` matching classes.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LambdaSelection {
    dim: usize,
    pairs: Vec<OmegaPair>,
}

impl LambdaSelection {
    /// Picks from each matching class the pair with the lexicographically
    /// smaller index tuple.
    pub fn canonical(dim: usize) -> Result<LambdaSelection> {
        let pairs = omega_pairs(dim)?
            .into_iter()
            .filter(|p| p.key() < p.matching().key())
            .collect();
        Ok(LambdaSelection { dim, pairs })
    }

    /// Validates an explicit selection: `d^2` pairs, one per matching class.
    pub fn new(dim: usize, mut pairs: Vec<OmegaPair>) -> Result<LambdaSelection> {
        check_dimension(dim)?;
        if pairs.len() != dim * dim {
            return Err(Error::InvalidLambda(format!(
                "expected {} pairs, got {}",
                dim * dim,
                pairs.len()
            )));
        }
        for &p in &pairs {
            // Revalidates membership for this dimension.
            OmegaPair::new(p.first, p.second, dim)?;
        }
        let mut classes: Vec<(usize, usize)> = pairs
            .iter()
            .map(|p| p.key().min(p.matching().key()))
            .collect();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() != dim * dim {
            return Err(Error::InvalidLambda(
                "selection must contain exactly one pair from each matching class".into(),
            ));
        }
        pairs.sort_by_key(|p| p.key());
        Ok(LambdaSelection { dim, pairs })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn pairs(&self) -> &[OmegaPair] {
        &self.pairs
    }

    /// Every possible selection, `2^{d^2}` in total. Only sensible for small `d`.
    pub fn all(dim: usize) -> Result<Vec<LambdaSelection>> {
        check_dimension(dim)?;
        let canonical = LambdaSelection::canonical(dim)?;
        let n = dim * dim;
        let mut out = Vec::with_capacity(1 << n);
        for mask in 0u32..(1u32 << n) {
            let pairs: Vec<OmegaPair> = canonical
                .pairs
                .iter()
                .enumerate()
                .map(|(i, p)| if mask >> i & 1 == 1 { p.matching() } else { *p })
                .collect();
            out.push(LambdaSelection::new(dim, pairs)?);
        }
        Ok(out)
    }
}

/// Side lengths of a toroidal grid; every side must exceed 4.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct LatticeShape {
    dims: Vec<u32>,
}

impl LatticeShape {
    pub fn new(dims: Vec<u32>) -> Result<LatticeShape> {
        check_dimension(dims.len())?;
        if let Some(&bad) = dims.iter().find(|&&n| n < 5) {
            return Err(Error::SideTooSmall(bad));
        }
        let mut cells: u64 = 1;
        for &n in &dims {
            cells = cells
                .checked_mul(n as u64)
                .filter(|&c| c <= MAX_CELLS)
                .ok_or(Error::LatticeTooLarge)?;
        }
        Ok(LatticeShape { dims })
    }

    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn cell_count(&self) -> u64 {
        self.dims.iter().map(|&n| n as u64).product()
    }

    pub fn contains(&self, cell: &CellIndex) -> bool {
        cell.coords.len() == self.dims.len()
            && cell.coords.iter().zip(&self.dims).all(|(&c, &n)| c < n)
    }

    fn check_cell(&self, cell: &CellIndex) -> Result<()> {
        if cell.coords.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                got: cell.coords.len(),
            });
        }
        for (&c, &n) in cell.coords.iter().zip(&self.dims) {
            if c >= n {
                return Err(Error::CellOutOfRange { coord: c, side: n });
            }
        }
        Ok(())
    }

    /// The cell reached from `cell` by one step in `direction`, with wraparound.
    pub fn step(&self, cell: &CellIndex, direction: Direction) -> CellIndex {
        let mut coords = cell.coords.clone();
        if let Some(axis) = direction.axis() {
            let n = self.dims[axis - 1];
            let c = &mut coords[axis - 1];
            *c = if direction.sign() > 0 {
                if *c + 1 == n {
                    0
                } else {
                    *c + 1
                }
            } else if *c == 0 {
                n - 1
            } else {
                *c - 1
            };
        }
        CellIndex { coords }
    }

    /// Manhattan distance on the torus.
    pub fn distance(&self, a: &CellIndex, b: &CellIndex) -> u64 {
        a.coords
            .iter()
            .zip(&b.coords)
            .zip(&self.dims)
            .map(|((&x, &y), &n)| {
                let diff = x.abs_diff(y) as u64;
                diff.min(n as u64 - diff)
            })
            .sum()
    }

    /// The von Neumann neighborhood of `cell`: itself plus its `2d` adjacent
    /// cells, in direction index order.
    pub fn neighborhood(&self, cell: &CellIndex) -> Vec<CellIndex> {
        (0..=2 * self.dimension())
            .map(|i| self.step(cell, Direction(i as u8)))
            .collect()
    }

    /// Row-major flat index.
    pub fn flat_index(&self, cell: &CellIndex) -> usize {
        let mut idx = 0usize;
        for (&c, &n) in cell.coords.iter().zip(&self.dims) {
            idx = idx * n as usize + c as usize;
        }
        idx
    }

    pub fn cell_at(&self, mut flat: usize) -> CellIndex {
        let mut coords = vec![0u32; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            let n = self.dims[k] as usize;
            coords[k] = (flat % n) as u32;
            flat /= n;
        }
        CellIndex { coords }
    }

    /// Flat index of the neighbor of `flat` in `direction`.
    pub fn neighbor_flat(&self, flat: usize, direction: Direction) -> usize {
        match direction.axis() {
            None => flat,
            Some(axis) => {
                let mut stride = 1usize;
                for &n in &self.dims[axis..] {
                    stride *= n as usize;
                }
                let n = self.dims[axis - 1] as usize;
                let coord = flat / stride % n;
                let next = if direction.sign() > 0 {
                    if coord + 1 == n {
                        0
                    } else {
                        coord + 1
                    }
                } else if coord == 0 {
                    n - 1
                } else {
                    coord - 1
                };
                flat - coord * stride + next * stride
            }
        }
    }
}

impl TryFrom<Vec<u32>> for LatticeShape {
    type Error = Error;
    fn try_from(dims: Vec<u32>) -> Result<LatticeShape> {
        LatticeShape::new(dims)
    }
}

impl From<LatticeShape> for Vec<u32> {
    fn from(s: LatticeShape) -> Vec<u32> {
        s.dims
    }
}

/// A cell of the torus, one coordinate per axis.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CellIndex {
    coords: Vec<u32>,
}

impl CellIndex {
    pub fn new(coords: Vec<u32>, shape: &LatticeShape) -> Result<CellIndex> {
        let cell = CellIndex { coords };
        shape.check_cell(&cell)?;
        Ok(cell)
    }

    pub fn origin(dim: usize) -> CellIndex {
        CellIndex {
            coords: vec![0; dim],
        }
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }
}

/// How two distinct neighborhoods overlap.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OverlapCase {
    /// `j = i + v`: the two cells themselves are shared.
    Adjacent,
    /// `j = i + v + v`: one shared cell between them.
    TwoStepsSameAxis,
    /// `j = i + u + w` on distinct axes: two shared cells.
    TwoStepsOrthogonal,
    /// Distance above 2: no shared cell.
    Disjoint,
}

/// Result of classifying `P(i) ∩ P(j)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Overlap {
    pub case: OverlapCase,
    /// The shared cells, in a deterministic order.
    pub shared: Vec<CellIndex>,
    /// For two shared cells, the unique direction pair `{u, w}` with
    /// `j = i + u + w`.
    pub pair: Option<OmegaPair>,
}

/// Classifies how the neighborhoods of two distinct cells overlap.
///
/// Because all sides exceed 4, the minimal displacement between cells at
/// distance at most 2 is unique, which makes the case analysis exact.
pub fn neighborhood_overlap(shape: &LatticeShape, i: &CellIndex, j: &CellIndex) -> Result<Overlap> {
    shape.check_cell(i)?;
    shape.check_cell(j)?;
    if i == j {
        return Err(Error::EqualCells);
    }
    let dim = shape.dimension();
    // Minimal per-axis displacement from i to j; unique while |delta| <= 2.
    let mut deltas: Vec<i64> = Vec::with_capacity(dim);
    for ((&x, &y), &n) in i.coords.iter().zip(&j.coords).zip(shape.dims()) {
        let n = n as i64;
        let mut d = (y as i64 - x as i64).rem_euclid(n);
        if d > n / 2 {
            d -= n;
        }
        deltas.push(d);
    }
    let dist: i64 = deltas.iter().map(|d| d.abs()).sum();
    let dir_of = |axis: usize, sign: i64| {
        if sign > 0 {
            Direction::positive(axis + 1)
        } else {
            Direction::negative(axis + 1)
        }
    };
    let overlap = match dist {
        1 => {
            let axis = deltas.iter().position(|&d| d != 0).unwrap();
            let v = dir_of(axis, deltas[axis]);
            Overlap {
                case: OverlapCase::Adjacent,
                shared: vec![i.clone(), j.clone()],
                pair: Some(OmegaPair::new(Direction::CENTER, v, dim)?),
            }
        }
        2 => {
            let nonzero: Vec<usize> = (0..dim).filter(|&k| deltas[k] != 0).collect();
            if nonzero.len() == 1 {
                let axis = nonzero[0];
                let v = dir_of(axis, deltas[axis]);
                Overlap {
                    case: OverlapCase::TwoStepsSameAxis,
                    shared: vec![shape.step(i, v)],
                    pair: None,
                }
            } else {
                let u = dir_of(nonzero[0], deltas[nonzero[0]]);
                let w = dir_of(nonzero[1], deltas[nonzero[1]]);
                Overlap {
                    case: OverlapCase::TwoStepsOrthogonal,
                    shared: vec![shape.step(i, u), shape.step(i, w)],
                    pair: Some(OmegaPair::new(u, w, dim)?),
                }
            }
        }
        _ => Overlap {
            case: OverlapCase::Disjoint,
            shared: Vec::new(),
            pair: None,
        },
    };
    Ok(overlap)
}
