//! Ground-truth simulation oracles.
//!
//! The global rule applies a local rule to every cell of a torus at once; a
//! rule conserves the state sum when `sigma` is unchanged by every step.
//! Three oracles check this independently of the reconstruction formula: an
//! exhaustive sweep over all configurations of a small torus, a sweep over
//! the finite-support configurations that the necessity arguments consume
//! (complete: passing all of them is equivalent to conservation), and a
//! seeded random sampler whose passes are only evidence.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CellIndex, Direction, LatticeShape};
use crate::rules::{DenseRule, NeighborhoodConfig, StateSet};

/// Default ceiling on the number of configurations an exhaustive sweep may
/// visit.
pub const DEFAULT_ORACLE_BUDGET: u64 = 1 << 26;

/// An assignment of a state to every cell of a torus, row-major.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusConfiguration {
    pub shape: LatticeShape,
    pub cells: Vec<i64>,
}

impl TorusConfiguration {
    pub fn new(shape: LatticeShape, cells: Vec<i64>) -> Result<TorusConfiguration> {
        if cells.len() as u64 != shape.cell_count() {
            return Err(Error::BadCellCount {
                expected: shape.cell_count(),
                got: cells.len(),
            });
        }
        Ok(TorusConfiguration { shape, cells })
    }

    pub fn constant(shape: LatticeShape, q: i64) -> TorusConfiguration {
        let cells = vec![q; shape.cell_count() as usize];
        TorusConfiguration { shape, cells }
    }

    pub fn get(&self, cell: &CellIndex) -> i64 {
        self.cells[self.shape.flat_index(cell)]
    }

    pub fn set(&mut self, cell: &CellIndex, q: i64) {
        let idx = self.shape.flat_index(cell);
        self.cells[idx] = q;
    }

    /// Errors if any cell state is outside `states`.
    pub fn check_states(&self, states: &StateSet) -> Result<()> {
        match self.cells.iter().find(|&&q| !states.contains(q)) {
            Some(&bad) => Err(Error::UnknownState(bad)),
            None => Ok(()),
        }
    }
}

/// Sum of all cell states.
pub fn sigma(x: &TorusConfiguration) -> i64 {
    x.cells.iter().sum()
}

/// The neighborhood configuration cell `i` sees in `x`.
pub fn local_view(x: &TorusConfiguration, i: &CellIndex) -> Result<NeighborhoodConfig> {
    let dim = x.shape.dimension();
    let flat = x.shape.flat_index(i);
    let states = (0..=2 * dim)
        .map(|d| {
            let v = Direction::from_index(d, dim).expect("valid index");
            x.cells[x.shape.neighbor_flat(flat, v)]
        })
        .collect();
    NeighborhoodConfig::new(dim, states)
}

/// Applies the rule to every cell simultaneously.
pub fn global_step(f: &DenseRule, x: &TorusConfiguration) -> Result<TorusConfiguration> {
    let dim = f.dimension();
    if x.shape.dimension() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.shape.dimension(),
        });
    }
    x.check_states(f.states())?;
    let geometry = SweepGeometry::new(f, &x.shape);
    let digits: Vec<usize> = x
        .cells
        .iter()
        .map(|&q| f.states().digit_of(q).expect("states checked"))
        .collect();
    let cells = (0..digits.len())
        .map(|j| {
            let mut idx = 0u64;
            for (v, &stride) in geometry.strides.iter().enumerate() {
                let v = Direction::from_index(v, dim).expect("valid index");
                idx += digits[x.shape.neighbor_flat(j, v)] as u64 * stride;
            }
            f.value_at(idx)
        })
        .collect();
    TorusConfiguration::new(x.shape.clone(), cells)
}

/// Outcome of an oracle run.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum OracleVerdict {
    Conserving,
    Violated { witness: TorusConfiguration },
}

impl OracleVerdict {
    pub fn is_conserving(&self) -> bool {
        matches!(self, OracleVerdict::Conserving)
    }

    pub fn witness(&self) -> Option<&TorusConfiguration> {
        match self {
            OracleVerdict::Conserving => None,
            OracleVerdict::Violated { witness } => Some(witness),
        }
    }
}

/// Shared precomputation for sweeping configurations of one torus.
struct SweepGeometry {
    /// `strides[v] = |Q|^v`, the weight of direction index `v` in a
    /// neighborhood index.
    strides: Vec<u64>,
    /// For each cell `i`, the neighborhoods it appears in: pairs of
    /// (cell whose view contains `i`, stride of the direction it is seen
    /// through).
    updates: Vec<Vec<(usize, u64)>>,
}

impl SweepGeometry {
    fn new(f: &DenseRule, shape: &LatticeShape) -> SweepGeometry {
        let dim = shape.dimension();
        let base = f.states().len() as u64;
        let strides: Vec<u64> = (0..=2 * dim as u32).map(|v| base.pow(v)).collect();
        let cells = shape.cell_count() as usize;
        let updates = (0..cells)
            .map(|i| {
                (0..=2 * dim)
                    .map(|d| {
                        let v = Direction::from_index(d, dim).expect("valid index");
                        // Cell j = i - v sees i in direction v.
                        (shape.neighbor_flat(i, v.negate()), strides[d])
                    })
                    .collect()
            })
            .collect();
        SweepGeometry { strides, updates }
    }
}

/// Rolling state of one exhaustive-sweep worker.
struct SweepState {
    digits: Vec<usize>,
    neighborhood_idx: Vec<u64>,
    sum_states: i64,
    sum_images: i64,
}

impl SweepState {
    /// Initializes the sweep at configuration number `config_no`, where cell
    /// 0 is the most significant digit.
    fn init(f: &DenseRule, geometry: &SweepGeometry, config_no: u64) -> SweepState {
        let base = f.states().len() as u64;
        let cells = geometry.updates.len();
        let mut digits = vec![0usize; cells];
        let mut rest = config_no;
        for k in (0..cells).rev() {
            digits[k] = (rest % base) as usize;
            rest /= base;
        }
        let mut neighborhood_idx = vec![0u64; cells];
        for (i, updates) in geometry.updates.iter().enumerate() {
            for &(j, stride) in updates {
                neighborhood_idx[j] += digits[i] as u64 * stride;
            }
        }
        let sum_states = digits.iter().map(|&d| f.states().state_at(d)).sum();
        let sum_images = neighborhood_idx.iter().map(|&idx| f.value_at(idx)).sum();
        SweepState {
            digits,
            neighborhood_idx,
            sum_states,
            sum_images,
        }
    }

    fn is_balanced(&self) -> bool {
        self.sum_states == self.sum_images
    }

    /// Advances the odometer by one configuration.
    fn advance(&mut self, f: &DenseRule, geometry: &SweepGeometry) {
        let base = f.states().len();
        for k in (0..self.digits.len()).rev() {
            let old = self.digits[k];
            let new = if old + 1 == base { 0 } else { old + 1 };
            self.set_digit(f, geometry, k, new);
            if new != 0 {
                return;
            }
        }
    }

    fn set_digit(&mut self, f: &DenseRule, geometry: &SweepGeometry, cell: usize, new: usize) {
        let old = self.digits[cell];
        self.digits[cell] = new;
        self.sum_states += f.states().state_at(new) - f.states().state_at(old);
        let delta = new as i64 - old as i64;
        for &(j, stride) in &geometry.updates[cell] {
            let idx = &mut self.neighborhood_idx[j];
            self.sum_images -= f.value_at(*idx);
            *idx = (*idx as i64 + delta * stride as i64) as u64;
            self.sum_images += f.value_at(*idx);
        }
    }

    fn configuration(&self, f: &DenseRule, shape: &LatticeShape) -> TorusConfiguration {
        let cells = self
            .digits
            .iter()
            .map(|&d| f.states().state_at(d))
            .collect();
        TorusConfiguration::new(shape.clone(), cells).expect("lengths agree")
    }
}

/// Checks conservation on every configuration of the torus, in ascending
/// mixed-radix order over row-major cells. The witness of a violation is the
/// first violating configuration in that order, independent of how the range
/// is split across workers.
pub fn exhaustive_oracle(
    f: &DenseRule,
    shape: &LatticeShape,
    budget: u64,
) -> Result<OracleVerdict> {
    if shape.dimension() != f.dimension() {
        return Err(Error::DimensionMismatch {
            expected: f.dimension(),
            got: shape.dimension(),
        });
    }
    let base = f.states().len() as u128;
    let total = base.checked_pow(shape.cell_count() as u32);
    let total = match total {
        Some(t) if t <= budget as u128 => t as u64,
        _ => {
            return Err(Error::BudgetExceeded {
                needed: total.unwrap_or(u128::MAX),
                budget,
            })
        }
    };
    let geometry = SweepGeometry::new(f, shape);

    let scan_range = |start: u64, end: u64| -> Option<u64> {
        let mut state = SweepState::init(f, &geometry, start);
        for config_no in start..end {
            if !state.is_balanced() {
                return Some(config_no);
            }
            if config_no + 1 < end {
                state.advance(f, &geometry);
            }
        }
        None
    };

    const MIN_CHUNK: u64 = 1 << 16;
    let first = if total <= MIN_CHUNK {
        scan_range(0, total)
    } else {
        let workers = rayon::current_num_threads() as u64 * 4;
        let chunk = (total / workers + 1).max(MIN_CHUNK);
        let chunks: Vec<(u64, u64)> = (0..total)
            .step_by(chunk as usize)
            .map(|s| (s, (s + chunk).min(total)))
            .collect();
        chunks
            .into_par_iter()
            .filter_map(|(s, e)| scan_range(s, e))
            .min()
    };
    Ok(match first {
        None => OracleVerdict::Conserving,
        Some(config_no) => {
            let state = SweepState::init(f, &geometry, config_no);
            OracleVerdict::Violated {
                witness: state.configuration(f, shape),
            }
        }
    })
}

/// Sparse evaluator for configurations supported on a few cells of an
/// otherwise-zero torus.
struct SparseChecker<'a> {
    f: &'a DenseRule,
    shape: LatticeShape,
    digits: Vec<usize>,
    strides: Vec<u64>,
    zero_value: i64,
}

impl<'a> SparseChecker<'a> {
    fn new(f: &'a DenseRule, shape: LatticeShape) -> SparseChecker<'a> {
        let dim = shape.dimension();
        let base = f.states().len() as u64;
        let strides: Vec<u64> = (0..=2 * dim as u32).map(|v| base.pow(v)).collect();
        let zero_digit = f.states().zero_digit();
        let zero_idx: u64 = strides.iter().map(|&s| zero_digit as u64 * s).sum();
        let digits = vec![zero_digit; shape.cell_count() as usize];
        SparseChecker {
            f,
            shape,
            digits,
            strides,
            zero_value: f.value_at(zero_idx),
        }
    }

    /// Sets the support, checks the balance, clears the support again.
    /// `affected` must contain every cell whose neighborhood meets the
    /// support.
    fn balanced(&mut self, support: &[(usize, i64)], affected: &[usize]) -> bool {
        let mut sum_states = 0i64;
        for &(cell, q) in support {
            self.digits[cell] = self.f.states().digit_of(q).expect("state in set");
            sum_states += q;
        }
        let dim = self.shape.dimension();
        let mut sum_images =
            (self.shape.cell_count() as i64 - affected.len() as i64) * self.zero_value;
        for &j in affected {
            let mut idx = 0u64;
            for (v, &stride) in self.strides.iter().enumerate() {
                let v = Direction::from_index(v, dim).expect("valid index");
                idx += self.digits[self.shape.neighbor_flat(j, v)] as u64 * stride;
            }
            sum_images += self.f.value_at(idx);
        }
        let zero_digit = self.f.states().zero_digit();
        for &(cell, _) in support {
            self.digits[cell] = zero_digit;
        }
        sum_states == sum_images
    }

    fn witness(&self, support: &[(usize, i64)]) -> TorusConfiguration {
        let mut x = TorusConfiguration::constant(self.shape.clone(), 0);
        for &(cell, q) in support {
            x.cells[cell] = q;
        }
        x
    }
}

/// Checks conservation on exactly the configurations the necessity arguments
/// consume, on a 7-per-side torus: every configuration supported inside the
/// neighborhood of the origin, and every two-cell configuration at distance
/// at most 2. Passing all of them is equivalent to the full verdict.
pub fn finite_support_oracle(f: &DenseRule) -> Result<OracleVerdict> {
    let dim = f.dimension();
    let shape = LatticeShape::new(vec![7; dim])?;
    let states = f.states().clone();
    let mut checker = SparseChecker::new(f, shape.clone());

    // Cells of the origin's neighborhood, in direction index order.
    let origin = CellIndex::origin(dim);
    let cross: Vec<usize> = shape
        .neighborhood(&origin)
        .iter()
        .map(|c| shape.flat_index(c))
        .collect();
    // Cells whose neighborhood can meet the origin's: distance at most 2.
    let near_origin: Vec<usize> = (0..shape.cell_count() as usize)
        .filter(|&j| shape.distance(&origin, &shape.cell_at(j)) <= 2)
        .collect();

    let count = states.config_count(dim)?;
    let mut support = Vec::with_capacity(2 * dim + 1);
    for config_no in 0..count {
        support.clear();
        let mut rest = config_no;
        let base = states.len() as u64;
        for &cell in &cross {
            let q = states.state_at((rest % base) as usize);
            rest /= base;
            if q != 0 {
                support.push((cell, q));
            }
        }
        if !checker.balanced(&support, &near_origin) {
            return Ok(OracleVerdict::Violated {
                witness: checker.witness(&support),
            });
        }
    }

    // Two-cell configurations: the origin with state p, a second cell at
    // distance 1 or 2 with state q, both nonzero.
    let origin_flat = shape.flat_index(&origin);
    for j in 0..shape.cell_count() as usize {
        let cell = shape.cell_at(j);
        let dist = shape.distance(&origin, &cell);
        if dist == 0 || dist > 2 {
            continue;
        }
        let affected: Vec<usize> = (0..shape.cell_count() as usize)
            .filter(|&i| {
                let c = shape.cell_at(i);
                shape.distance(&origin, &c) <= 1 || shape.distance(&cell, &c) <= 1
            })
            .collect();
        for &p in states.nonzero() {
            for &q in states.nonzero() {
                let support = [(origin_flat, p), (j, q)];
                if !checker.balanced(&support, &affected) {
                    return Ok(OracleVerdict::Violated {
                        witness: checker.witness(&support),
                    });
                }
            }
        }
    }

    Ok(OracleVerdict::Conserving)
}

/// Checks conservation on `samples` uniformly random configurations drawn
/// from a seeded deterministic generator (ChaCha8 keyed by `seed`).
/// Violations are conclusive; passes are not.
pub fn sampled_oracle(
    f: &DenseRule,
    shape: &LatticeShape,
    samples: u64,
    seed: u64,
) -> Result<OracleVerdict> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    if shape.dimension() != f.dimension() {
        return Err(Error::DimensionMismatch {
            expected: f.dimension(),
            got: shape.dimension(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = f.states();
    for _ in 0..samples {
        let cells: Vec<i64> = (0..shape.cell_count())
            .map(|_| states.state_at(rng.gen_range(0..states.len())))
            .collect();
        let x = TorusConfiguration::new(shape.clone(), cells)?;
        if sigma(&global_step(f, &x)?) != sigma(&x) {
            return Ok(OracleVerdict::Violated { witness: x });
        }
    }
    Ok(OracleVerdict::Conserving)
}
