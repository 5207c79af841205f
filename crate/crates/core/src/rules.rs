//! State sets, neighborhood configurations and local rules.
//!
//! A local rule maps each neighborhood configuration (the `2d + 1` states a
//! cell sees) to a state. Rules come in two forms: a dense table indexed by
//! [`config_index`], and a parametric form that stores only the monomer
//! values and the dimer values of one pair per matching class. The parametric
//! form can describe exactly the number-conserving rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, MAX_STATE, MAX_TABLE_ENTRIES};
use crate::lattice::{check_dimension, direction_set, Direction, LambdaSelection, OmegaPair};

/// A finite set of integer states containing 0, kept sorted.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct StateSet {
    states: Vec<i64>,
    nonzero: Vec<i64>,
}

impl StateSet {
    pub fn new(mut states: Vec<i64>) -> Result<StateSet> {
        states.sort_unstable();
        if let Some(w) = states.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateState(w[0]));
        }
        if states.len() < 2 {
            return Err(Error::StateSetTooSmall);
        }
        if states.binary_search(&0).is_err() {
            return Err(Error::MissingZeroState);
        }
        if let Some(&bad) = states.iter().find(|&&q| q.abs() > MAX_STATE) {
            return Err(Error::StateTooLarge(bad));
        }
        let nonzero = states.iter().copied().filter(|&q| q != 0).collect();
        Ok(StateSet { states, nonzero })
    }

    /// `{0, 1, ..., count - 1}`.
    pub fn range(count: i64) -> Result<StateSet> {
        StateSet::new((0..count).collect())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn states(&self) -> &[i64] {
        &self.states
    }

    /// The nonzero states, sorted.
    pub fn nonzero(&self) -> &[i64] {
        &self.nonzero
    }

    pub fn contains(&self, q: i64) -> bool {
        self.states.binary_search(&q).is_ok()
    }

    /// Position of `q` in the sorted state list; the digit used by
    /// [`config_index`].
    pub fn digit_of(&self, q: i64) -> Result<usize> {
        self.states
            .binary_search(&q)
            .map_err(|_| Error::UnknownState(q))
    }

    pub fn state_at(&self, digit: usize) -> i64 {
        self.states[digit]
    }

    /// Position of a nonzero state within [`Self::nonzero`].
    pub fn nonzero_index(&self, q: i64) -> Result<usize> {
        self.nonzero
            .binary_search(&q)
            .map_err(|_| Error::UnknownState(q))
    }

    /// Digit of the zero state.
    pub fn zero_digit(&self) -> usize {
        self.states.binary_search(&0).unwrap()
    }

    /// Number of neighborhood configurations for this set in dimension `dim`,
    /// checked against the dense-table bound.
    pub fn config_count(&self, dim: usize) -> Result<u64> {
        check_dimension(dim)?;
        let mut count: u64 = 1;
        for _ in 0..=2 * dim {
            count = count
                .checked_mul(self.states.len() as u64)
                .filter(|&c| c <= MAX_TABLE_ENTRIES)
                .ok_or_else(|| {
                    Error::TableTooLarge(
                        (self.states.len() as u128).pow(2 * dim as u32 + 1) as u64
                    )
                })?;
        }
        Ok(count)
    }
}

impl TryFrom<Vec<i64>> for StateSet {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<StateSet> {
        StateSet::new(v)
    }
}

impl From<StateSet> for Vec<i64> {
    fn from(s: StateSet) -> Vec<i64> {
        s.states
    }
}

/// The states seen by one cell: an assignment of a state to each of the
/// `2d + 1` directions, stored in direction index order.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct NeighborhoodConfig {
    states: Vec<i64>,
}

impl NeighborhoodConfig {
    pub fn new(dim: usize, states: Vec<i64>) -> Result<NeighborhoodConfig> {
        check_dimension(dim)?;
        if states.len() != 2 * dim + 1 {
            return Err(Error::BadConfigLength {
                expected: 2 * dim + 1,
                got: states.len(),
            });
        }
        Ok(NeighborhoodConfig { states })
    }

    /// The homogeneous configuration `H_q`: every direction sees `q`.
    pub fn homogeneous(dim: usize, q: i64) -> Result<NeighborhoodConfig> {
        check_dimension(dim)?;
        Ok(NeighborhoodConfig {
            states: vec![q; 2 * dim + 1],
        })
    }

    /// The monomer `M_{v:q}`: `q` in direction `v`, zero elsewhere.
    pub fn monomer(dim: usize, v: Direction, q: i64) -> Result<NeighborhoodConfig> {
        let mut n = NeighborhoodConfig::homogeneous(dim, 0)?;
        if v.index() >= n.states.len() {
            return Err(Error::InvalidDirection {
                index: v.index(),
                dim,
            });
        }
        n.states[v.index()] = q;
        Ok(n)
    }

    /// The dimer for `pair`: `a` on the pair's lower-indexed direction, `b`
    /// on the other, zero elsewhere.
    pub fn dimer(dim: usize, pair: OmegaPair, a: i64, b: i64) -> Result<NeighborhoodConfig> {
        // Revalidate for this dimension.
        let pair = OmegaPair::new(pair.first(), pair.second(), dim)?;
        let mut n = NeighborhoodConfig::homogeneous(dim, 0)?;
        n.states[pair.first().index()] = a;
        n.states[pair.second().index()] = b;
        Ok(n)
    }

    pub fn dimension(&self) -> usize {
        (self.states.len() - 1) / 2
    }

    pub fn get(&self, v: Direction) -> i64 {
        self.states[v.index()]
    }

    pub fn states(&self) -> &[i64] {
        &self.states
    }

    pub fn is_trivial(&self) -> bool {
        self.states.iter().all(|&q| q == 0)
    }

    /// Quarter-turn relabeling for `d = 2`: `+1 -> +2 -> -1 -> -2 -> +1`,
    /// center fixed.
    pub fn rotate90(&self) -> Result<NeighborhoodConfig> {
        if self.dimension() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: self.dimension(),
            });
        }
        let mut states = vec![0i64; 5];
        states[0] = self.states[0];
        // Image index per source direction index under the quarter turn.
        for (from, to) in [(1, 3), (3, 2), (2, 4), (4, 1)] {
            states[to] = self.states[from];
        }
        Ok(NeighborhoodConfig { states })
    }
}

/// Mixed-radix index of a configuration: direction 0 is the least significant
/// digit, each digit being the state's position in the sorted state set.
pub fn config_index(n: &NeighborhoodConfig, states: &StateSet) -> Result<u64> {
    let base = states.len() as u64;
    let mut idx = 0u64;
    for &q in n.states.iter().rev() {
        idx = idx * base + states.digit_of(q)? as u64;
    }
    Ok(idx)
}

/// Inverse of [`config_index`].
pub fn index_config(idx: u64, states: &StateSet, dim: usize) -> Result<NeighborhoodConfig> {
    check_dimension(dim)?;
    let base = states.len() as u64;
    let mut rest = idx;
    let mut out = Vec::with_capacity(2 * dim + 1);
    for _ in 0..=2 * dim {
        out.push(states.state_at((rest % base) as usize));
        rest /= base;
    }
    debug_assert_eq!(rest, 0);
    NeighborhoodConfig::new(dim, out)
}

/// A local rule given as a full table in [`config_index`] order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DenseRule {
    dim: usize,
    states: StateSet,
    table: Vec<i64>,
}

impl DenseRule {
    pub fn new(dim: usize, states: StateSet, table: Vec<i64>) -> Result<DenseRule> {
        let expected = states.config_count(dim)?;
        if table.len() as u64 != expected {
            return Err(Error::BadTableLength {
                expected,
                got: table.len(),
            });
        }
        if let Some(&bad) = table.iter().find(|&&q| !states.contains(q)) {
            return Err(Error::UnknownState(bad));
        }
        Ok(DenseRule { dim, states, table })
    }

    /// Builds a rule by tabulating `f` over all configurations.
    pub fn from_fn(
        dim: usize,
        states: StateSet,
        mut f: impl FnMut(&NeighborhoodConfig) -> i64,
    ) -> Result<DenseRule> {
        let count = states.config_count(dim)?;
        let mut table = Vec::with_capacity(count as usize);
        for idx in 0..count {
            table.push(f(&index_config(idx, &states, dim)?));
        }
        DenseRule::new(dim, states, table)
    }

    /// `f(N) = N(0)`.
    pub fn identity(dim: usize, states: StateSet) -> Result<DenseRule> {
        DenseRule::from_fn(dim, states, |n| n.get(Direction::CENTER))
    }

    /// `f(N) = N(v)`.
    pub fn shift(dim: usize, states: StateSet, v: Direction) -> Result<DenseRule> {
        DenseRule::from_fn(dim, states, |n| n.get(v))
    }

    /// The binary rule moving particles one step toward `v` when the cell
    /// ahead is empty: `f = min(N(-v), 1 - N(0)) + min(N(0), N(v))`.
    /// Restricted to one axis this is the elementary traffic rule.
    pub fn traffic(dim: usize, v: Direction) -> Result<DenseRule> {
        if v.is_center() {
            return Err(Error::InvalidDirection { index: 0, dim });
        }
        let states = StateSet::new(vec![0, 1])?;
        DenseRule::from_fn(dim, states, |n| {
            let (c, ahead, behind) = (n.get(Direction::CENTER), n.get(v), n.get(v.negate()));
            behind.min(1 - c) + c.min(ahead)
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> &StateSet {
        &self.states
    }

    pub fn table(&self) -> &[i64] {
        &self.table
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }

    pub fn value_at(&self, idx: u64) -> i64 {
        self.table[idx as usize]
    }

    pub fn evaluate(&self, n: &NeighborhoodConfig) -> Result<i64> {
        if n.dimension() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: n.dimension(),
            });
        }
        Ok(self.table[config_index(n, &self.states)? as usize])
    }

    /// The monomer expansion: the rule applied to each single-direction
    /// restriction of `n`, summed.
    pub fn monomer_expansion(&self, n: &NeighborhoodConfig) -> Result<i64> {
        let mut sum = 0i64;
        for v in direction_set(self.dim)? {
            let m = NeighborhoodConfig::monomer(self.dim, v, n.get(v))?;
            sum += self.evaluate(&m)?;
        }
        Ok(sum)
    }

    /// Whether the rule is invariant under the quarter turn (`d = 2` only).
    pub fn is_rotation_symmetric(&self) -> Result<bool> {
        if self.dim != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: self.dim,
            });
        }
        for idx in 0..self.table.len() as u64 {
            let n = index_config(idx, &self.states, self.dim)?;
            if self.evaluate(&n)? != self.evaluate(&n.rotate90()?)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// A rule stored through its free parameters: one value per nontrivial
/// monomer, and one value per dimer over a fixed pair selection with both
/// states nonzero. All other values follow from the reconstruction formula.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParametricRule {
    dim: usize,
    states: StateSet,
    eta: Direction,
    lambda: LambdaSelection,
    /// `monomers[v.index() * k + i]` = value on the i-th nonzero state, where
    /// `k` is the nonzero state count.
    monomers: Vec<i64>,
    /// `dimers[(pair_pos * k + i) * k + j]`: pair from the stored selection,
    /// `i` indexes the state on the pair's lower direction.
    dimers: Vec<i64>,
}

impl ParametricRule {
    pub fn new(
        dim: usize,
        states: StateSet,
        eta: Direction,
        lambda: LambdaSelection,
        monomers: Vec<i64>,
        dimers: Vec<i64>,
    ) -> Result<ParametricRule> {
        check_dimension(dim)?;
        if eta.index() > 2 * dim {
            return Err(Error::InvalidDirection {
                index: eta.index(),
                dim,
            });
        }
        if lambda.dimension() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: lambda.dimension(),
            });
        }
        let k = states.nonzero().len();
        if monomers.len() != (2 * dim + 1) * k {
            return Err(Error::Format(format!(
                "expected {} monomer values, got {}",
                (2 * dim + 1) * k,
                monomers.len()
            )));
        }
        if dimers.len() != dim * dim * k * k {
            return Err(Error::Format(format!(
                "expected {} dimer values, got {}",
                dim * dim * k * k,
                dimers.len()
            )));
        }
        for &v in monomers.iter().chain(&dimers) {
            if !states.contains(v) {
                return Err(Error::UnknownState(v));
            }
        }
        Ok(ParametricRule {
            dim,
            states,
            eta,
            lambda,
            monomers,
            dimers,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> &StateSet {
        &self.states
    }

    pub fn eta(&self) -> Direction {
        self.eta
    }

    pub fn lambda(&self) -> &LambdaSelection {
        &self.lambda
    }

    /// `f(M_{v:q})`. Zero for `q = 0`: the trivial monomer is the all-zero
    /// configuration, which a conserving rule maps to 0.
    pub fn monomer_value(&self, v: Direction, q: i64) -> i64 {
        if q == 0 {
            return 0;
        }
        let k = self.states.nonzero().len();
        let i = self
            .states
            .nonzero_index(q)
            .expect("state checked at construction");
        self.monomers[v.index() * k + i]
    }

    #[cfg(test)]
    pub(crate) fn monomer_slot(&mut self, v: Direction, q: i64) -> &mut i64 {
        let k = self.states.nonzero().len();
        let i = self.states.nonzero_index(q).unwrap();
        &mut self.monomers[v.index() * k + i]
    }

    /// Sum of `f(M_{v:q})` over all directions: the monomer expansion of the
    /// homogeneous configuration `H_q`.
    pub fn expansion_of_homogeneous(&self, q: i64) -> i64 {
        if q == 0 {
            return 0;
        }
        let k = self.states.nonzero().len();
        let i = self.states.nonzero_index(q).unwrap();
        (0..=2 * self.dim).map(|d| self.monomers[d * k + i]).sum()
    }

    /// The dimer value `f(D)` with state `a` in direction `u` and `b` in
    /// direction `w`, for any valid pair `{u, w}`.
    ///
    /// Dimers with a zero state coincide with monomers. Dimers whose pair is
    /// not in the stored selection are derived from their matching dimer via
    /// the balance identity
    /// `f(D) + f(match D) = f^E(D) + f^E(match D)`.
    pub fn dimer_value(&self, u: Direction, a: i64, w: Direction, b: i64) -> i64 {
        if a == 0 && b == 0 {
            return 0;
        }
        if b == 0 {
            return self.monomer_value(u, a);
        }
        if a == 0 {
            return self.monomer_value(w, b);
        }
        if let Some(v) = self.stored_dimer(u, a, w, b) {
            return v;
        }
        // Matching dimer of D_{u:a, w:b} carries a on -w and b on -u.
        let (mu, mw) = (w.negate(), u.negate());
        let stored = self
            .stored_dimer(mu, a, mw, b)
            .expect("pair or its match is always stored");
        let expansion = self.monomer_value(u, a)
            + self.monomer_value(w, b)
            + self.monomer_value(mu, a)
            + self.monomer_value(mw, b);
        expansion - stored
    }

    fn stored_dimer(&self, u: Direction, a: i64, w: Direction, b: i64) -> Option<i64> {
        let k = self.states.nonzero().len();
        let (pair, a, b) = if u.index() < w.index() {
            (OmegaPair::new(u, w, self.dim).ok()?, a, b)
        } else {
            (OmegaPair::new(w, u, self.dim).ok()?, b, a)
        };
        let pos = self.lambda.pairs().iter().position(|&p| p == pair)?;
        let i = self.states.nonzero_index(a).ok()?;
        let j = self.states.nonzero_index(b).ok()?;
        Some(self.dimers[(pos * k + i) * k + j])
    }

    /// Evaluates the rule at `n` through the reconstruction formula with the
    /// stored leading direction and pair selection. Fails with
    /// [`Error::NotClosedAt`] if the value leaves the state set.
    pub fn evaluate(&self, n: &NeighborhoodConfig) -> Result<i64> {
        if n.dimension() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: n.dimension(),
            });
        }
        let value = crate::conservation::reconstruct(self, n, self.eta, &self.lambda);
        if self.states.contains(value) {
            Ok(value)
        } else {
            Err(Error::NotClosedAt {
                config: n.states().to_vec(),
                value,
            })
        }
    }
}
