//! Exhaustive enumeration of number-conserving rules.
//!
//! The search walks the free parameters of the parametric form instead of the
//! space of all rule tables. Monomer values are generated per state as exact
//! compositions (their sum is pinned to the state), dimer values for the
//! canonical pair selection are assigned one slot at a time, and every other
//! configuration value is reconstructed and tested for membership in the
//! state set the moment all slots it reads are ground. A branch dies at its
//! first out-of-set value. Completed branches yield rule tables; the merged
//! output is sorted by table, which is deterministic and independent of how
//! branches are distributed over workers.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conservation::{is_number_conserving, Verdict};
use crate::error::{Error, Result};
use crate::lattice::{check_dimension, positive_directions, Direction, LambdaSelection};
use crate::rules::{index_config, DenseRule, NeighborhoodConfig, StateSet};

/// Classification tag of a conserving rule.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum Label {
    /// `f(N) = N(0)`.
    Identity,
    /// `f(N) = N(v)` for the tagged nonzero direction.
    Shift(Direction),
    /// The binary rule moving particles toward the tagged direction.
    Traffic(Direction),
    /// Depends only on one axis and induces a conserving one-dimensional
    /// rule there (1-based axis).
    AxisExtension(usize),
    /// Invariant under the quarter turn (two-dimensional rules only).
    RotationSymmetric,
    /// A cell surrounded by zeros keeps its state.
    Passive,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Identity => write!(f, "identity"),
            Label::Shift(v) => write!(f, "shift({v})"),
            Label::Traffic(v) => write!(f, "traffic({v})"),
            Label::AxisExtension(k) => write!(f, "axis-extension({k})"),
            Label::RotationSymmetric => write!(f, "rotation-symmetric"),
            Label::Passive => write!(f, "passive"),
        }
    }
}

/// All tags of one rule, in a deterministic order.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct RuleLabel {
    pub tags: Vec<Label>,
}

impl RuleLabel {
    pub fn has(&self, label: Label) -> bool {
        self.tags.contains(&label)
    }

    pub fn is_axis_extension(&self) -> bool {
        self.tags
            .iter()
            .any(|t| matches!(t, Label::AxisExtension(_)))
    }
}

/// Classifies a conserving rule. Non-conserving input is rejected.
pub fn classify(f: &DenseRule) -> Result<RuleLabel> {
    if !is_number_conserving(f)?.is_conserving() {
        return Err(Error::ClassifyNonConserving);
    }
    Ok(classify_conserving(f))
}

/// Classification body, assuming the rule has already been verified.
fn classify_conserving(f: &DenseRule) -> RuleLabel {
    let dim = f.dimension();
    let states = f.states();
    let base = states.len() as u64;
    let count = f.table_len() as u64;
    let digit =
        |idx: u64, dir: Direction| -> usize { (idx / base.pow(dir.index() as u32) % base) as usize };

    let mut tags = Vec::new();
    if (0..count).all(|idx| f.value_at(idx) == states.state_at(digit(idx, Direction::CENTER))) {
        tags.push(Label::Identity);
    }
    for v in positive_directions(dim).expect("valid dimension") {
        if (0..count).all(|idx| f.value_at(idx) == states.state_at(digit(idx, v))) {
            tags.push(Label::Shift(v));
        }
    }
    if states.states() == [0, 1] {
        for v in positive_directions(dim).expect("valid dimension") {
            let traffic = DenseRule::traffic(dim, v).expect("nonzero direction");
            if f.table() == traffic.table() {
                tags.push(Label::Traffic(v));
            }
        }
    }
    for axis in 1..=dim {
        if is_axis_extension(f, axis) {
            tags.push(Label::AxisExtension(axis));
        }
    }
    if dim == 2 && f.is_rotation_symmetric().expect("dimension checked") {
        tags.push(Label::RotationSymmetric);
    }
    let passive = states.states().iter().all(|&q| {
        let m = NeighborhoodConfig::monomer(dim, Direction::CENTER, q).expect("valid");
        f.evaluate(&m).expect("config over rule states") == q
    });
    if passive {
        tags.push(Label::Passive);
    }
    tags.sort();
    RuleLabel { tags }
}

/// Whether the rule depends only on the three cells of `axis` and induces a
/// conserving one-dimensional rule there.
fn is_axis_extension(f: &DenseRule, axis: usize) -> bool {
    let dim = f.dimension();
    let states = f.states();
    let base = states.len() as u64;
    let kept = [
        Direction::CENTER,
        Direction::positive(axis),
        Direction::negative(axis),
    ];
    let zero = states.zero_digit() as u64;
    // Project a configuration index onto the axis by zeroing all other digits.
    let project = |idx: u64| -> u64 {
        let mut out = 0u64;
        for v in 0..=2 * dim {
            let stride = base.pow(v as u32);
            let d = idx / stride % base;
            let keep = kept.iter().any(|k| k.index() == v);
            out += if keep { d } else { zero } * stride;
        }
        out
    };
    if !(0..f.table_len() as u64).all(|idx| f.value_at(idx) == f.value_at(project(idx))) {
        return false;
    }
    // The induced one-dimensional rule must itself conserve.
    let induced = DenseRule::from_fn(1, states.clone(), |n| {
        let mut s = vec![0i64; 2 * dim + 1];
        s[Direction::CENTER.index()] = n.get(Direction::CENTER);
        s[Direction::positive(axis).index()] = n.get(Direction::positive(1));
        s[Direction::negative(axis).index()] = n.get(Direction::negative(1));
        let m = NeighborhoodConfig::new(dim, s).expect("valid");
        f.evaluate(&m).expect("config over rule states")
    })
    .expect("small table");
    is_number_conserving(&induced)
        .map(|v| v.is_conserving())
        .unwrap_or(false)
}

/// Output filters of an enumeration run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct EnumerationFilters {
    /// Restrict to rotation-symmetric rules (two-dimensional only); pushes
    /// the symmetry into the search.
    pub rotation_symmetric: bool,
    /// Restrict to passive rules; pins the center monomer values.
    pub passive: bool,
    /// Keep only rules that are extensions of one-dimensional rules.
    pub axis_extension_only: bool,
}

/// One enumerated rule with its classification.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CatalogEntry {
    pub rule: DenseRule,
    pub labels: RuleLabel,
}

/// Checkpoint at which a configuration's value becomes ground.
#[derive(Clone, Copy, PartialEq, Eq)]
enum CheckPoint {
    AfterMonomers,
    AfterSlot(u32),
}

/// Static description of one configuration: how its value is assembled from
/// the monomer part plus signed dimer-slot contributions.
struct ConfigPlan {
    /// Decoded states per direction index.
    states: Vec<i64>,
    /// Signed references into the dimer-slot array.
    refs: Vec<(u32, i8)>,
    /// `None` for parameter configurations, which reproduce themselves and
    /// need no membership check.
    checkpoint: Option<CheckPoint>,
}

/// O(1) membership test over a small integer range.
struct MemberSet {
    min: i64,
    table: Vec<bool>,
}

impl MemberSet {
    fn new(states: &StateSet) -> MemberSet {
        let min = states.states()[0];
        let max = states.states()[states.len() - 1];
        let mut table = vec![false; (max - min + 1) as usize];
        for &q in states.states() {
            table[(q - min) as usize] = true;
        }
        MemberSet { min, table }
    }

    #[inline]
    fn contains(&self, v: i64) -> bool {
        let off = v - self.min;
        off >= 0 && (off as usize) < self.table.len() && self.table[off as usize]
    }
}

/// Precomputed search layout for one `(dimension, states)` choice.
struct SearchSpace {
    dim: usize,
    states: StateSet,
    lambda: LambdaSelection,
    slot_count: usize,
    plans: Vec<ConfigPlan>,
    /// Config positions to validate right after the monomer stage.
    monomer_bucket: Vec<usize>,
    /// Config positions to validate right after each slot is assigned.
    slot_buckets: Vec<Vec<usize>>,
    member: MemberSet,
}

impl SearchSpace {
    fn new(dim: usize, states: &StateSet) -> Result<SearchSpace> {
        check_dimension(dim)?;
        let count = states.config_count(dim)?;
        let lambda = LambdaSelection::canonical(dim)?;
        let nq = states.nonzero().len();
        let slot_count = dim * dim * nq * nq;

        let slot_of = |pair_pos: usize, a: i64, b: i64| -> u32 {
            let i = states.nonzero_index(a).expect("nonzero state");
            let j = states.nonzero_index(b).expect("nonzero state");
            ((pair_pos * nq + i) * nq + j) as u32
        };

        let mut plans = Vec::with_capacity(count as usize);
        let mut monomer_bucket = Vec::new();
        let mut slot_buckets = vec![Vec::new(); slot_count];
        for idx in 0..count {
            let config = index_config(idx, states, dim)?;
            let states_by_dir = config.states().to_vec();
            let mut refs: Vec<(u32, i8)> = Vec::new();
            for (pair_pos, &pair) in lambda.pairs().iter().enumerate() {
                let (u, w) = (pair.first(), pair.second());
                let (a1, b1) = (states_by_dir[u.index()], states_by_dir[w.index()]);
                if a1 != 0 && b1 != 0 {
                    refs.push((slot_of(pair_pos, a1, b1), 1));
                }
                let (a2, b2) = (
                    states_by_dir[w.negate().index()],
                    states_by_dir[u.negate().index()],
                );
                if a2 != 0 && b2 != 0 {
                    refs.push((slot_of(pair_pos, a2, b2), -1));
                }
            }
            // The all-zero configuration, monomers and selected dimers are
            // the parameters themselves; a branch stores them directly, so
            // they need no membership check. A two-state configuration is a
            // selected dimer exactly when it reads its own slot once,
            // positively; matching dimers read their partner negatively and
            // do get checked (their value is derived).
            let nonzero = states_by_dir.iter().filter(|&&q| q != 0).count();
            let is_parameter = match nonzero {
                0 | 1 => true,
                2 => refs.len() == 1 && refs[0].1 == 1,
                _ => false,
            };
            let checkpoint = if is_parameter {
                None
            } else {
                match refs.iter().map(|&(s, _)| s).max() {
                    None => Some(CheckPoint::AfterMonomers),
                    Some(s) => Some(CheckPoint::AfterSlot(s)),
                }
            };
            match checkpoint {
                Some(CheckPoint::AfterMonomers) => monomer_bucket.push(plans.len()),
                Some(CheckPoint::AfterSlot(s)) => slot_buckets[s as usize].push(plans.len()),
                None => {}
            }
            plans.push(ConfigPlan {
                states: states_by_dir,
                refs,
                checkpoint,
            });
        }
        Ok(SearchSpace {
            dim,
            states: states.clone(),
            lambda,
            slot_count,
            plans,
            monomer_bucket,
            slot_buckets,
            member: MemberSet::new(states),
        })
    }

    /// Monomer part of the reconstruction identity at one configuration:
    /// every term except the dimers with two nonzero states, which the
    /// plan's slot references add back.
    fn monomer_part(&self, plan: &ConfigPlan, monomers: &Monomers) -> i64 {
        let n = &plan.states;
        let mut acc = n[Direction::CENTER.index()];
        for &pair in self.lambda.pairs() {
            let (u, w) = (pair.first(), pair.second());
            let (a1, b1) = (n[u.index()], n[w.index()]);
            if a1 == 0 {
                acc += monomers.value(w, b1);
            } else if b1 == 0 {
                acc += monomers.value(u, a1);
            }
            let (a2, b2) = (n[w.negate().index()], n[u.negate().index()]);
            if a2 == 0 {
                acc -= monomers.value(w, b2);
            } else if b2 == 0 {
                acc -= monomers.value(u, a2);
            }
            // Monomer expansions of the dimer and its matching partner.
            acc -= monomers.value(u, a1) + monomers.value(w, b1);
            acc -= monomers.value(w.negate(), a1) + monomers.value(u.negate(), b1);
        }
        for d in 1..=2 * self.dim {
            let v = Direction::from_index(d, self.dim).expect("valid index");
            acc += monomers.expansion(n[v.index()]);
            acc -= monomers.value(v, n[v.negate().index()]);
        }
        acc
    }

    /// Evaluates every configuration for fully assigned parameters and
    /// returns the table if all values stay in the state set.
    fn close(&self, monomers: &Monomers, slots: &[i64]) -> Option<Vec<i64>> {
        let mut table = Vec::with_capacity(self.plans.len());
        for plan in &self.plans {
            let mut v = self.monomer_part(plan, monomers);
            for &(slot, sign) in &plan.refs {
                v += sign as i64 * slots[slot as usize];
            }
            if plan.checkpoint.is_some() && !self.member.contains(v) {
                return None;
            }
            table.push(v);
        }
        debug_assert!(self.reproduces_parameters(monomers, slots, &table));
        Some(table)
    }

    /// Debug check: a completed table stores exactly the branch parameters
    /// at the parameter configurations (forced by the pinned monomer sums).
    fn reproduces_parameters(&self, monomers: &Monomers, slots: &[i64], table: &[i64]) -> bool {
        self.plans.iter().zip(table).all(|(plan, &value)| {
            let nonzero: Vec<usize> = (0..plan.states.len())
                .filter(|&d| plan.states[d] != 0)
                .collect();
            match (nonzero.len(), plan.refs.as_slice()) {
                (0, _) => value == 0,
                (1, _) => {
                    let v = Direction::from_index(nonzero[0], self.dim).expect("valid");
                    value == monomers.value(v, plan.states[nonzero[0]])
                }
                (2, [(slot, 1)]) => value == slots[*slot as usize],
                _ => true,
            }
        })
    }
}

/// Monomer assignment of one branch: values per (direction, nonzero state).
struct Monomers<'a> {
    states: &'a StateSet,
    /// `values[dir * nq + i]`.
    values: Vec<i64>,
    /// Per nonzero state, the sum of its values over all directions.
    expansions: Vec<i64>,
}

impl<'a> Monomers<'a> {
    fn new(states: &'a StateSet, values: Vec<i64>, dirs: usize) -> Monomers<'a> {
        let nq = states.nonzero().len();
        let expansions = (0..nq)
            .map(|i| (0..dirs).map(|d| values[d * nq + i]).sum())
            .collect();
        Monomers {
            states,
            values,
            expansions,
        }
    }

    #[inline]
    fn value(&self, v: Direction, q: i64) -> i64 {
        if q == 0 {
            return 0;
        }
        let nq = self.states.nonzero().len();
        let i = self.states.nonzero_index(q).expect("nonzero state");
        self.values[v.index() * nq + i]
    }

    #[inline]
    fn expansion(&self, q: i64) -> i64 {
        if q == 0 {
            return 0;
        }
        self.expansions[self.states.nonzero_index(q).expect("nonzero state")]
    }
}

/// All assignments of `slots` values from `states` summing to `target`,
/// optionally with the first slot pinned.
fn compositions(
    states: &StateSet,
    slots: usize,
    target: i64,
    fixed_first: Option<i64>,
) -> Vec<Vec<i64>> {
    fn rec(
        states: &StateSet,
        slots: usize,
        remaining: i64,
        bounds: (i64, i64),
        current: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
    ) {
        if current.len() == slots {
            if remaining == 0 {
                out.push(current.clone());
            }
            return;
        }
        let left = (slots - current.len() - 1) as i64;
        for &v in states.states() {
            let rest = remaining - v;
            if rest < left * bounds.0 || rest > left * bounds.1 {
                continue;
            }
            current.push(v);
            rec(states, slots, rest, bounds, current, out);
            current.pop();
        }
    }

    let bounds = (states.states()[0], states.states()[states.len() - 1]);
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(slots);
    match fixed_first {
        Some(q) if states.contains(q) => {
            current.push(q);
            rec(states, slots, target - q, bounds, &mut current, &mut out);
        }
        Some(_) => {}
        None => rec(states, slots, target, bounds, &mut current, &mut out),
    }
    out
}

/// Ceiling on the number of monomer-stage branches before the search refuses
/// to start.
const MAX_MONOMER_COMBINATIONS: u128 = 1 << 24;

/// Enumerates all number-conserving rules for the given dimension and state
/// set, each exactly once, sorted by ascending rule table.
pub fn enumerate_ncca(
    dim: usize,
    states: &StateSet,
    filters: &EnumerationFilters,
) -> Result<Vec<CatalogEntry>> {
    if filters.rotation_symmetric {
        if dim != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: dim,
            });
        }
        return enumerate_rnca(states, filters);
    }
    let tables = enumerate_tables(dim, states, filters.passive)?;
    finish_catalog(dim, states, tables, filters)
}

/// The raw table enumeration: monomer compositions crossed with dimer-slot
/// assignment under scheduled membership checks.
fn enumerate_tables(dim: usize, states: &StateSet, passive: bool) -> Result<Vec<Vec<i64>>> {
    let space = SearchSpace::new(dim, states)?;
    let dirs = 2 * dim + 1;

    // Stage 1: per nonzero state, all monomer value rows summing to it. The
    // center value comes first and is pinned for passive rules.
    let mut per_state: Vec<Vec<Vec<i64>>> = Vec::new();
    let mut combo_count: u128 = 1;
    for &q in states.nonzero() {
        let rows = compositions(states, dirs, q, passive.then_some(q));
        combo_count = combo_count.saturating_mul(rows.len() as u128);
        per_state.push(rows);
    }
    if combo_count > MAX_MONOMER_COMBINATIONS {
        return Err(Error::SearchTooLarge(format!(
            "{} monomer combinations over {} monomer and {} dimer parameters",
            combo_count,
            dirs * states.nonzero().len(),
            space.slot_count
        )));
    }

    // The cartesian product over states, as row indices.
    let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
    for rows in &per_state {
        let mut next = Vec::with_capacity(combos.len().saturating_mul(rows.len()));
        for prefix in &combos {
            for r in 0..rows.len() {
                let mut c = prefix.clone();
                c.push(r);
                next.push(c);
            }
        }
        combos = next;
    }

    let mut tables: Vec<Vec<i64>> = combos
        .par_iter()
        .map(|combo| {
            let nq = states.nonzero().len();
            let mut values = vec![0i64; dirs * nq];
            for (i, &row) in combo.iter().enumerate() {
                for (d, &v) in per_state[i][row].iter().enumerate() {
                    values[d * nq + i] = v;
                }
            }
            let monomers = Monomers::new(states, values, dirs);
            search_dimers(&space, &monomers)
        })
        .reduce(Vec::new, |mut a, mut b| {
            a.append(&mut b);
            a
        });
    tables.sort_unstable();
    assert!(
        tables.windows(2).all(|w| w[0] < w[1]),
        "parameter assignments must map to distinct tables"
    );
    Ok(tables)
}

/// Depth-first assignment of dimer-slot values for one monomer choice.
fn search_dimers(space: &SearchSpace, monomers: &Monomers) -> Vec<Vec<i64>> {
    let parts: Vec<i64> = space
        .plans
        .iter()
        .map(|plan| space.monomer_part(plan, monomers))
        .collect();
    let check = |pos: usize, slots: &[i64]| -> bool {
        let plan = &space.plans[pos];
        let mut v = parts[pos];
        for &(slot, sign) in &plan.refs {
            v += sign as i64 * slots[slot as usize];
        }
        space.member.contains(v)
    };
    if !space
        .monomer_bucket
        .iter()
        .all(|&pos| check(pos, &[] as &[i64]))
    {
        return Vec::new();
    }

    fn rec(
        space: &SearchSpace,
        parts: &[i64],
        slots: &mut Vec<i64>,
        depth: usize,
        monomers: &Monomers,
        out: &mut Vec<Vec<i64>>,
    ) {
        if depth == space.slot_count {
            if let Some(table) = space.close(monomers, slots) {
                out.push(table);
            }
            return;
        }
        'values: for &q in space.states.states() {
            slots[depth] = q;
            for &pos in &space.slot_buckets[depth] {
                let plan = &space.plans[pos];
                let mut v = parts[pos];
                for &(slot, sign) in &plan.refs {
                    v += sign as i64 * slots[slot as usize];
                }
                if !space.member.contains(v) {
                    continue 'values;
                }
            }
            rec(space, parts, slots, depth + 1, monomers, out);
        }
    }

    let mut out = Vec::new();
    let mut slots = vec![0i64; space.slot_count];
    rec(space, &parts, &mut slots, 0, monomers, &mut out);
    out
}

/// Labels, filters and packages sorted tables.
fn finish_catalog(
    dim: usize,
    states: &StateSet,
    tables: Vec<Vec<i64>>,
    filters: &EnumerationFilters,
) -> Result<Vec<CatalogEntry>> {
    let entries: Vec<CatalogEntry> = tables
        .into_par_iter()
        .map(|table| {
            let rule = DenseRule::new(dim, states.clone(), table)?;
            debug_assert!(matches!(
                is_number_conserving(&rule),
                Ok(Verdict::Conserving)
            ));
            let labels = classify_conserving(&rule);
            Ok(CatalogEntry { rule, labels })
        })
        .collect::<Result<_>>()?;
    Ok(entries
        .into_iter()
        .filter(|e| {
            (!filters.passive || e.labels.has(Label::Passive))
                && (!filters.rotation_symmetric || e.labels.has(Label::RotationSymmetric))
                && (!filters.axis_extension_only || e.labels.is_axis_extension())
        })
        .collect())
}

/// Enumerates the two-dimensional rotation-symmetric conserving rules by
/// collapsing the parameters into quarter-turn orbits before searching.
///
/// Orbits: the center monomer `center(q)` is free, the four side monomers of
/// a state share one value `side(q)` with `center(q) + 4 side(q) = q`; the
/// four center-side dimer families share `t[p][q]`, and the diagonal
/// families reduce to `r[p][q]` with the matching-dimer balance forcing
///
/// * `t[p][q] + t[q][p] = center(p) + center(q) + side(p) + side(q)`
/// * `r[p][q] + r[q][p] = 2 side(p) + 2 side(q)`, the other diagonal family
///   being the transpose of `r`.
pub fn enumerate_rnca(
    states: &StateSet,
    filters: &EnumerationFilters,
) -> Result<Vec<CatalogEntry>> {
    let dim = 2;
    let space = SearchSpace::new(dim, states)?;
    let nq = states.nonzero().len();
    let dirs = 2 * dim + 1;
    let nz: Vec<i64> = states.nonzero().to_vec();

    // Orbit-collapsed monomer choices.
    let mut per_state: Vec<Vec<(i64, i64)>> = Vec::new();
    for &q in &nz {
        let mut rows = Vec::new();
        for &center in states.states() {
            if filters.passive && center != q {
                continue;
            }
            let rest = q - center;
            if rest % 4 != 0 || !states.contains(rest / 4) {
                continue;
            }
            rows.push((center, rest / 4));
        }
        per_state.push(rows);
    }
    let mut monomer_choices: Vec<Vec<(i64, i64)>> = vec![Vec::new()];
    for rows in &per_state {
        let mut next = Vec::new();
        for prefix in &monomer_choices {
            for &row in rows {
                let mut c = prefix.clone();
                c.push(row);
                next.push(c);
            }
        }
        monomer_choices = next;
    }

    let mut tables: Vec<Vec<i64>> = Vec::new();
    for choice in monomer_choices {
        let mut values = vec![0i64; dirs * nq];
        for (i, &(center, side)) in choice.iter().enumerate() {
            values[Direction::CENTER.index() * nq + i] = center;
            for d in 1..dirs {
                values[d * nq + i] = side;
            }
        }
        let monomers = Monomers::new(states, values, dirs);

        let t_sum = |i: usize, j: usize| choice[i].0 + choice[j].0 + choice[i].1 + choice[j].1;
        let r_sum = |i: usize, j: usize| 2 * choice[i].1 + 2 * choice[j].1;

        // Diagonal entries are forced to half their balance sum.
        let forced = |sum: i64| -> Option<i64> {
            (sum % 2 == 0 && states.contains(sum / 2)).then_some(sum / 2)
        };
        let mut t = vec![0i64; nq * nq];
        let mut r = vec![0i64; nq * nq];
        let mut feasible = true;
        for i in 0..nq {
            match (forced(t_sum(i, i)), forced(r_sum(i, i))) {
                (Some(ti), Some(ri)) => {
                    t[i * nq + i] = ti;
                    r[i * nq + i] = ri;
                }
                _ => {
                    feasible = false;
                    break;
                }
            }
        }
        if !feasible {
            continue;
        }

        // Free entries: strictly upper-triangular positions of t, then of r.
        let free: Vec<(usize, usize)> = (0..nq)
            .flat_map(|i| (i + 1..nq).map(move |j| (i, j)))
            .collect();
        let mut stack_out: Vec<(Vec<i64>, Vec<i64>)> = Vec::new();
        assign_orbit_values(
            states, &free, &t_sum, &r_sum, &mut t, &mut r, 0, &mut stack_out,
        );

        for (t, r) in stack_out {
            // Expand orbits into canonical slots: pairs {0,+1} and {0,+2}
            // take t; {+1,+2} takes the transpose of r; {+1,-2} takes r.
            let mut slots = vec![0i64; space.slot_count];
            for i in 0..nq {
                for j in 0..nq {
                    slots[i * nq + j] = t[i * nq + j];
                    slots[(nq + i) * nq + j] = t[i * nq + j];
                    slots[(2 * nq + i) * nq + j] = r[j * nq + i];
                    slots[(3 * nq + i) * nq + j] = r[i * nq + j];
                }
            }
            if let Some(table) = space.close(&monomers, &slots) {
                tables.push(table);
            }
        }
    }

    tables.sort_unstable();
    tables.dedup();
    let entries = finish_catalog(dim, states, tables, filters)?;
    // The orbit constraints make every emitted rule rotation-symmetric; the
    // label is asserted rather than filtered.
    assert!(
        entries.iter().all(|e| e.labels.has(Label::RotationSymmetric)),
        "orbit-collapsed search must yield rotation-symmetric rules"
    );
    Ok(entries)
}

/// Assigns the free upper-triangular orbit entries of `t`, then `r`; each
/// choice forces the transposed entry through its balance sum.
#[allow(clippy::too_many_arguments)]
fn assign_orbit_values(
    states: &StateSet,
    free: &[(usize, usize)],
    t_sum: &dyn Fn(usize, usize) -> i64,
    r_sum: &dyn Fn(usize, usize) -> i64,
    t: &mut Vec<i64>,
    r: &mut Vec<i64>,
    k: usize,
    out: &mut Vec<(Vec<i64>, Vec<i64>)>,
) {
    let nq = states.nonzero().len();
    let nt = free.len();
    if k == 2 * nt {
        out.push((t.clone(), r.clone()));
        return;
    }
    let (i, j) = free[k % nt];
    let is_t = k < nt;
    let sum = if is_t { t_sum(i, j) } else { r_sum(i, j) };
    for &v in states.states() {
        let partner = sum - v;
        if !states.contains(partner) {
            continue;
        }
        let target = if is_t { &mut *t } else { &mut *r };
        target[i * nq + j] = v;
        target[j * nq + i] = partner;
        assign_orbit_values(states, free, t_sum, r_sum, t, r, k + 1, out);
    }
}
