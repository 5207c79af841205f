//! The number-conservation decision procedure.
//!
//! A rule conserves the state sum if and only if, for a fixed leading
//! direction `eta` and pair selection `lambda`, every neighborhood
//! configuration satisfies the reconstruction identity implemented by
//! [`reconstruct`]: the value at `N` is determined by the rule's monomer and
//! selected dimer values. Necessary-condition prescreens (quiescence, monomer
//! sums, matching-dimer balance) run first and attribute any failure to the
//! identity it breaks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    direction_set, omega_pairs, positive_directions, Direction, LambdaSelection,
};
use crate::rules::{index_config, DenseRule, NeighborhoodConfig, ParametricRule};

/// Identity that a violated rule breaks.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum EquationId {
    /// Quiescence or the monomer-sum condition.
    #[serde(rename = "lemma-4.1")]
    StateBalance,
    /// Matching-dimer balance.
    #[serde(rename = "lemma-4.2")]
    DimerBalance,
    /// The full reconstruction identity.
    #[serde(rename = "eq-13")]
    Reconstruction,
}

impl EquationId {
    pub fn as_str(self) -> &'static str {
        match self {
            EquationId::StateBalance => "lemma-4.1",
            EquationId::DimerBalance => "lemma-4.2",
            EquationId::Reconstruction => "eq-13",
        }
    }
}

/// First counterexample found, with the identity it violates.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Violation {
    pub config: NeighborhoodConfig,
    pub equation: EquationId,
}

/// Outcome of a conservation check.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Verdict {
    Conserving,
    Violated(Violation),
}

impl Verdict {
    pub fn is_conserving(&self) -> bool {
        matches!(self, Verdict::Conserving)
    }

    pub fn violation(&self) -> Option<&Violation> {
        match self {
            Verdict::Conserving => None,
            Verdict::Violated(v) => Some(v),
        }
    }
}

/// Results of the necessary-condition prescreens, with the first
/// counterexample for each failing condition.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct PrescreenReport {
    /// Homogeneous configuration `H_q` with `f(H_q) != q`.
    pub quiescence_failure: Option<NeighborhoodConfig>,
    /// `M_{0:q}` for the first `q` whose monomer values do not sum to `q`.
    pub monomer_sum_failure: Option<NeighborhoodConfig>,
    /// Dimer whose matching-dimer balance fails.
    pub matching_dimer_failure: Option<NeighborhoodConfig>,
}

impl PrescreenReport {
    pub fn quiescence_ok(&self) -> bool {
        self.quiescence_failure.is_none()
    }

    pub fn monomer_sum_ok(&self) -> bool {
        self.monomer_sum_failure.is_none()
    }

    pub fn matching_dimer_ok(&self) -> bool {
        self.matching_dimer_failure.is_none()
    }

    pub fn all_ok(&self) -> bool {
        self.quiescence_ok() && self.monomer_sum_ok() && self.matching_dimer_ok()
    }

    /// The first failure in check order, as a violation.
    pub fn first_violation(&self) -> Option<Violation> {
        if let Some(c) = &self.quiescence_failure {
            return Some(Violation {
                config: c.clone(),
                equation: EquationId::StateBalance,
            });
        }
        if let Some(c) = &self.monomer_sum_failure {
            return Some(Violation {
                config: c.clone(),
                equation: EquationId::StateBalance,
            });
        }
        self.matching_dimer_failure.as_ref().map(|c| Violation {
            config: c.clone(),
            equation: EquationId::DimerBalance,
        })
    }
}

/// Runs the necessary-condition prescreens on a dense rule:
/// `f(H_q) = q` for every state, monomer values summing to their state, and
/// the matching-dimer balance for every pair and state combination.
pub fn prescreen(f: &DenseRule) -> Result<PrescreenReport> {
    let dim = f.dimension();
    let states = f.states().clone();
    let mut report = PrescreenReport::default();

    for &q in states.states() {
        let h = NeighborhoodConfig::homogeneous(dim, q)?;
        if f.evaluate(&h)? != q {
            report.quiescence_failure = Some(h);
            break;
        }
    }

    for &q in states.states() {
        let mut sum = 0i64;
        for v in direction_set(dim)? {
            sum += f.evaluate(&NeighborhoodConfig::monomer(dim, v, q)?)?;
        }
        if sum != q {
            report.monomer_sum_failure =
                Some(NeighborhoodConfig::monomer(dim, Direction::CENTER, q)?);
            break;
        }
    }

    'pairs: for pair in omega_pairs(dim)? {
        for &p in states.states() {
            for &q in states.states() {
                let d1 = NeighborhoodConfig::dimer(dim, pair, p, q)?;
                // The matching dimer keeps p on the negation of the pair's
                // second direction and q on the negation of its first.
                let mut s = vec![0i64; 2 * dim + 1];
                s[pair.second().negate().index()] = p;
                s[pair.first().negate().index()] = q;
                let d2 = NeighborhoodConfig::new(dim, s)?;
                let lhs = f.evaluate(&d1)? + f.evaluate(&d2)?;
                let rhs = f.monomer_expansion(&d1)? + f.monomer_expansion(&d2)?;
                if lhs != rhs {
                    report.matching_dimer_failure = Some(d1);
                    break 'pairs;
                }
            }
        }
    }

    Ok(report)
}

/// Evaluates the reconstruction identity's right-hand side at `n`:
///
/// `N(eta)`
/// `+ sum over (u,w) in lambda of  f(D_{u:N(u), w:N(w)}) - f(D_{u:N(-w), w:N(-u)})`
/// `+ sum over v != eta of        f^E(H_{N(v)})`
/// `- sum over (u,w) in lambda of f^E(D_{u:N(u), w:N(w)}) + f^E(D_{-w:N(u), -u:N(w)})`
/// `- sum over v in V+ of         f(M_{v:N(-v)})`
///
/// where monomer and dimer values come from the parametric rule (dimers of
/// non-stored pairs are derived through the matching-dimer balance). The
/// value may lie outside the state set; callers decide what that means.
pub fn reconstruct(
    p: &ParametricRule,
    n: &NeighborhoodConfig,
    eta: Direction,
    lambda: &LambdaSelection,
) -> i64 {
    let dim = p.dimension();
    debug_assert_eq!(n.dimension(), dim);
    debug_assert_eq!(lambda.dimension(), dim);

    let mut acc = n.get(eta);
    for &pair in lambda.pairs() {
        let (u, w) = (pair.first(), pair.second());
        let (nu, nw) = (n.get(u), n.get(w));
        let (n_mu, n_mw) = (n.get(u.negate()), n.get(w.negate()));
        acc += p.dimer_value(u, nu, w, nw);
        acc -= p.dimer_value(u, n_mw, w, n_mu);
        // Monomer expansions of the dimer and of its matching dimer, which
        // carries N(u) on -w and N(w) on -u.
        acc -= p.monomer_value(u, nu) + p.monomer_value(w, nw);
        acc -= p.monomer_value(w.negate(), nu) + p.monomer_value(u.negate(), nw);
    }
    for v in 0..=2 * dim {
        let v = Direction::from_index(v, dim).expect("valid index");
        if v != eta {
            acc += p.expansion_of_homogeneous(n.get(v));
        }
    }
    for v in positive_directions(dim).expect("valid dimension") {
        acc -= p.monomer_value(v, n.get(v.negate()));
    }
    acc
}

/// Reads the monomer and selected-dimer values of a dense rule into a
/// parametric rule. Any rule can be read this way; only for conserving rules
/// does the result reproduce the full table.
pub fn extract_params(
    f: &DenseRule,
    eta: Direction,
    lambda: &LambdaSelection,
) -> Result<ParametricRule> {
    let dim = f.dimension();
    if lambda.dimension() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: lambda.dimension(),
        });
    }
    if eta.index() > 2 * dim {
        return Err(Error::InvalidDirection {
            index: eta.index(),
            dim,
        });
    }
    let states = f.states().clone();
    let k = states.nonzero().len();
    let mut monomers = Vec::with_capacity((2 * dim + 1) * k);
    for v in direction_set(dim)? {
        for &q in states.nonzero() {
            monomers.push(f.evaluate(&NeighborhoodConfig::monomer(dim, v, q)?)?);
        }
    }
    let mut dimers = Vec::with_capacity(dim * dim * k * k);
    for &pair in lambda.pairs() {
        for &a in states.nonzero() {
            for &b in states.nonzero() {
                dimers.push(f.evaluate(&NeighborhoodConfig::dimer(dim, pair, a, b)?)?);
            }
        }
    }
    ParametricRule::new(dim, states, eta, lambda.clone(), monomers, dimers)
}

/// Decides number conservation with the default formulation: leading
/// direction at the center and the canonical pair selection.
pub fn is_number_conserving(f: &DenseRule) -> Result<Verdict> {
    let lambda = LambdaSelection::canonical(f.dimension())?;
    is_number_conserving_with(f, Direction::CENTER, &lambda)
}

/// Decides number conservation: prescreens first, then checks the
/// reconstruction identity at every configuration. The verdict does not
/// depend on the formulation `(eta, lambda)`; the witness of a violated rule
/// is the first failing configuration in index order for that formulation.
pub fn is_number_conserving_with(
    f: &DenseRule,
    eta: Direction,
    lambda: &LambdaSelection,
) -> Result<Verdict> {
    let report = prescreen(f)?;
    if let Some(v) = report.first_violation() {
        return Ok(Verdict::Violated(v));
    }
    let params = extract_params(f, eta, lambda)?;
    let states = f.states().clone();
    let dim = f.dimension();
    let count = f.table_len() as u64;
    let check = |idx: u64| -> Result<Option<u64>> {
        let n = index_config(idx, &states, dim)?;
        if f.value_at(idx) != reconstruct(&params, &n, eta, lambda) {
            Ok(Some(idx))
        } else {
            Ok(None)
        }
    };
    // Partitioning across workers must not change the witness: take the
    // minimum failing index.
    let first = if count >= 1 << 14 {
        (0..count)
            .into_par_iter()
            .map(check)
            .find_first(|r| !matches!(r, Ok(None)))
            .transpose()?
            .flatten()
    } else {
        let mut found = None;
        for idx in 0..count {
            if check(idx)?.is_some() {
                found = Some(idx);
                break;
            }
        }
        found
    };
    Ok(match first {
        None => Verdict::Conserving,
        Some(idx) => Verdict::Violated(Violation {
            config: index_config(idx, &states, dim)?,
            equation: EquationId::Reconstruction,
        }),
    })
}

/// Tabulates a parametric rule through the reconstruction identity. Succeeds
/// if and only if every reconstructed value lies in the state set; the result
/// is then number-conserving. A failure reports the first configuration in
/// index order whose value escapes.
pub fn materialize(
    p: &ParametricRule,
    eta: Direction,
    lambda: &LambdaSelection,
) -> Result<DenseRule> {
    let dim = p.dimension();
    if lambda.dimension() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: lambda.dimension(),
        });
    }
    let states = p.states().clone();
    let count = states.config_count(dim)?;
    let mut table = Vec::with_capacity(count as usize);
    for idx in 0..count {
        let n = index_config(idx, &states, dim)?;
        let value = reconstruct(p, &n, eta, lambda);
        if !states.contains(value) {
            return Err(Error::NotClosedAt {
                config: n.states().to_vec(),
                value,
            });
        }
        table.push(value);
    }
    DenseRule::new(dim, states, table)
}
