//! Shared helpers for the integration suites: long-hand alternate forms of
//! the reconstruction identity, sparse rule evaluators, and seeded
//! generators. The long-hand forms are deliberately independent of the
//! library's reconstruction code path.

#![allow(dead_code)]

use ncca::lattice::{Direction, LambdaSelection, OmegaPair};
use ncca::rules::{DenseRule, NeighborhoodConfig, ParametricRule, StateSet};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn dir(s: &str) -> Direction {
    s.parse().unwrap()
}

pub fn lambda_of(dim: usize, pairs: &[(&str, &str)]) -> LambdaSelection {
    let pairs = pairs
        .iter()
        .map(|(a, b)| OmegaPair::new(dir(a), dir(b), dim).unwrap())
        .collect();
    LambdaSelection::new(dim, pairs).unwrap()
}

/// The pair selection under which the top-leading two-dimensional form is
/// the exact reconstruction identity.
pub fn top_leading_lambda() -> LambdaSelection {
    lambda_of(2, &[("0", "+1"), ("0", "-2"), ("-1", "-2"), ("+1", "-2")])
}

/// The pair selection accompanying the worked three-dimensional expansion.
pub fn d3_expansion_lambda() -> LambdaSelection {
    lambda_of(
        3,
        &[
            ("+2", "-1"),
            ("0", "-1"),
            ("-2", "-1"),
            ("+3", "-1"),
            ("-3", "-1"),
            ("+2", "-3"),
            ("0", "-3"),
            ("+2", "+3"),
            ("0", "-2"),
        ],
    )
}

/// Evaluates a rule-like lookup on a configuration given in direction index
/// order (center, +1, -1, +2, -2, ...).
pub type Lookup<'a> = &'a dyn Fn(&[i64]) -> i64;

/// A lookup backed by a dense table.
pub fn dense_lookup(f: &DenseRule) -> impl Fn(&[i64]) -> i64 + '_ {
    move |states: &[i64]| {
        let n = NeighborhoodConfig::new(f.dimension(), states.to_vec()).unwrap();
        f.evaluate(&n).unwrap()
    }
}

/// A lookup backed by parametric values: exact on configurations with at
/// most two nonzero states, which is all the alternate forms reference.
pub fn sparse_lookup(p: &ParametricRule) -> impl Fn(&[i64]) -> i64 + '_ {
    move |states: &[i64]| {
        let nonzero: Vec<usize> = (0..states.len()).filter(|&d| states[d] != 0).collect();
        match nonzero.as_slice() {
            [] => 0,
            [d] => p.monomer_value(Direction::from_index(*d, p.dimension()).unwrap(), states[*d]),
            [a, b] => {
                let u = Direction::from_index(*a, p.dimension()).unwrap();
                let w = Direction::from_index(*b, p.dimension()).unwrap();
                p.dimer_value(u, states[*a], w, states[*b])
            }
            _ => panic!("sparse lookup is only defined up to dimers"),
        }
    }
}

/// Long-hand two-dimensional reconstruction with the top state leading,
/// written out term by term independently of the library code path.
/// `q = [q1..q5]` reads top, left, center, right, bottom.
pub fn expansion_top_leading(f: Lookup, q: [i64; 5]) -> i64 {
    let [q1, q2, q3, q4, q5] = q;
    q1 + f(&[0, 0, q2, 0, q5]) - f(&[0, 0, q1, 0, q4])
        + f(&[0, q4, 0, 0, q5])
        - f(&[0, q1, 0, 0, q2])
        + f(&[q3, q4, 0, 0, 0])
        - f(&[q2, q3, 0, 0, 0])
        + f(&[q3, 0, 0, 0, q5])
        - f(&[q1, 0, 0, 0, q3])
        + f(&[q2, 0, 0, 0, 0])
        - f(&[q3, 0, 0, 0, 0])
        + f(&[0, q3, 0, 0, 0])
        - f(&[0, q4, 0, 0, 0])
        + f(&[0, 0, 0, 0, q2])
        + f(&[0, 0, 0, 0, q3])
        + f(&[0, 0, 0, 0, q4])
        - f(&[0, 0, 0, 0, q1])
        - 2 * f(&[0, 0, 0, 0, q5])
}

/// The alternate two-dimensional form with the center state leading.
pub fn expansion_center_leading(f: Lookup, q: [i64; 5]) -> i64 {
    let [q1, q2, q3, q4, q5] = q;
    q3 + f(&[0, 0, q2, q1, 0]) - f(&[0, 0, q5, q4, 0])
        + f(&[0, 0, q2, 0, q5])
        - f(&[0, 0, q1, 0, q4])
        + f(&[q3, q4, 0, 0, 0])
        - f(&[q2, q3, 0, 0, 0])
        + f(&[q3, 0, 0, q1, 0])
        - f(&[q5, 0, 0, q3, 0])
        + f(&[0, 0, 0, q4, 0])
        - f(&[0, 0, 0, q1, 0])
        + f(&[0, 0, 0, 0, q4])
        - f(&[0, 0, 0, 0, q3])
        + f(&[0, 0, q1, 0, 0])
        + f(&[0, 0, q5, 0, 0])
        - f(&[0, 0, q2, 0, 0])
        - f(&[0, 0, q3, 0, 0])
        + f(&[q2, 0, 0, 0, 0])
        + f(&[q5, 0, 0, 0, 0])
        - 2 * f(&[q3, 0, 0, 0, 0])
}

/// Long-hand three-dimensional reconstruction (37 rule applications),
/// written out term by term. `q = [q1..q7]` reads top, left, center,
/// right, bottom, forward, backward.
pub fn expansion_d3(f: Lookup, q: [i64; 7]) -> i64 {
    let [q1, q2, q3, q4, q5, q6, q7] = q;
    q1 + f(&[0, q4, 0, 0, q5, 0, 0]) - f(&[0, q1, 0, 0, q2, 0, 0])
        + f(&[q3, 0, 0, 0, q5, 0, 0])
        - f(&[q1, 0, 0, 0, q3, 0, 0])
        + f(&[0, 0, q2, 0, q5, 0, 0])
        - f(&[0, 0, q1, 0, q4, 0, 0])
        + f(&[0, 0, 0, 0, q5, q6, 0])
        - f(&[0, 0, 0, 0, q7, q1, 0])
        + f(&[0, 0, 0, 0, q5, 0, q7])
        - f(&[0, 0, 0, 0, q6, 0, q1])
        + f(&[0, q4, 0, 0, 0, 0, q7])
        - f(&[0, q6, 0, 0, 0, 0, q2])
        + f(&[q3, 0, 0, 0, 0, 0, q7])
        - f(&[q6, 0, 0, 0, 0, 0, q3])
        + f(&[0, q4, 0, 0, 0, q6, 0])
        - f(&[0, q7, 0, 0, 0, q2, 0])
        + f(&[q3, q4, 0, 0, 0, 0, 0])
        - f(&[q2, q3, 0, 0, 0, 0, 0])
        + f(&[q2, 0, 0, 0, 0, 0, 0])
        + f(&[q6, 0, 0, 0, 0, 0, 0])
        - 2 * f(&[q3, 0, 0, 0, 0, 0, 0])
        + f(&[0, q3, 0, 0, 0, 0, 0])
        + f(&[0, q6, 0, 0, 0, 0, 0])
        + f(&[0, q7, 0, 0, 0, 0, 0])
        - 3 * f(&[0, q4, 0, 0, 0, 0, 0])
        + f(&[0, 0, 0, 0, q2, 0, 0])
        + f(&[0, 0, 0, 0, q3, 0, 0])
        + f(&[0, 0, 0, 0, q4, 0, 0])
        + f(&[0, 0, 0, 0, q6, 0, 0])
        + f(&[0, 0, 0, 0, q7, 0, 0])
        - f(&[0, 0, 0, 0, q1, 0, 0])
        - 4 * f(&[0, 0, 0, 0, q5, 0, 0])
        + f(&[0, 0, 0, 0, 0, q2, 0])
        - f(&[0, 0, 0, 0, 0, q6, 0])
        + f(&[0, 0, 0, 0, 0, 0, q2])
        + f(&[0, 0, 0, 0, 0, 0, q3])
        - 2 * f(&[0, 0, 0, 0, 0, 0, q7])
}

/// Grid reading order `[q1..q5]` to direction index order for `d = 2`.
pub fn grid_to_config_d2(q: [i64; 5]) -> Vec<i64> {
    let [q1, q2, q3, q4, q5] = q;
    vec![q3, q4, q2, q1, q5]
}

/// Grid reading order `[q1..q7]` to direction index order for `d = 3`.
pub fn grid_to_config_d3(q: [i64; 7]) -> Vec<i64> {
    let [q1, q2, q3, q4, q5, q6, q7] = q;
    vec![q3, q4, q2, q1, q5, q6, q7]
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A uniformly random dense rule table.
pub fn random_dense_rule(rng: &mut ChaCha8Rng, dim: usize, states: &StateSet) -> DenseRule {
    DenseRule::from_fn(dim, states.clone(), |_| {
        states.state_at(rng.gen_range(0..states.len()))
    })
    .unwrap()
}

/// A random parametric rule whose monomer values satisfy the per-state sum
/// condition (each family sums to its state); dimer values are unconstrained.
/// Such parameters need not close, but every reconstruction formulation
/// agrees on them.
pub fn random_balanced_parametric(
    rng: &mut ChaCha8Rng,
    dim: usize,
    states: &StateSet,
) -> ParametricRule {
    let dirs = 2 * dim + 1;
    let nq = states.nonzero().len();
    let mut monomers = vec![0i64; dirs * nq];
    for (i, &q) in states.nonzero().iter().enumerate() {
        // Rejection-sample a family of values in the state set summing to q.
        loop {
            let mut sum = 0;
            for d in 0..dirs - 1 {
                let v = states.state_at(rng.gen_range(0..states.len()));
                monomers[d * nq + i] = v;
                sum += v;
            }
            if states.contains(q - sum) {
                monomers[(dirs - 1) * nq + i] = q - sum;
                break;
            }
        }
    }
    let dimers: Vec<i64> = (0..dim * dim * nq * nq)
        .map(|_| states.state_at(rng.gen_range(0..states.len())))
        .collect();
    ParametricRule::new(
        dim,
        states.clone(),
        Direction::CENTER,
        LambdaSelection::canonical(dim).unwrap(),
        monomers,
        dimers,
    )
    .unwrap()
}

/// Embeds a one-dimensional rule along `axis` of a `dim`-dimensional space.
pub fn axis_embedding(g: &DenseRule, dim: usize, axis: usize) -> DenseRule {
    assert_eq!(g.dimension(), 1);
    DenseRule::from_fn(dim, g.states().clone(), |n| {
        let restricted = NeighborhoodConfig::new(
            1,
            vec![
                n.get(Direction::CENTER),
                n.get(Direction::positive(axis)),
                n.get(Direction::negative(axis)),
            ],
        )
        .unwrap();
        g.evaluate(&restricted).unwrap()
    })
    .unwrap()
}
