#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shiftrisk::{
    build_occupancy_band, expected_risk, violation_count, BinaryMatrix, ConstraintSet,
    ContactGraph, EpidemicParams, Model, PropagationMode, Schedule, TestPlan, Testing,
};

/// Complete graph with weights drawn from `U(lo, hi)` and each employee
/// vaccinated with probability one half.
pub fn random_office(n: usize, seed: u64, lo: f64, hi: f64) -> ContactGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let p = rng.gen_range(lo..hi);
            w[i * n + j] = p;
            w[j * n + i] = p;
        }
    }
    let flags: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    ContactGraph::from_weights(n, w)
        .unwrap()
        .with_vaccination(&flags)
        .unwrap()
}

pub fn horizon(days: usize) -> EpidemicParams {
    EpidemicParams {
        horizon: days,
        ..EpidemicParams::default()
    }
}

pub fn half_band(n: usize, tc: usize) -> ConstraintSet {
    ConstraintSet::unconstrained(n)
        .with_band(build_occupancy_band(n, 0.5, 1.0).unwrap())
        .with_test_capacity(tc)
}

pub fn matrix_from_bits(n: usize, days: usize, bits: u64) -> BinaryMatrix {
    let mut m = BinaryMatrix::zeros(n, days);
    for i in 0..n {
        for d in 0..days {
            m.set(i, d, bits >> (i * days + d) & 1 == 1);
        }
    }
    m
}

/// Straight double loop over every presence matrix (and every test plan for
/// Model 1), scoring each with the public risk and violation functions.
/// Returns the best feasible risk and the number of feasible presence
/// matrices.
pub fn brute_force(
    graph: &ContactGraph,
    params: &EpidemicParams,
    cs: &ConstraintSet,
    model: Model,
    mode: PropagationMode,
) -> (Option<f64>, u64) {
    let (n, days) = (graph.n(), params.horizon);
    let cells = n * days;
    assert!(cells <= 12, "brute force is for tiny instances");
    let mut best: Option<f64> = None;
    let mut feasible_presence = 0;
    for xb in 0..1u64 << cells {
        let x = Schedule(matrix_from_bits(n, days, xb));
        if violation_count(&x, None, cs).unwrap() == 0 {
            feasible_presence += 1;
        } else {
            continue;
        }
        match model {
            Model::PresenceOnly { pr_test } => {
                let r = expected_risk(graph, params, &x, Testing::Random(pr_test), mode).unwrap();
                best = Some(best.map_or(r, |b| b.min(r)));
            }
            Model::WithTesting => {
                for tb in 0..1u64 << cells {
                    let t = TestPlan(matrix_from_bits(n, days, tb));
                    if violation_count(&x, Some(&t), cs).unwrap() != 0 {
                        continue;
                    }
                    let r = expected_risk(graph, params, &x, Testing::Scheduled(&t), mode).unwrap();
                    best = Some(best.map_or(r, |b| b.min(r)));
                }
            }
        }
    }
    (best, feasible_presence)
}
