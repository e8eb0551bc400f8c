//! Solves small instances exhaustively and with the genetic algorithm.
//!
//! cargo run --release --example oracle_vs_ga

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shiftrisk::{
    build_occupancy_band, enumerate_feasible_count, enumerate_optimum, evolve,
    ga::random_population, ConstraintSet, ContactGraph, EpidemicParams, GaConfig, Model,
    OracleBudget, Problem, PropagationMode,
};

// every pair in contact with probability U(0.05, 0.5); about half vaccinated
fn random_office(n: usize, seed: u64) -> shiftrisk::Result<ContactGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let p = rng.gen_range(0.05..0.5);
            w[i * n + j] = p;
            w[j * n + i] = p;
        }
    }
    let flags: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    ContactGraph::from_weights(n, w)?.with_vaccination(&flags)
}

fn main() -> shiftrisk::Result<()> {
    let budget = OracleBudget::default();
    println!(" n  D  model  feasible  oracle (x1e5)  GA (x1e5)  relative gap");
    for seed in 0..6u64 {
        let n = 3 + seed as usize % 3;
        let days = 2 + seed as usize % 2;
        let graph = random_office(n, seed)?;
        let params = EpidemicParams {
            horizon: days,
            ..EpidemicParams::default()
        };
        let cs = ConstraintSet::unconstrained(n)
            .with_band(build_occupancy_band(n, 0.5, 1.0)?)
            .with_test_capacity(1);
        for (label, model) in [("M1", Model::WithTesting), ("M2", Model::PresenceOnly { pr_test: 0.4 })] {
            let problem = Problem::new(&graph, &params, &cs, model, PropagationMode::Exact)?;
            let exact = enumerate_optimum(&problem, &budget)?;
            let config = GaConfig::for_employees(n, seed);
            let ga = evolve(random_population(&problem, &config), &config, &problem)?;
            let ga_risk = ga.best.fitness.unwrap_or(f64::INFINITY);
            println!(
                "{n:>2} {days:>2}  {label:>5}  {:>8}  {:>13.6}  {:>9.6}  {:.1e}",
                enumerate_feasible_count(&cs, n, days, &budget)?,
                exact.risk * 1e5,
                ga_risk * 1e5,
                (ga_risk - exact.risk) / exact.risk
            );
        }
    }
    Ok(())
}
