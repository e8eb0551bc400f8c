//! Follows the infection probabilities of a 20-person office through one
//! week and compares the exact and linearized contact updates.
//!
//! cargo run --release --example propagate_risk

use shiftrisk::{
    gen_sectioned_graph, simulate, BinaryMatrix, EpidemicParams, Profile, PropagationMode,
    Schedule, TestPlan, Testing,
};

fn main() -> shiftrisk::Result<()> {
    let mut flags = vec![true; 20];
    flags[14] = false;
    let graph = gen_sectioned_graph(&[12, 8], Profile::Dense, Profile::Sparse, 7)?
        .with_vaccination(&flags)?;
    let params = EpidemicParams::default();

    // alternate halves of the office; everyone tests on Monday
    let mut x = BinaryMatrix::zeros(20, 5);
    let mut t = BinaryMatrix::zeros(20, 5);
    for i in 0..20 {
        for d in 0..5 {
            x.set(i, d, (i + d) % 2 == 0 || d == 2);
        }
        t.set(i, 0, true);
    }
    let (x, t) = (Schedule(x), TestPlan(t));

    let exact = simulate(&graph, &params, &x, Testing::Scheduled(&t), PropagationMode::Exact)?;
    let lin = simulate(&graph, &params, &x, Testing::Scheduled(&t), PropagationMode::Linearized)?;
    println!("day  mean risk (x1e5)  unvaccinated #14   max |exact - linearized|");
    for (e, l) in exact.iter().zip(&lin) {
        let mean = e.pi.iter().sum::<f64>() / 20.0;
        let gap = e
            .pi
            .iter()
            .zip(&l.pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "{:>3}  {:>17.4}  {:>16.4}   {gap:.3e}",
            e.day,
            mean * 1e5,
            e.pi[14] * 1e5
        );
    }

    let random = simulate(&graph, &params, &x, Testing::Random(0.2), PropagationMode::Exact)?;
    let obj = |traj: &[shiftrisk::RiskState]| shiftrisk::objective(&traj[1..]);
    println!(
        "objective: Monday tests {:.4}, random tests at 0.2/day {:.4} (x1e5)",
        obj(&exact)? * 1e5,
        obj(&random)? * 1e5
    );
    Ok(())
}
