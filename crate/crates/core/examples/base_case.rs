//! Optimises presence (M2) and presence plus tests (M1) for the 20-person
//! two-section office in `configs/base_case.toml` and prints both weeks.
//!
//! cargo run --release --example base_case

use shiftrisk::scenario::ScenarioConfig;
use shiftrisk::{daily_headcount, solve_model1, solve_model2, Solution};

const DAYS: [&str; 5] = ["Mon", "Tue", "Wed", "Thu", "Fri"];

fn print_week(sol: &Solution) {
    println!("  emp  {}", DAYS.join("  "));
    for i in 0..sol.schedule.n() {
        let cells: Vec<String> = (0..sol.schedule.days())
            .map(|d| {
                let x = u8::from(sol.schedule.get(i, d));
                match &sol.tests {
                    Some(t) => format!("{x};{}", u8::from(t.get(i, d))),
                    None => format!("{x}  "),
                }
            })
            .collect();
        println!("  {:>3}  {}", i + 1, cells.join("  "));
    }
    let heads: Vec<usize> = (0..sol.schedule.days()).map(|d| daily_headcount(&sol.schedule, d)).collect();
    println!("  on site: {heads:?}");
}

fn main() -> shiftrisk::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/base_case.toml");
    let cfg = ScenarioConfig::load(path)?;
    let inst = cfg.instance()?;
    let ga = cfg.solver.ga_config(inst.graph.n(), 0);

    let m2 = solve_model2(&inst.graph, &inst.params, &inst.constraints, inst.pr_test, &ga, cfg.solver.mode)?;
    println!("M2, tests at random with probability {} per day: risk {:.2}e-5", inst.pr_test, m2.risk * 1e5);
    print_week(&m2);

    let m1 = solve_model1(&inst.graph, &inst.params, &inst.constraints, &ga, cfg.solver.mode)?;
    println!("\nM1, presence;test: risk {:.2}e-5", m1.risk * 1e5);
    print_week(&m1);
    Ok(())
}
