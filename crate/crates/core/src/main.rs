use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shiftrisk::graph::{export_graph, GraphMetadata};
use shiftrisk::scenario::{render_report, run_grid, run_scenario, GridRow, ReportFormat, ScenarioConfig};
use shiftrisk::{
    assign_vaccination, build_from_interactions, enumerate_optimum, gen_random_graph, Error,
    Model, OracleBudget, Problem, Profile, PropagationMode, RawInteractionLog,
};

#[derive(Parser)]
#[command(name = "shiftrisk", version, about = "Infection-risk-aware presence and testing schedules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Base seed; repetition i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<PropagationMode>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario.
    Solve(RunArgs),
    /// Run every cell of the config's [grid] section.
    Grid(RunArgs),
    /// Exhaustively solve a tiny scenario.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mode: Option<PropagationMode>,
        #[arg(long, default_value_t = OracleBudget::default().max_states)]
        max_states: u64,
    },
    #[command(subcommand)]
    Graph(GraphCommand),
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Generate a random contact graph.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "sparse")]
        profile: Profile,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        vaccinated: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a contact graph from a `timestamp id_a id_b` interaction log.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        days: Option<u32>,
        #[arg(long)]
        vaccinated: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(args: &RunArgs) -> shiftrisk::Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.solver.seed = seed;
    }
    if let Some(mode) = args.mode {
        cfg.solver.mode = mode;
    }
    if let Some(reps) = args.reps {
        cfg.solver.repetitions = reps;
    }
    Ok(cfg)
}

fn emit(text: &str, out: Option<&Path>) -> shiftrisk::Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> shiftrisk::Result<bool> {
    match cli.command {
        Command::Solve(args) => {
            let cfg = load_config(&args)?;
            let result = run_scenario(&cfg)?;
            let rows = [GridRow {
                coords: vec![],
                result: Ok(result),
            }];
            emit(&render_report(&rows, args.format), args.out.as_deref())?;
            Ok(true)
        }
        Command::Grid(args) => {
            let cfg = load_config(&args)?;
            let rows = run_grid(&cfg)?;
            emit(&render_report(&rows, args.format), args.out.as_deref())?;
            Ok(rows.iter().all(|r| r.result.is_ok()))
        }
        Command::Oracle {
            config,
            mode,
            max_states,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let inst = cfg.instance()?;
            let mode = mode.unwrap_or(cfg.solver.mode);
            let budget = OracleBudget { max_states };
            for model in [Model::WithTesting, Model::PresenceOnly { pr_test: inst.pr_test }] {
                let problem = Problem::new(&inst.graph, &inst.params, &inst.constraints, model, mode)?;
                let out = enumerate_optimum(&problem, &budget)?;
                let label = match model {
                    Model::WithTesting => "M1",
                    Model::PresenceOnly { .. } => "M2",
                };
                println!(
                    "{label}: risk {:.6e} ({} states visited)",
                    out.risk, out.states_visited
                );
                for i in 0..inst.graph.n() {
                    let days: Vec<String> = (0..inst.params.horizon)
                        .map(|d| match &out.tests {
                            Some(t) => format!("{};{}", u8::from(out.schedule.get(i, d)), u8::from(t.get(i, d))),
                            None => u8::from(out.schedule.get(i, d)).to_string(),
                        })
                        .collect();
                    println!("  employee {:>3}: {}", i, days.join(" "));
                }
            }
            Ok(true)
        }
        Command::Graph(GraphCommand::Gen {
            n,
            profile,
            seed,
            vaccinated,
            out,
        }) => {
            let mut graph = gen_random_graph(n, profile, seed)?;
            if let Some(fraction) = vaccinated {
                graph = assign_vaccination(graph, fraction, seed)?;
            }
            let mut meta = GraphMetadata::for_graph(&graph);
            meta.seed = Some(seed);
            meta.profile = Some(profile);
            export_graph(&graph, &meta, &out)?;
            eprintln!("wrote {} employees, {} contacts to {}", n, graph.edge_count(), out.display());
            Ok(true)
        }
        Command::Graph(GraphCommand::Ingest {
            input,
            days,
            vaccinated,
            seed,
            out,
        }) => {
            let mut log = RawInteractionLog::load(&input)?;
            if let Some(days) = days {
                log.observation_days = days;
            }
            let ingested = build_from_interactions(&log)?;
            let mut graph = ingested.graph;
            if let Some(fraction) = vaccinated {
                graph = assign_vaccination(graph, fraction, seed)?;
            }
            let mut meta = GraphMetadata::for_graph(&graph);
            meta.seed = vaccinated.map(|_| seed);
            meta.external_ids = ingested.external_ids;
            export_graph(&graph, &meta, &out)?;
            eprintln!(
                "wrote {} employees over {} days to {}",
                graph.n(),
                log.observation_days,
                out.display()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::Infeasible(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
