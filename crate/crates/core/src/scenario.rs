//! Configured experiments: one scenario, grids of scenarios, and the
//! R / M2 / M1 result tables.
//!
//! A scenario file is TOML:
//!
//! ```toml
//! [graph]
//! source = "random"          # "edge_list" | "interactions" | "random" | "sectioned"
//! n = 40
//! profile = "sparse"
//! seed = 1
//! vaccinated_fraction = 0.95
//!
//! [params]
//! false_negative = 0.3
//!
//! [constraints]
//! occupancy = [0.5, 0.75]
//! min_presence_days = 3
//! test_capacity = 2          # pr_test defaults to test_capacity / horizon
//!
//! [solver]
//! models = ["R", "M2", "M1"]
//! repetitions = 30
//! seed = 0
//!
//! [grid]                     # only read by `run_grid`
//! false_negative = [0.1, 0.3]
//! test_capacity = [1, 2, 3]
//! ```

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{build_occupancy_band, section_minimum, ConstraintSet, Schedule, TestPlan};
use crate::error::{Error, Result};
use crate::ga::{random_feasible, solve_model1, solve_model2, GaConfig, Model};
use crate::graph::{
    assign_vaccination, build_from_interactions, gen_random_graph, gen_sectioned_graph,
    load_graph, ContactGraph, Profile, RawInteractionLog,
};
use crate::infection::{expected_risk, EpidemicParams, PropagationMode, Testing};

/// Risks are reported multiplied by this factor.
pub const RISK_SCALE: f64 = 1e5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum GraphSource {
    EdgeList {
        path: PathBuf,
    },
    Interactions {
        path: PathBuf,
        #[serde(default)]
        observation_days: Option<u32>,
    },
    Random {
        n: usize,
        profile: Profile,
        #[serde(default)]
        seed: u64,
    },
    /// Consecutive sections, denser inside a section than across.
    Sectioned {
        sections: Vec<usize>,
        #[serde(default = "dense")]
        within: Profile,
        #[serde(default = "sparse")]
        across: Profile,
        #[serde(default)]
        seed: u64,
    },
}

fn dense() -> Profile {
    Profile::Dense
}

fn sparse() -> Profile {
    Profile::Sparse
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    #[serde(flatten)]
    pub source: GraphSource,
    /// Fraction of employees flagged vaccinated, chosen by `vaccination_seed`.
    #[serde(default)]
    pub vaccinated_fraction: Option<f64>,
    #[serde(default)]
    pub vaccination_seed: u64,
    /// Everyone is vaccinated except these employees (overrides the fraction).
    #[serde(default)]
    pub unvaccinated: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionSpec {
    /// Half-open employee range `[start, end)`.
    #[serde(default)]
    pub range: Option<[usize; 2]>,
    #[serde(default)]
    pub members: Option<Vec<usize>>,
    pub min_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstraintSpec {
    /// `[min, max]` fraction of all employees on site each day.
    pub occupancy: Option<[f64; 2]>,
    pub sections: Vec<SectionSpec>,
    pub min_presence_days: usize,
    pub test_capacity: usize,
    /// Daily test probability for M2 and R; `test_capacity / horizon` if unset.
    pub pr_test: Option<f64>,
}

impl Default for ConstraintSpec {
    fn default() -> Self {
        Self {
            occupancy: None,
            sections: Vec::new(),
            min_presence_days: 0,
            test_capacity: 2,
            pr_test: None,
        }
    }
}

/// Column of the result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelChoice {
    /// Random feasible presence with random testing.
    R,
    /// Optimised presence, random testing.
    M2,
    /// Optimised presence and test days.
    M1,
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelChoice::R => "R",
            ModelChoice::M2 => "M2",
            ModelChoice::M1 => "M1",
        })
    }
}

impl FromStr for ModelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "R" => Ok(Self::R),
            "M2" => Ok(Self::M2),
            "M1" => Ok(Self::M1),
            other => Err(Error::Config(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSpec {
    pub models: Vec<ModelChoice>,
    pub mode: PropagationMode,
    pub repetitions: usize,
    /// Repetition `i` runs with seed `seed + i`.
    pub seed: u64,
    /// Extra attempts for a repetition that ends without a feasible
    /// schedule. Attempt `k` of repetition `i` uses seed
    /// `seed + i + k * repetitions`.
    pub restarts: usize,
    pub population_size: Option<usize>,
    pub max_generations: Option<usize>,
    pub mutation_prob: Option<f64>,
    pub tournament_size: Option<usize>,
    pub crossover_prob: Option<f64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            models: vec![ModelChoice::R, ModelChoice::M2, ModelChoice::M1],
            mode: PropagationMode::Exact,
            repetitions: 30,
            seed: 0,
            restarts: 3,
            population_size: None,
            max_generations: None,
            mutation_prob: None,
            tournament_size: None,
            crossover_prob: None,
        }
    }
}

impl SolverSpec {
    pub fn ga_config(&self, n: usize, seed: u64) -> GaConfig {
        let mut c = GaConfig::for_employees(n, seed);
        if let Some(v) = self.population_size {
            c.population_size = v;
        }
        if let Some(v) = self.max_generations {
            c.max_generations = v;
        }
        if let Some(v) = self.mutation_prob {
            c.mutation_prob = v;
        }
        if let Some(v) = self.tournament_size {
            c.tournament_size = v;
        }
        if let Some(v) = self.crossover_prob {
            c.crossover_prob = v;
        }
        c
    }
}

/// Axes of a scenario grid. Cells are the cross product of every axis that
/// is present, varied in declaration order (last axis fastest).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Random and sectioned graphs only.
    pub profile: Option<Vec<Profile>>,
    /// Random graphs only.
    pub n: Option<Vec<usize>>,
    pub false_negative: Option<Vec<f64>>,
    pub occupancy: Option<Vec<[f64; 2]>>,
    pub min_presence_days: Option<Vec<usize>>,
    /// Also resets `pr_test` to `test_capacity / horizon`.
    pub test_capacity: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub graph: GraphSpec,
    #[serde(default)]
    pub params: EpidemicParams,
    #[serde(default)]
    pub constraints: ConstraintSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Directory relative graph paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// A fully built scheduling instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: ContactGraph,
    pub params: EpidemicParams,
    pub constraints: ConstraintSet,
    pub pr_test: f64,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        Ok(config)
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn build_graph(&self) -> Result<ContactGraph> {
        let graph = match &self.graph.source {
            GraphSource::EdgeList { path } => load_graph(&self.resolve(path))?,
            GraphSource::Interactions {
                path,
                observation_days,
            } => {
                let mut log = RawInteractionLog::load(self.resolve(path))?;
                if let Some(days) = observation_days {
                    log.observation_days = *days;
                }
                build_from_interactions(&log)?.graph
            }
            GraphSource::Random { n, profile, seed } => gen_random_graph(*n, *profile, *seed)?,
            GraphSource::Sectioned {
                sections,
                within,
                across,
                seed,
            } => gen_sectioned_graph(sections, *within, *across, *seed)?,
        };
        let n = graph.n();
        if let Some(unvaccinated) = &self.graph.unvaccinated {
            let mut flags = vec![true; n];
            for &i in unvaccinated {
                *flags.get_mut(i).ok_or_else(|| {
                    Error::Config(format!("unvaccinated employee {i} out of range"))
                })? = false;
            }
            graph.with_vaccination(&flags)
        } else if let Some(fraction) = self.graph.vaccinated_fraction {
            assign_vaccination(graph, fraction, self.graph.vaccination_seed)
        } else {
            Ok(graph)
        }
    }

    pub fn build_constraints(&self, n: usize) -> Result<ConstraintSet> {
        let spec = &self.constraints;
        let mut cs = ConstraintSet::unconstrained(n)
            .with_min_presence(spec.min_presence_days)
            .with_test_capacity(spec.test_capacity);
        if let Some([lo, hi]) = spec.occupancy {
            cs = cs.with_band(build_occupancy_band(n, lo, hi)?);
        }
        for section in &spec.sections {
            let members = match (&section.range, &section.members) {
                (Some([start, end]), None) => (*start..*end).collect(),
                (None, Some(members)) => members.clone(),
                _ => {
                    return Err(Error::Config(
                        "a section needs exactly one of `range` or `members`".into(),
                    ))
                }
            };
            cs = cs.with_lower(section_minimum(members, section.min_fraction)?);
        }
        cs.validate()?;
        Ok(cs)
    }

    pub fn instance(&self) -> Result<Instance> {
        self.params.validate()?;
        let graph = self.build_graph()?;
        let constraints = self.build_constraints(graph.n())?;
        let pr_test = self.constraints.pr_test.unwrap_or_else(|| {
            (self.constraints.test_capacity as f64 / self.params.horizon as f64).min(1.0)
        });
        if !(0.0..=1.0).contains(&pr_test) {
            return Err(Error::Config(format!("pr_test {pr_test} outside [0, 1]")));
        }
        Ok(Instance {
            graph,
            params: self.params,
            constraints,
            pr_test,
        })
    }

    /// Expands the `[grid]` section into labelled single-scenario configs.
    pub fn grid_cells(&self) -> Result<Vec<(Vec<(String, String)>, ScenarioConfig)>> {
        let grid = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::Config("no [grid] section".into()))?;
        type Apply = Box<dyn Fn(&mut ScenarioConfig) -> Result<()>>;
        let mut axes: Vec<(&str, Vec<(String, Apply)>)> = Vec::new();
        if let Some(values) = &grid.profile {
            let entries = values
                .iter()
                .map(|&p| {
                    let f: Apply = Box::new(move |c| match &mut c.graph.source {
                        GraphSource::Random { profile, .. } => {
                            *profile = p;
                            Ok(())
                        }
                        GraphSource::Sectioned { within, across, .. } => {
                            *within = p;
                            *across = p;
                            Ok(())
                        }
                        _ => Err(Error::Config("profile axis needs a generated graph".into())),
                    });
                    (p.to_string(), f)
                })
                .collect();
            axes.push(("profile", entries));
        }
        if let Some(values) = &grid.n {
            let entries = values
                .iter()
                .map(|&v| {
                    let f: Apply = Box::new(move |c| match &mut c.graph.source {
                        GraphSource::Random { n, .. } => {
                            *n = v;
                            Ok(())
                        }
                        _ => Err(Error::Config("n axis needs a random graph".into())),
                    });
                    (v.to_string(), f)
                })
                .collect();
            axes.push(("n", entries));
        }
        if let Some(values) = &grid.false_negative {
            let entries = values
                .iter()
                .map(|&v| {
                    let f: Apply = Box::new(move |c| {
                        c.params.false_negative = v;
                        Ok(())
                    });
                    (v.to_string(), f)
                })
                .collect();
            axes.push(("FN", entries));
        }
        if let Some(values) = &grid.occupancy {
            let entries = values
                .iter()
                .map(|&band| {
                    let f: Apply = Box::new(move |c| {
                        c.constraints.occupancy = Some(band);
                        Ok(())
                    });
                    let label = format!("[{:.0}%,{:.0}%]", band[0] * 100.0, band[1] * 100.0);
                    (label, f)
                })
                .collect();
            axes.push(("occupancy", entries));
        }
        if let Some(values) = &grid.min_presence_days {
            let entries = values
                .iter()
                .map(|&v| {
                    let f: Apply = Box::new(move |c| {
                        c.constraints.min_presence_days = v;
                        Ok(())
                    });
                    (v.to_string(), f)
                })
                .collect();
            axes.push(("min_presence", entries));
        }
        if let Some(values) = &grid.test_capacity {
            let entries = values
                .iter()
                .map(|&v| {
                    let f: Apply = Box::new(move |c| {
                        c.constraints.test_capacity = v;
                        c.constraints.pr_test = None;
                        Ok(())
                    });
                    (v.to_string(), f)
                })
                .collect();
            axes.push(("TC", entries));
        }
        if axes.is_empty() || axes.iter().any(|(_, entries)| entries.is_empty()) {
            return Err(Error::Config("empty grid".into()));
        }

        let mut base = self.clone();
        base.grid = None;
        let mut cells = vec![(Vec::new(), base)];
        for (name, entries) in &axes {
            let mut next = Vec::with_capacity(cells.len() * entries.len());
            for (coords, config) in &cells {
                for (label, apply) in entries {
                    let mut cfg = config.clone();
                    apply(&mut cfg)?;
                    let mut c = coords.clone();
                    c.push((name.to_string(), label.clone()));
                    next.push((c, cfg));
                }
            }
            cells = next;
        }
        Ok(cells)
    }
}

/// Best solution found across repetitions for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSolution {
    pub schedule: Schedule,
    pub tests: Option<TestPlan>,
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub model: ModelChoice,
    pub risks: Vec<f64>,
    pub mean: f64,
    pub best: BestSolution,
    /// Repetitions that needed more than one attempt.
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub name: Option<String>,
    pub pr_test: f64,
    pub models: Vec<ModelResult>,
}

impl ScenarioResult {
    pub fn model(&self, model: ModelChoice) -> Option<&ModelResult> {
        self.models.iter().find(|m| m.model == model)
    }

    pub fn mean(&self, model: ModelChoice) -> Option<f64> {
        self.model(model).map(|m| m.mean)
    }

    /// `1 - mean(model) / mean(R)`.
    pub fn reduction(&self, model: ModelChoice) -> Option<f64> {
        Some(1.0 - self.mean(model)? / self.mean(ModelChoice::R)?)
    }
}

fn run_once(
    instance: &Instance,
    model: ModelChoice,
    config: &GaConfig,
    mode: PropagationMode,
) -> Result<BestSolution> {
    let Instance {
        graph,
        params,
        constraints,
        pr_test,
    } = instance;
    match model {
        ModelChoice::M1 => {
            let s = solve_model1(graph, params, constraints, config, mode)?;
            Ok(BestSolution {
                schedule: s.schedule,
                tests: s.tests,
                risk: s.risk,
            })
        }
        ModelChoice::M2 => {
            let s = solve_model2(graph, params, constraints, *pr_test, config, mode)?;
            Ok(BestSolution {
                schedule: s.schedule,
                tests: None,
                risk: s.risk,
            })
        }
        ModelChoice::R => {
            let presence_only = Model::PresenceOnly { pr_test: *pr_test };
            let (schedule, _) = random_feasible(graph, params, constraints, config, presence_only)?;
            let risk = expected_risk(graph, params, &schedule, Testing::Random(*pr_test), mode)?;
            Ok(BestSolution {
                schedule,
                tests: None,
                risk,
            })
        }
    }
}

/// Runs every configured model `repetitions` times on one instance.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    let solver = &config.solver;
    if solver.repetitions == 0 {
        return Err(Error::Config("repetitions must be >= 1".into()));
    }
    if solver.models.is_empty() {
        return Err(Error::Config("no models selected".into()));
    }
    let instance = config.instance()?;
    let n = instance.graph.n();
    let mut models = Vec::with_capacity(solver.models.len());
    for &model in &solver.models {
        let runs: Vec<(BestSolution, bool)> = (0..solver.repetitions)
            .into_par_iter()
            .map(|rep| {
                let mut attempt = 0;
                loop {
                    let offset = (rep + attempt * solver.repetitions) as u64;
                    let ga = solver.ga_config(n, solver.seed.wrapping_add(offset));
                    ga.validate()?;
                    match run_once(&instance, model, &ga, solver.mode) {
                        Err(Error::Infeasible(_)) if attempt < solver.restarts => attempt += 1,
                        other => return other.map(|best| (best, attempt > 0)),
                    }
                }
            })
            .collect::<Result<_>>()?;
        let restarts = runs.iter().filter(|(_, restarted)| *restarted).count();
        let runs: Vec<BestSolution> = runs.into_iter().map(|(best, _)| best).collect();
        let risks: Vec<f64> = runs.iter().map(|r| r.risk).collect();
        let mean = risks.iter().sum::<f64>() / risks.len() as f64;
        let best = runs
            .into_iter()
            .min_by(|a, b| a.risk.total_cmp(&b.risk))
            .expect("at least one repetition");
        models.push(ModelResult {
            model,
            risks,
            mean,
            best,
            restarts,
        });
    }
    Ok(ScenarioResult {
        name: config.name.clone(),
        pr_test: instance.pr_test,
        models,
    })
}

/// One grid cell: its coordinates and its result or failure message.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub coords: Vec<(String, String)>,
    pub result: std::result::Result<ScenarioResult, String>,
}

/// Runs every grid cell; a failing cell is recorded, not fatal.
pub fn run_grid(config: &ScenarioConfig) -> Result<Vec<GridRow>> {
    let cells = config.grid_cells()?;
    Ok(cells
        .into_iter()
        .map(|(coords, cfg)| GridRow {
            coords,
            result: run_scenario(&cfg).map_err(|e| e.to_string()),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

const COLUMNS: [ModelChoice; 3] = [ModelChoice::R, ModelChoice::M2, ModelChoice::M1];

/// Renders the result table: one row per cell with the mean risks of R, M2
/// and M1 scaled by 1e5, then the M2 and M1 reductions against R in percent.
pub fn render_report(rows: &[GridRow], format: ReportFormat) -> String {
    let coord_names: Vec<String> = rows
        .first()
        .map(|r| r.coords.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    let mut header: Vec<String> = coord_names;
    header.extend(COLUMNS.iter().map(ModelChoice::to_string));
    header.push("M2_reduction_pct".into());
    header.push("M1_reduction_pct".into());

    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let mut cells: Vec<String> = row.coords.iter().map(|(_, v)| v.clone()).collect();
            match &row.result {
                Ok(res) => {
                    for m in COLUMNS {
                        cells.push(
                            res.mean(m)
                                .map(|v| format!("{:.2}", v * RISK_SCALE))
                                .unwrap_or_default(),
                        );
                    }
                    for m in [ModelChoice::M2, ModelChoice::M1] {
                        cells.push(
                            res.reduction(m)
                                .map(|r| format!("{:.1}", r * 100.0))
                                .unwrap_or_default(),
                        );
                    }
                }
                Err(_) => cells.extend(std::iter::repeat("infeasible".to_string()).take(5)),
            }
            cells
        })
        .collect();

    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(&header.join(","));
            out.push('\n');
            for row in body {
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        ReportFormat::Markdown => {
            out.push_str(&format!("| {} |\n", header.join(" | ")));
            out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
            for row in body {
                out.push_str(&format!("| {} |\n", row.join(" | ")));
            }
        }
    }
    out
}

pub fn report<W: Write>(rows: &[GridRow], format: ReportFormat, mut out: W) -> std::io::Result<()> {
    out.write_all(render_report(rows, format).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result_with(means: &[(ModelChoice, f64)]) -> ScenarioResult {
        let dummy = BestSolution {
            schedule: Schedule(crate::constraints::BinaryMatrix::zeros(1, 1)),
            tests: None,
            risk: 0.0,
        };
        ScenarioResult {
            name: None,
            pr_test: 0.4,
            models: means
                .iter()
                .map(|&(model, mean)| ModelResult {
                    model,
                    risks: vec![mean],
                    mean,
                    best: dummy.clone(),
                    restarts: 0,
                })
                .collect(),
        }
    }

    #[test]
    fn report_scales_and_reduces() {
        let rows = vec![GridRow {
            coords: vec![("TC".into(), "1".into())],
            result: Ok(result_with(&[
                (ModelChoice::R, 5.81e-5),
                (ModelChoice::M2, 4.31e-5),
                (ModelChoice::M1, 2.38e-5),
            ])),
        }];
        let csv = render_report(&rows, ReportFormat::Csv);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.starts_with("1,5.81,4.31,2.38,"), "{line}");

        let half = vec![GridRow {
            coords: vec![],
            result: Ok(result_with(&[(ModelChoice::R, 4e-5), (ModelChoice::M1, 2e-5)])),
        }];
        let csv = render_report(&half, ReportFormat::Csv);
        assert_eq!(csv.lines().nth(1).unwrap(), "4.00,,2.00,,50.0");
    }

    #[test]
    fn empty_report_is_header_only() {
        let csv = render_report(&[], ReportFormat::Csv);
        assert_eq!(csv, "R,M2,M1,M2_reduction_pct,M1_reduction_pct\n");
        let md = render_report(&[], ReportFormat::Markdown);
        assert_eq!(md.lines().count(), 2);
    }

    #[test]
    fn infeasible_rows_are_marked() {
        let rows = vec![GridRow {
            coords: vec![("n".into(), "40".into())],
            result: Err("infeasible: nope".into()),
        }];
        assert!(render_report(&rows, ReportFormat::Markdown).contains("infeasible"));
    }

    const BASE: &str = r#"
        [graph]
        source = "random"
        n = 12
        profile = "dense"
        seed = 3
        vaccinated_fraction = 0.5

        [constraints]
        occupancy = [0.5, 0.75]
        min_presence_days = 2
        test_capacity = 2

        [solver]
        repetitions = 2
        population_size = 20
        max_generations = 10
    "#;

    #[test]
    fn config_defaults_and_instance() {
        let cfg = ScenarioConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.solver.models, vec![ModelChoice::R, ModelChoice::M2, ModelChoice::M1]);
        assert_eq!(cfg.params, EpidemicParams::default());
        let inst = cfg.instance().unwrap();
        assert_eq!(inst.graph.n(), 12);
        assert_eq!(inst.pr_test, 0.4);
        assert_eq!(inst.constraints.lower_groups[0].bound, 6);
        assert_eq!(inst.constraints.upper_groups[0].bound, 9);
        assert_eq!(inst.graph.vaccination_flags().iter().filter(|&&v| v).count(), 6);
    }

    #[test]
    fn bad_configs() {
        assert!(ScenarioConfig::from_toml("[graph]\nsource = \"nope\"\n").is_err());
        let mut cfg = ScenarioConfig::from_toml(BASE).unwrap();
        cfg.solver.repetitions = 0;
        assert!(matches!(run_scenario(&cfg), Err(Error::Config(_))));
        let mut cfg = ScenarioConfig::from_toml(BASE).unwrap();
        cfg.graph.source = GraphSource::EdgeList { path: "/nonexistent/graph.csv".into() };
        assert!(matches!(run_scenario(&cfg), Err(Error::Io { .. })));
    }

    #[test]
    fn unsatisfiable_rules_survive_restarts() {
        let mut cfg = ScenarioConfig::from_toml(BASE).unwrap();
        cfg.solver.models = vec![ModelChoice::M2];
        cfg.solver.restarts = 1;
        cfg.constraints.min_presence_days = 5;
        assert!(matches!(run_scenario(&cfg), Err(Error::Infeasible(_))));

        cfg.constraints.min_presence_days = 2;
        let result = run_scenario(&cfg).unwrap();
        assert_eq!(result.models[0].restarts, 0);
        assert_eq!(result.models[0].risks.len(), 2);
    }

    #[test]
    fn grid_shapes() {
        let mut cfg = ScenarioConfig::from_toml(BASE).unwrap();
        cfg.grid = Some(GridSpec {
            min_presence_days: Some(vec![2, 3]),
            occupancy: Some(vec![[0.3, 0.7], [0.4, 0.8]]),
            test_capacity: Some(vec![1, 2, 3]),
            ..GridSpec::default()
        });
        let cells = cfg.grid_cells().unwrap();
        assert_eq!(cells.len(), 12);
        assert_eq!(cells[0].0[0], ("occupancy".to_string(), "[30%,70%]".to_string()));

        cfg.grid = Some(GridSpec {
            n: Some(vec![40, 100, 250]),
            test_capacity: Some(vec![1, 2, 3]),
            false_negative: Some(vec![0.1, 0.3]),
            ..GridSpec::default()
        });
        assert_eq!(cfg.grid_cells().unwrap().len(), 18);

        cfg.grid = Some(GridSpec::default());
        assert!(cfg.grid_cells().is_err());
        cfg.grid = Some(GridSpec { n: Some(vec![]), ..GridSpec::default() });
        assert!(cfg.grid_cells().is_err());
    }
}
