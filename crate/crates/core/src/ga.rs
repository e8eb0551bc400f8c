//! Canonical genetic algorithm with penalty fitness.
//!
//! A chromosome is the flattened decision matrix, employee-major
//! (`genes[i * D + d]`). Model 1 appends the test plan after the presence
//! block. Fitness is the expected risk plus the number of violated
//! constraint instances, so any feasible chromosome beats any infeasible one
//! (the risk never reaches 1 in practice).
//!
//! Each generation fills a child population of the same size by tournament
//! selection, single-point crossover and swap mutation, then keeps the best
//! `population_size` chromosomes of parents and children together.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{BinaryMatrix, ConstraintSet, Schedule, TestPlan};
use crate::error::{Error, Result};
use crate::graph::ContactGraph;
use crate::infection::{
    apply_test_deterministic, apply_test_probabilistic, contact_step_by, expected_risk,
    initial_risk, EpidemicParams, PropagationMode, Testing,
};

/// Which optimisation model a chromosome encodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Model {
    /// Model 1: presence and test days are both decided.
    WithTesting,
    /// Model 2: presence only; everyone tests with probability `pr_test`
    /// each day and test capacities are not enforced.
    PresenceOnly { pr_test: f64 },
}

impl Model {
    pub fn gene_len(self, n: usize, days: usize) -> usize {
        match self {
            Model::WithTesting => 2 * n * days,
            Model::PresenceOnly { .. } => n * days,
        }
    }

    /// Gene ranges that mutation keeps apart.
    pub fn blocks(self, n: usize, days: usize) -> Vec<Range<usize>> {
        let nd = n * days;
        match self {
            Model::WithTesting => vec![0..nd, nd..2 * nd],
            Model::PresenceOnly { .. } => vec![0..nd],
        }
    }
}

/// One scheduling instance as seen by the solvers.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub graph: &'a ContactGraph,
    pub params: &'a EpidemicParams,
    pub constraints: &'a ConstraintSet,
    pub model: Model,
    pub mode: PropagationMode,
}

impl<'a> Problem<'a> {
    pub fn new(
        graph: &'a ContactGraph,
        params: &'a EpidemicParams,
        constraints: &'a ConstraintSet,
        model: Model,
        mode: PropagationMode,
    ) -> Result<Self> {
        params.validate()?;
        constraints.validate()?;
        if constraints.n != graph.n() {
            return Err(Error::Dimension(format!(
                "constraints cover {} employees, graph has {}",
                constraints.n,
                graph.n()
            )));
        }
        if let Model::PresenceOnly { pr_test } = model {
            if !(0.0..=1.0).contains(&pr_test) {
                return Err(Error::InvalidParameter(format!(
                    "test probability {pr_test} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            graph,
            params,
            constraints,
            model,
            mode,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn days(&self) -> usize {
        self.params.horizon
    }

    pub fn gene_len(&self) -> usize {
        self.model.gene_len(self.n(), self.days())
    }

    pub fn decode(&self, genes: &[bool]) -> (Schedule, Option<TestPlan>) {
        let (n, days) = (self.n(), self.days());
        let nd = n * days;
        let x = Schedule(BinaryMatrix::from_employee_major(n, days, &genes[..nd]));
        let t = match self.model {
            Model::WithTesting => Some(TestPlan(BinaryMatrix::from_employee_major(
                n,
                days,
                &genes[nd..],
            ))),
            Model::PresenceOnly { .. } => None,
        };
        (x, t)
    }

    pub fn encode(&self, schedule: &Schedule, tests: Option<&TestPlan>) -> Vec<bool> {
        let mut genes = schedule.to_employee_major();
        if let (Model::WithTesting, Some(t)) = (self.model, tests) {
            genes.extend(t.to_employee_major());
        }
        genes
    }

    /// Expected risk of a decoded solution.
    pub fn risk(&self, schedule: &Schedule, tests: Option<&TestPlan>) -> f64 {
        let testing = match (self.model, tests) {
            (Model::PresenceOnly { pr_test }, _) => Testing::Random(pr_test),
            (Model::WithTesting, Some(t)) => Testing::Scheduled(t),
            (Model::WithTesting, None) => panic!("model 1 needs a test plan"),
        };
        expected_risk(self.graph, self.params, schedule, testing, self.mode)
            .expect("dimensions checked at construction")
    }

    pub fn violations(&self, schedule: &Schedule, tests: Option<&TestPlan>) -> usize {
        self.constraints.presence_violations(schedule)
            + tests.map_or(0, |t| self.constraints.test_violations(t))
    }

    fn split<'g>(&self, genes: &'g [bool]) -> (&'g [bool], Option<&'g [bool]>) {
        let nd = self.n() * self.days();
        match self.model {
            Model::WithTesting => (&genes[..nd], Some(&genes[nd..])),
            Model::PresenceOnly { .. } => (genes, None),
        }
    }

    fn penalty_only(&self, genes: &[bool]) -> f64 {
        let (x, t) = self.split(genes);
        self.constraints.gene_violations(x, t, self.days()) as f64
    }

    // simulate() without decoding; same arithmetic order as expected_risk
    fn gene_risk(&self, genes: &[bool]) -> f64 {
        let (n, days) = (self.n(), self.days());
        let (x, t) = self.split(genes);
        let fnr = self.params.false_negative;
        let mut pi = initial_risk(self.graph, self.params).pi;
        let mut tested = vec![0.0; n];
        let mut total = 0.0;
        for d in 0..days {
            match (self.model, t) {
                (Model::WithTesting, Some(t)) => {
                    for i in 0..n {
                        tested[i] = apply_test_deterministic(pi[i], t[i * days + d], fnr);
                    }
                }
                (Model::PresenceOnly { pr_test }, _) => {
                    for i in 0..n {
                        tested[i] = apply_test_probabilistic(pi[i], pr_test, fnr);
                    }
                }
                (Model::WithTesting, None) => unreachable!(),
            }
            contact_step_by(&tested, |j| x[j * days + d], self.graph, self.params, self.mode, &mut pi);
            total += pi.iter().sum::<f64>();
        }
        total / (days * n) as f64
    }

    fn penalised_risk(&self, genes: &[bool]) -> f64 {
        self.gene_risk(genes) + self.penalty_only(genes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub genes: Vec<bool>,
    /// Cached fitness, `None` until evaluated. Lower is better.
    pub fitness: Option<f64>,
}

impl Chromosome {
    pub fn new(genes: Vec<bool>) -> Self {
        Self {
            genes,
            fitness: None,
        }
    }

    pub fn random<R: Rng>(len: usize, rng: &mut R) -> Self {
        Self::new((0..len).map(|_| rng.gen::<bool>()).collect())
    }

    fn score(&self) -> f64 {
        self.fitness.unwrap_or(f64::INFINITY)
    }
}

/// Penalty fitness: expected risk plus the violation count.
pub fn fitness(chrom: &Chromosome, problem: &Problem<'_>) -> Result<f64> {
    if chrom.genes.len() != problem.gene_len() {
        return Err(Error::Dimension(format!(
            "chromosome has {} genes, model needs {}",
            chrom.genes.len(),
            problem.gene_len()
        )));
    }
    Ok(problem.penalised_risk(&chrom.genes))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    /// Per-gene probability of triggering a swap.
    pub mutation_prob: f64,
    pub tournament_size: usize,
    pub crossover_prob: f64,
    pub seed: u64,
}

impl GaConfig {
    /// Population `100 + 2n`, `200 + 2n` generations, mutation `1/n`,
    /// binary tournaments and crossover probability 0.9.
    pub fn for_employees(n: usize, seed: u64) -> Self {
        Self {
            population_size: 100 + 2 * n,
            max_generations: 200 + 2 * n,
            mutation_prob: 1.0 / n.max(1) as f64,
            tournament_size: 2,
            crossover_prob: 0.9,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::InvalidParameter("population_size must be >= 2".into()));
        }
        if self.tournament_size == 0 {
            return Err(Error::InvalidParameter("tournament_size must be >= 1".into()));
        }
        for (name, p) in [
            ("mutation_prob", self.mutation_prob),
            ("crossover_prob", self.crossover_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Draws `k` members uniformly with replacement and returns the fittest
/// (the earliest drawn on ties).
///
/// # Panics
///
/// If `pop` is empty.
pub fn tournament_select<'p, R: Rng>(pop: &'p [Chromosome], k: usize, rng: &mut R) -> &'p Chromosome {
    assert!(!pop.is_empty(), "tournament on an empty population");
    let mut best = &pop[rng.gen_range(0..pop.len())];
    for _ in 1..k {
        let c = &pop[rng.gen_range(0..pop.len())];
        if c.score() < best.score() {
            best = c;
        }
    }
    best
}

/// Children of cutting both parents after `cut` genes and swapping tails.
pub fn crossover_at(a: &[bool], b: &[bool], cut: usize) -> (Vec<bool>, Vec<bool>) {
    let mut c1 = a[..cut].to_vec();
    c1.extend_from_slice(&b[cut..]);
    let mut c2 = b[..cut].to_vec();
    c2.extend_from_slice(&a[cut..]);
    (c1, c2)
}

/// With probability `crossover_prob`, cuts at a uniform point in
/// `1..len` and swaps suffixes; otherwise returns copies of the parents.
pub fn single_point_crossover<R: Rng>(
    a: &[bool],
    b: &[bool],
    crossover_prob: f64,
    rng: &mut R,
) -> Result<(Vec<bool>, Vec<bool>)> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "parents have {} and {} genes",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 || !rng.gen_bool(crossover_prob) {
        return Ok((a.to_vec(), b.to_vec()));
    }
    let cut = rng.gen_range(1..a.len());
    Ok(crossover_at(a, b, cut))
}

/// Each position triggers with probability `mutation_prob` and swaps its
/// value with a uniformly chosen position of the same slice.
pub fn swap_mutation<R: Rng>(genes: &mut [bool], mutation_prob: f64, rng: &mut R) {
    if genes.len() < 2 || mutation_prob <= 0.0 {
        return;
    }
    for i in 0..genes.len() {
        if rng.gen_bool(mutation_prob) {
            let j = rng.gen_range(0..genes.len());
            genes.swap(i, j);
        }
    }
}

/// Result of a GA run.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub best: Chromosome,
    /// Best fitness of the initial population followed by the best fitness
    /// after each generation.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

struct Engine<'c, F> {
    config: &'c GaConfig,
    blocks: Vec<Range<usize>>,
    evaluate: F,
}

impl<F> Engine<'_, F>
where
    F: Fn(&[bool]) -> f64 + Sync,
{
    fn score_all(&self, pop: &mut [Chromosome]) -> usize {
        let pending: Vec<&mut Chromosome> =
            pop.iter_mut().filter(|c| c.fitness.is_none()).collect();
        let count = pending.len();
        pending
            .into_par_iter()
            .for_each(|c| c.fitness = Some((self.evaluate)(&c.genes)));
        count
    }

    fn offspring<R: Rng>(&self, parents: &[Chromosome], rng: &mut R) -> Vec<Chromosome> {
        let size = self.config.population_size;
        let mut children = Vec::with_capacity(size + 1);
        while children.len() < size {
            let a = tournament_select(parents, self.config.tournament_size, rng);
            let b = tournament_select(parents, self.config.tournament_size, rng);
            let (mut c1, mut c2) =
                single_point_crossover(&a.genes, &b.genes, self.config.crossover_prob, rng)
                    .expect("population shares one gene length");
            for genes in [&mut c1, &mut c2] {
                for block in &self.blocks {
                    swap_mutation(&mut genes[block.clone()], self.config.mutation_prob, rng);
                }
            }
            children.push(Chromosome::new(c1));
            children.push(Chromosome::new(c2));
        }
        children.truncate(size);
        children
    }

    /// Runs the generational loop. `stop` is checked on every newly scored
    /// chromosome in order; the first match ends the run and is returned as
    /// the best chromosome.
    fn run<R: Rng>(
        &self,
        mut pop: Vec<Chromosome>,
        rng: &mut R,
        stop: impl Fn(&Chromosome) -> bool,
    ) -> (Evolution, bool) {
        let mut evaluations = self.score_all(&mut pop);
        sort_by_fitness(&mut pop);
        let mut history = vec![pop[0].score()];
        if let Some(hit) = pop.iter().find(|c| stop(c)) {
            let best = hit.clone();
            return (
                Evolution {
                    best,
                    history,
                    evaluations,
                },
                true,
            );
        }
        for _ in 0..self.config.max_generations {
            let mut children = self.offspring(&pop, rng);
            evaluations += self.score_all(&mut children);
            if let Some(hit) = children.iter().find(|c| stop(c)) {
                let best = hit.clone();
                history.push(best.score().min(pop[0].score()));
                return (
                    Evolution {
                        best,
                        history,
                        evaluations,
                    },
                    true,
                );
            }
            pop.extend(children);
            sort_by_fitness(&mut pop);
            pop.truncate(self.config.population_size);
            history.push(pop[0].score());
        }
        let best = pop.swap_remove(0);
        (
            Evolution {
                best,
                history,
                evaluations,
            },
            false,
        )
    }
}

// stable: parents precede children on equal fitness
fn sort_by_fitness(pop: &mut [Chromosome]) {
    pop.sort_by(|a, b| a.score().total_cmp(&b.score()));
}

fn evolution_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn population_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Random initial population for `problem`, drawn from the config's seed.
///
/// Presence genes are fair coin flips. Test genes of employee `i` are set
/// with probability `capacity_i / D` (one half when the capacity does not
/// bind), so a typical row starts within its capacity.
pub fn random_population(problem: &Problem<'_>, config: &GaConfig) -> Vec<Chromosome> {
    let mut rng = population_rng(config.seed);
    let days = problem.days();
    let tests: Vec<f64> = problem
        .constraints
        .test_capacity
        .iter()
        .map(|&c| if c >= days { 0.5 } else { c as f64 / days as f64 })
        .collect();
    let with_tests = problem.model == Model::WithTesting;
    (0..config.population_size)
        .map(|_| {
            let mut genes = Vec::with_capacity(problem.gene_len());
            genes.extend((0..problem.n() * days).map(|_| rng.gen::<bool>()));
            if with_tests {
                for p in &tests {
                    genes.extend((0..days).map(|_| rng.gen_bool(*p)));
                }
            }
            Chromosome::new(genes)
        })
        .collect()
}

/// Evolves `initial_pop` for `config.max_generations` generations.
pub fn evolve(
    initial_pop: Vec<Chromosome>,
    config: &GaConfig,
    problem: &Problem<'_>,
) -> Result<Evolution> {
    config.validate()?;
    if initial_pop.is_empty() {
        return Err(Error::InvalidParameter("empty initial population".into()));
    }
    if let Some(bad) = initial_pop.iter().find(|c| c.genes.len() != problem.gene_len()) {
        return Err(Error::Dimension(format!(
            "chromosome has {} genes, model needs {}",
            bad.genes.len(),
            problem.gene_len()
        )));
    }
    let engine = Engine {
        config,
        blocks: problem.model.blocks(problem.n(), problem.days()),
        evaluate: |genes: &[bool]| problem.penalised_risk(genes),
    };
    let mut rng = evolution_rng(config.seed);
    Ok(engine.run(initial_pop, &mut rng, |_| false).0)
}

/// Feasible solution returned by the solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub schedule: Schedule,
    /// Present for Model 1 only.
    pub tests: Option<TestPlan>,
    pub risk: f64,
    pub history: Vec<f64>,
}

/// Runs the GA from a random population and decodes the best chromosome.
/// Fails with [`Error::Infeasible`] when the best chromosome still violates
/// a constraint.
pub fn solve(problem: &Problem<'_>, config: &GaConfig) -> Result<Solution> {
    let initial = random_population(problem, config);
    let evo = evolve(initial, config, problem)?;
    let (schedule, tests) = problem.decode(&evo.best.genes);
    let violations = problem.violations(&schedule, tests.as_ref());
    if violations > 0 {
        return Err(Error::Infeasible(format!(
            "best chromosome still violates {violations} constraints after {} generations",
            config.max_generations
        )));
    }
    let risk = problem.risk(&schedule, tests.as_ref());
    Ok(Solution {
        schedule,
        tests,
        risk,
        history: evo.history,
    })
}

/// Optimal presence and test plan (Model 1).
pub fn solve_model1(
    graph: &ContactGraph,
    params: &EpidemicParams,
    cs: &ConstraintSet,
    config: &GaConfig,
    mode: PropagationMode,
) -> Result<Solution> {
    let problem = Problem::new(graph, params, cs, Model::WithTesting, mode)?;
    solve(&problem, config)
}

/// Optimal presence under random testing (Model 2).
pub fn solve_model2(
    graph: &ContactGraph,
    params: &EpidemicParams,
    cs: &ConstraintSet,
    pr_test: f64,
    config: &GaConfig,
    mode: PropagationMode,
) -> Result<Solution> {
    let problem = Problem::new(graph, params, cs, Model::PresenceOnly { pr_test }, mode)?;
    solve(&problem, config)
}

/// First zero-violation chromosome met by a GA that minimises the
/// violation count alone.
pub fn random_feasible(
    graph: &ContactGraph,
    params: &EpidemicParams,
    cs: &ConstraintSet,
    config: &GaConfig,
    model: Model,
) -> Result<(Schedule, Option<TestPlan>)> {
    config.validate()?;
    let problem = Problem::new(graph, params, cs, model, PropagationMode::Exact)?;
    let genes = first_feasible(&problem, config)?;
    Ok(problem.decode(&genes))
}

fn first_feasible(problem: &Problem<'_>, config: &GaConfig) -> Result<Vec<bool>> {
    let engine = Engine {
        config,
        blocks: problem.model.blocks(problem.n(), problem.days()),
        evaluate: |genes: &[bool]| problem.penalty_only(genes),
    };
    let initial = random_population(problem, config);
    let mut rng = evolution_rng(config.seed);
    let (evo, found) = engine.run(initial, &mut rng, |c| c.fitness == Some(0.0));
    if !found {
        return Err(Error::Infeasible(format!(
            "no feasible assignment found within {} generations (fewest violations: {})",
            config.max_generations, evo.best.score()
        )));
    }
    Ok(evo.best.genes)
}
