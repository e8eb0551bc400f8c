//! Day-by-day propagation of per-employee infection probabilities.
//!
//! Each day runs two steps. First the morning tests are applied: a negative
//! test scales an employee's probability by the false-negative rate. Then
//! every on-site employee absorbs risk from the on-site colleagues they may
//! meet. All right-hand-side probabilities of the contact step are the
//! post-test values of the same day, so the update is synchronous and
//! independent of employee order.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constraints::{Schedule, TestPlan};
use crate::error::{Error, Result};
use crate::graph::ContactGraph;

/// How the day-0 probabilities are seeded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialRiskPolicy {
    /// `PI_i^0 = beta_i * br`.
    ModelSpec,
    /// Two weekend days of background exposure, `PI_i^0 = v_i (1 - (1 - br)^2)`
    /// where `v_i = 1 - efficacy` for vaccinated employees and 1 otherwise.
    #[default]
    WeekendCompounded,
}

/// Exact product form or its first-order (sum) expansion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagationMode {
    #[default]
    Exact,
    Linearized,
}

impl FromStr for PropagationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Self::Exact),
            "linearized" | "linear" => Ok(Self::Linearized),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpidemicParams {
    /// Per-contact transmission probability for an unvaccinated employee.
    pub beta_base: f64,
    pub vaccine_efficacy: f64,
    pub false_negative: f64,
    /// Daily probability of infection outside the workplace.
    pub background_risk: f64,
    /// Number of scheduled days `D`.
    pub horizon: usize,
    pub initial_risk_policy: InitialRiskPolicy,
}

impl Default for EpidemicParams {
    /// One working week at 300 weekly cases per 100 000 inhabitants,
    /// `beta = 0.1`, 85% vaccine efficacy and `FN = 0.2`.
    fn default() -> Self {
        Self {
            beta_base: 0.1,
            vaccine_efficacy: 0.85,
            false_negative: 0.2,
            background_risk: Self::background_from_weekly_incidence(300.0),
            horizon: 5,
            initial_risk_policy: InitialRiskPolicy::WeekendCompounded,
        }
    }
}

impl EpidemicParams {
    /// Daily background risk for a 7-day incidence per 100 000 inhabitants.
    pub fn background_from_weekly_incidence(cases_per_100k: f64) -> f64 {
        cases_per_100k / 100_000.0 / 7.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta_base", self.beta_base),
            ("vaccine_efficacy", self.vaccine_efficacy),
            ("false_negative", self.false_negative),
            ("background_risk", self.background_risk),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        Ok(())
    }

    /// Susceptibility multiplier `v_i`.
    pub fn vaccine_factor(&self, vaccinated: bool) -> f64 {
        if vaccinated {
            1.0 - self.vaccine_efficacy
        } else {
            1.0
        }
    }

    /// Effective per-contact transmission probability `beta_i`.
    pub fn beta(&self, vaccinated: bool) -> f64 {
        self.beta_base * self.vaccine_factor(vaccinated)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskState {
    pub day: usize,
    pub pi: Vec<f64>,
}

pub fn initial_risk(graph: &ContactGraph, params: &EpidemicParams) -> RiskState {
    let br = params.background_risk;
    let pi = graph
        .employees()
        .iter()
        .map(|e| match params.initial_risk_policy {
            InitialRiskPolicy::ModelSpec => params.beta(e.vaccinated) * br,
            InitialRiskPolicy::WeekendCompounded => {
                params.vaccine_factor(e.vaccinated) * (1.0 - (1.0 - br) * (1.0 - br))
            }
        })
        .collect();
    RiskState { day: 0, pi }
}

/// Effect of a scheduled test on one probability.
pub fn apply_test_deterministic(pi_prev: f64, tested: bool, fn_rate: f64) -> f64 {
    let t = if tested { 1.0 } else { 0.0 };
    pi_prev * (1.0 - t) + pi_prev * t * fn_rate
}

/// Expected effect of a test taken with probability `pr_test`.
pub fn apply_test_probabilistic(pi_prev: f64, pr_test: f64, fn_rate: f64) -> f64 {
    (1.0 - pr_test) * pi_prev + pr_test * pi_prev * fn_rate
}

fn check_dims(state: &RiskState, presence: &[bool], graph: &ContactGraph) {
    assert_eq!(state.pi.len(), graph.n(), "state size differs from graph");
    assert_eq!(presence.len(), graph.n(), "presence size differs from graph");
}

/// Contact step into a caller-provided buffer; `pre` holds post-test values.
pub(crate) fn contact_step(
    pre: &[f64],
    presence: &[bool],
    graph: &ContactGraph,
    params: &EpidemicParams,
    mode: PropagationMode,
    out: &mut [f64],
) {
    contact_step_by(pre, |i| presence[i], graph, params, mode, out)
}

pub(crate) fn contact_step_by(
    pre: &[f64],
    present: impl Fn(usize) -> bool,
    graph: &ContactGraph,
    params: &EpidemicParams,
    mode: PropagationMode,
    out: &mut [f64],
) {
    // absent contacts contribute a term of exactly 0
    let on_site: Vec<f64> = (0..pre.len())
        .map(|j| if present(j) { pre[j] } else { 0.0 })
        .collect();
    for i in 0..pre.len() {
        if !present(i) {
            out[i] = pre[i];
            continue;
        }
        let beta = params.beta(graph.is_vaccinated(i));
        let stay_healthy = 1.0 - pre[i];
        let met = graph.neighbors(i).iter();
        out[i] = match mode {
            PropagationMode::Exact => {
                // 1 - prod(1 - a_j), accumulated without cancellation
                let hit = met.fold(0.0, |c, &(j, p)| {
                    let a = p * beta * on_site[j];
                    c + a - c * a
                });
                pre[i] + stay_healthy * hit
            }
            PropagationMode::Linearized => {
                let exposure: f64 = met.map(|&(j, p)| p * beta * on_site[j]).sum();
                (pre[i] + stay_healthy * exposure).clamp(0.0, 1.0)
            }
        };
    }
}

/// Contact step with the product form. Absent employees keep their value.
///
/// # Panics
///
/// If the state or presence vector does not match the graph size.
pub fn contact_update_exact(
    state: &RiskState,
    presence: &[bool],
    graph: &ContactGraph,
    params: &EpidemicParams,
) -> RiskState {
    contact_update(state, presence, graph, params, PropagationMode::Exact)
}

/// Contact step with the product replaced by one minus the sum of its
/// terms, clamped to `[0, 1]`. Never below the exact value.
pub fn contact_update_linearized(
    state: &RiskState,
    presence: &[bool],
    graph: &ContactGraph,
    params: &EpidemicParams,
) -> RiskState {
    contact_update(state, presence, graph, params, PropagationMode::Linearized)
}

pub fn contact_update(
    state: &RiskState,
    presence: &[bool],
    graph: &ContactGraph,
    params: &EpidemicParams,
    mode: PropagationMode,
) -> RiskState {
    check_dims(state, presence, graph);
    let mut pi = vec![0.0; state.pi.len()];
    contact_step(&state.pi, presence, graph, params, mode, &mut pi);
    RiskState { day: state.day, pi }
}

/// One day with scheduled tests: tests (for everyone, on site or not), then
/// contacts among the employees in `x_day`.
pub fn update_day_model1(
    state: &RiskState,
    x_day: &[bool],
    t_day: &[bool],
    graph: &ContactGraph,
    params: &EpidemicParams,
    mode: PropagationMode,
) -> RiskState {
    check_dims(state, x_day, graph);
    assert_eq!(t_day.len(), graph.n(), "test vector size differs from graph");
    let tested: Vec<f64> = state
        .pi
        .iter()
        .zip(t_day)
        .map(|(&p, &t)| apply_test_deterministic(p, t, params.false_negative))
        .collect();
    let mut pi = vec![0.0; tested.len()];
    contact_step(&tested, x_day, graph, params, mode, &mut pi);
    RiskState {
        day: state.day + 1,
        pi,
    }
}

/// One day where everyone tests with probability `pr_test`.
pub fn update_day_model2(
    state: &RiskState,
    x_day: &[bool],
    pr_test: f64,
    graph: &ContactGraph,
    params: &EpidemicParams,
    mode: PropagationMode,
) -> RiskState {
    check_dims(state, x_day, graph);
    let tested: Vec<f64> = state
        .pi
        .iter()
        .map(|&p| apply_test_probabilistic(p, pr_test, params.false_negative))
        .collect();
    let mut pi = vec![0.0; tested.len()];
    contact_step(&tested, x_day, graph, params, mode, &mut pi);
    RiskState {
        day: state.day + 1,
        pi,
    }
}

/// Mean infection probability over employees and days `1..=D`.
///
/// `trajectory` must not contain the day-0 state.
pub fn objective(trajectory: &[RiskState]) -> Result<f64> {
    let n = trajectory.first().map(|s| s.pi.len()).unwrap_or(0);
    if n == 0 {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    if trajectory.iter().any(|s| s.pi.len() != n) {
        return Err(Error::Dimension("trajectory states differ in size".into()));
    }
    let total: f64 = trajectory.iter().map(|s| s.pi.iter().sum::<f64>()).sum();
    Ok(total / (trajectory.len() * n) as f64)
}

/// Testing regime applied during a simulation.
#[derive(Debug, Clone, Copy)]
pub enum Testing<'a> {
    Scheduled(&'a TestPlan),
    Random(f64),
}

/// Full trajectory `PI^0 ..= PI^D` for a schedule.
pub fn simulate(
    graph: &ContactGraph,
    params: &EpidemicParams,
    schedule: &Schedule,
    testing: Testing<'_>,
    mode: PropagationMode,
) -> Result<Vec<RiskState>> {
    let (n, days) = (graph.n(), params.horizon);
    if schedule.n() != n || schedule.days() != days {
        return Err(Error::Dimension(format!(
            "schedule is {}x{}, instance is {n}x{days}",
            schedule.n(),
            schedule.days()
        )));
    }
    if let Testing::Scheduled(t) = testing {
        if t.n() != n || t.days() != days {
            return Err(Error::Dimension(format!(
                "test plan is {}x{}, instance is {n}x{days}",
                t.n(),
                t.days()
            )));
        }
    }
    let mut trajectory = Vec::with_capacity(days + 1);
    trajectory.push(initial_risk(graph, params));
    for d in 0..days {
        let prev = &trajectory[d];
        let next = match testing {
            Testing::Scheduled(t) => {
                update_day_model1(prev, schedule.day(d), t.day(d), graph, params, mode)
            }
            Testing::Random(pr) => {
                update_day_model2(prev, schedule.day(d), pr, graph, params, mode)
            }
        };
        trajectory.push(next);
    }
    Ok(trajectory)
}

/// Objective value of a schedule (and test regime).
pub fn expected_risk(
    graph: &ContactGraph,
    params: &EpidemicParams,
    schedule: &Schedule,
    testing: Testing<'_>,
    mode: PropagationMode,
) -> Result<f64> {
    let trajectory = simulate(graph, params, schedule, testing, mode)?;
    objective(&trajectory[1..])
}
