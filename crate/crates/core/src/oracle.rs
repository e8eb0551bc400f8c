//! Exhaustive search for the global optimum of small instances.
//!
//! The search walks the horizon day by day. A day's presence pattern is only
//! expanded if it satisfies every group bound on its own, and Model 1 test
//! patterns never exceed the remaining capacity, so every leaf is feasible.
//! Subtrees are cut when the risk accumulated so far plus a lower bound on
//! the remaining days already exceeds the incumbent. The bound follows from
//! contacts never lowering a probability and each day's test step scaling it
//! by at least `FN` (scheduled) or exactly `1 - pr (1 - FN)` (random).
//!
//! Ties are broken towards the lexicographically smallest chromosome
//! (presence bits then test bits, employee-major).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::constraints::{BinaryMatrix, ConstraintSet, Schedule, TestPlan};
use crate::error::{Error, Result};
use crate::ga::{Model, Problem};
use crate::infection::{apply_test_deterministic, apply_test_probabilistic, contact_step, initial_risk};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    /// Largest search-space size (after per-day pruning) the oracle accepts.
    pub max_states: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self { max_states: 1 << 26 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub schedule: Schedule,
    pub tests: Option<TestPlan>,
    pub risk: f64,
    /// Search nodes (day assignments) evaluated.
    pub states_visited: u64,
}

/// Bitmask presence patterns of one day that satisfy every group bound.
fn feasible_day_patterns(cs: &ConstraintSet, n: usize) -> Vec<u64> {
    let member_masks = |groups: &[crate::constraints::Group]| -> Vec<(u64, usize)> {
        groups
            .iter()
            .map(|g| (g.members.iter().fold(0u64, |m, &i| m | 1 << i), g.bound))
            .collect()
    };
    let lower = member_masks(&cs.lower_groups);
    let upper = member_masks(&cs.upper_groups);
    (0..1u64 << n)
        .filter(|mask| {
            lower.iter().all(|&(g, b)| (mask & g).count_ones() as usize >= b)
                && upper.iter().all(|&(g, b)| (mask & g).count_ones() as usize <= b)
        })
        .collect()
}

fn check_pattern_budget(n: usize, budget: &OracleBudget) -> Result<()> {
    if n >= 63 || (1u128 << n) > u128::from(budget.max_states) {
        return Err(Error::BudgetExceeded {
            needed: 1u128.checked_shl(n as u32).unwrap_or(u128::MAX),
            max_states: budget.max_states,
        });
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn mask_to_bools(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

struct Search<'p, 'a> {
    problem: &'p Problem<'a>,
    n: usize,
    days: usize,
    presence: Vec<Vec<bool>>,
    test_masks: Vec<u64>,
    min_presence: Vec<usize>,
    capacity: Vec<usize>,
    // per-day choices along the current path
    x_path: Vec<u64>,
    t_path: Vec<u64>,
    best_total: f64,
    best_bits: Option<Vec<bool>>,
    visited: u64,
}

impl Search<'_, '_> {
    fn bits(&self) -> Vec<bool> {
        let mut bits = Vec::with_capacity(2 * self.n * self.days);
        for path in [&self.x_path, &self.t_path] {
            if path.is_empty() {
                continue;
            }
            for i in 0..self.n {
                bits.extend(path.iter().map(|m| m >> i & 1 == 1));
            }
        }
        bits
    }

    fn remaining_lower_bound(&self, pi: &[f64], tests_used: &[usize], remaining: usize) -> f64 {
        let fnr = self.problem.params.false_negative;
        let mut bound = 0.0;
        for (i, &p) in pi.iter().enumerate() {
            let mut factor = 1.0;
            for r in 1..=remaining {
                match self.problem.model {
                    Model::WithTesting => {
                        if tests_used[i] + r <= self.capacity[i] {
                            factor *= fnr;
                        }
                    }
                    Model::PresenceOnly { pr_test } => factor *= 1.0 - pr_test * (1.0 - fnr),
                }
                bound += p * factor;
            }
        }
        bound
    }

    fn visit(&mut self, day: usize, pi: &[f64], present_days: &mut [usize], tests_used: &mut [usize], partial: f64) {
        if day == self.days {
            let better = partial < self.best_total
                || (partial == self.best_total
                    && self.best_bits.as_ref().map_or(true, |b| self.bits() < *b));
            if better {
                self.best_total = partial;
                self.best_bits = Some(self.bits());
            }
            return;
        }
        let remaining_after = self.days - day - 1;
        let fnr = self.problem.params.false_negative;
        let mut tested = vec![0.0; self.n];
        let mut next = vec![0.0; self.n];

        let test_choices: Vec<u64> = match self.problem.model {
            Model::WithTesting => self
                .test_masks
                .iter()
                .copied()
                .filter(|&m| (0..self.n).all(|i| m >> i & 1 == 0 || tests_used[i] < self.capacity[i]))
                .collect(),
            Model::PresenceOnly { .. } => vec![0],
        };

        for xi in 0..self.presence.len() {
            let x = &self.presence[xi];
            if (0..self.n).any(|i| present_days[i] + usize::from(x[i]) + remaining_after < self.min_presence[i]) {
                continue;
            }
            let x_mask = x.iter().enumerate().fold(0u64, |m, (i, &b)| m | (u64::from(b) << i));
            for &t_mask in &test_choices {
                for i in 0..self.n {
                    tested[i] = match self.problem.model {
                        Model::WithTesting => apply_test_deterministic(pi[i], t_mask >> i & 1 == 1, fnr),
                        Model::PresenceOnly { pr_test } => apply_test_probabilistic(pi[i], pr_test, fnr),
                    };
                }
                let x = &self.presence[xi];
                contact_step(&tested, x, self.problem.graph, self.problem.params, self.problem.mode, &mut next);
                self.visited += 1;
                let total = partial + next.iter().sum::<f64>();
                for i in 0..self.n {
                    tests_used[i] += (t_mask >> i & 1) as usize;
                }
                let bound = total + self.remaining_lower_bound(&next, tests_used, remaining_after);
                // the bound is exact up to rounding; keep near-ties for the tie-break
                if bound * (1.0 - 1e-12) <= self.best_total {
                    for i in 0..self.n {
                        present_days[i] += usize::from(self.presence[xi][i]);
                    }
                    self.x_path.push(x_mask);
                    if matches!(self.problem.model, Model::WithTesting) {
                        self.t_path.push(t_mask);
                    }
                    let state = next.clone();
                    self.visit(day + 1, &state, present_days, tests_used, total);
                    self.x_path.pop();
                    if matches!(self.problem.model, Model::WithTesting) {
                        self.t_path.pop();
                    }
                    for i in 0..self.n {
                        present_days[i] -= usize::from(self.presence[xi][i]);
                    }
                }
                for i in 0..self.n {
                    tests_used[i] -= (t_mask >> i & 1) as usize;
                }
            }
        }
    }
}

/// Size of the search space after per-day group pruning.
pub fn search_space_size(problem: &Problem<'_>, budget: &OracleBudget) -> Result<u128> {
    let (n, days) = (problem.n(), problem.days());
    check_pattern_budget(n, budget)?;
    let patterns = feasible_day_patterns(problem.constraints, n).len() as u128;
    let mut size = (0..days).try_fold(1u128, |acc, _| acc.checked_mul(patterns));
    if let Model::WithTesting = problem.model {
        for &cap in &problem.constraints.test_capacity {
            let plans: u128 = (0..=cap.min(days)).map(|k| binomial(days, k)).sum();
            size = size.and_then(|s| s.checked_mul(plans));
        }
    }
    Ok(size.unwrap_or(u128::MAX))
}

/// Exact global optimum of `problem` over all feasible assignments.
pub fn enumerate_optimum(problem: &Problem<'_>, budget: &OracleBudget) -> Result<OracleOutcome> {
    let (n, days) = (problem.n(), problem.days());
    let needed = search_space_size(problem, budget)?;
    if needed > u128::from(budget.max_states) {
        return Err(Error::BudgetExceeded {
            needed,
            max_states: budget.max_states,
        });
    }
    let mut patterns = feasible_day_patterns(problem.constraints, n);
    patterns.sort_by_key(|m| (m.count_ones(), *m));
    let mut test_masks: Vec<u64> = (0..1u64 << n).collect();
    // many tests first: good incumbents early
    test_masks.sort_by_key(|m| (std::cmp::Reverse(m.count_ones()), *m));

    let mut search = Search {
        problem,
        n,
        days,
        presence: patterns.iter().map(|&m| mask_to_bools(m, n)).collect(),
        test_masks,
        min_presence: problem.constraints.min_presence_days.clone(),
        capacity: problem.constraints.test_capacity.clone(),
        x_path: Vec::with_capacity(days),
        t_path: Vec::with_capacity(days),
        best_total: f64::INFINITY,
        best_bits: None,
        visited: 0,
    };
    let start = initial_risk(problem.graph, problem.params);
    search.visit(0, &start.pi, &mut vec![0; n], &mut vec![0; n], 0.0);

    let bits = search
        .best_bits
        .ok_or_else(|| Error::Infeasible("no feasible assignment exists".into()))?;
    let (schedule, tests) = problem.decode(&bits);
    Ok(OracleOutcome {
        schedule,
        tests,
        risk: search.best_total / (days * n) as f64,
        states_visited: search.visited,
    })
}

/// Number of presence matrices satisfying the group bounds and minimum
/// presence days.
pub fn enumerate_feasible_count(
    cs: &ConstraintSet,
    n: usize,
    days: usize,
    budget: &OracleBudget,
) -> Result<u128> {
    if cs.n != n {
        return Err(Error::Dimension(format!(
            "constraints cover {} employees, asked for {n}",
            cs.n
        )));
    }
    check_pattern_budget(n, budget)?;
    let patterns: Vec<Vec<bool>> = feasible_day_patterns(cs, n)
        .into_iter()
        .map(|m| mask_to_bools(m, n))
        .collect();
    let caps: Vec<usize> = cs.min_presence_days.iter().map(|&m| m.min(days)).collect();
    // presence counts capped at each employee's minimum
    let mut states: HashMap<Vec<usize>, u128> = HashMap::from([(vec![0; n], 1)]);
    for _ in 0..days {
        let mut next: HashMap<Vec<usize>, u128> = HashMap::new();
        for (counts, ways) in &states {
            for x in &patterns {
                let key: Vec<usize> = (0..n)
                    .map(|i| (counts[i] + usize::from(x[i])).min(caps[i]))
                    .collect();
                *next.entry(key).or_default() += ways;
            }
        }
        states = next;
    }
    Ok(states
        .into_iter()
        .filter(|(counts, _)| (0..n).all(|i| counts[i] >= cs.min_presence_days[i]))
        .map(|(_, ways)| ways)
        .sum())
}

/// Presence matrix for `n` employees over `days` from a bitmask per day.
pub fn schedule_from_day_masks(n: usize, masks: &[u64]) -> Schedule {
    let mut m = BinaryMatrix::zeros(n, masks.len());
    for (d, &mask) in masks.iter().enumerate() {
        for i in 0..n {
            m.set(i, d, mask >> i & 1 == 1);
        }
    }
    Schedule(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Group;
    use crate::graph::{parse_edge_list, ContactGraph};
    use crate::infection::{contact_update_exact, initial_risk, EpidemicParams, PropagationMode, RiskState};

    #[test]
    fn single_employee_prefers_staying_home_on_ties() {
        let g = ContactGraph::empty(1);
        let params = EpidemicParams { horizon: 1, ..EpidemicParams::default() };
        let cs = ConstraintSet::unconstrained(1);
        let problem = Problem::new(&g, &params, &cs, Model::PresenceOnly { pr_test: 0.0 }, PropagationMode::Exact).unwrap();
        let out = enumerate_optimum(&problem, &OracleBudget::default()).unwrap();
        assert!(!out.schedule.get(0, 0));
        assert_eq!(out.risk, initial_risk(&g, &params).pi[0]);
    }

    #[test]
    fn fully_constrained_pair() {
        let g = parse_edge_list("0,1,0.5\n", None).unwrap().with_vaccination(&[true, false]).unwrap();
        let params = EpidemicParams { horizon: 1, ..EpidemicParams::default() };
        let cs = ConstraintSet::unconstrained(2).with_lower(Group::new(0..2, 2));
        let problem = Problem::new(&g, &params, &cs, Model::PresenceOnly { pr_test: 0.0 }, PropagationMode::Exact).unwrap();
        let out = enumerate_optimum(&problem, &OracleBudget::default()).unwrap();
        assert!(out.schedule.get(0, 0) && out.schedule.get(1, 0));
        let s0 = initial_risk(&g, &params);
        let s1 = contact_update_exact(&RiskState { day: 0, pi: s0.pi }, &[true, true], &g, &params);
        assert_eq!(out.risk, s1.pi.iter().sum::<f64>() / 2.0);
    }

    #[test]
    fn budget_and_infeasibility() {
        let g = ContactGraph::empty(3);
        let params = EpidemicParams { horizon: 4, ..EpidemicParams::default() };
        let cs = ConstraintSet::unconstrained(3).with_test_capacity(4);
        let problem = Problem::new(&g, &params, &cs, Model::WithTesting, PropagationMode::Exact).unwrap();
        let err = enumerate_optimum(&problem, &OracleBudget { max_states: 1000 }).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { needed, .. } if needed == 1 << 24));

        let cs = ConstraintSet::unconstrained(3)
            .with_lower(Group::new(0..3, 3))
            .with_upper(Group::new(0..3, 2));
        let problem = Problem::new(&g, &params, &cs, Model::WithTesting, PropagationMode::Exact).unwrap();
        assert!(matches!(enumerate_optimum(&problem, &OracleBudget::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn feasible_counts() {
        let budget = OracleBudget::default();
        let free = ConstraintSet::unconstrained(3);
        assert_eq!(enumerate_feasible_count(&free, 3, 2, &budget).unwrap(), 64);
        let contradictory = free.clone().with_lower(Group::new(0..3, 2)).with_upper(Group::new(0..3, 1));
        assert_eq!(enumerate_feasible_count(&contradictory, 3, 2, &budget).unwrap(), 0);
        // inclusion-exclusion: 64 - 3*16 + 3*4 - 1 = 27
        let min1 = free.with_min_presence(1);
        assert_eq!(enumerate_feasible_count(&min1, 3, 2, &budget).unwrap(), 27);
    }
}
