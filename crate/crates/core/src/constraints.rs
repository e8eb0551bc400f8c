//! Presence schedules, test plans and the rules they must satisfy.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROUNDING_SLACK: f64 = 1e-9;

/// Dense `n x days` binary matrix, stored day-major so that one day's
/// column is a contiguous slice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryMatrix {
    n: usize,
    days: usize,
    data: Vec<bool>,
}

impl BinaryMatrix {
    pub fn zeros(n: usize, days: usize) -> Self {
        Self {
            n,
            days,
            data: vec![false; n * days],
        }
    }

    pub fn ones(n: usize, days: usize) -> Self {
        Self {
            n,
            days,
            data: vec![true; n * days],
        }
    }

    /// Builds from per-employee rows: `rows[i][d]`.
    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let n = rows.len();
        let days = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != days) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let mut m = Self::zeros(n, days);
        for (i, row) in rows.iter().enumerate() {
            for (d, &v) in row.iter().enumerate() {
                m.set(i, d, v);
            }
        }
        Ok(m)
    }

    /// Builds from employee-major genes: `genes[i * days + d]`.
    pub fn from_employee_major(n: usize, days: usize, genes: &[bool]) -> Self {
        debug_assert_eq!(genes.len(), n * days);
        let mut m = Self::zeros(n, days);
        for i in 0..n {
            for d in 0..days {
                m.data[d * n + i] = genes[i * days + d];
            }
        }
        m
    }

    /// Employee-major flattening, the inverse of [`Self::from_employee_major`].
    pub fn to_employee_major(&self) -> Vec<bool> {
        (0..self.n)
            .flat_map(|i| (0..self.days).map(move |d| (i, d)))
            .map(|(i, d)| self.get(i, d))
            .collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn days(&self) -> usize {
        self.days
    }

    pub fn get(&self, i: usize, d: usize) -> bool {
        self.data[d * self.n + i]
    }

    pub fn set(&mut self, i: usize, d: usize, v: bool) {
        self.data[d * self.n + i] = v;
    }

    /// Every employee's entry on day `d`.
    pub fn day(&self, d: usize) -> &[bool] {
        &self.data[d * self.n..(d + 1) * self.n]
    }

    pub fn row_sum(&self, i: usize) -> usize {
        (0..self.days).filter(|&d| self.get(i, d)).count()
    }

    pub fn day_sum(&self, d: usize) -> usize {
        self.day(d).iter().filter(|&&v| v).count()
    }

    /// Relabels employees so that old employee `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut m = Self::zeros(self.n, self.days);
        for i in 0..self.n {
            for d in 0..self.days {
                m.set(perm[i], d, self.get(i, d));
            }
        }
        m
    }
}

macro_rules! binary_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub struct $name(pub BinaryMatrix);

        impl Deref for $name {
            type Target = BinaryMatrix;
            fn deref(&self) -> &BinaryMatrix {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut BinaryMatrix {
                &mut self.0
            }
        }

        impl From<BinaryMatrix> for $name {
            fn from(m: BinaryMatrix) -> Self {
                Self(m)
            }
        }
    };
}

binary_newtype!(
    /// `x[i][d] = 1` iff employee `i` works on site on day `d`.
    Schedule
);
binary_newtype!(
    /// `t[i][d] = 1` iff employee `i` takes a test on the morning of day `d`.
    TestPlan
);

/// Employees whose daily on-site count is bounded (below or above).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub members: Vec<usize>,
    pub bound: usize,
}

impl Group {
    pub fn new(members: impl IntoIterator<Item = usize>, bound: usize) -> Self {
        Self {
            members: members.into_iter().collect(),
            bound,
        }
    }

    fn present(&self, sched: &BinaryMatrix, d: usize) -> usize {
        let day = sched.day(d);
        self.members.iter().filter(|&&i| day[i]).count()
    }
}

/// Every feasibility rule of a scheduling instance.
///
/// Group bounds apply on every day of the horizon. `test_capacity` is only
/// consulted when a [`TestPlan`] is evaluated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub n: usize,
    pub lower_groups: Vec<Group>,
    pub upper_groups: Vec<Group>,
    pub min_presence_days: Vec<usize>,
    pub test_capacity: Vec<usize>,
}

impl ConstraintSet {
    /// No rules at all for `n` employees.
    pub fn unconstrained(n: usize) -> Self {
        Self {
            n,
            lower_groups: Vec::new(),
            upper_groups: Vec::new(),
            min_presence_days: vec![0; n],
            test_capacity: vec![usize::MAX; n],
        }
    }

    pub fn with_lower(mut self, group: Group) -> Self {
        self.lower_groups.push(group);
        self
    }

    pub fn with_upper(mut self, group: Group) -> Self {
        self.upper_groups.push(group);
        self
    }

    /// Adds the lower and upper group of an occupancy band.
    pub fn with_band(self, (lower, upper): (Group, Group)) -> Self {
        self.with_lower(lower).with_upper(upper)
    }

    pub fn with_min_presence(mut self, days: usize) -> Self {
        self.min_presence_days = vec![days; self.n];
        self
    }

    pub fn with_test_capacity(mut self, tests: usize) -> Self {
        self.test_capacity = vec![tests; self.n];
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_presence_days.len() != self.n || self.test_capacity.len() != self.n {
            return Err(Error::Dimension(format!(
                "per-employee vectors must have length {}",
                self.n
            )));
        }
        for g in self.lower_groups.iter().chain(&self.upper_groups) {
            if let Some(&bad) = g.members.iter().find(|&&i| i >= self.n) {
                return Err(Error::InvalidParameter(format!(
                    "group member {bad} out of range for n = {}",
                    self.n
                )));
            }
        }
        for g in &self.lower_groups {
            if g.bound > g.members.len() {
                return Err(Error::InvalidParameter(format!(
                    "lower bound {} exceeds group size {}",
                    g.bound,
                    g.members.len()
                )));
            }
        }
        Ok(())
    }

    /// Number of constraint instances checked per evaluation.
    pub fn instance_count(&self, days: usize, with_tests: bool) -> usize {
        (self.lower_groups.len() + self.upper_groups.len()) * days
            + self.n * if with_tests { 2 } else { 1 }
    }

    /// Same rules with employees relabelled by `perm` (old `i` -> `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let map_group = |g: &Group| Group::new(g.members.iter().map(|&i| perm[i]), g.bound);
        let mut min_presence = vec![0; self.n];
        let mut capacity = vec![0; self.n];
        for i in 0..self.n {
            min_presence[perm[i]] = self.min_presence_days[i];
            capacity[perm[i]] = self.test_capacity[i];
        }
        Self {
            n: self.n,
            lower_groups: self.lower_groups.iter().map(map_group).collect(),
            upper_groups: self.upper_groups.iter().map(map_group).collect(),
            min_presence_days: min_presence,
            test_capacity: capacity,
        }
    }

    /// Violations of the presence rules only (no dimension checks).
    pub(crate) fn presence_violations(&self, sched: &BinaryMatrix) -> usize {
        let mut count = 0;
        for d in 0..sched.days() {
            count += self
                .lower_groups
                .iter()
                .filter(|g| g.present(sched, d) < g.bound)
                .count();
            count += self
                .upper_groups
                .iter()
                .filter(|g| g.present(sched, d) > g.bound)
                .count();
        }
        count
            + (0..self.n)
                .filter(|&i| sched.row_sum(i) < self.min_presence_days[i])
                .count()
    }

    /// Same count as [`violation_count`] for employee-major gene slices.
    pub(crate) fn gene_violations(&self, presence: &[bool], tests: Option<&[bool]>, days: usize) -> usize {
        let row = |g: &[bool], i: usize| g[i * days..(i + 1) * days].iter().filter(|&&b| b).count();
        let mut count = 0;
        for d in 0..days {
            let present = |g: &Group| g.members.iter().filter(|&&i| presence[i * days + d]).count();
            count += self.lower_groups.iter().filter(|g| present(g) < g.bound).count();
            count += self.upper_groups.iter().filter(|g| present(g) > g.bound).count();
        }
        for i in 0..self.n {
            if row(presence, i) < self.min_presence_days[i] {
                count += 1;
            }
            if let Some(t) = tests {
                if row(t, i) > self.test_capacity[i] {
                    count += 1;
                }
            }
        }
        count
    }

    pub(crate) fn test_violations(&self, tests: &BinaryMatrix) -> usize {
        (0..self.n)
            .filter(|&i| tests.row_sum(i) > self.test_capacity[i])
            .count()
    }
}

/// Counts violated constraint instances: each (group, day) pair outside its
/// bound, each employee under the minimum presence, and (with a test plan)
/// each employee over the test capacity.
pub fn violation_count(
    sched: &Schedule,
    tests: Option<&TestPlan>,
    cs: &ConstraintSet,
) -> Result<usize> {
    if sched.n() != cs.n {
        return Err(Error::Dimension(format!(
            "schedule has {} employees, constraints {}",
            sched.n(),
            cs.n
        )));
    }
    let mut count = cs.presence_violations(sched);
    if let Some(t) = tests {
        if t.n() != sched.n() || t.days() != sched.days() {
            return Err(Error::Dimension(format!(
                "test plan is {}x{}, schedule {}x{}",
                t.n(),
                t.days(),
                sched.n(),
                sched.days()
            )));
        }
        count += cs.test_violations(t);
    }
    Ok(count)
}

pub fn is_feasible(sched: &Schedule, tests: Option<&TestPlan>, cs: &ConstraintSet) -> bool {
    matches!(violation_count(sched, tests, cs), Ok(0))
}

/// Lower and upper occupancy groups over all `n` employees, with bounds
/// `ceil(min_frac * n)` and `floor(max_frac * n)`.
pub fn build_occupancy_band(n: usize, min_frac: f64, max_frac: f64) -> Result<(Group, Group)> {
    if !(0.0 <= min_frac && min_frac <= max_frac && max_frac <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "occupancy band [{min_frac}, {max_frac}] must satisfy 0 <= min <= max <= 1"
        )));
    }
    Ok((
        Group::new(0..n, ceil_fraction(min_frac, n)),
        Group::new(0..n, floor_fraction(max_frac, n)),
    ))
}

/// Lower group requiring `ceil(frac * |members|)` of `members` on site.
pub fn section_minimum(members: Vec<usize>, frac: f64) -> Result<Group> {
    if !(0.0..=1.0).contains(&frac) {
        return Err(Error::InvalidParameter(format!(
            "section fraction {frac} outside [0, 1]"
        )));
    }
    let bound = ceil_fraction(frac, members.len());
    Ok(Group { members, bound })
}

// products like 0.3 * 10 land a few ulps off the integer
fn ceil_fraction(frac: f64, n: usize) -> usize {
    (frac * n as f64 - ROUNDING_SLACK).ceil().max(0.0) as usize
}

fn floor_fraction(frac: f64, n: usize) -> usize {
    (frac * n as f64 + ROUNDING_SLACK).floor() as usize
}

pub fn daily_headcount(sched: &Schedule, day: usize) -> usize {
    sched.day_sum(day)
}
