//! Employee contact networks.
//!
//! A [`ContactGraph`] stores the daily contact probability `p_ij` of every
//! pair of employees together with each employee's vaccination flag. Graphs
//! come from edge-list files, from raw face-to-face interaction logs, or from
//! the seeded random generators in this module.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Employee {
    pub id: usize,
    pub vaccinated: bool,
}

/// Symmetric weighted contact network with zero diagonal.
///
/// Weights are kept both as a dense `n x n` matrix and as per-employee
/// neighbour lists holding only the nonzero entries; the lists drive the
/// propagation hot loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactGraph {
    employees: Vec<Employee>,
    weights: Vec<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl ContactGraph {
    /// Graph of `n` unvaccinated employees without contacts.
    pub fn empty(n: usize) -> Self {
        Self {
            employees: (0..n)
                .map(|id| Employee {
                    id,
                    vaccinated: false,
                })
                .collect(),
            weights: vec![0.0; n * n],
            neighbors: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from a row-major `n x n` weight matrix, validating
    /// symmetry, the zero diagonal and the `[0, 1]` range.
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n * n {
            return Err(Error::InvalidGraph(format!(
                "expected {} weights for n = {n}, got {}",
                n * n,
                weights.len()
            )));
        }
        for i in 0..n {
            if weights[i * n + i] != 0.0 {
                return Err(Error::InvalidGraph(format!("self-loop on employee {i}")));
            }
            for j in 0..n {
                let w = weights[i * n + j];
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::InvalidGraph(format!(
                        "p[{i}][{j}] = {w} outside [0, 1]"
                    )));
                }
                if w != weights[j * n + i] {
                    return Err(Error::InvalidGraph(format!(
                        "asymmetric weights between {i} and {j}"
                    )));
                }
            }
        }
        let mut graph = Self::empty(n);
        graph.weights = weights;
        graph.rebuild_neighbors();
        Ok(graph)
    }

    fn rebuild_neighbors(&mut self) {
        let n = self.n();
        self.neighbors = (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|j| {
                        let w = self.weights[i * n + j];
                        (w > 0.0).then_some((j, w))
                    })
                    .collect()
            })
            .collect();
    }

    pub fn n(&self) -> usize {
        self.employees.len()
    }

    pub fn employees(&self) -> &[Employee] {
        &self.employees
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n() + j]
    }

    /// Row-major weight matrix.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nonzero contacts of employee `i` as `(j, p_ij)`, ordered by `j`.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn is_vaccinated(&self, i: usize) -> bool {
        self.employees[i].vaccinated
    }

    pub fn vaccination_flags(&self) -> Vec<bool> {
        self.employees.iter().map(|e| e.vaccinated).collect()
    }

    /// Replaces every vaccination flag.
    pub fn with_vaccination(mut self, flags: &[bool]) -> Result<Self> {
        if flags.len() != self.n() {
            return Err(Error::Dimension(format!(
                "{} vaccination flags for {} employees",
                flags.len(),
                self.n()
            )));
        }
        for (e, &v) in self.employees.iter_mut().zip(flags) {
            e.vaccinated = v;
        }
        Ok(self)
    }

    /// Number of unordered pairs with `p_ij > 0`.
    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Returns the graph with employees relabelled so that old employee
    /// `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        if perm.len() != n || perm.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(Error::InvalidParameter("not a permutation".into()));
        }
        let mut weights = vec![0.0; n * n];
        let mut flags = vec![false; n];
        for i in 0..n {
            flags[perm[i]] = self.is_vaccinated(i);
            for j in 0..n {
                weights[perm[i] * n + perm[j]] = self.weight(i, j);
            }
        }
        Self::from_weights(n, weights)?.with_vaccination(&flags)
    }

    /// Writes the edge list (`i,j,p` for every `i < j` with `p > 0`).
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,j,p")?;
        for i in 0..self.n() {
            for &(j, p) in self.neighbors(i) {
                if j > i {
                    writeln!(out, "{i},{j},{p}")?;
                }
            }
        }
        Ok(())
    }
}

/// Random-graph density profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Sparse,
    Dense,
}

impl Profile {
    /// `(P[p = 1], P[p = 0.5])` for one unordered pair.
    pub fn probabilities(self) -> (f64, f64) {
        match self {
            Profile::Sparse => (0.05, 0.1),
            Profile::Dense => (0.1, 0.2),
        }
    }

    fn sample<R: Rng>(self, rng: &mut R) -> f64 {
        let (full, half) = self.probabilities();
        let u: f64 = rng.gen();
        if u < full {
            1.0
        } else if u < full + half {
            0.5
        } else {
            0.0
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sparse" => Ok(Profile::Sparse),
            "dense" => Ok(Profile::Dense),
            other => Err(Error::InvalidParameter(format!("unknown profile {other:?}"))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Sparse => "sparse",
            Profile::Dense => "dense",
        })
    }
}

/// Parses an edge list from text.
///
/// Rows are `i,j,p`; a non-numeric first row is taken as a header and blank
/// lines are skipped. When `n` is `None` it is inferred as the largest id
/// plus one.
pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<ContactGraph> {
    let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut max_id = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        let parse_err = |message: String| Error::Parse { line, message };
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, got {}", fields.len())));
        }
        let parsed = (
            fields[0].parse::<usize>(),
            fields[1].parse::<usize>(),
            fields[2].parse::<f64>(),
        );
        let (i, j, p) = match parsed {
            (Ok(i), Ok(j), Ok(p)) => (i, j, p),
            _ if edges.is_empty() && max_id.is_none() && fields[2].parse::<f64>().is_err() => {
                // header row
                continue;
            }
            _ => return Err(parse_err(format!("malformed row {row:?}"))),
        };
        if i == j {
            return Err(parse_err(format!("self-loop on employee {i}")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(parse_err(format!("probability {p} outside [0, 1]")));
        }
        let key = (i.min(j), i.max(j));
        if let Some(&prev) = edges.get(&key) {
            let message = if prev != p {
                format!("asymmetric duplicate for pair ({i}, {j}): {prev} vs {p}")
            } else {
                format!("duplicate pair ({i}, {j})")
            };
            return Err(parse_err(message));
        }
        edges.insert(key, p);
        max_id = Some(max_id.unwrap_or(0).max(key.1));
    }

    let n = match (n, max_id) {
        (Some(n), Some(m)) if m >= n => {
            return Err(Error::InvalidGraph(format!(
                "employee id {m} out of range for n = {n}"
            )))
        }
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => 0,
    };
    let mut weights = vec![0.0; n * n];
    for (&(i, j), &p) in &edges {
        weights[i * n + j] = p;
        weights[j * n + i] = p;
    }
    ContactGraph::from_weights(n, weights)
}

/// Loads an edge-list CSV file. See [`parse_edge_list`].
pub fn load_edge_list(path: impl AsRef<Path>, n: Option<usize>) -> Result<ContactGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, n)
}

/// Metadata written next to an exported edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetadata {
    pub n: usize,
    pub vaccinated: Vec<bool>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub profile: Option<Profile>,
    /// External ids of ingested employees, indexed by dense id.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub external_ids: Vec<u64>,
}

impl GraphMetadata {
    pub fn for_graph(graph: &ContactGraph) -> Self {
        Self {
            n: graph.n(),
            vaccinated: graph.vaccination_flags(),
            seed: None,
            profile: None,
            external_ids: Vec::new(),
        }
    }
}

/// Path of the JSON sidecar belonging to an edge-list file.
pub fn sidecar_path(edge_list: &Path) -> std::path::PathBuf {
    edge_list.with_extension("json")
}

/// Writes `path` as an edge list and its metadata to the `.json` sidecar.
pub fn export_graph(graph: &ContactGraph, meta: &GraphMetadata, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    graph
        .write_edge_list(&mut buf)
        .map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(meta).expect("metadata serializes");
    fs::write(&side, json).map_err(|e| Error::io(&side, e))
}

/// Loads an edge list, applying the sidecar's size and vaccination flags
/// when the sidecar exists.
pub fn load_graph(path: &Path) -> Result<ContactGraph> {
    let side = sidecar_path(path);
    if !side.exists() {
        return load_edge_list(path, None);
    }
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: GraphMetadata = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidGraph(format!("{}: {e}", side.display())))?;
    load_edge_list(path, Some(meta.n))?.with_vaccination(&meta.vaccinated)
}

/// One 20-second face-to-face contact between two external ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interaction {
    pub timestamp: i64,
    pub id_a: u64,
    pub id_b: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawInteractionLog {
    pub records: Vec<Interaction>,
    pub observation_days: u32,
}

impl RawInteractionLog {
    /// Parses whitespace-separated `timestamp id_a id_b` rows.
    ///
    /// `observation_days` is set to the number of distinct calendar days
    /// (UTC dates of the timestamps) present in the log.
    pub fn parse(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let row = raw.trim();
            if row.is_empty() || row.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = row.split_whitespace().collect();
            if fields.len() < 3 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected `timestamp id_a id_b`, got {row:?}"),
                });
            }
            let bad = |what: &str| Error::Parse {
                line,
                message: format!("invalid {what} in {row:?}"),
            };
            let timestamp = fields[0].parse().map_err(|_| bad("timestamp"))?;
            let id_a = fields[1].parse().map_err(|_| bad("id"))?;
            let id_b = fields[2].parse().map_err(|_| bad("id"))?;
            if id_a == id_b {
                return Err(Error::Parse {
                    line,
                    message: format!("self-contact of id {id_a}"),
                });
            }
            records.push(Interaction {
                timestamp,
                id_a,
                id_b,
            });
        }
        let days = records
            .iter()
            .map(|r| r.timestamp.div_euclid(SECONDS_PER_DAY))
            .collect::<BTreeSet<_>>()
            .len();
        Ok(Self {
            records,
            observation_days: days as u32,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// Graph built from an interaction log plus the dense-to-external id map.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestedGraph {
    pub graph: ContactGraph,
    /// `external_ids[k]` is the log id of dense employee `k`.
    pub external_ids: Vec<u64>,
}

/// Turns raw contact counts into pairwise contact probabilities.
///
/// With `c_ij` the mean daily contacts of a pair and `d_i` the mean daily
/// contacts of `i` divided by its number of colleagues (employees it met at
/// least once), `p_ij = min(1, max(c_ij / d_i, c_ij / d_j))`. External ids
/// are remapped to dense indices in ascending order.
pub fn build_from_interactions(log: &RawInteractionLog) -> Result<IngestedGraph> {
    if log.observation_days == 0 {
        return Err(Error::InvalidParameter("observation_days must be >= 1".into()));
    }
    if log.records.is_empty() {
        return Err(Error::InvalidParameter("interaction log is empty".into()));
    }
    let external_ids: Vec<u64> = log
        .records
        .iter()
        .flat_map(|r| [r.id_a, r.id_b])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let dense: HashMap<u64, usize> = external_ids
        .iter()
        .enumerate()
        .map(|(k, &id)| (id, k))
        .collect();
    let n = external_ids.len();

    let mut pair_counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for r in &log.records {
        if r.id_a == r.id_b {
            return Err(Error::InvalidParameter(format!("self-contact of id {}", r.id_a)));
        }
        let (a, b) = (dense[&r.id_a], dense[&r.id_b]);
        *pair_counts.entry((a.min(b), a.max(b))).or_default() += 1;
    }

    let days = f64::from(log.observation_days);
    let mut total = vec![0u64; n];
    let mut colleagues = vec![0u64; n];
    for (&(a, b), &count) in &pair_counts {
        total[a] += count;
        total[b] += count;
        colleagues[a] += 1;
        colleagues[b] += 1;
    }
    // every employee in the map has at least one colleague, so d_i > 0
    let degree_norm: Vec<f64> = (0..n)
        .map(|i| total[i] as f64 / days / colleagues[i] as f64)
        .collect();

    let mut weights = vec![0.0; n * n];
    for (&(a, b), &count) in &pair_counts {
        let c = count as f64 / days;
        let p = (c / degree_norm[a]).max(c / degree_norm[b]).min(1.0);
        weights[a * n + b] = p;
        weights[b * n + a] = p;
    }
    Ok(IngestedGraph {
        graph: ContactGraph::from_weights(n, weights)?,
        external_ids,
    })
}

/// Random graph where every unordered pair independently draws
/// `p in {1, 0.5, 0}` with the profile's probabilities.
pub fn gen_random_graph(n: usize, profile: Profile, seed: u64) -> Result<ContactGraph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "random graph needs n >= 2, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let p = profile.sample(&mut rng);
            weights[i * n + j] = p;
            weights[j * n + i] = p;
        }
    }
    ContactGraph::from_weights(n, weights)
}

/// Random graph made of consecutive sections: pairs inside a section use
/// `within`, pairs across sections use `across`.
pub fn gen_sectioned_graph(
    section_sizes: &[usize],
    within: Profile,
    across: Profile,
    seed: u64,
) -> Result<ContactGraph> {
    let n: usize = section_sizes.iter().sum();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "sectioned graph needs n >= 2, got {n}"
        )));
    }
    let section_of: Vec<usize> = section_sizes
        .iter()
        .enumerate()
        .flat_map(|(s, &size)| std::iter::repeat(s).take(size))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let profile = if section_of[i] == section_of[j] {
                within
            } else {
                across
            };
            let p = profile.sample(&mut rng);
            weights[i * n + j] = p;
            weights[j * n + i] = p;
        }
    }
    ContactGraph::from_weights(n, weights)
}

/// Flags exactly `round(fraction * n)` uniformly chosen employees as
/// vaccinated and clears the flag on everyone else.
pub fn assign_vaccination(graph: ContactGraph, fraction: f64, seed: u64) -> Result<ContactGraph> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "vaccination fraction {fraction} outside [0, 1]"
        )));
    }
    let n = graph.n();
    let count = (fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flags = vec![false; n];
    for i in index::sample(&mut rng, n, count) {
        flags[i] = true;
    }
    graph.with_vaccination(&flags)
}
