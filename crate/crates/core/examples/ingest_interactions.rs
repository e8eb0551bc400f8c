//! Builds a contact graph from a `timestamp id_a id_b` interaction log.
//!
//! cargo run --release --example ingest_interactions [-- path/to/log]

use shiftrisk::{build_from_interactions, RawInteractionLog};

// two days of contacts among four badges
const SAMPLE: &str = "\
0      101 205
20     101 205
40     101 205
3600   205 311
7200   101 311
86400  101 205
86420  205 311
90000  311 412
90020  311 412
";

fn main() -> shiftrisk::Result<()> {
    let log = match std::env::args().nth(1) {
        Some(path) => RawInteractionLog::load(path)?,
        None => RawInteractionLog::parse(SAMPLE)?,
    };
    println!(
        "{} records over {} days",
        log.records.len(),
        log.observation_days
    );
    let ingested = build_from_interactions(&log)?;
    let g = &ingested.graph;
    for i in 0..g.n() {
        for &(j, p) in g.neighbors(i) {
            if i < j {
                println!(
                    "  {} - {}: p = {p:.3}",
                    ingested.external_ids[i], ingested.external_ids[j]
                );
            }
        }
    }
    Ok(())
}
