//! Presence and testing schedules that minimise the expected infection risk
//! of a workforce sharing a contact network.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`] builds, loads and generates [`ContactGraph`]s.
//! - [`infection`] propagates per-employee infection probabilities day by day.
//! - [`constraints`] holds schedules, test plans and the occupancy rules.
//! - [`ga`] is a penalty-fitness genetic algorithm for both scheduling models.
//! - [`oracle`] enumerates small instances exhaustively for ground truth.
//! - [`scenario`] runs configured experiments and grids and renders tables.
//!
//! ```
//! use shiftrisk::{gen_random_graph, EpidemicParams, Profile};
//!
//! let graph = gen_random_graph(10, Profile::Sparse, 7).unwrap();
//! let params = EpidemicParams::default();
//! let state = shiftrisk::initial_risk(&graph, &params);
//! assert_eq!(state.pi.len(), 10);
//! ```

pub mod constraints;
pub mod error;
pub mod ga;
pub mod graph;
pub mod infection;
pub mod oracle;
pub mod scenario;

pub use constraints::{
    build_occupancy_band, daily_headcount, is_feasible, section_minimum, violation_count,
    BinaryMatrix, ConstraintSet, Group, Schedule, TestPlan,
};
pub use error::{Error, Result};
pub use ga::{
    evolve, fitness, random_feasible, single_point_crossover, solve_model1, solve_model2,
    swap_mutation, tournament_select, Chromosome, Evolution, GaConfig, Model, Problem, Solution,
};
pub use graph::{
    assign_vaccination, build_from_interactions, gen_random_graph, gen_sectioned_graph,
    load_edge_list, ContactGraph, Employee, IngestedGraph, Interaction, Profile,
    RawInteractionLog,
};
pub use infection::{
    apply_test_deterministic, apply_test_probabilistic, contact_update, contact_update_exact,
    contact_update_linearized, expected_risk, initial_risk, objective, simulate,
    update_day_model1, update_day_model2, EpidemicParams, InitialRiskPolicy, PropagationMode,
    RiskState, Testing,
};
pub use oracle::{enumerate_feasible_count, enumerate_optimum, OracleBudget, OracleOutcome};
