//! Exact ranking of items from noisy pairwise comparisons answered by a pool
//! of users with heterogeneous accuracy.
//!
//! The ranking engine ([`engine`]) inserts items one by one into a gap tree
//! ([`pit`]), spending votes until each position is certified to a requested
//! confidence. Votes are answered by a [`source::ComparisonSource`]; the pool
//! of eligible users can shrink adaptively as their answers prove inconsistent
//! ([`elimination`]). [`baselines`] packages the engine into five comparable
//! strategies, and [`harness`] sweeps them over seeded experiment grids whose
//! outputs ([`report`]) are reproducible byte for byte.

pub mod baselines;
pub mod config;
pub mod elimination;
pub mod engine;
pub mod error;
pub mod harness;
pub mod pit;
pub mod report;
pub mod rng;
pub mod source;
pub mod types;

pub use baselines::{
    modified_two_stage_ranking, naive_user_selection, run_adaptive, run_algorithm, run_nonadaptive,
    run_oracle, subset_user_selection, two_stage_ranking, AlgorithmKind, ArmRoutine, RunOutcome,
    SelectorConfig,
};
pub use config::parse_experiment_config;
pub use elimination::{
    consistency_radius, eliminate_user, elimination_gate, median_elimination,
    successive_elimination, ActiveSet, ConfidenceBand, SelectionOutcome,
};
pub use engine::{
    atc, atc_vote_budget, ati, iai, iai_schedule, iir, AtcOutcome, IirOutcome, InsertOutcome,
    InsertionTrace, Opponent, QueryCtx, ResponseLedger,
};
pub use error::{Error, Result};
pub use harness::{
    cell_seed, complexity_reference, elimination_trace, run_grid, run_grid_with, run_seeded,
    run_single, summarize, ComplexityRef, ExperimentConfig, Fraction, RunRecord, SummaryRow,
    TraceRow,
};
pub use pit::{build_pit, height_bound, Bound, NodeId, Pit, PitNode};
pub use report::{
    format_real, record_csv_row, records_csv, records_jsonl, summary_csv, trace_csv,
    RECORDS_CSV_HEADER, SUMMARY_CSV_HEADER, TRACE_CSV_HEADER,
};
pub use rng::{derive_seed, RunRng};
pub use source::{make_bernoulli_source, make_logistic_source, ComparisonSource, SimulatedSource};
pub use types::{ItemId, TrueRanking, UserAccuracy, UserId, Vote};
