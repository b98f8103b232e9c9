//! Cost-bounded plan enumeration for SAS+ planning tasks.
//!
//! The library finds every plan of a task whose cost stays within a bound and
//! keeps one representative per equivalence class, where two plans are
//! equivalent when they use the same action multiset and order a configurable
//! subset of "order-important" actions the same way. Successor pruning based
//! on stubborn sets cuts the enumeration down without losing any class; a
//! brute-force oracle can machine-check that claim on small tasks.
//!
//! Module layout:
//! - [`task`]: SAS+ variables, actions, states, and their semantics
//! - [`sas`]: reader and writer for the Fast Downward `output.sas` format
//! - [`equivalence`]: plan equivalence keys and quotient filtering
//! - [`plan_io`]: plan files in the Fast Downward `sas_plan` convention
//! - [`pruning`]: interference, stubborn sets, and the pruned successor rules
//! - [`search`]: optimal cost, bounded enumeration, and class filtering
//! - [`oracle`]: brute-force enumeration, safety checking, random tasks
//! - [`fixtures`]: small reference tasks used by tests and examples

pub mod equivalence;
pub mod fixtures;
pub mod oracle;
pub mod plan_io;
pub mod pruning;
pub mod sas;
pub mod search;
pub mod task;

pub use equivalence::{
    equiv_key, quotient_filter, restrict, select_actions, EquivalenceKey, InvalidPattern,
    OrderImportantSet, Plan,
};
pub use pruning::{
    compute_stubborn, conflicts, disables, interfere, successors, InterferenceMatrix,
    PruningError, PruningStrategy, StubbornConfig, SuccessorGenerator, SuccessorSet, TieBreak,
};
pub use sas::{parse_sas, write_sas, ParseError};
pub use search::{
    enumerate_plans, enumerate_plans_from, optimal_cost, optimal_cost_from, solve_potq, Bound,
    Rational, SearchError, SearchLimits, SearchOutcome, SearchStats,
};
pub use task::{Action, ActionId, Cost, PartialAssignment, State, Task, TaskError, Value, VarId};
