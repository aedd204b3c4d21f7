//! Experiment harness for the heavy-tailed bandit library: batch
//! configuration, a parallel runner with per-run CSV records and a JSON
//! manifest, regret aggregation, plot-data export, continuous-domain
//! discretization, and the closed-form rate calculator backing the `htb`
//! command-line tool.

// Validation throughout uses `!(x > 0.0)`-style negated comparisons on
// purpose: unlike `x <= 0.0`, the negated form also rejects NaN, which is
// exactly what input checking wants. Spelling each site via `partial_cmp`
// would bury that one-token idiom in ceremony.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod discretize;
pub mod error;
pub mod experiment;
pub mod exponents;
pub mod plotdata;

pub use config::{Algorithm, EnvironmentSpec, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, AggregateResult, AggregateRow};
