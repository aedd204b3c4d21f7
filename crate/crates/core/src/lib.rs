//! Linear stochastic bandits when the noise only has a (1+ε)-th moment.
//!
//! Everything revolves around one question: how much regret does a forced
//! lack of variance cost? The crate answers it constructively, with
//!
//! - robust mean estimators — truncation and median-of-means — whose
//!   deviations are controlled by a raw (1+ε)-moment bound
//!   ([`estimators`]);
//! - experimental designs over finite action sets that minimize the worst
//!   (1+ε)-moment of importance-weighted reward samples, not just the
//!   classical leverage ([`design`]);
//! - a phased-elimination algorithm combining the two ([`medpe`]), plus a
//!   truncated-ridge UCB baseline to race it against ([`baseline`]);
//! - reward environments: heavy-tailed noise laws and hard three-atom
//!   instances whose moments sit exactly at the admissible boundary
//!   ([`environments`]);
//! - a kernelized front end (Matérn/RBF) that runs the same engine on
//!   Gram-factor features ([`kernel`]).
//!
//! Supporting numerics (dense Cholesky, a small LP solver, Bessel
//! functions) live in [`linalg`], [`lp`], and [`special`]. All randomness
//! flows through explicitly seeded ChaCha streams, so every run replays
//! bit-for-bit.

// Validation throughout uses `!(x > 0.0)`-style negated comparisons on
// purpose: unlike `x <= 0.0`, the negated form also rejects NaN, which is
// exactly what input checking wants. Spelling each site via `partial_cmp`
// would bury that one-token idiom in ceremony.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actions;
pub mod baseline;
pub mod design;
pub mod environments;
pub mod error;
pub mod estimators;
pub mod instance;
pub mod kernel;
pub mod linalg;
pub mod lp;
pub mod medpe;
pub mod record;
pub mod special;

pub use actions::ActionSet;
pub use error::{Error, Result};
pub use instance::{LinearInstance, MomentParams};
pub use record::{RoundEntry, RunRecord};
