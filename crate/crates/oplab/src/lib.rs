//! A laboratory for fixed-point estimation operators on singular problems.
//!
//! Several classical estimation problems share an awkward feature: at the
//! true parameter the curvature of the population objective vanishes, so
//! the textbook geometric convergence theory for gradient descent, Newton
//! and EM does not apply. This crate provides those problems, the
//! operators, and the measurement tools as one coherent kit:
//!
//! * [`models`]: three statistical families with analytically singular
//!   objectives (informative non-response, an over-specified Gaussian
//!   mixture, flat non-linear regression), a deterministic power-law pair
//!   that reproduces their geometry without noise, and a one-dimensional
//!   example where Newton's method is expelled from the basin of the truth.
//! * [`operator`]: iteration drivers that record full traces, with
//!   divergence and threshold-hit detection.
//! * [`linalg`] and [`quad`]: the small numeric substrate (dense Newton
//!   solves, Gauss-Hermite expectations).
//! * [`guide`]: the user guide, one module per chapter. The same markdown
//!   is rendered by mdbook from `book/`; compiling it here keeps every
//!   snippet in the book runnable and tested.
//!
//! Everything is deterministic given a seed: datasets are drawn from
//! counter-based generators, and all floating-point reductions use fixed
//! evaluation orders.

pub mod algorithms;
pub mod analysis;
pub mod epoch;
pub mod error;
pub mod experiments;
pub mod guide;
pub mod linalg;
pub mod models;
pub mod operator;
pub mod plot;
pub mod point;
pub mod quad;
pub mod regime;
pub mod seeding;

mod util;

pub use error::{Error, Result};
pub use operator::{
    best_iterate_error, iterate, iterate_until, IterationTrace, Operator, TerminationReason,
    TraceEntry, DIVERGENCE_FACTOR,
};
pub use point::ParamPoint;
pub use regime::{
    fast_unstable_iteration_bound, predicted_radius, RadiusPrediction, RegimeParams,
};
pub use epoch::{epoch_schedule, EpochSchedule};
