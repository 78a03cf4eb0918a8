//! Random walks on kinetically constrained dynamic environments.
//!
//! The crate has two halves. The simulation half drives East, West, FA1f and
//! independent spin-flip environments through the graphical construction
//! and runs walkers on top of them; estimators turn replica trajectories
//! into batch-means confidence intervals. The exact half builds the
//! generators of small rings explicitly and computes stationary laws,
//! spectral gaps, velocities and perturbation-series terms to machine
//! precision.

pub mod env;
pub mod estimators;
pub mod error;
pub mod exact;
pub mod graphical;
pub mod perturbative;
pub mod rng;
pub mod walkers;

pub use env::{EnvKind, EnvParams, SpinConfiguration, Topology};
pub use error::{Error, Result};
pub use graphical::{ClockEvent, EventOutcome, EventSchedule, Observer};
pub use walkers::{JointProcess, JointState, WalkerParams};
