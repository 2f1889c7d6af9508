//! Linear-growth population dynamics with uniform catastrophes.
//!
//! The process starts at 0. At the jumps of a Poisson clock of rate `alpha`
//! it either grows by one (weight `lambda`) or is hit by a catastrophe
//! (weight `mu`) that lands uniformly on `{0, ..., i-1}`. From state 0 every
//! event moves the population to 1.
//!
//! The crate provides:
//!
//! * [`model`]: the transition kernel, two independent simulators and the
//!   closed-form most-probable deviation paths;
//! * [`rate`]: the endpoint rate function, its variational characterisation
//!   solved numerically, and the Chernoff-type bounds used to derive it;
//! * [`exact`]: simulation-free reference distributions;
//! * [`mc`]: naive and importance-sampling estimators of tail probabilities;
//! * [`paths`]: conditioned mean trajectories compared to the optimal path;
//! * [`cli`]: the `catldp` command-line front end.

pub mod cli;
pub mod error;
pub mod exact;
pub mod mc;
pub mod model;
pub mod paths;
pub mod rate;

pub use error::{Error, Result};
pub use model::{ModelParams, PathSample, SimSpec};
