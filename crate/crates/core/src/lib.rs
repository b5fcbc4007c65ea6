//! Simulation and analysis of sequential social learning with information
//! cascades when players assume the wrong revealing probabilities.
//!
//! The crate is organised around the objects a study needs:
//!
//! - [`model`]: urn signal model, revealing-probability schedules and
//!   experiment configuration.
//! - [`dynamics`]: one trajectory of the mismatched-MAP decision process.
//! - [`analytic`]: closed-form learning rates, thresholds and drift terms.
//! - [`oracle`]: exact small-horizon error probabilities by enumeration.
//! - [`montecarlo`]: parallel, seed-reproducible estimation and slope fitting.
//! - [`adversarial`]: fixed revealer placements and the linear-error bound.
//! - [`report`]: CSV/JSON emission shared by the command-line tool.

pub mod adversarial;
pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
pub use model::{Checkpoints, ExperimentConfig, Schedule, UrnModel, WorldState};
