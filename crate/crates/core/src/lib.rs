//! Simulation laboratory for fixed-gap multi-armed bandit experiments.
//!
//! The crate is organised bottom-up:
//!
//! - [`arm_models`]: parametric reward families with closed-form scores and
//!   Fisher information.
//! - [`policies`]: history-only sampling strategies (Gaussian Thompson, UCB1,
//!   fixed-weight RCT and clipped wrappers).
//! - [`engine`]: runs one seeded trajectory and records the full history.
//! - [`lan`]: rate matrices, per-arm score and information statistics, the
//!   central sequence, exact log-likelihood ratios and the quadratic
//!   approximation.
//! - [`monte_carlo`]: replication harness, t-statistics, KS distances,
//!   histograms and pull-rate diagnostics.
//! - [`oracle`]: quadrature and finite-difference checks that are independent
//!   of the closed forms in [`arm_models`].

pub mod arm_models;
pub mod engine;
pub mod error;
pub mod lan;
pub mod monte_carlo;
pub mod normal;
pub mod oracle;
pub mod policies;
pub mod rng;
pub mod stats;

pub use arm_models::{ArmModel, Family, FisherMatrix, ScoreVector, ThetaVector};
pub use engine::{replay_check, run_trajectory, ExperimentConfig, Trajectory};
pub use error::{Error, Result};
pub use lan::{ExpansionReport, InfoWeights, RateMatrix, RateRegime};
pub use monte_carlo::{ReplicationRecord, StudyConfig};
pub use policies::{PolicySpec, PolicyState};
pub use rng::RandomStream;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
