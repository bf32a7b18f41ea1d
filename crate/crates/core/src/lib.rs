//! Deterministic discrete-time simulator for decentralized multi-user channel
//! access under jamming.
//!
//! Secondary users (SUs) share K licensed channels whose primary-user occupancy
//! is i.i.d. Bernoulli per slot. Jammers attack vacant channels to destroy SU
//! transmissions. The library implements the collision-feedback learning
//! algorithms CDJ (distinguishable jammer collisions), CNJ (coordinated,
//! non-distinguishable) and CUJ (uncoordinated), the jammer's own
//! learn-then-attack strategy, and the Myopic and Musical Chairs baselines,
//! together with the closed-form estimators, window optimizers and
//! sample-complexity schedules they rely on.
//!
//! Key concepts:
//! - channel ranking: uniform exploration estimates busy probabilities and
//!   sorts channels by availability;
//! - population inversion: collision fractions invert to estimates of the
//!   number of users and jammers;
//! - orthogonalization: SUs settle onto pairwise-distinct channels and then
//!   hop sequentially, which preserves orthogonality;
//! - regret: cumulative gap between the oracle sequential-hopping policy and
//!   the achieved throughput.
//!
//! Everything is deterministic given a master seed: each environment, SU and
//! jammer draws from its own labeled random stream.

pub mod channel;
pub mod config;
pub mod estimators;
pub mod jammer;
pub mod rng;
pub mod runner;
pub mod selfcheck;
pub mod su;

pub use channel::{resolve_slot, AgentOutcome, ChannelModel};
pub use config::{ExperimentConfig, ResolvedConfig, ScheduleSpec};
pub use estimators::{JammerMode, LearningParams, PhaseSchedule};
pub use runner::{run_episode, Aggregate, RegretCurve, RunResult, Trajectory};
pub use su::{Algorithm, SuAgent};

/// Library-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("range violation: {0}")]
    RangeViolation(String),
    #[error("schedule overflow: learning needs {needed} slots but horizon is {horizon}")]
    ScheduleOverflow { needed: u64, horizon: u64 },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
}
