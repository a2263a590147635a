//! Exact Stackelberg game machinery and a follower-side learner that, using only
//! equilibrium-membership queries, recovers an optimal payoff matrix to report.

pub mod calibration;
pub mod error;
pub mod exact;
pub mod game;
pub mod gradient;
pub mod harness;
pub mod oracle;
pub mod planner;
pub mod warmup;

pub use error::{Error, Result};
