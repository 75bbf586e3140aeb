//! Independent deep Q-learners for cooperative traffic-signal control.
//!
//! Every intersection is driven by its own learner that only sees local
//! state. [`agents::Agent`] implements three variants of Double DQN:
//! plain independent learners, lenient learners that ignore some negative
//! updates through per-state temperatures, and the forgiving-optimistic
//! variant that down-weights negative TD errors and lets old experiences
//! fade. The [`traffic`] module provides a point-queue grid simulator, and
//! [`matrix_game`] a two-step coordination game with exact Nash and Pareto
//! oracles.

pub mod agents;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod matrix_game;
pub mod nn;
pub mod replay;
pub mod traffic;

pub use agents::{Agent, AgentConfig, AgentKind};
pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/learners.md")]
    mod learners {}
    #[doc = include_str!("../../../book/src/two_step_game.md")]
    mod two_step_game {}
    #[doc = include_str!("../../../book/src/traffic_model.md")]
    mod traffic_model {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
