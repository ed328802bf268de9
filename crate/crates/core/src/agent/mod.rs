//! Deep Q-learning agent.

mod dqn;
mod qnet;

pub use dqn::{evaluate, td_targets, AgentConfig, DqnAgent, EpsilonSchedule, StepStats, TrainingStats};
pub use qnet::{act, argmax, QNetwork};
