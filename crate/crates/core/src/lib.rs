//! Generative-memory pseudo-rehearsal for lifelong reinforcement learning.
//!
//! A conditional VAE with a latent-separation penalty acts as a replay
//! memory for a DQN agent trained on a sequence of tasks, next to FIFO and
//! reservoir buffers as baselines.

pub mod agent;
pub mod checkpoint;
pub mod error;
pub mod generative;
pub mod nn;
pub mod replay;
pub mod rng;
pub mod tasks;

pub use error::{Error, Result};
pub use rng::SeededRng;
