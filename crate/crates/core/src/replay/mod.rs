//! Replay memories: FIFO, reservoir and generative, behind one contract.

mod experience;
mod fifo;
mod generative;
mod reservoir;

pub use experience::{Experience, NO_TASK};
pub use fifo::FifoBuffer;
pub use generative::{GenerativeBuffer, GenerativeConfig};
pub use reservoir::ReservoirBuffer;

use crate::agent::QNetwork;
use crate::error::Result;
use crate::rng::SeededRng;

/// What the learner sees of a memory.
///
/// `sample` draws with replacement and never blocks; it fails with
/// [`crate::Error::NotReady`] when nothing can be drawn yet. Sampled items
/// always carry the [`NO_TASK`] tag.
pub trait ReplayMemory {
    fn kind(&self) -> &'static str;

    /// `agent` is the learner's current network; only the generative memory
    /// reads it (to refresh its teacher when a store triggers consolidation).
    fn store(&mut self, e: Experience, agent: &QNetwork, rng: &mut SeededRng) -> Result<()>;

    fn sample(&self, b: usize, rng: &mut SeededRng) -> Result<Vec<Experience>>;

    /// Stored real items (staged items for the generative memory).
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn can_sample(&self) -> bool {
        !self.is_empty()
    }

    /// Only meaningful for generative memories.
    fn consolidate(&mut self, _agent: &QNetwork, _rng: &mut SeededRng) -> Result<()> {
        Ok(())
    }

    /// Stored scalars (buffers) or parameter count (generative).
    fn footprint(&self) -> usize;

    /// Stored items in retention order, where the memory keeps raw items.
    fn items(&self) -> Option<Vec<&Experience>> {
        None
    }
}
