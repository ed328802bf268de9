use std::collections::VecDeque;

use crate::agent::QNetwork;
use crate::error::{Error, Result};
use crate::replay::experience::Experience;
use crate::replay::ReplayMemory;
use crate::rng::SeededRng;

/// Fixed-capacity queue; a store into a full buffer evicts the oldest item.
#[derive(Debug, Clone)]
pub struct FifoBuffer {
    capacity: usize,
    state_dim: usize,
    items: VecDeque<Experience>,
}

impl FifoBuffer {
    pub fn new(capacity: usize, state_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Domain("FIFO capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            state_dim,
            items: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.items.iter()
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }

    pub fn push(&mut self, e: Experience) -> Result<()> {
        check_dim(&e, self.state_dim)?;
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(e);
        Ok(())
    }
}

pub(crate) fn check_dim(e: &Experience, dim: usize) -> Result<()> {
    if e.state.len() != dim {
        return Err(Error::dim("experience state", dim, e.state.len()));
    }
    if e.next_state.len() != dim {
        return Err(Error::dim("experience next_state", dim, e.next_state.len()));
    }
    Ok(())
}

pub(crate) fn sample_uniform<'a>(
    len: usize,
    get: impl Fn(usize) -> &'a Experience,
    b: usize,
    rng: &mut SeededRng,
    what: &str,
) -> Result<Vec<Experience>> {
    if len == 0 {
        return Err(Error::NotReady(format!("{what} is empty")));
    }
    Ok((0..b).map(|_| get(rng.below(len)).untagged()).collect())
}

impl ReplayMemory for FifoBuffer {
    fn kind(&self) -> &'static str {
        "fifo"
    }

    fn store(&mut self, e: Experience, _agent: &QNetwork, _rng: &mut SeededRng) -> Result<()> {
        self.push(e)
    }

    fn sample(&self, b: usize, rng: &mut SeededRng) -> Result<Vec<Experience>> {
        sample_uniform(self.items.len(), |i| &self.items[i], b, rng, "FIFO buffer")
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn footprint(&self) -> usize {
        self.items.len() * (2 * self.state_dim + 3)
    }

    fn items(&self) -> Option<Vec<&Experience>> {
        Some(self.items.iter().collect())
    }
}
