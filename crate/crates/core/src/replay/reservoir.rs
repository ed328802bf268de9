use crate::agent::QNetwork;
use crate::error::{Error, Result};
use crate::replay::experience::Experience;
use crate::replay::fifo::{check_dim, sample_uniform};
use crate::replay::ReplayMemory;
use crate::rng::SeededRng;

/// Uniform random subset of everything ever offered (Algorithm R).
#[derive(Debug, Clone)]
pub struct ReservoirBuffer {
    capacity: usize,
    state_dim: usize,
    items: Vec<Experience>,
    seen: u64,
}

impl ReservoirBuffer {
    pub fn new(capacity: usize, state_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Domain("reservoir capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            state_dim,
            items: Vec::with_capacity(capacity),
            seen: 0,
        })
    }

    pub(crate) fn from_parts(capacity: usize, state_dim: usize, items: Vec<Experience>, seen: u64) -> Self {
        Self {
            capacity,
            state_dim,
            items,
            seen,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.items.iter()
    }

    pub fn offer(&mut self, e: Experience, rng: &mut SeededRng) -> Result<()> {
        check_dim(&e, self.state_dim)?;
        self.seen += 1;
        if self.items.len() < self.capacity {
            self.items.push(e);
        } else {
            let j = rng.below(self.seen as usize);
            if j < self.capacity {
                self.items[j] = e;
            }
        }
        Ok(())
    }
}

impl ReplayMemory for ReservoirBuffer {
    fn kind(&self) -> &'static str {
        "reservoir"
    }

    fn store(&mut self, e: Experience, _agent: &QNetwork, rng: &mut SeededRng) -> Result<()> {
        self.offer(e, rng)
    }

    fn sample(&self, b: usize, rng: &mut SeededRng) -> Result<Vec<Experience>> {
        sample_uniform(self.items.len(), |i| &self.items[i], b, rng, "reservoir")
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
