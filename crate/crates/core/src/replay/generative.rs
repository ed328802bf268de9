//! Replay memory backed by a C-VAE over states.
//!
//! Real transitions are staged; every `period` stores the model is
//! consolidated on the staged states (mixed with its own replay) and the
//! current agent network is frozen as the teacher. Sampling decodes states
//! from the prior with label-free condition draws and labels them with the
//! teacher's Q-values, so replayed items are distillation targets rather than
//! transitions.

use log::debug;

use crate::agent::QNetwork;
use crate::error::{Error, Result};
use crate::generative::{consolidate, CVae, CVaeConfig, ConsolidationConfig, LossWeights};
use crate::nn::Parameterized;
use crate::replay::experience::Experience;
use crate::replay::fifo::FifoBuffer;
use crate::replay::ReplayMemory;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeConfig {
    pub vae: CVaeConfig,
    pub consolidation: ConsolidationConfig,
    /// Stores between consolidations.
    pub period: usize,
    pub staging_capacity: usize,
}

impl GenerativeConfig {
    /// Defaults for sparse (one-hot) states: with w = 1 the C-VAE tends to
    /// collapse onto per-condition averages, so reconstruction is up-weighted
    /// and consolidation trains longer.
    pub fn new(state_dim: usize) -> Self {
        Self {
            vae: CVaeConfig::new(state_dim, 8),
            consolidation: ConsolidationConfig {
                steps: 1000,
                lr: 3e-3,
                weights: LossWeights { w: 10.0, lambda: 1.0 },
                ..ConsolidationConfig::default()
            },
            period: 512,
            staging_capacity: 512,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenerativeBuffer {
    vae: CVae,
    teacher: Option<QNetwork>,
    staging: FifoBuffer,
    cfg: GenerativeConfig,
    since_consolidation: usize,
    consolidations: usize,
}

impl GenerativeBuffer {
    pub fn new(cfg: GenerativeConfig, rng: &mut SeededRng) -> Result<Self> {
        if cfg.period == 0 {
            return Err(Error::Domain("consolidation period must be positive".into()));
        }
        let vae = CVae::new(&cfg.vae, rng)?;
        let staging = FifoBuffer::new(cfg.staging_capacity, cfg.vae.input_dim)?;
        Ok(Self {
            vae,
            teacher: None,
            staging,
            cfg,
            since_consolidation: 0,
            consolidations: 0,
        })
    }

    pub fn vae(&self) -> &CVae {
        &self.vae
    }

    pub fn teacher(&self) -> Option<&QNetwork> {
        self.teacher.as_ref()
    }

    pub fn staged(&self) -> usize {
        self.staging.len()
    }

    pub fn consolidations(&self) -> usize {
        self.consolidations
    }

    pub fn config(&self) -> &GenerativeConfig {
        &self.cfg
    }
}

impl ReplayMemory for GenerativeBuffer {
    fn kind(&self) -> &'static str {
        "generative"
    }

    fn store(&mut self, e: Experience, agent: &QNetwork, rng: &mut SeededRng) -> Result<()> {
        self.staging.push(e)?;
        self.since_consolidation += 1;
        if self.since_consolidation >= self.cfg.period {
            self.since_consolidation = 0;
            self.consolidate(agent, rng)?;
        }
        Ok(())
    }

    fn sample(&self, b: usize, rng: &mut SeededRng) -> Result<Vec<Experience>> {
        let teacher = self
            .teacher
            .as_ref()
            .ok_or_else(|| Error::NotReady("generative memory has not been consolidated".into()))?;
        self.vae
            .generate(b, rng, None)?
            .into_iter()
            .map(|(x, _)| {
                let q = teacher.q_values(&x)?;
                let a = crate::agent::argmax(&q);
                Ok(Experience::distilled(x, q, a))
            })
            .collect()
    }

    fn len(&self) -> usize {
        self.staging.len()
    }

    fn can_sample(&self) -> bool {
        self.teacher.is_some() && self.vae.condition_count() > 0
    }

    fn consolidate(&mut self, agent: &QNetwork, rng: &mut SeededRng) -> Result<()> {
        if self.staging.is_empty() {
            debug!("consolidation skipped: nothing staged");
            return Ok(());
        }
        let states: Vec<Vec<f64>> = self.staging.iter().map(|e| e.state.clone()).collect();
        let report = consolidate(&self.vae, &states, None, &self.cfg.consolidation, rng)?;
        debug!(
            "consolidated on {} real and {} replayed samples, {} conditions",
            report.real_samples,
            report.replayed_samples,
            report.successor.condition_count()
        );
        self.vae = report.successor;
        self.teacher = Some(agent.clone());
        self.staging.clear();
        self.consolidations += 1;
        Ok(())
    }

    /// Parameter count of the generative model; independent of items seen.
    fn footprint(&self) -> usize {
        self.vae.param_count()
    }
}
