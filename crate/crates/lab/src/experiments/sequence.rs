//! Sequential DQN training through a task sequence with one memory.

use rehearsal_core::agent::{evaluate, AgentConfig, DqnAgent, EpsilonSchedule, TrainingStats};
use rehearsal_core::generative::{CVaeConfig, ConsolidationConfig, LossWeights};
use rehearsal_core::replay::{FifoBuffer, GenerativeBuffer, GenerativeConfig, ReplayMemory, ReservoirBuffer};
use rehearsal_core::tasks::{Action, GridConfig, TaskSequence, TaskSpec};
use rehearsal_core::SeededRng;

use crate::config::{ExperimentConfig, MemoryKind};
use crate::error::LabError;
use crate::metrics::MetricsRow;
use crate::retention::RetentionMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceOutcome {
    pub retention: RetentionMatrix,
    /// Memory footprint after each phase (0 without a memory).
    pub footprints: Vec<usize>,
    /// Mean TD and distillation loss over each phase's updates.
    pub td_loss: Vec<Option<f64>>,
    pub distill_loss: Vec<Option<f64>>,
}

pub fn task_sequence(cfg: &ExperimentConfig, count: usize) -> Result<TaskSequence, LabError> {
    let base = GridConfig {
        width: cfg.grid.width,
        height: cfg.grid.height,
        start: cfg.grid.start,
        max_steps: cfg.grid.max_steps,
        ..GridConfig::default()
    };
    let tasks = cfg.tasks.goals[..count]
        .iter()
        .enumerate()
        .map(|(i, &goal)| TaskSpec {
            goal,
            permutation_seed: cfg.tasks.permute.then_some(i as u64 + 1),
            steps: cfg.tasks.steps,
        })
        .collect();
    Ok(TaskSequence::new(base, tasks)?)
}

pub fn agent_config(cfg: &ExperimentConfig) -> AgentConfig {
    let a = &cfg.agent;
    AgentConfig {
        gamma: a.gamma,
        epsilon: EpsilonSchedule {
            start: a.epsilon_start,
            end: a.epsilon_end,
            decay_steps: a.epsilon_decay,
        },
        lr: a.lr,
        batch_size: a.batch_size,
        fresh_size: a.fresh_size,
        target_sync: a.target_sync,
        rehearsal_weight: a.beta,
        hidden: a.hidden.clone(),
        warmup: a.warmup,
    }
}

pub fn vae_config(cfg: &ExperimentConfig, input_dim: usize) -> CVaeConfig {
    CVaeConfig {
        input_dim,
        latent_dim: cfg.vae.latent_dim,
        hidden: cfg.vae.hidden.clone(),
        hidden_activation: cfg.vae.activation,
        max_conditions: cfg.vae.max_conditions,
        ema_decay: cfg.vae.ema_decay,
    }
}

pub fn consolidation_config(cfg: &ExperimentConfig, lambda: f64) -> Result<ConsolidationConfig, LabError> {
    Ok(ConsolidationConfig {
        mix_ratio: cfg.vae.rho,
        steps: cfg.vae.steps,
        batch_size: cfg.vae.batch_size,
        weights: LossWeights::new(cfg.vae.w, lambda)?,
        lr: cfg.vae.lr,
        tau: cfg.vae.tau,
    })
}

type Memory = Box<dyn ReplayMemory>;

fn build_memory(
    cfg: &ExperimentConfig,
    kind: MemoryKind,
    capacity: usize,
    state_dim: usize,
    rng: &mut SeededRng,
) -> Result<Option<Memory>, LabError> {
    Ok(match kind {
        MemoryKind::None => None,
        MemoryKind::Fifo => Some(Box::new(FifoBuffer::new(capacity, state_dim)?)),
        MemoryKind::Reservoir => Some(Box::new(ReservoirBuffer::new(capacity, state_dim)?)),
        MemoryKind::Generative => {
            let g = GenerativeConfig {
                vae: vae_config(cfg, state_dim),
                consolidation: consolidation_config(cfg, cfg.vae.lambda)?,
                period: cfg.vae.period,
                staging_capacity: cfg.vae.period,
            };
            Some(Box::new(GenerativeBuffer::new(g, rng)?))
        }
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Trains one agent through the first `count` tasks. Agent weights come from
/// sub-stream 1 of the seed, memory weights from sub-stream 2, and everything
/// else (exploration, replay draws, consolidation) from the seed's own stream.
pub fn train_sequence(
    cfg: &ExperimentConfig,
    kind: MemoryKind,
    capacity: usize,
    count: usize,
    seed: u64,
) -> Result<SequenceOutcome, LabError> {
    let seq = task_sequence(cfg, count)?;
    let state_dim = seq.env(0)?.observation_dim();
    let mut rng = SeededRng::new(seed);
    let mut agent = DqnAgent::new(state_dim, Action::ALL.len(), agent_config(cfg), &mut rng.split(1))?;
    let mut memory = build_memory(cfg, kind, capacity, state_dim, &mut rng.split(2))?;

    let mut out = SequenceOutcome {
        retention: RetentionMatrix::new(),
        footprints: Vec::new(),
        td_loss: Vec::new(),
        distill_loss: Vec::new(),
    };
    for i in 0..seq.len() {
        let mut env = seq.env(i)?;
        let mut stats = TrainingStats::default();
        agent.run_task(&mut env, i, cfg.tasks.steps, memory.as_deref_mut(), &mut rng, &mut stats)?;
        let row = (0..=i)
            .map(|j| evaluate(agent.q(), &seq.env(j)?, cfg.tasks.eval_episodes))
            .collect::<Result<Vec<_>, _>>()?;
        out.retention.push_phase(row)?;
        out.footprints.push(memory.as_ref().map_or(0, |m| m.footprint()));
        out.td_loss.push(mean(stats.steps.iter().map(|s| s.td_loss)));
        out.distill_loss.push(mean(stats.steps.iter().map(|s| s.distill_loss)));
    }
    Ok(out)
}

/// Rows for one trained sequence, in step order.
pub fn sequence_rows(run: &str, seed: u64, steps_per_task: usize, o: &SequenceOutcome) -> Vec<MetricsRow> {
    let mut rows = Vec::new();
    let phases = o.retention.phases();
    for (i, r) in o.retention.rows().iter().enumerate() {
        let step = ((i + 1) * steps_per_task) as u64;
        for (j, &v) in r.iter().enumerate() {
            rows.push(MetricsRow::new(run, seed, i, Some(j), step, "eval_return", v));
        }
        rows.push(MetricsRow::new(run, seed, i, None, step, "footprint", o.footprints[i] as f64));
        if let Some(v) = o.td_loss[i] {
            rows.push(MetricsRow::new(run, seed, i, None, step, "mean_td_loss", v));
        }
        if let Some(v) = o.distill_loss[i] {
            rows.push(MetricsRow::new(run, seed, i, None, step, "mean_distill_loss", v));
        }
    }
    if phases > 0 {
        let step = (phases * steps_per_task) as u64;
        let v = o.retention.average_forgetting();
        rows.push(MetricsRow::new(run, seed, phases - 1, None, step, "avg_forgetting", v));
    }
    rows
}
