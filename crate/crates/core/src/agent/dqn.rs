//! Deep Q-learning from any replay memory, with distillation for replayed
//! (generated) states.
//!
//! Per update the loss is
//!
//! ```text
//! TD-MSE(fresh) + TD-MSE(replayed real transitions) + β · distill-MSE(replayed generated states)
//! ```
//!
//! where TD targets come from a hard-synced target network and distillation
//! regresses all action values onto the teacher's vector.

use crate::agent::qnet::{act, QNetwork};
use crate::error::{Error, Result};
use crate::nn::{Adam, Parameterized, Tensor};
use crate::replay::{Experience, ReplayMemory};
use crate::rng::SeededRng;
use crate::tasks::GridWorld;

/// Linear decay from `start` to `end` over `decay_steps`, then flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn value(&self, step: u64) -> f64 {
        if self.decay_steps == 0 || step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    pub lr: f64,
    /// Replay batch size.
    pub batch_size: usize,
    /// Most recent real transitions forming the fresh batch.
    pub fresh_size: usize,
    pub target_sync: u64,
    /// β, weight of the distillation term.
    pub rehearsal_weight: f64,
    pub hidden: Vec<usize>,
    /// Environment steps before updates begin.
    pub warmup: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            epsilon: EpsilonSchedule {
                start: 1.0,
                end: 0.05,
                decay_steps: 2000,
            },
            lr: 1e-3,
            batch_size: 32,
            fresh_size: 8,
            target_sync: 256,
            rehearsal_weight: 1.0,
            hidden: vec![64],
            warmup: 64,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Domain(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        let e = self.epsilon;
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.end) {
            return Err(Error::Domain("epsilon schedule must stay within [0, 1]".into()));
        }
        if self.rehearsal_weight < 0.0 {
            return Err(Error::Domain("rehearsal weight must be >= 0".into()));
        }
        if self.target_sync == 0 || self.fresh_size == 0 {
            return Err(Error::Domain("target_sync and fresh_size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub step: u64,
    pub td_loss: f64,
    pub distill_loss: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingStats {
    pub steps: Vec<StepStats>,
    pub episode_returns: Vec<(u64, f64)>,
    /// `(after_phase, task, return)`.
    pub eval_returns: Vec<(usize, usize, f64)>,
}

/// `y = r + γ · max_a' Q_target(s', a') · (1 − done)`.
pub fn td_targets(batch: &[Experience], target: &QNetwork, gamma: f64) -> Result<Vec<f64>> {
    td_targets_ref(&batch.iter().collect::<Vec<_>>(), target, gamma)
}

fn td_targets_ref(batch: &[&Experience], target: &QNetwork, gamma: f64) -> Result<Vec<f64>> {
    let live: Vec<&[f64]> = batch
        .iter()
        .filter(|e| !e.done && gamma != 0.0)
        .map(|e| e.next_state.as_slice())
        .collect();
    let next_q = if live.is_empty() {
        None
    } else {
        Some(target.net().predict(&Tensor::from_rows(&live)?)?)
    };
    let mut row = 0;
    Ok(batch
        .iter()
        .map(|e| {
            if e.done || gamma == 0.0 {
                return e.reward;
            }
            let q = next_q.as_ref().expect("live rows").row(row);
            row += 1;
            e.reward + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct DqnAgent {
    q: QNetwork,
    target: QNetwork,
    opt: Adam,
    cfg: AgentConfig,
    updates: u64,
}

impl DqnAgent {
    pub fn new(state_dim: usize, action_count: usize, cfg: AgentConfig, rng: &mut SeededRng) -> Result<Self> {
        cfg.validate()?;
        let q = QNetwork::new(state_dim, &cfg.hidden, action_count, rng)?;
        Ok(Self {
            target: q.clone(),
            opt: Adam::new(cfg.lr),
            q,
            cfg,
            updates: 0,
        })
    }

    pub fn q(&self) -> &QNetwork {
        &self.q
    }

    pub fn target(&self) -> &QNetwork {
        &self.target
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Loss over `fresh` plus `replayed`, with gradients accumulated into the
    /// online network when `backprop` is set.
    pub fn loss(&mut self, fresh: &[Experience], replayed: &[Experience], backprop: bool) -> Result<StepStats> {
        let (td_items, distill_items): (Vec<&Experience>, Vec<&Experience>) = fresh
            .iter()
            .chain(replayed)
            .partition(|e| e.teacher_q.is_none());
        let fresh_n = fresh.len();
        let rows: Vec<&[f64]> = td_items
            .iter()
            .chain(&distill_items)
            .map(|e| e.state.as_slice())
            .collect();
        if rows.is_empty() {
            return Err(Error::Domain("DQN update on an empty batch".into()));
        }
        let targets = td_targets_ref(&td_items, &self.target, self.cfg.gamma)?;

        let x = Tensor::from_rows(&rows)?;
        let out = if backprop {
            self.q.net_mut().forward(&x)?
        } else {
            self.q.net().predict(&x)?
        };
        let a_count = self.q.action_count();
        let mut upstream = Tensor::zeros(&[rows.len(), a_count]);

        // Fresh real transitions and replayed real transitions are averaged separately.
        let replay_td = td_items.len() - fresh_n.min(td_items.len());
        let mut td_loss = 0.0;
        for (r, e) in td_items.iter().enumerate() {
            if e.action >= a_count {
                return Err(Error::Domain(format!("action {} out of range", e.action)));
            }
            let n = if r < fresh_n { fresh_n } else { replay_td } as f64;
            let d = out.get(r, e.action) - targets[r];
            td_loss += d * d / n;
            upstream.set(r, e.action, 2.0 * d / n);
        }

        let beta = self.cfg.rehearsal_weight;
        let mut distill_loss = 0.0;
        let n_distill = (distill_items.len() * a_count) as f64;
        for (k, e) in distill_items.iter().enumerate() {
            let r = td_items.len() + k;
            let teacher = e.teacher_q.as_ref().expect("partitioned");
            if teacher.len() != a_count {
                return Err(Error::dim("teacher Q-vector", a_count, teacher.len()));
            }
            for (a, t) in teacher.iter().enumerate() {
                let d = out.get(r, a) - t;
                distill_loss += d * d / n_distill;
                upstream.set(r, a, beta * 2.0 * d / n_distill);
            }
        }

        if backprop {
            self.q.net_mut().backward(&upstream)?;
        }
        Ok(StepStats {
            step: self.updates,
            td_loss,
            distill_loss,
            total: td_loss + beta * distill_loss,
        })
    }

    /// One Adam update from `fresh` plus a batch drawn from `memory`.
    pub fn train_step<M: ReplayMemory + ?Sized>(
        &mut self,
        memory: Option<&M>,
        fresh: &[Experience],
        rng: &mut SeededRng,
    ) -> Result<StepStats> {
        let replayed = match memory {
            Some(m) => m.sample(self.cfg.batch_size, rng)?,
            None => Vec::new(),
        };
        self.q.zero_grads();
        let mut stats = self.loss(fresh, &replayed, true)?;
        self.opt.step(self.q.params_mut())?;
        self.updates += 1;
        stats.step = self.updates;
        if self.updates.is_multiple_of(self.cfg.target_sync) {
            self.sync_target();
        }
        Ok(stats)
    }

    pub fn sync_target(&mut self) {
        self.target = self.q.clone();
    }

    /// Trains on one task for `steps` environment steps. Exploration restarts
    /// from the schedule's start value at the beginning of each call.
    pub fn run_task<M: ReplayMemory + ?Sized>(
        &mut self,
        env: &mut GridWorld,
        task: usize,
        steps: usize,
        mut memory: Option<&mut M>,
        rng: &mut SeededRng,
        stats: &mut TrainingStats,
    ) -> Result<()> {
        let mut recent: std::collections::VecDeque<Experience> = Default::default();
        let mut obs = env.reset();
        let mut episode_return = 0.0;
        for t in 0..steps as u64 {
            let eps = self.cfg.epsilon.value(t);
            let action = act(&self.q, &obs, eps, rng)?;
            let step = env.step(crate::tasks::Action::from_index(action).expect("4 actions"))?;
            episode_return += step.reward;
            let e = Experience::new(obs, action, step.reward, step.observation.clone(), step.done, task);
            if recent.len() == self.cfg.fresh_size {
                recent.pop_front();
            }
            recent.push_back(e.clone());
            if let Some(m) = memory.as_deref_mut() {
                m.store(e, &self.q, rng)?;
            }

            if t >= self.cfg.warmup {
                let fresh: Vec<Experience> = recent.iter().cloned().collect();
                let mem = memory.as_deref().filter(|m| m.can_sample());
                let s = self.train_step(mem, &fresh, rng)?;
                stats.steps.push(s);
            }

            obs = if step.done {
                stats.episode_returns.push((t, episode_return));
                episode_return = 0.0;
                env.reset()
            } else {
                step.observation
            };
        }
        Ok(())
    }
}

/// Mean undiscounted return of greedy rollouts from the start state.
pub fn evaluate(q: &QNetwork, env: &GridWorld, episodes: usize) -> Result<f64> {
    if episodes == 0 {
        return Err(Error::Domain("evaluate needs at least one episode".into()));
    }
    let mut env = env.clone();
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut obs = env.reset();
        while !env.is_done() {
            let a = q.greedy(&obs)?;
            let s = env.step(crate::tasks::Action::from_index(a).expect("4 actions"))?;
            total += s.reward;
            obs = s.observation;
        }
    }
    Ok(total / episodes as f64)
}

/// Exposes the online network's parameters, so the update loss can be
/// finite-difference checked through [`DqnAgent::loss`].
impl Parameterized for DqnAgent {
    fn params(&self) -> Vec<&crate::nn::Parameter> {
        self.q.params()
    }

    fn params_mut(&mut self) -> Vec<&mut crate::nn::Parameter> {
        self.q.params_mut()
    }
}
