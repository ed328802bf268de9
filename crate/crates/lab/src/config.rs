//! `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, dotted keys group related
//! settings. Every key has a default (see [`KEYS`]); an unknown key or a
//! malformed value rejects the whole file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rehearsal_core::nn::Activation;

use crate::error::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    ForgettingSweep,
    LatentSeparation,
    PseudoRehearsal,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ForgettingSweep => "forgetting_sweep",
            ExperimentKind::LatentSeparation => "latent_separation",
            ExperimentKind::PseudoRehearsal => "pseudo_rehearsal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MemoryKind {
    None,
    Fifo,
    Reservoir,
    Generative,
}

impl MemoryKind {
    pub fn name(self) -> &'static str {
        match self {
            MemoryKind::None => "none",
            MemoryKind::Fifo => "fifo",
            MemoryKind::Reservoir => "reservoir",
            MemoryKind::Generative => "generative",
        }
    }

    /// Whether the kind stores raw items and therefore takes a capacity.
    pub fn has_capacity(self) -> bool {
        matches!(self, MemoryKind::Fifo | MemoryKind::Reservoir)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    Synthetic,
    Idx,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSettings {
    pub width: usize,
    pub height: usize,
    pub start: (usize, usize),
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSettings {
    pub goals: Vec<(usize, usize)>,
    pub steps: usize,
    pub permute: bool,
    /// Tasks used by `pseudo_rehearsal`.
    pub count: usize,
    pub eval_episodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSettings {
    pub gamma: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub fresh_size: usize,
    pub target_sync: u64,
    pub beta: f64,
    pub hidden: Vec<usize>,
    pub warmup: u64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeSettings {
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub w: f64,
    pub lambda: f64,
    pub tau: f64,
    pub rho: f64,
    /// Consolidation period K in stores.
    pub period: usize,
    pub max_conditions: usize,
    pub ema_decay: f64,
    /// Optimiser steps per consolidation.
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSettings {
    pub source: DataSource,
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub spread: f64,
    /// Class-incremental phases; each inner list is trained together.
    pub phases: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub name: String,
    pub seed: u64,
    pub seeds: usize,
    pub out: Option<PathBuf>,
    pub memory_kinds: Vec<MemoryKind>,
    pub memory_capacity: usize,
    pub sweep_kinds: Vec<MemoryKind>,
    pub sweep_capacities: Vec<usize>,
    pub sweep_task_counts: Vec<usize>,
    pub grid: GridSettings,
    pub tasks: TaskSettings,
    pub agent: AgentSettings,
    pub vae: VaeSettings,
    pub data: DataSettings,
    pub unsupervised: bool,
    pub epochs: usize,
}

/// Every recognised key with its default value and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("experiment", "pseudo_rehearsal", "forgetting_sweep | latent_separation | pseudo_rehearsal"),
    ("name", "", "run label used in file names (defaults to the experiment kind)"),
    ("seed", "0", "first seed; run k uses seed + k"),
    ("seeds", "5", "number of seeded runs"),
    ("out", "", "output directory (falls back to REHEARSAL_LAB_OUT, then ./lab-out)"),
    ("memory.kinds", "none,fifo,generative", "memories compared by pseudo_rehearsal"),
    ("memory.capacity", "10000", "FIFO / reservoir capacity for pseudo_rehearsal"),
    ("sweep.kinds", "fifo", "memories swept by forgetting_sweep"),
    ("sweep.capacities", "16,256", "capacity grid for FIFO / reservoir"),
    ("sweep.task_counts", "3", "sequence lengths swept"),
    ("grid.width", "5", "columns"),
    ("grid.height", "5", "rows"),
    ("grid.start", "0,0", "start cell as row,col"),
    ("grid.max_steps", "50", "episode step budget"),
    ("tasks.goals", "4,4;2,2;4,0", "goal cells (row,col) separated by ';', one task each"),
    ("tasks.steps", "6000", "environment steps per task"),
    ("tasks.permute", "false", "give every task its own seeded observation permutation"),
    ("tasks.count", "2", "tasks used by pseudo_rehearsal"),
    ("tasks.eval_episodes", "1", "greedy episodes per evaluation"),
    ("agent.gamma", "0.99", "discount"),
    ("agent.lr", "0.001", "Adam learning rate"),
    ("agent.batch_size", "32", "replay batch size"),
    ("agent.fresh_size", "8", "recent transitions in every update"),
    ("agent.target_sync", "256", "updates between target-network copies"),
    ("agent.beta", "1.0", "distillation weight"),
    ("agent.hidden", "64", "hidden layer widths"),
    ("agent.warmup", "64", "steps before the first update"),
    ("agent.epsilon_start", "1.0", "initial exploration rate"),
    ("agent.epsilon_end", "0.05", "final exploration rate"),
    ("agent.epsilon_decay", "2000", "steps of linear epsilon decay, restarted per task"),
    ("vae.latent_dim", "8", "latent width"),
    ("vae.hidden", "32", "hidden widths (mirrored in the decoder)"),
    ("vae.activation", "tanh", "hidden activation: relu | tanh | sigmoid | identity"),
    ("vae.w", "10.0", "reconstruction weight"),
    ("vae.lambda", "1.0", "separation weight"),
    ("vae.tau", "0.5", "spawn threshold for label-free condition assignment"),
    ("vae.rho", "0.5", "fraction of real samples per consolidation batch"),
    ("vae.period", "6000", "stores between consolidations (K)"),
    ("vae.max_conditions", "16", "condition slots"),
    ("vae.ema_decay", "0.9", "centroid moving-average decay"),
    ("vae.steps", "1000", "optimiser steps per consolidation"),
    ("vae.batch_size", "32", "consolidation batch size"),
    ("vae.lr", "0.003", "consolidation learning rate"),
    ("data.source", "synthetic", "synthetic | idx"),
    ("data.images", "", "IDX image file (idx source)"),
    ("data.labels", "", "IDX label file (idx source)"),
    ("data.classes", "3", "synthetic classes"),
    ("data.per_class", "200", "synthetic samples per class"),
    ("data.dim", "16", "synthetic input width"),
    ("data.spread", "0.05", "synthetic Gaussian spread"),
    ("data.phases", "0,1,2", "class phases, classes joined by ',' and phases by ';'"),
    ("separation.mode", "supervised", "supervised | unsupervised condition assignment"),
    ("separation.epochs", "1", "consolidation rounds per phase"),
];

/// A value that failed to parse, reported against its key.
struct BadValue(String);

impl fmt::Display for BadValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn num<T: FromStr>(v: &str) -> Result<T, BadValue> {
    v.parse().map_err(|_| BadValue(format!("'{v}' is not a valid number")))
}

fn list<T: FromStr>(v: &str) -> Result<Vec<T>, BadValue> {
    v.split(',').map(|s| num(s.trim())).collect()
}

fn nonempty<T>(v: Vec<T>, what: &str) -> Result<Vec<T>, BadValue> {
    if v.is_empty() {
        return Err(BadValue(format!("{what} must not be empty")));
    }
    Ok(v)
}

fn cell(v: &str) -> Result<(usize, usize), BadValue> {
    match list::<usize>(v)?.as_slice() {
        &[r, c] => Ok((r, c)),
        _ => Err(BadValue(format!("'{v}' is not a row,col pair"))),
    }
}

fn flag(v: &str) -> Result<bool, BadValue> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(BadValue(format!("'{v}' is not true or false"))),
    }
}

fn memory_kinds(v: &str) -> Result<Vec<MemoryKind>, BadValue> {
    let kinds = v
        .split(',')
        .map(|s| match s.trim() {
            "none" => Ok(MemoryKind::None),
            "fifo" => Ok(MemoryKind::Fifo),
            "reservoir" => Ok(MemoryKind::Reservoir),
            "generative" => Ok(MemoryKind::Generative),
            other => Err(BadValue(format!("unknown memory kind '{other}'"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    nonempty(kinds, "memory kind list")
}

fn path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

impl ExperimentConfig {
    fn set(&mut self, key: &str, v: &str) -> Result<(), BadValue> {
        match key {
            "experiment" => {
                self.experiment = match v {
                    "forgetting_sweep" => ExperimentKind::ForgettingSweep,
                    "latent_separation" => ExperimentKind::LatentSeparation,
                    "pseudo_rehearsal" => ExperimentKind::PseudoRehearsal,
                    _ => return Err(BadValue(format!("unknown experiment '{v}'"))),
                }
            }
            "name" => self.name = v.to_string(),
            "seed" => self.seed = num(v)?,
            "seeds" => self.seeds = num(v)?,
            "out" => self.out = path(v),
            "memory.kinds" => self.memory_kinds = memory_kinds(v)?,
            "memory.capacity" => self.memory_capacity = num(v)?,
            "sweep.kinds" => self.sweep_kinds = memory_kinds(v)?,
            "sweep.capacities" => self.sweep_capacities = nonempty(list(v)?, "capacity grid")?,
            "sweep.task_counts" => self.sweep_task_counts = nonempty(list(v)?, "task counts")?,
            "grid.width" => self.grid.width = num(v)?,
            "grid.height" => self.grid.height = num(v)?,
            "grid.start" => self.grid.start = cell(v)?,
            "grid.max_steps" => self.grid.max_steps = num(v)?,
            "tasks.goals" => {
                let goals = v.split(';').map(|g| cell(g.trim())).collect::<Result<Vec<_>, _>>()?;
                self.tasks.goals = nonempty(goals, "goal list")?;
            }
            "tasks.steps" => self.tasks.steps = num(v)?,
            "tasks.permute" => self.tasks.permute = flag(v)?,
            "tasks.count" => self.tasks.count = num(v)?,
            "tasks.eval_episodes" => self.tasks.eval_episodes = num(v)?,
            "agent.gamma" => self.agent.gamma = num(v)?,
            "agent.lr" => self.agent.lr = num(v)?,
            "agent.batch_size" => self.agent.batch_size = num(v)?,
            "agent.fresh_size" => self.agent.fresh_size = num(v)?,
            "agent.target_sync" => self.agent.target_sync = num(v)?,
            "agent.beta" => self.agent.beta = num(v)?,
            "agent.hidden" => self.agent.hidden = list(v)?,
            "agent.warmup" => self.agent.warmup = num(v)?,
            "agent.epsilon_start" => self.agent.epsilon_start = num(v)?,
            "agent.epsilon_end" => self.agent.epsilon_end = num(v)?,
            "agent.epsilon_decay" => self.agent.epsilon_decay = num(v)?,
            "vae.latent_dim" => self.vae.latent_dim = num(v)?,
            "vae.hidden" => self.vae.hidden = list(v)?,
            "vae.activation" => {
                self.vae.activation = match v {
                    "relu" => Activation::Relu,
                    "tanh" => Activation::Tanh,
                    "sigmoid" => Activation::Sigmoid,
                    "identity" => Activation::Identity,
                    _ => return Err(BadValue(format!("unknown activation '{v}'"))),
                }
            }
            "vae.w" => self.vae.w = num(v)?,
            "vae.lambda" => self.vae.lambda = num(v)?,
            "vae.tau" => self.vae.tau = num(v)?,
            "vae.rho" => self.vae.rho = num(v)?,
            "vae.period" => self.vae.period = num(v)?,
            "vae.max_conditions" => self.vae.max_conditions = num(v)?,
            "vae.ema_decay" => self.vae.ema_decay = num(v)?,
            "vae.steps" => self.vae.steps = num(v)?,
            "vae.batch_size" => self.vae.batch_size = num(v)?,
            "vae.lr" => self.vae.lr = num(v)?,
            "data.source" => {
                self.data.source = match v {
                    "synthetic" => DataSource::Synthetic,
                    "idx" => DataSource::Idx,
                    _ => return Err(BadValue(format!("unknown data source '{v}'"))),
                }
            }
            "data.images" => self.data.images = path(v),
            "data.labels" => self.data.labels = path(v),
            "data.classes" => self.data.classes = num(v)?,
            "data.per_class" => self.data.per_class = num(v)?,
            "data.dim" => self.data.dim = num(v)?,
            "data.spread" => self.data.spread = num(v)?,
            "data.phases" => {
                let phases = v.split(';').map(|p| list(p.trim())).collect::<Result<Vec<_>, _>>()?;
                self.data.phases = nonempty(phases, "phase list")?;
            }
            "separation.mode" => {
                self.unsupervised = match v {
                    "supervised" => false,
                    "unsupervised" => true,
                    _ => return Err(BadValue(format!("unknown separation mode '{v}'"))),
                }
            }
            "separation.epochs" => self.epochs = num(v)?,
            _ => unreachable!("key table and setter disagree on '{key}'"),
        }
        Ok(())
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut cfg = ExperimentConfig {
            experiment: ExperimentKind::PseudoRehearsal,
            name: String::new(),
            seed: 0,
            seeds: 0,
            out: None,
            memory_kinds: Vec::new(),
            memory_capacity: 0,
            sweep_kinds: Vec::new(),
            sweep_capacities: Vec::new(),
            sweep_task_counts: Vec::new(),
            grid: GridSettings {
                width: 0,
                height: 0,
                start: (0, 0),
                max_steps: 0,
            },
            tasks: TaskSettings {
                goals: Vec::new(),
                steps: 0,
                permute: false,
                count: 0,
                eval_episodes: 0,
            },
            agent: AgentSettings {
                gamma: 0.0,
                lr: 0.0,
                batch_size: 0,
                fresh_size: 0,
                target_sync: 0,
                beta: 0.0,
                hidden: Vec::new(),
                warmup: 0,
                epsilon_start: 0.0,
                epsilon_end: 0.0,
                epsilon_decay: 0,
            },
            vae: VaeSettings {
                latent_dim: 0,
                hidden: Vec::new(),
                activation: Activation::Tanh,
                w: 0.0,
                lambda: 0.0,
                tau: 0.0,
                rho: 0.0,
                period: 0,
                max_conditions: 0,
                ema_decay: 0.0,
                steps: 0,
                batch_size: 0,
                lr: 0.0,
            },
            data: DataSettings {
                source: DataSource::Synthetic,
                images: None,
                labels: None,
                classes: 0,
                per_class: 0,
                dim: 0,
                spread: 0.0,
                phases: Vec::new(),
            },
            unsupervised: false,
            epochs: 0,
        };
        // The key table is the single source of defaults.
        for (key, default, _) in KEYS {
            if let Err(e) = cfg.set(key, default) {
                panic!("default for {key} does not parse: {e}");
            }
        }
        cfg
    }
}

fn config_error(line: usize, message: impl Into<String>) -> LabError {
    LabError::Config {
        line,
        message: message.into(),
    }
}

/// Closest known key, if any is plausibly a typo of `key`.
pub fn suggest_key(key: &str) -> Option<&'static str> {
    KEYS.iter()
        .map(|(k, _, _)| (*k, strsim::levenshtein(key, k)))
        .filter(|&(_, d)| d <= 3)
        .min_by_key(|&(_, d)| d)
        .map(|(k, _)| k)
}

/// Parses config text. Later assignments to the same key win.
pub fn parse_str(text: &str) -> Result<ExperimentConfig, LabError> {
    let mut cfg = ExperimentConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_error(line_no, format!("expected `key = value`, found '{line}'")));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.iter().any(|(k, _, _)| *k == key) {
            let hint = match suggest_key(key) {
                Some(k) => format!("; did you mean `{k}`?"),
                None => String::new(),
            };
            let valid: Vec<&str> = KEYS.iter().map(|(k, _, _)| *k).collect();
            return Err(config_error(
                line_no,
                format!("unknown key `{key}`{hint} (valid keys: {})", valid.join(", ")),
            ));
        }
        cfg.set(key, value)
            .map_err(|e| config_error(line_no, format!("bad value for `{key}`: {e}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_str(&text)
}

impl ExperimentConfig {
    /// Cross-field checks; reported against line 0 since they involve several keys.
    pub fn validate(&self) -> Result<(), LabError> {
        let fail = |m: &str| Err(config_error(0, m));
        if self.seeds == 0 {
            return fail("seeds must be at least 1");
        }
        if self.tasks.steps == 0 || self.tasks.eval_episodes == 0 {
            return fail("tasks.steps and tasks.eval_episodes must be positive");
        }
        let max_tasks = match self.experiment {
            ExperimentKind::ForgettingSweep => self.sweep_task_counts.iter().copied().max().unwrap_or(0),
            ExperimentKind::PseudoRehearsal => self.tasks.count,
            ExperimentKind::LatentSeparation => 0,
        };
        if self.tasks.goals.len() < max_tasks {
            return fail(&format!(
                "tasks.goals lists {} goals but up to {max_tasks} tasks are requested",
                self.tasks.goals.len()
            ));
        }
        if self.sweep_task_counts.contains(&0) {
            return fail("sweep.task_counts entries must be positive");
        }
        if self.sweep_capacities.contains(&0) || self.memory_capacity == 0 {
            return fail("memory capacities must be positive");
        }
        if self.experiment == ExperimentKind::PseudoRehearsal && self.tasks.count < 2 {
            return fail("pseudo_rehearsal needs tasks.count >= 2");
        }
        if self.agent.hidden.contains(&0) || self.vae.hidden.contains(&0) {
            return fail("hidden widths must be positive");
        }
        if self.vae.period == 0 || self.vae.steps == 0 || self.vae.batch_size == 0 || self.vae.latent_dim == 0 {
            return fail("vae.period, vae.steps, vae.batch_size and vae.latent_dim must be positive");
        }
        if self.epochs == 0 {
            return fail("separation.epochs must be positive");
        }
        if self.data.source == DataSource::Idx && (self.data.images.is_none() || self.data.labels.is_none()) {
            return fail("data.source = idx needs data.images and data.labels");
        }
        Ok(())
    }

    /// Label used for the run id and output file names.
    pub fn run_name(&self) -> &str {
        if self.name.is_empty() {
            self.experiment.name()
        } else {
            &self.name
        }
    }
}

/// Renders the key table as documentation.
pub fn describe_keys() -> String {
    let mut s = String::new();
    for (k, d, doc) in KEYS {
        let d = if d.is_empty() { "(unset)" } else { d };
        s.push_str(&format!("{k:<22} {d:<22} {doc}\n"));
    }
    s
}
