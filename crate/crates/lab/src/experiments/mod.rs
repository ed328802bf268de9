//! The three studies. Each returns its metric rows and charts; nothing here
//! touches the file system except dataset loading.

mod rehearsal;
mod separation;
mod sequence;
mod sweep;

pub use rehearsal::run_pseudo_rehearsal;
pub use separation::{load_dataset, run_latent_separation};
pub use sequence::{train_sequence, SequenceOutcome};
pub use sweep::run_forgetting_sweep;

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::LabError;
use crate::metrics::MetricsRow;
use crate::svg::Chart;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<MetricsRow>,
    /// `(file suffix, chart)`.
    pub charts: Vec<(String, Chart)>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, LabError> {
    match cfg.experiment {
        ExperimentKind::ForgettingSweep => run_forgetting_sweep(cfg),
        ExperimentKind::LatentSeparation => run_latent_separation(cfg),
        ExperimentKind::PseudoRehearsal => run_pseudo_rehearsal(cfg),
    }
}

pub fn seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.seeds as u64).map(|k| cfg.seed + k).collect()
}

/// Runs `f` over `jobs` on the current rayon pool, keeping input order.
fn par_map<J: Sync, T: Send>(
    jobs: &[J],
    f: impl Fn(&J) -> Result<T, LabError> + Sync + Send,
) -> Result<Vec<T>, LabError> {
    jobs.par_iter().map(f).collect()
}

/// Key of a row with the seed left out.
type CellKey = (String, usize, Option<usize>, u64);

/// Mean of `metric` across seeds, keyed by `(run, phase, task, step)`, read
/// back from the rows so charts only show what the CSV holds.
fn seed_means(rows: &[MetricsRow], metric: &str) -> BTreeMap<CellKey, f64> {
    let mut acc: BTreeMap<CellKey, (f64, usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.metric == metric) {
        let e = acc.entry((r.run.clone(), r.phase, r.task, r.step)).or_default();
        e.0 += r.value;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}
