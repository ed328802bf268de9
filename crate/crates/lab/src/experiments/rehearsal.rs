use rehearsal_core::Error;

use crate::config::ExperimentConfig;
use crate::error::LabError;
use crate::experiments::sequence::{sequence_rows, train_sequence};
use crate::experiments::{par_map, seed_means, seeds, RunOutput};
use crate::svg::{Chart, Series};

/// Trains the agent through `tasks.count` tasks once per memory kind and seed.
pub fn run_pseudo_rehearsal(cfg: &ExperimentConfig) -> Result<RunOutput, LabError> {
    let tasks = cfg.tasks.count;
    if tasks < 2 {
        return Err(Error::Domain("pseudo rehearsal needs at least 2 tasks".into()).into());
    }
    let run_of = |kind: crate::config::MemoryKind| format!("{}:{}", cfg.run_name(), kind.name());
    let jobs: Vec<_> = cfg
        .memory_kinds
        .iter()
        .flat_map(|&k| seeds(cfg).into_iter().map(move |s| (k, s)))
        .collect();
    let results = par_map(&jobs, |&(kind, seed)| {
        let o = train_sequence(cfg, kind, cfg.memory_capacity, tasks, seed)?;
        Ok(sequence_rows(&run_of(kind), seed, cfg.tasks.steps, &o))
    })?;
    let rows: Vec<_> = results.into_iter().flatten().collect();

    let returns = seed_means(&rows, "eval_return");
    let footprints = seed_means(&rows, "footprint");
    let mut retention = Vec::new();
    let mut footprint = Vec::new();
    for &kind in &cfg.memory_kinds {
        let run = run_of(kind);
        for j in 0..tasks {
            let points = returns
                .iter()
                .filter(|(k, _)| k.0 == run && k.2 == Some(j))
                .map(|(k, v)| (k.1 as f64 + 1.0, *v))
                .collect();
            retention.push(Series {
                label: format!("{} task {}", kind.name(), j + 1),
                points,
            });
        }
        footprint.push(Series {
            label: kind.name().to_string(),
            points: footprints
                .iter()
                .filter(|(k, _)| k.0 == run)
                .map(|(k, v)| (k.1 as f64 + 1.0, *v))
                .collect(),
        });
    }
    let charts = vec![
        (
            "retention".to_string(),
            Chart {
                title: "Greedy return per task after each phase".into(),
                x_label: "phase".into(),
                y_label: "eval return (seed mean)".into(),
                series: retention,
            },
        ),
        (
            "footprint".to_string(),
            Chart {
                title: "Memory footprint".into(),
                x_label: "phase".into(),
                y_label: "stored scalars / parameters".into(),
                series: footprint,
            },
        ),
    ];
    Ok(RunOutput { rows, charts })
}
