use rehearsal_core::Error;

use crate::config::{ExperimentConfig, MemoryKind};
use crate::error::LabError;
use crate::experiments::sequence::{sequence_rows, train_sequence};
use crate::experiments::{par_map, seed_means, seeds, RunOutput};
use crate::svg::{Chart, Series};

#[derive(Debug, Clone)]
struct Cell {
    run: String,
    kind: MemoryKind,
    capacity: usize,
    tasks: usize,
}

fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &kind in &cfg.sweep_kinds {
        let caps = if kind.has_capacity() { cfg.sweep_capacities.clone() } else { vec![0] };
        for &capacity in &caps {
            for &tasks in &cfg.sweep_task_counts {
                let run = if kind.has_capacity() {
                    format!("{}:{}-c{capacity}-t{tasks}", cfg.run_name(), kind.name())
                } else {
                    format!("{}:{}-t{tasks}", cfg.run_name(), kind.name())
                };
                out.push(Cell {
                    run,
                    kind,
                    capacity,
                    tasks,
                });
            }
        }
    }
    out
}

/// Sequential training for every (memory kind, capacity, task count, seed),
/// summarised by average forgetting.
pub fn run_forgetting_sweep(cfg: &ExperimentConfig) -> Result<RunOutput, LabError> {
    if cfg.sweep_capacities.is_empty() {
        return Err(Error::Domain("capacity grid is empty".into()).into());
    }
    let grid = cells(cfg);
    let jobs: Vec<(&Cell, u64)> = grid.iter().flat_map(|c| seeds(cfg).into_iter().map(move |s| (c, s))).collect();
    let results = par_map(&jobs, |&(cell, seed)| {
        let o = train_sequence(cfg, cell.kind, cell.capacity, cell.tasks, seed)?;
        Ok(sequence_rows(&cell.run, seed, cfg.tasks.steps, &o))
    })?;
    let rows: Vec<_> = results.into_iter().flatten().collect();

    let means = seed_means(&rows, "avg_forgetting");
    let mean_of = |run: &str| {
        means
            .iter()
            .find(|(k, _)| k.0 == run)
            .map(|(_, v)| *v)
            .expect("every cell reports forgetting")
    };
    let mut charts = Vec::new();
    for &tasks in &cfg.sweep_task_counts {
        let series = cfg
            .sweep_kinds
            .iter()
            .map(|&kind| {
                let points = cfg
                    .sweep_capacities
                    .iter()
                    .map(|&cap| {
                        let cell = grid
                            .iter()
                            .find(|c| c.kind == kind && c.tasks == tasks && (!kind.has_capacity() || c.capacity == cap))
                            .expect("cell exists");
                        (cap as f64, mean_of(&cell.run))
                    })
                    .collect();
                Series {
                    label: kind.name().to_string(),
                    points,
                }
            })
            .collect();
        charts.push((
            format!("forgetting_t{tasks}"),
            Chart {
                title: format!("Average forgetting, {tasks} tasks"),
                x_label: "memory capacity".into(),
                y_label: "average forgetting (seed mean)".into(),
                series,
            },
        ));
    }
    Ok(RunOutput { rows, charts })
}
