//! Paired C-VAE training with and without the separation penalty.

use rehearsal_core::generative::{consolidate, CVae};
use rehearsal_core::nn::Tensor;
use rehearsal_core::tasks::{class_incremental_split, load_idx, synthetic_clusters, LabeledDataset};
use rehearsal_core::SeededRng;

use crate::config::{DataSource, ExperimentConfig};
use crate::error::LabError;
use crate::experiments::sequence::{consolidation_config, vae_config};
use crate::experiments::{par_map, seed_means, seeds, RunOutput};
use crate::metrics::MetricsRow;
use crate::svg::{Chart, Series};

/// Reads the IDX pair named in the config, reporting missing files by path.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Option<LabeledDataset>, LabError> {
    if cfg.data.source == DataSource::Synthetic {
        return Ok(None);
    }
    let images = cfg.data.images.as_deref().expect("validated");
    let labels = cfg.data.labels.as_deref().expect("validated");
    for p in [images, labels] {
        if !p.is_file() {
            return Err(LabError::Input {
                path: p.to_path_buf(),
                message: "dataset file not found".into(),
            });
        }
    }
    load_idx(images, labels).map(Some).map_err(|e| LabError::Input {
        path: images.to_path_buf(),
        message: e.to_string(),
    })
}

/// Recon NLL and KL on `x` with zero noise; the model is left untouched.
fn evaluate(vae: &CVae, x: &[Vec<f64>], conds: &[usize]) -> Result<(f64, f64), LabError> {
    let batch = Tensor::from_rows(x)?;
    let noise = Tensor::zeros(&[x.len(), vae.latent_dim()]);
    let mut probe = vae.clone();
    let (loss, _) = probe.loss_with_noise(&batch, conds, Default::default(), &noise, false)?;
    Ok((loss.recon, loss.kl))
}

/// Condition labels for a phase: class labels when supervised, otherwise
/// assigned one by one with the current model as the samples arrive.
fn arrival_labels(cfg: &ExperimentConfig, vae: &mut CVae, data: &LabeledDataset) -> Result<Vec<usize>, LabError> {
    if cfg.unsupervised {
        Ok(data
            .images
            .iter()
            .map(|x| vae.assign_condition(x, cfg.vae.tau))
            .collect::<Result<_, _>>()?)
    } else {
        for (x, &l) in data.images.iter().zip(&data.labels) {
            vae.ensure_condition(l, x)?;
        }
        Ok(data.labels.clone())
    }
}

fn train_arm(
    cfg: &ExperimentConfig,
    run: &str,
    seed: u64,
    lambda: f64,
    phases: &[LabeledDataset],
    mut vae: CVae,
    mut rng: SeededRng,
) -> Result<Vec<MetricsRow>, LabError> {
    let cc = consolidation_config(cfg, lambda)?;
    let mut rows = Vec::new();
    let mut step = 0u64;
    let log = |rows: &mut Vec<MetricsRow>, vae: &CVae, phase: usize, step: u64, data: &LabeledDataset, conds: &[usize]| {
        let (recon, kl) = evaluate(vae, &data.images, conds)?;
        rows.push(MetricsRow::new(run, seed, phase, None, step, "mean_abs_cos", vae.centroid_separation()));
        rows.push(MetricsRow::new(run, seed, phase, None, step, "recon_nll", recon));
        rows.push(MetricsRow::new(run, seed, phase, None, step, "kl", kl));
        rows.push(MetricsRow::new(run, seed, phase, None, step, "conditions", vae.condition_count() as f64));
        Ok::<_, LabError>(())
    };
    for (p, data) in phases.iter().enumerate() {
        let labels = arrival_labels(cfg, &mut vae, data)?;
        if p == 0 {
            log(&mut rows, &vae, 0, 0, data, &labels)?;
        }
        for _ in 0..cfg.epochs {
            vae = consolidate(&vae, &data.images, Some(&labels), &cc, &mut rng)?.successor;
            step += cfg.vae.steps as u64;
            log(&mut rows, &vae, p, step, data, &labels)?;
        }
    }
    Ok(rows)
}

/// Trains a `λ = 0` arm and a `λ = vae.lambda` arm from the same initial
/// model, data and random stream.
pub fn run_latent_separation(cfg: &ExperimentConfig) -> Result<RunOutput, LabError> {
    let shared = load_dataset(cfg)?;
    let runs = [
        (format!("{}:lambda=0", cfg.run_name()), 0.0),
        (format!("{}:lambda={}", cfg.run_name(), cfg.vae.lambda), cfg.vae.lambda),
    ];
    let results = par_map(&seeds(cfg), |&seed| {
        let rng = SeededRng::new(seed);
        let data = match &shared {
            Some(d) => d.clone(),
            None => synthetic_clusters(cfg.data.per_class, cfg.data.classes, cfg.data.dim, cfg.data.spread, &mut rng.split(1))?,
        };
        let phases = class_incremental_split(&data, &cfg.data.phases)?;
        let vae = CVae::new(&vae_config(cfg, data.dim()), &mut rng.split(2))?;
        let mut rows = Vec::new();
        for (run, lambda) in &runs {
            rows.extend(train_arm(cfg, run, seed, *lambda, &phases, vae.clone(), rng.clone())?);
        }
        Ok(rows)
    })?;
    let rows: Vec<MetricsRow> = results.into_iter().flatten().collect();

    let series_for = |metric: &str| -> Vec<Series> {
        let means = seed_means(&rows, metric);
        runs.iter()
            .map(|(run, lambda)| Series {
                label: format!("lambda = {lambda}"),
                points: means
                    .iter()
                    .filter(|(k, _)| &k.0 == run)
                    .map(|(k, v)| (k.3 as f64, *v))
                    .collect(),
            })
            .collect()
    };
    let chart = |title: &str, y: &str, metric: &str| Chart {
        title: title.into(),
        x_label: "optimiser steps".into(),
        y_label: y.into(),
        series: series_for(metric),
    };
    let mut charts = vec![
        ("separation".to_string(), chart("Centroid separation", "mean pairwise |cos| (seed mean)", "mean_abs_cos")),
        ("recon".to_string(), chart("Reconstruction", "recon NLL (seed mean)", "recon_nll")),
    ];
    if cfg.unsupervised {
        charts.push(("conditions".to_string(), chart("Discovered conditions", "condition slots (seed mean)", "conditions")));
    }
    Ok(RunOutput { rows, charts })
}
