//! Generation-chained consolidation: a successor model is trained on a mix of
//! recent real samples and samples replayed from its predecessor.

use crate::error::{Error, Result};
use crate::generative::cvae::{CVae, LossBreakdown, LossWeights};
use crate::nn::{Adam, Tensor};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct ConsolidationConfig {
    /// Fraction of each batch drawn from real recent data.
    pub mix_ratio: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub weights: LossWeights,
    pub lr: f64,
    /// Spawn threshold for label-free condition assignment.
    pub tau: f64,
}

impl Default for ConsolidationConfig {
    fn default() -> Self {
        Self {
            mix_ratio: 0.5,
            steps: 200,
            batch_size: 32,
            weights: LossWeights::default(),
            lr: 1e-3,
            tau: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConsolidationReport {
    pub successor: CVae,
    pub real_samples: usize,
    pub replayed_samples: usize,
    pub last_loss: Option<LossBreakdown>,
}

/// Trains a successor of `predecessor` on `recent` (optionally labelled with
/// conditions) mixed with predecessor replay at ratio `mix_ratio`. An untrained
/// predecessor contributes no replay. Centroids carry over to the successor.
pub fn consolidate(
    predecessor: &CVae,
    recent: &[Vec<f64>],
    labels: Option<&[usize]>,
    cfg: &ConsolidationConfig,
    rng: &mut SeededRng,
) -> Result<ConsolidationReport> {
    if recent.is_empty() {
        return Err(Error::Domain("consolidation needs at least one real sample".into()));
    }
    if let Some(l) = labels {
        if l.len() != recent.len() {
            return Err(Error::dim("consolidation labels", recent.len(), l.len()));
        }
    }
    if !(0.0..=1.0).contains(&cfg.mix_ratio) {
        return Err(Error::Domain(format!("mix ratio {} outside [0, 1]", cfg.mix_ratio)));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Domain("consolidation batch size must be positive".into()));
    }

    let replay_from = predecessor.is_trained() && predecessor.condition_count() > 0;
    let n_real = if replay_from {
        ((cfg.mix_ratio * cfg.batch_size as f64).round() as usize).min(cfg.batch_size)
    } else {
        cfg.batch_size
    };
    let n_gen = cfg.batch_size - n_real;

    let mut successor = predecessor.clone();
    let mut opt = Adam::new(cfg.lr);
    let mut report = ConsolidationReport {
        successor: predecessor.clone(),
        real_samples: 0,
        replayed_samples: 0,
        last_loss: None,
    };

    for _ in 0..cfg.steps {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(cfg.batch_size);
        let mut conds: Vec<usize> = Vec::with_capacity(cfg.batch_size);
        for _ in 0..n_real {
            let i = rng.below(recent.len());
            let x = &recent[i];
            let c = match labels {
                Some(l) => {
                    successor.ensure_condition(l[i], x)?;
                    l[i]
                }
                None => successor.assign_condition(x, cfg.tau)?,
            };
            rows.push(x.clone());
            conds.push(c);
        }
        if n_gen > 0 {
            for (x, c) in predecessor.generate(n_gen, rng, None)? {
                rows.push(x);
                conds.push(c);
            }
        }
        let batch = Tensor::from_rows(&rows)?;
        report.last_loss = Some(successor.train_step(&batch, &conds, cfg.weights, &mut opt, rng)?);
        report.real_samples += n_real;
        report.replayed_samples += n_gen;
    }
    report.successor = successor;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generative::cvae::CVaeConfig;
    use crate::nn::Parameterized;

    fn vae() -> CVae {
        let mut cfg = CVaeConfig::new(4, 2);
        cfg.hidden = vec![6];
        cfg.max_conditions = 4;
        CVae::new(&cfg, &mut SeededRng::new(1)).unwrap()
    }

    fn data() -> Vec<Vec<f64>> {
        vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]]
    }

    #[test]
    fn empty_stream_rejected() {
        let r = consolidate(&vae(), &[], None, &ConsolidationConfig::default(), &mut SeededRng::new(0));
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn untrained_predecessor_trains_on_real_only() {
        let cfg = ConsolidationConfig {
            steps: 5,
            ..Default::default()
        };
        let rep = consolidate(&vae(), &data(), Some(&[0, 1]), &cfg, &mut SeededRng::new(0)).unwrap();
        assert_eq!(rep.replayed_samples, 0);
        assert_eq!(rep.real_samples, 5 * 32);
        assert_eq!(rep.successor.condition_count(), 2);
    }

    #[test]
    fn full_mix_ratio_skips_replay() {
        let cfg = ConsolidationConfig {
            steps: 3,
            ..Default::default()
        };
        let first = consolidate(&vae(), &data(), Some(&[0, 1]), &cfg, &mut SeededRng::new(0)).unwrap();
        let pure = ConsolidationConfig { mix_ratio: 1.0, ..cfg.clone() };
        let rep = consolidate(&first.successor, &data(), Some(&[0, 1]), &pure, &mut SeededRng::new(1)).unwrap();
        assert_eq!(rep.replayed_samples, 0);
        let mixed = consolidate(&first.successor, &data(), Some(&[0, 1]), &cfg, &mut SeededRng::new(1)).unwrap();
        assert_eq!(mixed.replayed_samples, 3 * 16);
    }

    #[test]
    fn successor_keeps_parameter_count() {
        let cfg = ConsolidationConfig {
            steps: 4,
            ..Default::default()
        };
        let v = vae();
        let rep = consolidate(&v, &data(), None, &cfg, &mut SeededRng::new(0)).unwrap();
        assert_eq!(rep.successor.param_count(), v.param_count());
        assert!(rep.successor.condition_count() >= 1);
    }
}
