//! Latent-space pieces of the C-VAE objective: sampling, the KL term and the
//! pairwise-cosine separation penalty over per-condition mean codes.

use crate::error::{Error, Result};
use crate::nn::{dot, norm};
use crate::rng::SeededRng;

pub const LOG_VAR_MIN: f64 = -10.0;
pub const LOG_VAR_MAX: f64 = 10.0;

/// Pairs with either vector shorter than this contribute nothing.
pub const NORM_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode {
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
    pub z: Vec<f64>,
}

impl LatentCode {
    /// Code with `z = mu` and `log_var` clamped into range.
    pub fn new(mu: Vec<f64>, log_var: Vec<f64>) -> Self {
        let log_var: Vec<f64> = log_var
            .into_iter()
            .map(|v| v.clamp(LOG_VAR_MIN, LOG_VAR_MAX))
            .collect();
        let z = mu.clone();
        Self { mu, log_var, z }
    }
}

/// `z = mu + exp(log_var / 2) * noise`.
pub fn reparameterize_with_noise(mu: &[f64], log_var: &[f64], noise: &[f64]) -> Vec<f64> {
    mu.iter()
        .zip(log_var)
        .zip(noise)
        .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
        .collect()
}

pub fn reparameterize(mu: &[f64], log_var: &[f64], rng: &mut SeededRng) -> Vec<f64> {
    let noise: Vec<f64> = (0..mu.len()).map(|_| rng.normal()).collect();
    reparameterize_with_noise(mu, log_var, &noise)
}

/// Closed-form `KL(N(mu, diag σ²) || N(0, I))`.
pub fn kl_to_prior(mu: &[f64], log_var: &[f64]) -> f64 {
    0.5 * mu
        .iter()
        .zip(log_var)
        .map(|(m, lv)| m * m + lv.exp() - 1.0 - lv)
        .sum::<f64>()
}

/// Mean of `mu` per condition, in ascending condition order.
pub fn batch_condition_means(mus: &[Vec<f64>], conds: &[usize]) -> Result<Vec<(usize, Vec<f64>)>> {
    if mus.is_empty() {
        return Err(Error::Domain("batch_condition_means on an empty batch".into()));
    }
    if mus.len() != conds.len() {
        return Err(Error::dim("condition labels", mus.len(), conds.len()));
    }
    let dim = mus[0].len();
    let mut sums: std::collections::BTreeMap<usize, (Vec<f64>, usize)> = Default::default();
    for (mu, &c) in mus.iter().zip(conds) {
        let entry = sums.entry(c).or_insert_with(|| (vec![0.0; dim], 0));
        for (acc, v) in entry.0.iter_mut().zip(mu) {
            *acc += v;
        }
        entry.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(c, (mut s, n))| {
            s.iter_mut().for_each(|v| *v /= n as f64);
            (c, s)
        })
        .collect())
}

fn pair_cos(a: &[f64], b: &[f64]) -> Option<(f64, f64, f64)> {
    let (na, nb) = (norm(a), norm(b));
    if na < NORM_GUARD || nb < NORM_GUARD {
        return None;
    }
    Some((dot(a, b) / (na * nb), na, nb))
}

/// `Σ_{i<j} |cos(μ_i, μ_j)|`.
pub fn separation_penalty<V: AsRef<[f64]>>(means: &[V]) -> f64 {
    separation_penalty_grad(means).0
}

/// Penalty and its gradient with respect to each mean vector.
pub fn separation_penalty_grad<V: AsRef<[f64]>>(means: &[V]) -> (f64, Vec<Vec<f64>>) {
    let mut grads: Vec<Vec<f64>> = means.iter().map(|m| vec![0.0; m.as_ref().len()]).collect();
    let mut total = 0.0;
    for i in 0..means.len() {
        for j in i + 1..means.len() {
            let (a, b) = (means[i].as_ref(), means[j].as_ref());
            let Some((c, na, nb)) = pair_cos(a, b) else {
                continue;
            };
            total += c.abs();
            // d|cos|/da = sign(c) (b / (|a||b|) − c a / |a|²)
            let s = if c > 0.0 {
                1.0
            } else if c < 0.0 {
                -1.0
            } else {
                0.0
            };
            for k in 0..a.len() {
                grads[i][k] += s * (b[k] / (na * nb) - c * a[k] / (na * na));
                grads[j][k] += s * (a[k] / (na * nb) - c * b[k] / (nb * nb));
            }
        }
    }
    (total, grads)
}

/// Mean of `|cos|` over unordered pairs, 0 with fewer than two vectors.
pub fn mean_pairwise_abs_cos<V: AsRef<[f64]>>(vectors: &[V]) -> f64 {
    let c = vectors.len();
    if c < 2 {
        return 0.0;
    }
    separation_penalty(vectors) / (c * (c - 1) / 2) as f64
}

pub fn abs_cos(a: &[f64], b: &[f64]) -> f64 {
    pair_cos(a, b).map_or(0.0, |(c, _, _)| c.abs())
}
