//! Conditional VAE with a latent-separation term.
//!
//! The encoder sees `[x | one_hot(c)]` and emits `[μ | log σ²]`; the decoder
//! sees `[z | one_hot(c)]` and emits Bernoulli means through a sigmoid. The
//! one-hot width is the fixed slot budget `max_conditions`, so the parameter
//! count never depends on how many conditions are in use.
//!
//! Training minimises
//!
//! ```text
//! total = w · mean_b NLL(x_b | z_b, c_b) + mean_b KL(q(z|x_b, c_b) || N(0, I))
//!       + λ · Σ_{i<j} |cos(μ̄_i, μ̄_j)|
//! ```
//!
//! where `μ̄_c` is the batch mean of encoder means over samples with condition `c`.

use crate::error::{Error, Result};
use crate::generative::centroids::ConditionCentroids;
use crate::generative::latent::{
    abs_cos, batch_condition_means, kl_to_prior, mean_pairwise_abs_cos, separation_penalty_grad, LatentCode,
    LOG_VAR_MAX, LOG_VAR_MIN,
};
use crate::nn::{bernoulli_nll, bernoulli_nll_grad, Activation, Adam, Mlp, Parameter, Parameterized, Tensor};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Reconstruction weight, > 0.
    pub w: f64,
    /// Separation weight, ≥ 0.
    pub lambda: f64,
}

impl LossWeights {
    pub fn new(w: f64, lambda: f64) -> Result<Self> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Domain(format!("reconstruction weight w = {w} must be > 0")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("separation weight lambda = {lambda} must be >= 0")));
        }
        Ok(Self { w, lambda })
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { w: 1.0, lambda: 1.0 }
    }
}

/// Per-condition batch means of `μ`, as `(condition, mean)`.
pub type BatchMeans = Vec<(usize, Vec<f64>)>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub kl: f64,
    pub recon: f64,
    pub separation: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CVaeConfig {
    pub input_dim: usize,
    pub latent_dim: usize,
    /// Hidden widths, mirrored between encoder and decoder.
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub max_conditions: usize,
    pub ema_decay: f64,
}

impl CVaeConfig {
    pub fn new(input_dim: usize, latent_dim: usize) -> Self {
        Self {
            input_dim,
            latent_dim,
            hidden: vec![32],
            hidden_activation: Activation::Tanh,
            max_conditions: 16,
            ema_decay: 0.9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CVae {
    encoder: Mlp,
    decoder: Mlp,
    input_dim: usize,
    latent_dim: usize,
    max_conditions: usize,
    centroids: ConditionCentroids,
    trained_steps: u64,
}

impl CVae {
    pub fn new(cfg: &CVaeConfig, rng: &mut SeededRng) -> Result<Self> {
        if cfg.input_dim == 0 || cfg.latent_dim == 0 || cfg.max_conditions == 0 {
            return Err(Error::Domain(
                "input_dim, latent_dim and max_conditions must all be positive".into(),
            ));
        }
        let hidden_acts = vec![cfg.hidden_activation; cfg.hidden.len()];

        let mut enc_widths = vec![cfg.input_dim + cfg.max_conditions];
        enc_widths.extend(&cfg.hidden);
        enc_widths.push(2 * cfg.latent_dim);
        let mut enc_acts = hidden_acts.clone();
        enc_acts.push(Activation::Identity);

        let mut dec_widths = vec![cfg.latent_dim + cfg.max_conditions];
        dec_widths.extend(cfg.hidden.iter().rev());
        dec_widths.push(cfg.input_dim);
        let mut dec_acts = hidden_acts;
        dec_acts.push(Activation::Sigmoid);

        let encoder = Mlp::new(&enc_widths, &enc_acts, rng)?;
        let decoder = Mlp::new(&dec_widths, &dec_acts, rng)?;
        Ok(Self {
            encoder,
            decoder,
            input_dim: cfg.input_dim,
            latent_dim: cfg.latent_dim,
            max_conditions: cfg.max_conditions,
            centroids: ConditionCentroids::new(cfg.ema_decay)?,
            trained_steps: 0,
        })
    }

    /// Reassembles a model from its networks, validating the layout.
    pub fn from_parts(
        encoder: Mlp,
        decoder: Mlp,
        latent_dim: usize,
        max_conditions: usize,
        centroids: ConditionCentroids,
        trained_steps: u64,
    ) -> Result<Self> {
        if encoder.output_width() != 2 * latent_dim {
            return Err(Error::dim("encoder output", 2 * latent_dim, encoder.output_width()));
        }
        if encoder.input_width() <= max_conditions {
            return Err(Error::Format("encoder input narrower than the condition slots".into()));
        }
        let input_dim = encoder.input_width() - max_conditions;
        if decoder.input_width() != latent_dim + max_conditions {
            return Err(Error::dim("decoder input", latent_dim + max_conditions, decoder.input_width()));
        }
        if decoder.output_width() != input_dim {
            return Err(Error::dim("decoder output", input_dim, decoder.output_width()));
        }
        if decoder.layers().last().map(|l| l.activation) != Some(Activation::Sigmoid) {
            return Err(Error::Format("decoder output layer must be sigmoid".into()));
        }
        if centroids.len() > max_conditions {
            return Err(Error::Consistency(format!(
                "{} centroids exceed {max_conditions} condition slots",
                centroids.len()
            )));
        }
        if centroids.centroids().iter().any(|c| c.len() != latent_dim) {
            return Err(Error::Consistency("centroid width differs from latent_dim".into()));
        }
        Ok(Self {
            encoder,
            decoder,
            input_dim,
            latent_dim,
            max_conditions,
            centroids,
            trained_steps,
        })
    }

    pub fn encoder(&self) -> &Mlp {
        &self.encoder
    }

    pub fn decoder(&self) -> &Mlp {
        &self.decoder
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn max_conditions(&self) -> usize {
        self.max_conditions
    }

    pub fn condition_count(&self) -> usize {
        self.centroids.len()
    }

    pub fn centroids(&self) -> &ConditionCentroids {
        &self.centroids
    }

    pub fn trained_steps(&self) -> u64 {
        self.trained_steps
    }

    pub fn is_trained(&self) -> bool {
        self.trained_steps > 0
    }

    /// Mean pairwise `|cos|` between the current condition centroids.
    pub fn centroid_separation(&self) -> f64 {
        mean_pairwise_abs_cos(self.centroids.centroids())
    }

    fn one_hot(&self, conds: &[usize]) -> Tensor {
        let mut t = Tensor::zeros(&[conds.len(), self.max_conditions]);
        for (r, &c) in conds.iter().enumerate() {
            t.set(r, c, 1.0);
        }
        t
    }

    fn check_conditions(&self, conds: &[usize], limit: usize) -> Result<()> {
        match conds.iter().find(|&&c| c >= limit) {
            Some(c) => Err(Error::Domain(format!(
                "condition {c} unknown ({limit} conditions available)"
            ))),
            None => Ok(()),
        }
    }

    fn check_batch(&self, x: &Tensor, conds: &[usize]) -> Result<()> {
        if x.cols() != self.input_dim {
            return Err(Error::dim("C-VAE input", self.input_dim, x.cols()));
        }
        if x.rows() != conds.len() {
            return Err(Error::dim("condition labels", x.rows(), conds.len()));
        }
        self.check_conditions(conds, self.condition_count())
    }

    fn encoder_heads(&self, h: &Tensor) -> (Tensor, Tensor) {
        let l = self.latent_dim;
        let mu = h.columns(0, l);
        let log_var = h.columns(l, 2 * l).map(|v| v.clamp(LOG_VAR_MIN, LOG_VAR_MAX));
        (mu, log_var)
    }

    /// Posterior codes for a batch; `z` is set to `μ`.
    pub fn encode(&self, x: &Tensor, conds: &[usize]) -> Result<Vec<LatentCode>> {
        self.check_batch(x, conds)?;
        let h = self.encoder.predict(&x.hcat(&self.one_hot(conds))?)?;
        let l = self.latent_dim;
        Ok((0..h.rows())
            .map(|r| {
                let row = h.row(r);
                LatentCode::new(row[..l].to_vec(), row[l..].to_vec())
            })
            .collect())
    }

    /// `μ(x, c)` for any slot `c < max_conditions`, used or not.
    fn encode_mu_slot(&self, x: &[f64], cond: usize) -> Result<Vec<f64>> {
        let mut input = x.to_vec();
        input.extend((0..self.max_conditions).map(|k| if k == cond { 1.0 } else { 0.0 }));
        let mut out = self.encoder.predict_one(&input)?;
        out.truncate(self.latent_dim);
        Ok(out)
    }

    /// Bernoulli means for latent rows `z` under `conds`.
    pub fn decode(&self, z: &Tensor, conds: &[usize]) -> Result<Tensor> {
        if z.cols() != self.latent_dim {
            return Err(Error::dim("latent width", self.latent_dim, z.cols()));
        }
        if z.rows() != conds.len() {
            return Err(Error::dim("condition labels", z.rows(), conds.len()));
        }
        self.check_conditions(conds, self.condition_count())?;
        self.decoder.predict(&z.hcat(&self.one_hot(conds))?)
    }

    /// Loss for a batch with frozen reparameterisation noise (`B × latent_dim`).
    /// With `backprop`, gradients of `total` are accumulated into all parameters.
    /// Also returns the per-condition batch means of `μ`.
    pub fn loss_with_noise(
        &mut self,
        x: &Tensor,
        conds: &[usize],
        weights: LossWeights,
        noise: &Tensor,
        backprop: bool,
    ) -> Result<(LossBreakdown, BatchMeans)> {
        self.check_batch(x, conds)?;
        let b = x.rows();
        if b == 0 {
            return Err(Error::Domain("C-VAE loss on an empty batch".into()));
        }
        let l = self.latent_dim;
        if noise.rows() != b || noise.cols() != l {
            return Err(Error::dim("reparameterisation noise", b * l, noise.len()));
        }

        let cond_in = self.one_hot(conds);
        let h = self.encoder.forward(&x.hcat(&cond_in)?)?;
        let (mu, log_var) = self.encoder_heads(&h);
        let mut z = mu.clone();
        for (i, zv) in z.data_mut().iter_mut().enumerate() {
            *zv += (0.5 * log_var.data()[i]).exp() * noise.data()[i];
        }
        let p = self.decoder.forward(&z.hcat(&cond_in)?)?;

        let bf = b as f64;
        let recon = bernoulli_nll(x, &p)?.iter().sum::<f64>() / bf;
        let kl = (0..b).map(|r| kl_to_prior(mu.row(r), log_var.row(r))).sum::<f64>() / bf;
        let mu_rows: Vec<Vec<f64>> = (0..b).map(|r| mu.row(r).to_vec()).collect();
        let means = batch_condition_means(&mu_rows, conds)?;
        let mean_vecs: Vec<&[f64]> = means.iter().map(|(_, m)| m.as_slice()).collect();
        let (separation, sep_grads) = separation_penalty_grad(&mean_vecs);
        let total = weights.w * recon + kl + weights.lambda * separation;
        let breakdown = LossBreakdown {
            kl,
            recon,
            separation,
            total,
        };

        if backprop {
            let mut dp = bernoulli_nll_grad(x, &p)?;
            dp.scale(weights.w / bf);
            let d_dec_in = self.decoder.backward(&dp)?;

            let counts: std::collections::BTreeMap<usize, usize> =
                conds.iter().fold(Default::default(), |mut m, &c| {
                    *m.entry(c).or_default() += 1;
                    m
                });
            let slot_of = |c: usize| means.iter().position(|(k, _)| *k == c).expect("condition present");

            let mut d_h = Tensor::zeros(&[b, 2 * l]);
            for (r, &c) in conds.iter().enumerate() {
                let sep_g = &sep_grads[slot_of(c)];
                let n_c = counts[&c] as f64;
                let raw_lv = &h.row(r)[l..];
                for k in 0..l {
                    let dz = d_dec_in.get(r, k);
                    let m = mu.get(r, k);
                    let lv = log_var.get(r, k);
                    let e = noise.get(r, k);
                    d_h.set(r, k, dz + m / bf + weights.lambda * sep_g[k] / n_c);
                    let lv_grad = if raw_lv[k] < LOG_VAR_MIN || raw_lv[k] > LOG_VAR_MAX {
                        0.0
                    } else {
                        dz * e * 0.5 * (0.5 * lv).exp() + 0.5 * (lv.exp() - 1.0) / bf
                    };
                    d_h.set(r, l + k, lv_grad);
                }
            }
            self.encoder.backward(&d_h)?;
        }
        Ok((breakdown, means))
    }

    /// Loss with noise drawn from `rng`; gradients accumulated.
    pub fn loss(
        &mut self,
        x: &Tensor,
        conds: &[usize],
        weights: LossWeights,
        rng: &mut SeededRng,
    ) -> Result<(LossBreakdown, BatchMeans)> {
        let noise = standard_normal(x.rows(), self.latent_dim, rng);
        self.loss_with_noise(x, conds, weights, &noise, true)
    }

    /// One optimiser step on a batch, followed by a centroid update.
    pub fn train_step(
        &mut self,
        x: &Tensor,
        conds: &[usize],
        weights: LossWeights,
        opt: &mut Adam,
        rng: &mut SeededRng,
    ) -> Result<LossBreakdown> {
        self.zero_grads();
        let (breakdown, means) = self.loss(x, conds, weights, rng)?;
        opt.step(self.params_mut())?;
        self.update_centroids(&means)?;
        self.trained_steps += 1;
        Ok(breakdown)
    }

    pub fn update_centroids(&mut self, batch_means: &[(usize, Vec<f64>)]) -> Result<()> {
        self.centroids.update(batch_means)
    }

    /// Opens a new condition slot seeded at `centroid`.
    pub fn spawn_condition(&mut self, centroid: Vec<f64>) -> Result<usize> {
        if self.condition_count() >= self.max_conditions {
            return Err(Error::State(format!(
                "all {} condition slots are in use",
                self.max_conditions
            )));
        }
        if centroid.len() != self.latent_dim {
            return Err(Error::dim("centroid", self.latent_dim, centroid.len()));
        }
        Ok(self.centroids.push(centroid))
    }

    /// Opens slots up to and including `cond`, seeding each at `μ(x, slot)`.
    pub fn ensure_condition(&mut self, cond: usize, x: &[f64]) -> Result<()> {
        if cond >= self.max_conditions {
            return Err(Error::Domain(format!(
                "condition {cond} exceeds the {} available slots",
                self.max_conditions
            )));
        }
        while self.condition_count() <= cond {
            let slot = self.condition_count();
            let mu = self.encode_mu_slot(x, slot)?;
            self.spawn_condition(mu)?;
        }
        Ok(())
    }

    /// Label-free condition assignment for one sample.
    ///
    /// Encodes `x` under every open slot and scores each by `|cos|` against
    /// that slot's centroid. The best slot wins if it reaches `tau`; otherwise
    /// a fresh slot is opened while the budget allows.
    pub fn assign_condition(&mut self, x: &[f64], tau: f64) -> Result<usize> {
        if x.len() != self.input_dim {
            return Err(Error::dim("C-VAE input", self.input_dim, x.len()));
        }
        let mut best: Option<(usize, f64)> = None;
        for c in 0..self.condition_count() {
            let sim = abs_cos(&self.encode_mu_slot(x, c)?, self.centroids.centroid(c));
            if best.is_none_or(|(_, s)| sim > s) {
                best = Some((c, sim));
            }
        }
        match best {
            Some((c, sim)) if sim >= tau => Ok(c),
            Some((c, _)) if self.condition_count() == self.max_conditions => Ok(c),
            _ => {
                let slot = self.condition_count();
                let mu = self.encode_mu_slot(x, slot)?;
                self.spawn_condition(mu)
            }
        }
    }

    /// Decodes `n` prior draws. Without `cond`, each sample's condition is drawn
    /// uniformly over the open slots.
    pub fn generate(&self, n: usize, rng: &mut SeededRng, cond: Option<usize>) -> Result<Vec<(Vec<f64>, usize)>> {
        let count = self.condition_count();
        if count == 0 {
            return Err(Error::State("cannot generate before any condition exists".into()));
        }
        if let Some(c) = cond {
            self.check_conditions(&[c], count)?;
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let conds: Vec<usize> = (0..n).map(|_| cond.unwrap_or_else(|| rng.below(count))).collect();
        let z = standard_normal(n, self.latent_dim, rng);
        let x = self.decode(&z, &conds)?;
        Ok((0..n).map(|r| (x.row(r).to_vec(), conds[r])).collect())
    }
}

impl Parameterized for CVae {
    fn params(&self) -> Vec<&Parameter> {
        let mut p = self.encoder.params();
        p.extend(self.decoder.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p = self.encoder.params_mut();
        p.extend(self.decoder.params_mut());
        p
    }
}

pub(crate) fn standard_normal(rows: usize, cols: usize, rng: &mut SeededRng) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.normal()).collect();
    Tensor::matrix(rows, cols, data).expect("shape")
}
