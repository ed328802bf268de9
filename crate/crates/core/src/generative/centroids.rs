use crate::error::{Error, Result};

/// Running per-condition latent centroids, updated by exponential moving average.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCentroids {
    centroids: Vec<Vec<f64>>,
    counts: Vec<u64>,
    ema_decay: f64,
}

impl ConditionCentroids {
    pub fn new(ema_decay: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&ema_decay) {
            return Err(Error::Domain(format!("ema_decay {ema_decay} outside [0, 1]")));
        }
        Ok(Self {
            centroids: Vec::new(),
            counts: Vec::new(),
            ema_decay,
        })
    }

    pub(crate) fn from_parts(centroids: Vec<Vec<f64>>, counts: Vec<u64>, ema_decay: f64) -> Self {
        Self {
            centroids,
            counts,
            ema_decay,
        }
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn ema_decay(&self) -> f64 {
        self.ema_decay
    }

    pub fn centroid(&self, cond: usize) -> &[f64] {
        &self.centroids[cond]
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Registers a new condition seeded at `initial`; returns its index.
    pub fn push(&mut self, initial: Vec<f64>) -> usize {
        self.centroids.push(initial);
        self.counts.push(1);
        self.centroids.len() - 1
    }

    /// `μ_c ← decay·μ_c + (1 − decay)·mean_c` for each listed condition.
    pub fn update(&mut self, batch_means: &[(usize, Vec<f64>)]) -> Result<()> {
        for (c, mean) in batch_means {
            let centroid = self
                .centroids
                .get_mut(*c)
                .ok_or_else(|| Error::Domain(format!("no centroid for condition {c}")))?;
            if centroid.len() != mean.len() {
                return Err(Error::dim(format!("centroid {c}"), centroid.len(), mean.len()));
            }
            for (mu, m) in centroid.iter_mut().zip(mean) {
                *mu = self.ema_decay * *mu + (1.0 - self.ema_decay) * m;
            }
            self.counts[*c] += 1;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_extremes() {
        let mut c = ConditionCentroids::new(0.0).unwrap();
        c.push(vec![1.0, 1.0]);
        c.update(&[(0, vec![3.0, -2.0])]).unwrap();
        assert_eq!(c.centroid(0), &[3.0, -2.0]);

        let mut c = ConditionCentroids::new(1.0).unwrap();
        c.push(vec![1.0, 1.0]);
        c.update(&[(0, vec![3.0, -2.0])]).unwrap();
        assert_eq!(c.centroid(0), &[1.0, 1.0]);
        assert_eq!(c.counts(), &[2]);
    }

    #[test]
    fn converges_geometrically() {
        let mut c = ConditionCentroids::new(0.9).unwrap();
        c.push(vec![0.0]);
        for _ in 0..100 {
            c.update(&[(0, vec![2.0])]).unwrap();
        }
        // |2 − μ_100| = 2·0.9^100 ≈ 5.3e-5
        assert!((c.centroid(0)[0] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn unknown_condition_rejected() {
        let mut c = ConditionCentroids::new(0.5).unwrap();
        assert!(c.update(&[(0, vec![1.0])]).is_err());
    }
}
