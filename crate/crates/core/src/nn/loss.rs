use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// Bernoulli means are clamped into `[P_CLAMP, 1 - P_CLAMP]`.
pub const P_CLAMP: f64 = 1e-7;

fn check_pair(x: &Tensor, p: &Tensor) -> Result<()> {
    if x.shape() != p.shape() {
        return Err(Error::dim("bernoulli_nll shapes", x.len(), p.len()));
    }
    if let Some(bad) = x.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Domain(format!("bernoulli target {bad} outside [0, 1]")));
    }
    Ok(())
}

/// Per-row `−Σ_d [x ln p + (1−x) ln(1−p)]`.
pub fn bernoulli_nll(x: &Tensor, p: &Tensor) -> Result<Vec<f64>> {
    check_pair(x, p)?;
    Ok((0..x.rows())
        .map(|r| {
            x.row(r)
                .iter()
                .zip(p.row(r))
                .map(|(&xv, &pv)| {
                    let pc = pv.clamp(P_CLAMP, 1.0 - P_CLAMP);
                    -(xv * pc.ln() + (1.0 - xv) * (1.0 - pc).ln())
                })
                .sum()
        })
        .collect())
}

/// `d nll / d p`, elementwise. Zero where the clamp is active.
pub fn bernoulli_nll_grad(x: &Tensor, p: &Tensor) -> Result<Tensor> {
    check_pair(x, p)?;
    let data = x
        .data()
        .iter()
        .zip(p.data())
        .map(|(&xv, &pv)| {
            if !(P_CLAMP..=1.0 - P_CLAMP).contains(&pv) {
                0.0
            } else {
                -xv / pv + (1.0 - xv) / (1.0 - pv)
            }
        })
        .collect();
    Tensor::new(x.shape().to_vec(), data)
}

/// Mean over all entries of `(pred − target)²` and its gradient w.r.t. `pred`.
pub fn mse(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape() != target.shape() {
        return Err(Error::dim("mse shapes", target.len(), pred.len()));
    }
    let n = pred.len().max(1) as f64;
    let mut loss = 0.0;
    let grad: Vec<f64> = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, Tensor::new(pred.shape().to_vec(), grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[f64]) -> Tensor {
        Tensor::matrix(1, v.len(), v.to_vec()).unwrap()
    }

    #[test]
    fn half_probability_is_ln2() {
        let nll = bernoulli_nll(&t(&[1.0]), &t(&[0.5])).unwrap();
        assert!((nll[0] - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn near_perfect_reconstruction() {
        let nll = bernoulli_nll(&t(&[1.0]), &t(&[1.0 - 1e-7])).unwrap();
        assert!((nll[0] - 1e-7).abs() < 1e-12);
        let clamped = bernoulli_nll(&t(&[1.0, 0.0]), &t(&[1.0, 0.0])).unwrap();
        assert!(clamped[0] < 3e-7 && clamped[0] > 0.0);
    }

    #[test]
    fn target_outside_unit_interval_rejected() {
        assert!(matches!(
            bernoulli_nll(&t(&[1.5]), &t(&[0.5])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn grad_matches_central_difference() {
        let x = t(&[1.0, 0.0, 0.3, 0.8]);
        let p = t(&[0.2, 0.7, 0.45, 0.99]);
        let g = bernoulli_nll_grad(&x, &p).unwrap();
        let eps = 1e-5;
        for i in 0..4 {
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi.data_mut()[i] += eps;
            lo.data_mut()[i] -= eps;
            let fd = (bernoulli_nll(&x, &hi).unwrap()[0] - bernoulli_nll(&x, &lo).unwrap()[0]) / (2.0 * eps);
            let rel = (fd - g.data()[i]).abs() / fd.abs().max(g.data()[i].abs());
            assert!(rel < 1e-4, "i={i} fd={fd} an={}", g.data()[i]);
        }
    }

    #[test]
    fn mse_grad() {
        let (l, g) = mse(&t(&[1.0, 3.0]), &t(&[0.0, 1.0])).unwrap();
        assert_eq!(l, 2.5);
        assert_eq!(g.data(), &[1.0, 2.0]);
    }
}
