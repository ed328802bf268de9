//! Central finite differences, the reference every analytic gradient is checked against.

use crate::nn::layer::Parameterized;
use crate::nn::tensor::Tensor;

/// Denominator floor for [`relative_error`]; below it the comparison is
/// effectively absolute, which keeps round-off on near-zero gradients from
/// dominating.
pub const REL_ERR_FLOOR: f64 = 1e-6;

/// Numerical gradient of `loss` with respect to every parameter of `model`.
/// `loss` must be deterministic in the parameters (freeze any sampled noise).
pub fn finite_diff_grad<M: Parameterized>(
    model: &mut M,
    epsilon: f64,
    mut loss: impl FnMut(&mut M) -> f64,
) -> Vec<Tensor> {
    let shapes: Vec<Vec<usize>> = model.params().iter().map(|p| p.value.shape().to_vec()).collect();
    let mut grads: Vec<Tensor> = shapes.iter().map(|s| Tensor::zeros(s)).collect();
    for (i, grad) in grads.iter_mut().enumerate() {
        for k in 0..grad.len() {
            let orig = model.params()[i].value.data()[k];
            model.params_mut()[i].value.data_mut()[k] = orig + epsilon;
            let up = loss(model);
            model.params_mut()[i].value.data_mut()[k] = orig - epsilon;
            let down = loss(model);
            model.params_mut()[i].value.data_mut()[k] = orig;
            grad.data_mut()[k] = (up - down) / (2.0 * epsilon);
        }
    }
    grads
}

/// Finite differences over a plain vector of inputs.
pub fn finite_diff_slice(x: &[f64], epsilon: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut work = x.to_vec();
    (0..x.len())
        .map(|k| {
            work[k] = x[k] + epsilon;
            let up = f(&work);
            work[k] = x[k] - epsilon;
            let down = f(&work);
            work[k] = x[k];
            (up - down) / (2.0 * epsilon)
        })
        .collect()
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

/// Worst elementwise [`relative_error`] across matching tensors.
pub fn max_relative_error(analytic: &[Tensor], numeric: &[Tensor]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .flat_map(|(a, n)| a.data().iter().zip(n.data()).map(|(&x, &y)| relative_error(x, y)))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_derivative() {
        let g = finite_diff_slice(&[3.0], 1e-5, |w| w[0] * w[0]);
        assert!((g[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let g = finite_diff_slice(&[1.0, -2.0, 0.5], 1e-5, |_| 4.2);
        assert!(g.iter().all(|v| v.abs() < 1e-9));
    }
}
