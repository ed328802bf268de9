//! Dense layers and multilayer perceptrons with exact reverse-mode gradients.
//!
//! A layer computes `y = act(x Wᵀ + b)` on a `B × in` batch. `forward` caches
//! the input and output; `backward` consumes that cache and *accumulates* into
//! the parameter gradients, so two backward passes without `zero_grads` add up.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
            Activation::Sigmoid => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Activation::Identity,
            1 => Activation::Relu,
            2 => Activation::Tanh,
            3 => Activation::Sigmoid,
            _ => return None,
        })
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// A trainable value with its gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub value: Tensor,
    pub grad: Tensor,
}

impl Parameter {
    pub fn new(value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self { value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Anything that owns an ordered list of parameters.
pub trait Parameterized {
    fn params(&self) -> Vec<&Parameter>;
    fn params_mut(&mut self) -> Vec<&mut Parameter>;

    fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Total scalar count across all parameters.
    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }
}

#[derive(Debug, Clone)]
struct Cache {
    input: Tensor,
    output: Tensor,
}

#[derive(Debug, Clone)]
pub struct DenseLayer {
    /// `out × in`, row-major.
    pub weights: Parameter,
    pub bias: Parameter,
    pub activation: Activation,
    cache: Option<Cache>,
}

impl DenseLayer {
    /// Glorot-uniform weights, zero bias.
    pub fn new(inputs: usize, outputs: usize, activation: Activation, rng: &mut SeededRng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let w: Vec<f64> = (0..inputs * outputs)
            .map(|_| rng.uniform(-limit, limit))
            .collect();
        Self::from_parts(
            Tensor::matrix(outputs, inputs, w).expect("shape"),
            Tensor::zeros(&[outputs]),
            activation,
        )
    }

    pub fn from_parts(weights: Tensor, bias: Tensor, activation: Activation) -> Self {
        Self {
            weights: Parameter::new(weights),
            bias: Parameter::new(bias),
            activation,
            cache: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.value.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.value.rows()
    }

    fn affine(&self, x: &Tensor) -> Tensor {
        let (b, n_in, n_out) = (x.rows(), self.inputs(), self.outputs());
        let w = self.weights.value.data();
        let bias = self.bias.value.data();
        let mut out = Vec::with_capacity(b * n_out);
        for r in 0..b {
            let xr = x.row(r);
            let nonzero: Vec<usize> = (0..n_in).filter(|&i| xr[i] != 0.0).collect();
            for o in 0..n_out {
                let wr = &w[o * n_in..(o + 1) * n_in];
                let z = if 4 * nonzero.len() < n_in {
                    bias[o] + nonzero.iter().map(|&i| xr[i] * wr[i]).sum::<f64>()
                } else {
                    bias[o] + xr.iter().zip(wr).map(|(a, b)| a * b).sum::<f64>()
                };
                out.push(self.activation.apply(z));
            }
        }
        Tensor::matrix(b, n_out, out).expect("shape")
    }

    fn check_input(&self, x: &Tensor, index: usize) -> Result<()> {
        if x.cols() != self.inputs() {
            return Err(Error::dim(format!("layer {index} input"), self.inputs(), x.cols()));
        }
        Ok(())
    }

    pub fn backward(&mut self, upstream: &Tensor, index: usize) -> Result<Tensor> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State(format!("backward before forward on layer {index}")))?;
        if upstream.rows() != cache.output.rows() || upstream.cols() != self.outputs() {
            return Err(Error::dim(
                format!("layer {index} upstream"),
                cache.output.len(),
                upstream.len(),
            ));
        }
        let (b, n_in, n_out) = (upstream.rows(), self.inputs(), self.outputs());
        let mut dz = vec![0.0; b * n_out];
        for (i, d) in dz.iter_mut().enumerate() {
            *d = upstream.data()[i] * self.activation.derivative_from_output(cache.output.data()[i]);
        }

        // Per-call gradients are formed locally, then added once, so repeated
        // backward passes accumulate exactly.
        let mut gw = vec![0.0; n_out * n_in];
        let mut gb = vec![0.0; n_out];
        for r in 0..b {
            let xr = cache.input.row(r);
            let nonzero: Vec<usize> = (0..n_in).filter(|&i| xr[i] != 0.0).collect();
            for o in 0..n_out {
                let g = dz[r * n_out + o];
                gb[o] += g;
                if g != 0.0 {
                    let row = &mut gw[o * n_in..(o + 1) * n_in];
                    for &i in &nonzero {
                        row[i] += g * xr[i];
                    }
                }
            }
        }
        for (acc, g) in self.weights.grad.data_mut().iter_mut().zip(&gw) {
            *acc += g;
        }
        for (acc, g) in self.bias.grad.data_mut().iter_mut().zip(&gb) {
            *acc += g;
        }

        let w = self.weights.value.data();
        let mut dx = vec![0.0; b * n_in];
        for r in 0..b {
            let dxr = &mut dx[r * n_in..(r + 1) * n_in];
            for o in 0..n_out {
                let g = dz[r * n_out + o];
                if g != 0.0 {
                    for (acc, wv) in dxr.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *acc += g * wv;
                    }
                }
            }
        }
        Tensor::matrix(b, n_in, dx)
    }
}

impl Parameterized for DenseLayer {
    fn params(&self) -> Vec<&Parameter> {
        vec![&self.weights, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.weights, &mut self.bias]
    }
}

#[derive(Debug, Clone)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

impl Mlp {
    /// `widths = [in, h1, ..., out]`, one activation per layer.
    pub fn new(widths: &[usize], activations: &[Activation], rng: &mut SeededRng) -> Result<Self> {
        if widths.len() < 2 || activations.len() != widths.len() - 1 {
            return Err(Error::Domain(format!(
                "need {} activations for widths {:?}, got {}",
                widths.len().saturating_sub(1),
                widths,
                activations.len()
            )));
        }
        if widths.contains(&0) {
            return Err(Error::Domain(format!("zero layer width in {widths:?}")));
        }
        let layers = widths
            .windows(2)
            .zip(activations)
            .map(|(w, &a)| DenseLayer::new(w[0], w[1], a, rng))
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Domain("an Mlp needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::dim(
                    format!("layer {} input", i + 1),
                    pair[0].outputs(),
                    pair[1].inputs(),
                ));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    /// Forward pass that records what `backward` needs.
    pub fn forward(&mut self, batch: &Tensor) -> Result<Tensor> {
        let mut x = batch.clone();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            layer.check_input(&x, i)?;
            let y = layer.affine(&x);
            layer.cache = Some(Cache {
                input: x,
                output: y.clone(),
            });
            x = y;
        }
        Ok(x)
    }

    /// Forward pass without touching the cache.
    pub fn predict(&self, batch: &Tensor) -> Result<Tensor> {
        let mut x = batch.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.check_input(&x, i)?;
            x = layer.affine(&x);
        }
        Ok(x)
    }

    pub fn predict_one(&self, input: &[f64]) -> Result<Vec<f64>> {
        let t = Tensor::matrix(1, input.len(), input.to_vec())?;
        Ok(self.predict(&t)?.into_data())
    }

    /// Accumulates parameter gradients and returns dLoss/dInput.
    pub fn backward(&mut self, upstream: &Tensor) -> Result<Tensor> {
        let mut g = upstream.clone();
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            g = layer.backward(&g, i)?;
        }
        Ok(g)
    }

    /// Copies parameter values from `other`, which must have the same architecture.
    pub fn copy_values_from(&mut self, other: &Mlp) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::dim("layer count", self.layers.len(), other.layers.len()));
        }
        for (dst, src) in self.params_mut().into_iter().zip(other.params()) {
            if dst.value.shape() != src.value.shape() {
                return Err(Error::dim("parameter size", dst.value.len(), src.value.len()));
            }
            dst.value = src.value.clone();
        }
        Ok(())
    }
}

impl Parameterized for Mlp {
    fn params(&self) -> Vec<&Parameter> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(w: Vec<f64>, out: usize, inp: usize, act: Activation) -> Mlp {
        Mlp::from_layers(vec![DenseLayer::from_parts(
            Tensor::matrix(out, inp, w).unwrap(),
            Tensor::zeros(&[out]),
            act,
        )])
        .unwrap()
    }

    #[test]
    fn identity_layer_passes_input() {
        let mut net = linear(vec![1.0, 0.0, 0.0, 1.0], 2, 2, Activation::Identity);
        let x = Tensor::matrix(1, 2, vec![3.0, -1.0]).unwrap();
        assert_eq!(net.forward(&x).unwrap().data(), &[3.0, -1.0]);
    }

    #[test]
    fn zero_sigmoid_layer_is_half() {
        let mut net = linear(vec![0.0; 6], 2, 3, Activation::Sigmoid);
        let x = Tensor::matrix(2, 3, vec![1.0, -7.0, 2.5, 100.0, 0.3, -0.1]).unwrap();
        assert!(net.forward(&x).unwrap().data().iter().all(|&y| y == 0.5));
    }

    #[test]
    fn batch_forward_equals_per_row_forward() {
        let mut rng = SeededRng::new(5);
        let mut net = Mlp::new(&[3, 5, 2], &[Activation::Tanh, Activation::Sigmoid], &mut rng).unwrap();
        let rows: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.normal()).collect()).collect();
        let out = net.forward(&Tensor::from_rows(&rows).unwrap()).unwrap();
        for (i, r) in rows.iter().enumerate() {
            let single = net.predict_one(r).unwrap();
            for (a, b) in single.iter().zip(out.row(i)) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn shape_mismatch_names_layer() {
        let mut rng = SeededRng::new(1);
        let mut net = Mlp::new(&[3, 4, 2], &[Activation::Relu, Activation::Identity], &mut rng).unwrap();
        let err = net.forward(&Tensor::zeros(&[2, 5])).unwrap_err();
        assert!(err.to_string().contains("layer 0"), "{err}");
    }

    #[test]
    fn backward_before_forward_is_state_error() {
        let mut rng = SeededRng::new(1);
        let mut net = Mlp::new(&[3, 2], &[Activation::Relu], &mut rng).unwrap();
        assert!(matches!(
            net.backward(&Tensor::zeros(&[1, 2])),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn linear_weight_grad_is_sum_of_inputs() {
        let mut net = linear(vec![0.3, -0.2, 0.5, 0.1, 0.0, 2.0], 2, 3, Activation::Identity);
        let x = Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.5, 4.0]).unwrap();
        net.forward(&x).unwrap();
        net.backward(&Tensor::filled(&[2, 2], 1.0)).unwrap();
        let g = &net.layers()[0].weights.grad;
        assert_eq!(g.data(), &[0.0, 2.5, 7.0, 0.0, 2.5, 7.0]);
        assert_eq!(net.layers()[0].bias.grad.data(), &[2.0, 2.0]);
    }

    #[test]
    fn repeated_backward_doubles_grads() {
        let mut rng = SeededRng::new(9);
        let mut net = Mlp::new(&[3, 4, 2], &[Activation::Tanh, Activation::Sigmoid], &mut rng).unwrap();
        let x = Tensor::matrix(2, 3, (0..6).map(|_| rng.normal()).collect()).unwrap();
        let up = Tensor::matrix(2, 2, (0..4).map(|_| rng.normal()).collect()).unwrap();
        net.forward(&x).unwrap();
        net.backward(&up).unwrap();
        let once: Vec<Tensor> = net.params().iter().map(|p| p.grad.clone()).collect();
        net.backward(&up).unwrap();
        for (p, g1) in net.params().iter().zip(&once) {
            for (a, b) in p.grad.data().iter().zip(g1.data()) {
                assert_eq!(*a, 2.0 * b);
            }
        }
    }

    #[test]
    fn zero_grads_clears_and_is_idempotent() {
        let mut rng = SeededRng::new(2);
        let mut net = Mlp::new(&[2, 3, 1], &[Activation::Relu, Activation::Identity], &mut rng).unwrap();
        let before: Vec<Tensor> = net.params().iter().map(|p| p.value.clone()).collect();
        net.forward(&Tensor::filled(&[3, 2], 0.7)).unwrap();
        net.backward(&Tensor::filled(&[3, 1], 1.0)).unwrap();
        net.zero_grads();
        let once: Vec<Tensor> = net.params().iter().map(|p| p.grad.clone()).collect();
        net.zero_grads();
        for (p, g) in net.params().iter().zip(&once) {
            assert!(p.grad.data().iter().all(|&v| v == 0.0));
            assert_eq!(&p.grad, g);
        }
        for (p, v) in net.params().iter().zip(&before) {
            assert_eq!(&p.value, v);
        }
    }

    #[test]
    fn glorot_bounds() {
        let mut rng = SeededRng::new(4);
        let layer = DenseLayer::new(10, 6, Activation::Relu, &mut rng);
        let limit = (6.0f64 / 16.0).sqrt();
        assert!(layer.weights.value.data().iter().all(|w| w.abs() <= limit));
        assert!(layer.bias.value.data().iter().all(|&b| b == 0.0));
    }
}
