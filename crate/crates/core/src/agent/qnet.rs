use crate::error::{Error, Result};
use crate::nn::{Activation, DenseLayer, Mlp, Parameter, Parameterized, Tensor};
use crate::rng::SeededRng;
use crate::tasks::{GridWorld, QTable};

#[derive(Debug, Clone)]
pub struct QNetwork {
    net: Mlp,
    action_count: usize,
}

impl QNetwork {
    /// ReLU hidden layers, linear output head.
    pub fn new(state_dim: usize, hidden: &[usize], action_count: usize, rng: &mut SeededRng) -> Result<Self> {
        let mut widths = vec![state_dim];
        widths.extend(hidden);
        widths.push(action_count);
        let mut acts = vec![Activation::Relu; hidden.len()];
        acts.push(Activation::Identity);
        Self::from_mlp(Mlp::new(&widths, &acts, rng)?)
    }

    pub fn from_mlp(net: Mlp) -> Result<Self> {
        let action_count = net.output_width();
        if action_count == 0 {
            return Err(Error::Domain("Q-network needs at least one action".into()));
        }
        Ok(Self { net, action_count })
    }

    /// Linear network reproducing a tabular Q on the environment's one-hot
    /// observations.
    pub fn from_table(table: &QTable, env: &GridWorld) -> Result<Self> {
        let n = env.cell_count();
        let mut w = Tensor::zeros(&[4, n]);
        for cell in 0..n {
            let obs_index = env.permutation().apply(cell);
            for a in 0..4 {
                w.set(a, obs_index, table.q[cell][a]);
            }
        }
        let layer = DenseLayer::from_parts(w, Tensor::zeros(&[4]), Activation::Identity);
        Self::from_mlp(Mlp::from_layers(vec![layer])?)
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn state_dim(&self) -> usize {
        self.net.input_width()
    }

    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.net.predict_one(state)
    }

    pub fn greedy(&self, state: &[f64]) -> Result<usize> {
        Ok(argmax(&self.q_values(state)?))
    }
}

impl Parameterized for QNetwork {
    fn params(&self) -> Vec<&Parameter> {
        self.net.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.net.params_mut()
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy action selection.
pub fn act(q: &QNetwork, state: &[f64], epsilon: f64, rng: &mut SeededRng) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon {epsilon} outside [0, 1]")));
    }
    if epsilon > 0.0 && rng.next_f64() < epsilon {
        Ok(rng.below(q.action_count))
    } else {
        q.greedy(state)
    }
}
