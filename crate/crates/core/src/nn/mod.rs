//! Minimal dense neural-network substrate in `f64`.

mod gradcheck;
mod layer;
mod loss;
mod optim;
mod tensor;

pub use gradcheck::{finite_diff_grad, finite_diff_slice, max_relative_error, relative_error, REL_ERR_FLOOR};
pub use layer::{Activation, DenseLayer, Mlp, Parameter, Parameterized};
pub use loss::{bernoulli_nll, bernoulli_nll_grad, mse, P_CLAMP};
pub use optim::Adam;
pub use tensor::Tensor;
pub(crate) use tensor::{dot, norm};
