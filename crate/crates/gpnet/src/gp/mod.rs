//! Gaussian process local score for one node given a parent set:
//! additive squared-exponential kernels, hyperparameter priors, MAP
//! estimation and the Laplace-approximate score.

pub mod kernel;
pub mod laplace;
pub mod likelihood;
pub mod objective;
pub mod prior;

pub use kernel::{gram_matrix, kernel_eval, KernelConfig, KernelKind};
pub use laplace::{laplace_log_score, map_estimate, LaplaceResult, MapResult};
pub use likelihood::log_marginal_likelihood;
pub use objective::{GpModel, HyperParams};
pub use prior::{InvGamma, PriorSpec};
