//! Concrete saddle objectives and derivative oracles.

mod auc;
mod constants;
mod debias;
mod quadratic;

pub use auc::AucProblem;
pub use constants::{
    default_fd_step, estimate_constants, finite_diff_gradient, finite_diff_hessian, sample_points,
    ConstantEstimate, DEFAULT_SAMPLES,
};
pub use debias::{sigmoid, softplus, DebiasParams, DebiasProblem};
pub use quadratic::QuadraticSaddle;
