//! Greedy SR1 quasi-Newton solvers for strongly-convex-strongly-concave
//! saddle point problems.
//!
//! The solver works with the squared Hessian `H = Ĥ²`, which is positive
//! definite whenever `f` is strongly convex in `x` and strongly concave in
//! `y`, and maintains an approximation `Q ⪰ H` refined by greedy SR1 updates.
//!
//! ```
//! use spqn_core::{solve, Method, QuadraticSaddle, SaddleProblem, SolverConfig, Status};
//!
//! let problem = QuadraticSaddle::random(7, 5, 5, 1.0, 10.0).unwrap();
//! let cfg = SolverConfig { n: 5, ..SolverConfig::new(Method::Mgsr1) };
//! let trace = solve(&problem, &cfg, &vec![1.0; problem.dim()]).unwrap();
//! assert_eq!(trace.status, Status::Converged);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod greedy_qn;
pub mod linalg;
pub mod problems;
pub mod solver;

pub use data::{Dataset, Label};
pub use error::{Error, Result};
pub use greedy_qn::{ApproxState, SquaredHessian};
pub use linalg::{SpdFactorization, SymMatrix};
pub use problems::{AucProblem, DebiasParams, DebiasProblem, QuadraticSaddle};
pub use solver::{
    solve, solve_observed, Constants, IterationRecord, Method, SaddleProblem, SolverConfig, Status,
    Trace,
};
