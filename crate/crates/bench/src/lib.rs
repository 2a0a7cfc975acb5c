//! Fixtures shared by the benchmarks.

use spqn_core::{ApproxState, QuadraticSaddle, SaddleProblem, SquaredHessian};

/// Problem sizes swept by every benchmark.
pub const DIMS: [usize; 3] = [20, 50, 100];

/// Seeded quadratic with `dim / 2` variables per block and condition number 100.
pub fn quadratic(dim: usize) -> QuadraticSaddle {
    QuadraticSaddle::random(dim as u64, dim / 2, dim - dim / 2, 0.1, 10.0)
        .expect("valid quadratic parameters")
}

/// Squared Hessian of [`quadratic`] together with the `L1² I` initial approximation.
pub fn target_and_state(dim: usize) -> (SquaredHessian, ApproxState) {
    let q = quadratic(dim);
    let z = vec![0.0; dim];
    let l1 = q.constants().l1;
    let target = SquaredHessian::new(q.hessian(&z).expect("hessian"));
    (target, ApproxState::scaled_identity(dim, l1 * l1))
}
