use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Result};
use crate::linalg::{eig_extremes, norm, SymMatrix};
use crate::solver::{Constants, SaddleProblem};

/// Number of sample points used when a problem estimates its own constants.
pub const DEFAULT_SAMPLES: usize = 20;

const SAMPLE_SEED: u64 = 0x5eed_c0de;

/// Estimated curvature constants plus the raw sampled modulus.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConstantEstimate {
    pub constants: Constants,
    /// Smallest block curvature seen before applying the regularization floor.
    pub mu_sampled: f64,
}

impl ConstantEstimate {
    /// True when the samples showed less curvature than the regularizers
    /// guarantee, i.e. the objective is not SCSC with the reported `mu`.
    pub fn floor_binds(&self) -> bool {
        self.mu_sampled < self.constants.mu
    }
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            mu: 0.0,
            l1: 0.0,
            l2: 0.0,
        }
    }
}

/// `z0` followed by `n - 1` Gaussian perturbations with expected norm about 1.
pub fn sample_points(z0: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let scale = 1.0 / (z0.len().max(1) as f64).sqrt();
    let mut points = Vec::with_capacity(n.max(1));
    points.push(z0.to_vec());
    for _ in 1..n {
        points.push(
            z0.iter()
                .map(|v| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    v + scale * e
                })
                .collect(),
        );
    }
    points
}

/// `min(λmin(Ĥ_xx), -λmax(Ĥ_yy))` and `||Ĥ||` of one Hessian.
fn curvature(h: &SymMatrix, dx: usize) -> Result<(f64, f64)> {
    let dy = h.dim() - dx;
    let (xlo, _) = eig_extremes(&h.principal_block(0, dx))?;
    let (_, yhi) = eig_extremes(&h.principal_block(dx, dy))?;
    let (lo, hi) = eig_extremes(h)?;
    Ok((xlo.min(-yhi), lo.abs().max(hi.abs())))
}

/// Exact constants of a `z`-independent Hessian, with `mu` floored at `mu_floor`.
pub(crate) fn constants_from_hessian(h: &SymMatrix, dx: usize, mu_floor: f64) -> Result<Constants> {
    let (mu, l1) = curvature(h, dx)?;
    Ok(Constants {
        mu: mu.max(mu_floor),
        l1,
        l2: 0.0,
    })
}

/// Samples `mu`, `L1` and `L2` around `z0`.
///
/// Problems with closed-form constants return them unchanged. Otherwise `L1`
/// and `mu` are the extremes of `||Ĥ||` and the block curvature over
/// [`sample_points`], the latter floored at [`SaddleProblem::mu_floor`].
/// `L2` is the largest `||Ĥ(z) - Ĥ(z')|| / ||z - z'||` over consecutive
/// sample pairs and small local perturbations, and exactly 0 for constant
/// Hessians.
pub fn estimate_constants<P: SaddleProblem + ?Sized>(
    problem: &P,
    z0: &[f64],
    n_samples: usize,
) -> Result<ConstantEstimate> {
    check_dim(problem.dim(), z0.len())?;
    if let Some(c) = problem.exact_constants() {
        return Ok(ConstantEstimate {
            constants: c,
            mu_sampled: c.mu,
        });
    }
    let (dx, _) = problem.dims();
    let points = sample_points(z0, n_samples);
    let hessians = points
        .iter()
        .map(|z| problem.hessian(z))
        .collect::<Result<Vec<_>>>()?;

    let (mut mu, mut l1) = (f64::INFINITY, 0.0f64);
    for h in &hessians {
        let (m, l) = curvature(h, dx)?;
        mu = mu.min(m);
        l1 = l1.max(l);
    }

    let mut l2 = 0.0f64;
    if !problem.hessian_is_constant() {
        let mut ratio = |h: &SymMatrix, h2: &SymMatrix, dist: f64| -> Result<()> {
            if dist > 0.0 {
                let (lo, hi) = eig_extremes(&h.sub(h2)?)?;
                l2 = l2.max(lo.abs().max(hi.abs()) / dist);
            }
            Ok(())
        };
        for w in 0..hessians.len().saturating_sub(1) {
            let dist = norm(&crate::linalg::sub(&points[w], &points[w + 1]));
            ratio(&hessians[w], &hessians[w + 1], dist)?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED ^ 1);
        for (z, h) in points.iter().zip(&hessians) {
            let mut dir: Vec<f64> = z.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
            crate::linalg::normalize(&mut dir);
            let delta = 1e-3 * (norm(z) + 1.0);
            let zp: Vec<f64> = z.iter().zip(&dir).map(|(a, b)| a + delta * b).collect();
            ratio(h, &problem.hessian(&zp)?, delta)?;
        }
    }

    let floor = problem.mu_floor();
    Ok(ConstantEstimate {
        constants: Constants {
            mu: mu.max(floor),
            l1,
            l2,
        },
        mu_sampled: mu,
    })
}

/// `1e-5 (||z|| + 1)`.
pub fn default_fd_step(z: &[f64]) -> f64 {
    1e-5 * (norm(z) + 1.0)
}

/// Central differences of the objective value.
pub fn finite_diff_gradient<P: SaddleProblem + ?Sized>(
    problem: &P,
    z: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    let mut zp = z.to_vec();
    let mut g = vec![0.0; z.len()];
    for i in 0..z.len() {
        zp[i] = z[i] + h;
        let fp = problem.value(&zp)?;
        zp[i] = z[i] - h;
        let fm = problem.value(&zp)?;
        zp[i] = z[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Central differences of the gradient, symmetrized.
pub fn finite_diff_hessian<P: SaddleProblem + ?Sized>(
    problem: &P,
    z: &[f64],
    h: f64,
) -> Result<SymMatrix> {
    let n = z.len();
    let mut zp = z.to_vec();
    let mut cols = vec![0.0; n * n];
    for j in 0..n {
        zp[j] = z[j] + h;
        let gp = problem.gradient(&zp)?;
        zp[j] = z[j] - h;
        let gm = problem.gradient(&zp)?;
        zp[j] = z[j];
        for i in 0..n {
            cols[i * n + j] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    SymMatrix::from_dense_symmetrize(n, &cols)
}
