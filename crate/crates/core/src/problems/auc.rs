use crate::data::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, SymMatrix};
use crate::solver::{Constants, SaddleProblem};

use super::constants::constants_from_hessian;

/// Minimax AUC surrogate on `z = [w; u; v; y]`.
///
/// Each positive sample contributes `(1-p)[(wᵀa - u)² - 2(1+y) wᵀa]`, each
/// negative one `p[(wᵀa - v)² + 2(1+y) wᵀa]`. The average is regularized by
/// `(λ/2)||x||² - p(1-p) y²` where `x = [w; u; v]`.
#[derive(Debug, Clone)]
pub struct AucProblem {
    d: usize,
    m: usize,
    features: Vec<f64>,
    positive: Vec<bool>,
    lambda: f64,
    p: f64,
    hessian: SymMatrix,
    constants: Constants,
}

impl AucProblem {
    pub fn new(ds: &Dataset, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidRange(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        let p = ds.positive_fraction();
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidRange(format!(
                "both classes must be present (p = {p})"
            )));
        }
        let (m, d) = (ds.n_samples(), ds.n_features());
        let positive: Vec<bool> = ds.labels().iter().map(|l| l.is_positive()).collect();
        let hessian = assemble_hessian(ds.features(), &positive, d, lambda, p);
        let mut problem = Self {
            d,
            m,
            features: ds.features().to_vec(),
            positive,
            lambda,
            p,
            hessian,
            constants: Constants {
                mu: 0.0,
                l1: 0.0,
                l2: 0.0,
            },
        };
        problem.constants = constants_from_hessian(&problem.hessian, d + 2, problem.mu_floor())?;
        Ok(problem)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Fraction of positive samples.
    pub fn p(&self) -> f64 {
        self.p
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    fn unpack<'a>(&self, z: &'a [f64]) -> Result<(&'a [f64], f64, f64, f64)> {
        check_dim(self.d + 3, z.len())?;
        let d = self.d;
        Ok((&z[..d], z[d], z[d + 1], z[d + 2]))
    }
}

fn assemble_hessian(
    features: &[f64],
    positive: &[bool],
    d: usize,
    lambda: f64,
    p: f64,
) -> SymMatrix {
    let m = positive.len();
    let n = d + 3;
    let (iu, iv, iy) = (d, d + 1, d + 2);
    let mut h = vec![0.0; n * n];
    let mut add = |i: usize, j: usize, v: f64| {
        h[i * n + j] += v;
        if i != j {
            h[j * n + i] += v;
        }
    };
    // Per-class second moments and means are enough.
    let mut gram = [vec![0.0; d * d], vec![0.0; d * d]];
    let mut sums = [vec![0.0; d], vec![0.0; d]];
    let mut counts = [0usize; 2];
    for (i, &pos) in positive.iter().enumerate() {
        let c = usize::from(!pos);
        let a = &features[i * d..(i + 1) * d];
        counts[c] += 1;
        for r in 0..d {
            sums[c][r] += a[r];
            if a[r] != 0.0 {
                for s in 0..d {
                    gram[c][r * d + s] += a[r] * a[s];
                }
            }
        }
    }
    let inv_m = 1.0 / m as f64;
    let wt = [2.0 * (1.0 - p) * inv_m, 2.0 * p * inv_m];
    for r in 0..d {
        for s in r..d {
            add(
                r,
                s,
                wt[0] * gram[0][r * d + s] + wt[1] * gram[1][r * d + s],
            );
        }
        add(r, iu, -wt[0] * sums[0][r]);
        add(r, iv, -wt[1] * sums[1][r]);
        add(r, iy, -wt[0] * sums[0][r] + wt[1] * sums[1][r]);
    }
    add(iu, iu, wt[0] * counts[0] as f64);
    add(iv, iv, wt[1] * counts[1] as f64);
    for i in 0..d + 2 {
        add(i, i, lambda);
    }
    add(iy, iy, -2.0 * p * (1.0 - p));
    SymMatrix::from_dense_symmetrize(n, &h).expect("square buffer")
}

impl SaddleProblem for AucProblem {
    fn dims(&self) -> (usize, usize) {
        (self.d + 2, 1)
    }

    fn value(&self, z: &[f64]) -> Result<f64> {
        let (w, u, v, y) = self.unpack(z)?;
        let p = self.p;
        let mut sum = 0.0;
        for i in 0..self.m {
            let s = dot(w, self.row(i));
            sum += if self.positive[i] {
                (1.0 - p) * ((s - u).powi(2) - 2.0 * (1.0 + y) * s)
            } else {
                p * ((s - v).powi(2) + 2.0 * (1.0 + y) * s)
            };
        }
        let xx = dot(&z[..self.d + 2], &z[..self.d + 2]);
        Ok(sum / self.m as f64 + 0.5 * self.lambda * xx - p * (1.0 - p) * y * y)
    }

    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        let (w, u, v, y) = self.unpack(z)?;
        let (d, p) = (self.d, self.p);
        let mut g = vec![0.0; d + 3];
        for i in 0..self.m {
            let a = self.row(i);
            let s = dot(w, a);
            let coef = if self.positive[i] {
                g[d] += -2.0 * (1.0 - p) * (s - u);
                g[d + 2] += -2.0 * (1.0 - p) * s;
                (1.0 - p) * (2.0 * (s - u) - 2.0 * (1.0 + y))
            } else {
                g[d + 1] += -2.0 * p * (s - v);
                g[d + 2] += 2.0 * p * s;
                p * (2.0 * (s - v) + 2.0 * (1.0 + y))
            };
            for (gj, aj) in g[..d].iter_mut().zip(a) {
                *gj += coef * aj;
            }
        }
        let inv_m = 1.0 / self.m as f64;
        g.iter_mut().for_each(|gi| *gi *= inv_m);
        for j in 0..d + 2 {
            g[j] += self.lambda * z[j];
        }
        g[d + 2] -= 2.0 * p * (1.0 - p) * y;
        Ok(g)
    }

    fn hessian(&self, z: &[f64]) -> Result<SymMatrix> {
        check_dim(self.d + 3, z.len())?;
        Ok(self.hessian.clone())
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn hessian_is_constant(&self) -> bool {
        true
    }

    fn mu_floor(&self) -> f64 {
        self.lambda.min(2.0 * self.p * (1.0 - self.p))
    }
}
