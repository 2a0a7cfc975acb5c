use crate::data::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, SymMatrix};
use crate::solver::{Constants, SaddleProblem};

use super::constants::{estimate_constants, ConstantEstimate, DEFAULT_SAMPLES};

/// Regularization weights of [`DebiasProblem`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebiasParams {
    pub lambda: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl Default for DebiasParams {
    fn default() -> Self {
        Self {
            lambda: 1e-2,
            gamma: 1e-2,
            beta: 0.5,
        }
    }
}

/// Adversarial debiasing on `z = [x; y]`:
///
/// `f = (1/m) Σ [log(1 + e^{-b aᵀx}) - β log(1 + e^{-c aᵀx y})] + λ||x||² - γ y²`
///
/// with labels `b` and protected attribute `c`, both in `{+1, -1}`.
#[derive(Debug, Clone)]
pub struct DebiasProblem {
    d: usize,
    m: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
    protected: Vec<f64>,
    params: DebiasParams,
    estimate: ConstantEstimate,
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `1 / (1 + e^{-x})` without overflow.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl DebiasProblem {
    /// Builds the problem and estimates its constants around the origin.
    pub fn new(ds: &Dataset, params: DebiasParams) -> Result<Self> {
        let DebiasParams {
            lambda,
            gamma,
            beta,
        } = params;
        if !(lambda > 0.0 && gamma > 0.0 && beta >= 0.0)
            || ![lambda, gamma, beta].iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidRange(format!(
                "need lambda > 0, gamma > 0, beta >= 0; got {lambda}, {gamma}, {beta}"
            )));
        }
        let protected = ds
            .protected()
            .ok_or_else(|| Error::InvalidRange("dataset has no protected attribute".into()))?;
        let (m, d) = (ds.n_samples(), ds.n_features());
        if m == 0 {
            return Err(Error::InvalidRange("empty dataset".into()));
        }
        let mut problem = Self {
            d,
            m,
            features: ds.features().to_vec(),
            labels: ds.labels().iter().map(|l| l.sign()).collect(),
            protected: protected.iter().map(|l| l.sign()).collect(),
            params,
            estimate: ConstantEstimate::default(),
        };
        problem.estimate = estimate_constants(&problem, &vec![0.0; d + 1], DEFAULT_SAMPLES)?;
        Ok(problem)
    }

    pub fn params(&self) -> DebiasParams {
        self.params
    }

    pub fn estimate(&self) -> &ConstantEstimate {
        &self.estimate
    }

    /// Replaces the estimated constants.
    pub fn with_constants(mut self, constants: Constants) -> Self {
        self.estimate.constants = constants;
        self
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }
}

impl SaddleProblem for DebiasProblem {
    fn dims(&self) -> (usize, usize) {
        (self.d, 1)
    }

    fn value(&self, z: &[f64]) -> Result<f64> {
        check_dim(self.d + 1, z.len())?;
        let (x, y) = (&z[..self.d], z[self.d]);
        let DebiasParams {
            lambda,
            gamma,
            beta,
        } = self.params;
        let mut sum = 0.0;
        for i in 0..self.m {
            let t = dot(self.row(i), x);
            sum += softplus(-self.labels[i] * t) - beta * softplus(-self.protected[i] * t * y);
        }
        Ok(sum / self.m as f64 + lambda * dot(x, x) - gamma * y * y)
    }

    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d + 1, z.len())?;
        let d = self.d;
        let (x, y) = (&z[..d], z[d]);
        let DebiasParams {
            lambda,
            gamma,
            beta,
        } = self.params;
        let mut g = vec![0.0; d + 1];
        for i in 0..self.m {
            let a = self.row(i);
            let (b, c) = (self.labels[i], self.protected[i]);
            let t = dot(a, x);
            let dphi = beta * sigmoid(-c * t * y);
            let coef = -b * sigmoid(-b * t) + dphi * c * y;
            for (gj, aj) in g[..d].iter_mut().zip(a) {
                *gj += coef * aj;
            }
            g[d] += dphi * c * t;
        }
        let inv_m = 1.0 / self.m as f64;
        for j in 0..d {
            g[j] = g[j] * inv_m + 2.0 * lambda * x[j];
        }
        g[d] = g[d] * inv_m - 2.0 * gamma * y;
        Ok(g)
    }

    fn hessian(&self, z: &[f64]) -> Result<SymMatrix> {
        check_dim(self.d + 1, z.len())?;
        let d = self.d;
        let n = d + 1;
        let (x, y) = (&z[..d], z[d]);
        let DebiasParams {
            lambda,
            gamma,
            beta,
        } = self.params;
        let mut h = vec![0.0; n * n];
        for i in 0..self.m {
            let a = self.row(i);
            let c = self.protected[i];
            let t = dot(a, x);
            let s = c * t * y;
            let (sp, sn) = (sigmoid(s), sigmoid(-s));
            let dphi = beta * sn;
            let ddphi = -beta * sp * sn;
            let wxx = sigmoid(t) * sigmoid(-t) + ddphi * c * c * y * y;
            let wxy = ddphi * c * c * t * y + dphi * c;
            for r in 0..d {
                if a[r] == 0.0 {
                    continue;
                }
                let war = wxx * a[r];
                for q in r..d {
                    h[r * n + q] += war * a[q];
                }
                h[r * n + d] += wxy * a[r];
            }
            h[d * n + d] += ddphi * c * c * t * t;
        }
        let inv_m = 1.0 / self.m as f64;
        Ok(SymMatrix::from_upper_fn(n, |r, q| {
            let v = h[r * n + q] * inv_m;
            match (r == q, r < d) {
                (true, true) => v + 2.0 * lambda,
                (true, false) => v - 2.0 * gamma,
                _ => v,
            }
        }))
    }

    fn constants(&self) -> Constants {
        self.estimate.constants
    }

    fn mu_floor(&self) -> f64 {
        self.params.lambda.min(2.0 * self.params.gamma)
    }
}
