use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, eig_extremes, spd_factorize, SymMatrix};
use crate::solver::{Constants, SaddleProblem};

/// `f(x, y) = ½ xᵀAx + xᵀBy − ½ yᵀCy + aᵀx + cᵀy` with `A, C` SPD.
#[derive(Debug, Clone)]
pub struct QuadraticSaddle {
    dx: usize,
    dy: usize,
    a: SymMatrix,
    /// `dx x dy`, row-major.
    b: Vec<f64>,
    c: SymMatrix,
    lin_x: Vec<f64>,
    lin_y: Vec<f64>,
    hessian: SymMatrix,
    constants: Constants,
}

impl QuadraticSaddle {
    pub fn new(
        a: SymMatrix,
        b: Vec<f64>,
        c: SymMatrix,
        lin_x: Vec<f64>,
        lin_y: Vec<f64>,
    ) -> Result<Self> {
        let (dx, dy) = (a.dim(), c.dim());
        check_dim(dx * dy, b.len())?;
        check_dim(dx, lin_x.len())?;
        check_dim(dy, lin_y.len())?;
        let d = dx + dy;
        let hessian = SymMatrix::from_upper_fn(d, |i, j| match (i < dx, j < dx) {
            (true, true) => a.get(i, j),
            (true, false) => b[i * dy + (j - dx)],
            (false, false) => -c.get(i - dx, j - dx),
            (false, true) => unreachable!("upper triangle only"),
        });
        let mu = eig_extremes(&a)?.0.min(eig_extremes(&c)?.0);
        if !(mu > 0.0) {
            return Err(Error::InvalidRange(format!(
                "blocks are not positive definite (mu = {mu:e})"
            )));
        }
        let (lo, hi) = eig_extremes(&hessian)?;
        let constants = Constants {
            mu,
            l1: lo.abs().max(hi.abs()),
            l2: 0.0,
        };
        Ok(Self {
            dx,
            dy,
            a,
            b,
            c,
            lin_x,
            lin_y,
            hessian,
            constants,
        })
    }

    /// Seeded random instance with `mu`-strongly convex/concave blocks and
    /// `||Ĥ|| <= l1`. The stored constants are recomputed from the instance.
    pub fn random(seed: u64, dx: usize, dy: usize, mu: f64, l1: f64) -> Result<Self> {
        if dx == 0 || dy == 0 {
            return Err(Error::InvalidRange(
                "block dimensions must be positive".into(),
            ));
        }
        if !(mu > 0.0 && mu <= l1 && l1.is_finite()) {
            return Err(Error::InvalidRange(format!(
                "need 0 < mu <= L1, got mu={mu}, L1={l1}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let top = mu.max(0.9 * l1);
        let a = random_spd_block(&mut rng, dx, mu, top);
        let c = random_spd_block(&mut rng, dy, mu, top);
        let budget = l1 - top;
        let mut b = vec![0.0; dx * dy];
        if budget > 0.0 {
            let g = DMatrix::from_fn(dx, dy, |_, _| rng.sample::<f64, _>(StandardNormal));
            let s = g.singular_values().max();
            for i in 0..dx {
                for j in 0..dy {
                    b[i * dy + j] = g[(i, j)] * budget / s;
                }
            }
        }
        Self::new(a, b, c, vec![0.0; dx], vec![0.0; dy])
    }

    /// Standard normal starting point, drawn from a stream independent of the
    /// one that built the instance.
    pub fn random_start(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        (0..self.dx + self.dy)
            .map(|_| rng.sample(StandardNormal))
            .collect()
    }

    /// The unique saddle point `z* = -Ĥ⁻¹ [a; c]`.
    pub fn saddle_point(&self) -> Result<Vec<f64>> {
        let rhs: Vec<f64> = self.lin_x.iter().chain(&self.lin_y).map(|v| -v).collect();
        // Ĥ z = rhs  <=>  Ĥ² z = Ĥ rhs
        let h_rhs = self.hessian.mul_vec(&rhs)?;
        spd_factorize(&self.hessian.square())?.solve(&h_rhs)
    }

    fn split<'a>(&self, z: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
        check_dim(self.dx + self.dy, z.len())?;
        Ok(z.split_at(self.dx))
    }
}

fn random_spd_block(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> SymMatrix {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let basis = g.qr().q();
    let eigs: Vec<f64> = (0..d)
        .map(|i| match i {
            0 => lo,
            1 => hi,
            _ => rng.random_range(lo..=hi),
        })
        .collect();
    SymMatrix::from_upper_fn(d, |i, j| {
        (0..d)
            .map(|k| basis[(i, k)] * eigs[k] * basis[(j, k)])
            .sum()
    })
}

impl SaddleProblem for QuadraticSaddle {
    fn dims(&self) -> (usize, usize) {
        (self.dx, self.dy)
    }

    fn value(&self, z: &[f64]) -> Result<f64> {
        let (x, y) = self.split(z)?;
        let ax = self.a.mul_vec(x)?;
        let cy = self.c.mul_vec(y)?;
        let xby: f64 = (0..self.dx)
            .map(|i| x[i] * dot(&self.b[i * self.dy..(i + 1) * self.dy], y))
            .sum();
        Ok(0.5 * dot(x, &ax) + xby - 0.5 * dot(y, &cy) + dot(&self.lin_x, x) + dot(&self.lin_y, y))
    }

    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.hessian.mul_vec(z)?;
        for (gi, li) in g.iter_mut().zip(self.lin_x.iter().chain(&self.lin_y)) {
            *gi += li;
        }
        Ok(g)
    }

    fn hessian(&self, z: &[f64]) -> Result<SymMatrix> {
        check_dim(self.dx + self.dy, z.len())?;
        Ok(self.hessian.clone())
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn exact_constants(&self) -> Option<Constants> {
        Some(self.constants)
    }

    fn hessian_is_constant(&self) -> bool {
        true
    }

    fn mu_floor(&self) -> f64 {
        self.constants.mu
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    #[test]
    fn random_start_is_seeded() {
        let q = QuadraticSaddle::random(3, 4, 2, 1.0, 5.0).unwrap();
        let z = q.random_start(3);
        assert_eq!(z.len(), 6);
        assert_eq!(z, q.random_start(3));
        assert_ne!(z, q.random_start(4));
    }

    #[test]
    fn unit_instance_is_half_x2_minus_half_y2() {
        let q = QuadraticSaddle::random(1, 1, 1, 1.0, 1.0).unwrap();
        assert_eq!(
            q.hessian(&[0.0, 0.0]).unwrap(),
            SymMatrix::from_diag(&[1.0, -1.0])
        );
        assert!((q.value(&[2.0, 3.0]).unwrap() - (2.0 - 4.5)).abs() < 1e-15);
        assert_eq!(q.saddle_point().unwrap(), vec![0.0, 0.0]);
        assert_eq!(
            q.constants(),
            Constants {
                mu: 1.0,
                l1: 1.0,
                l2: 0.0
            }
        );
    }

    #[test]
    fn random_instance_respects_requested_constants() {
        let q = QuadraticSaddle::random(7, 5, 5, 1.0, 10.0).unwrap();
        let h = q.hessian(&[0.0; 10]).unwrap();
        let hxx = h.principal_block(0, 5);
        let hyy = h.principal_block(5, 5);
        let (lo, hi) = eig_extremes(&hxx).unwrap();
        assert!(lo >= 1.0 - 1e-9 && hi <= 10.0 + 1e-9);
        let (lo, hi) = eig_extremes(&hyy).unwrap();
        assert!(hi <= -1.0 + 1e-9 && lo >= -10.0 - 1e-9);
        let c = q.constants();
        assert!(c.l1 <= 10.0 + 1e-9 && (c.mu - 1.0).abs() < 1e-9);
        assert_eq!(c.l2, 0.0);
    }

    #[test]
    fn hessian_is_constant_across_points() {
        let q = QuadraticSaddle::random(3, 4, 2, 0.5, 4.0).unwrap();
        let z1 = vec![0.3; 6];
        let z2 = vec![-2.0, 1.0, 0.0, 5.0, 1.5, -0.1];
        assert_eq!(q.hessian(&z1).unwrap(), q.hessian(&z2).unwrap());
    }

    #[test]
    fn saddle_point_has_zero_gradient() {
        let a = SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let c = SymMatrix::from_diag(&[3.0]);
        let q = QuadraticSaddle::new(a, vec![1.0, -1.0], c, vec![1.0, 2.0], vec![-0.5]).unwrap();
        let zs = q.saddle_point().unwrap();
        assert!(norm(&q.gradient(&zs).unwrap()) < 1e-12);
    }

    #[test]
    fn invalid_ranges() {
        assert!(QuadraticSaddle::random(0, 2, 2, 2.0, 1.0).is_err());
        assert!(QuadraticSaddle::random(0, 2, 2, 0.0, 1.0).is_err());
        assert!(QuadraticSaddle::random(0, 0, 2, 1.0, 1.0).is_err());
        assert!(q_dims_mismatch().is_err());
    }

    fn q_dims_mismatch() -> Result<f64> {
        QuadraticSaddle::random(0, 2, 2, 1.0, 2.0)?.value(&[1.0; 3])
    }
}
