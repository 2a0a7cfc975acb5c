//! Dense symmetric linear algebra.
//!
//! Everything here works on small dense matrices (a few hundred rows at
//! most). [`SymMatrix`] stores the full square in row-major order and keeps
//! `a[i][j] == a[j][i]` bit-exact: every constructor and update writes the
//! upper triangle and mirrors it.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{check_dim, Error, Result};

/// Dense symmetric `d x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = c;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * dim + i] = v;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Symmetrizes an arbitrary row-major square as `(A + A^T) / 2`.
    pub fn from_dense_symmetrize(dim: usize, data: &[f64]) -> Result<Self> {
        check_dim(dim * dim, data.len())?;
        Ok(Self::from_upper_fn(dim, |i, j| {
            if i == j {
                data[i * dim + i]
            } else {
                0.5 * (data[i * dim + j] + data[j * dim + i])
            }
        }))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut flat = Vec::with_capacity(dim * dim);
        for r in rows {
            check_dim(dim, r.len())?;
            flat.extend_from_slice(r);
        }
        Self::from_dense_symmetrize(dim, &flat)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets `a[i][j]` and `a[j][i]`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim;
        self.data
            .iter()
            .enumerate()
            .all(|(k, v)| k / d == k % d || *v == 0.0)
    }

    pub fn is_exactly_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j).to_bits() == self.get(j, i).to_bits()))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        Ok((0..self.dim).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn scale_mut(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &SymMatrix, c: f64) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        self.add_scaled(other, -1.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `A^2`, symmetrized.
    pub fn square(&self) -> Self {
        let d = self.dim;
        // a symmetric => (A A)[i][j] = row_i . row_j
        Self::from_upper_fn(d, |i, j| dot(self.row(i), self.row(j)))
    }

    /// Principal sub-block `[start, start + len)`.
    pub fn principal_block(&self, start: usize, len: usize) -> Self {
        Self::from_upper_fn(len, |i, j| self.get(start + i, start + j))
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }
}

/// Cholesky factorization `A = L L^T`, kept as `A = U D U^T` with `U` unit
/// lower triangular and `D` diagonal, so `L = U D^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactorization {
    dim: usize,
    unit: Vec<f64>,
    pivots: Vec<f64>,
}

impl SpdFactorization {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `(i, j)` of the Cholesky factor `L`.
    pub fn factor(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => 0.0,
            std::cmp::Ordering::Equal => self.pivots[j].sqrt(),
            std::cmp::Ordering::Greater => self.unit[i * self.dim + j] * self.pivots[j].sqrt(),
        }
    }

    /// Rescales the factorization so that it represents `c * A`.
    pub fn rescale(&mut self, c: f64) {
        self.pivots.iter_mut().for_each(|v| *v *= c);
    }

    /// `L L^T` as a dense symmetric matrix.
    pub fn reconstruct(&self) -> SymMatrix {
        let d = self.dim;
        let u = |i: usize, k: usize| if i == k { 1.0 } else { self.unit[i * d + k] };
        SymMatrix::from_upper_fn(d, |i, j| {
            (0..=i.min(j))
                .map(|k| u(i, k) * self.pivots[k] * u(j, k))
                .sum()
        })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        solve_spd(self, b)
    }

    /// `U^{-1} b`.
    fn solve_unit(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, b.len())?;
        let d = self.dim;
        let mut y = b.to_vec();
        for i in 0..d {
            let row = &self.unit[i * d..i * d + i];
            y[i] -= dot(row, &y[..i]);
        }
        Ok(y)
    }

    /// `L^{-1} b`.
    pub fn solve_lower(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.solve_unit(b)?;
        for (yi, p) in y.iter_mut().zip(&self.pivots) {
            *yi /= p.sqrt();
        }
        Ok(y)
    }
}

pub fn spd_factorize(a: &SymMatrix) -> Result<SpdFactorization> {
    let d = a.dim();
    let mut unit = vec![0.0; d * d];
    let mut pivots = vec![0.0; d];
    // w[k] = U[j][k] * D[k] for the current row j
    let mut w = vec![0.0; d];
    for j in 0..d {
        for k in 0..j {
            w[k] = unit[j * d + k] * pivots[k];
        }
        let pivot = a.get(j, j) - dot(&unit[j * d..j * d + j], &w[..j]);
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        pivots[j] = pivot;
        for i in (j + 1)..d {
            let s = a.get(i, j) - dot(&unit[i * d..i * d + j], &w[..j]);
            unit[i * d + j] = s / pivot;
        }
    }
    Ok(SpdFactorization {
        dim: d,
        unit,
        pivots,
    })
}

pub fn solve_spd(fact: &SpdFactorization, b: &[f64]) -> Result<Vec<f64>> {
    let d = fact.dim;
    let mut y = fact.solve_unit(b)?;
    for (yi, p) in y.iter_mut().zip(&fact.pivots) {
        *yi /= p;
    }
    for i in (0..d).rev() {
        let mut s = y[i];
        for k in (i + 1)..d {
            s -= fact.unit[k * d + i] * y[k];
        }
        y[i] = s;
    }
    Ok(y)
}

/// `A + c * v v^T`.
pub fn rank_one_symmetric(a: &SymMatrix, v: &[f64], c: f64) -> Result<SymMatrix> {
    check_dim(a.dim(), v.len())?;
    Ok(SymMatrix::from_upper_fn(a.dim(), |i, j| {
        a.get(i, j) + c * (v[i] * v[j])
    }))
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eig_extremes(a: &SymMatrix) -> Result<(f64, f64)> {
    if !a.is_finite() {
        return Err(Error::NonFinite("eig_extremes input"));
    }
    if a.dim() == 0 {
        return Err(Error::InvalidRange("empty matrix".into()));
    }
    if a.is_diagonal() {
        let diag = a.diag();
        let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Ok((lo, hi));
    }
    let eig = SymmetricEigen::new(a.to_nalgebra());
    let lo = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// `A <= B` in the Loewner order, i.e. `lambda_min(B - A) >= -tol`.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    let diff = b.sub(a)?;
    let (lo, _) = eig_extremes(&diff)?;
    Ok(lo >= -tol)
}

/// Spectral norm of a symmetric matrix by power iteration on `A^2`.
///
/// Returns `sqrt(v' A^2 v)` at the final iterate, which approaches the
/// largest `|lambda|` from below.
pub fn spectral_norm(a: &SymMatrix, max_iters: usize, rel_tol: f64) -> f64 {
    let d = a.dim();
    if d == 0 {
        return 0.0;
    }
    // deterministic start with all components present
    let mut v: Vec<f64> = (0..d)
        .map(|i| 1.0 + (i as f64 * 0.618_033_988_7).fract())
        .collect();
    normalize(&mut v);
    let mut est = 0.0;
    for _ in 0..max_iters {
        let av = a.mul_vec(&v).expect("dims match");
        let norm_av = norm(&av);
        if norm_av == 0.0 {
            return 0.0;
        }
        let mut w = a.mul_vec(&av).expect("dims match");
        let norm_w = norm(&w);
        if norm_w == 0.0 {
            return norm_av;
        }
        w.iter_mut().for_each(|x| *x /= norm_w);
        let prev = est;
        est = norm_av;
        v = w;
        if (est - prev).abs() <= rel_tol * est {
            break;
        }
    }
    // final Rayleigh estimate at the converged direction
    norm(&a.mul_vec(&v).expect("dims match")).max(est)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &mut [f64]) {
    let n = norm(a);
    if n > 0.0 {
        a.iter_mut().for_each(|x| *x /= n);
    }
}

/// `a - b`
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
