//! Broyden-family quasi-Newton updates and their greedy variants.
//!
//! The target of every update is the squared Hessian `H = Ĥ²` of the saddle
//! objective. It is never formed on the hot path: [`SquaredHessian`] keeps
//! the explicit `Ĥ`, answers `H u` as `Ĥ (Ĥ u)` and caches `diag(H)` as the
//! squared row norms of `Ĥ`.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, rank_one_symmetric, spd_factorize, SpdFactorization, SymMatrix};

/// Relative threshold below which an SR1 denominator counts as degenerate.
pub const SR1_TOL_REL: f64 = 1e-10;

/// Access to a positive definite update target `H`.
pub trait TargetAccess {
    fn dim(&self) -> usize;
    fn diag(&self) -> &[f64];
    /// `H u`.
    fn apply(&self, u: &[f64]) -> Result<Vec<f64>>;
}

/// `H = Ĥ²` represented by the explicit (indefinite) Hessian `Ĥ`.
#[derive(Debug, Clone)]
pub struct SquaredHessian {
    hessian: SymMatrix,
    diag: Vec<f64>,
}

impl SquaredHessian {
    pub fn new(hessian: SymMatrix) -> Self {
        let diag = (0..hessian.dim())
            .map(|i| dot(hessian.row(i), hessian.row(i)))
            .collect();
        Self { hessian, diag }
    }

    /// The underlying `Ĥ`.
    pub fn hessian(&self) -> &SymMatrix {
        &self.hessian
    }

    /// `Ĥ²` materialized; test and diagnostic use only.
    pub fn dense(&self) -> SymMatrix {
        self.hessian.square()
    }
}

impl TargetAccess for SquaredHessian {
    fn dim(&self) -> usize {
        self.hessian.dim()
    }

    fn diag(&self) -> &[f64] {
        &self.diag
    }

    fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let hu = self.hessian.mul_vec(u)?;
        self.hessian.mul_vec(&hu)
    }
}

/// An explicitly stored target matrix.
#[derive(Debug, Clone)]
pub struct ExplicitTarget {
    h: SymMatrix,
    diag: Vec<f64>,
}

impl ExplicitTarget {
    pub fn new(h: SymMatrix) -> Self {
        let diag = h.diag();
        Self { h, diag }
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.h
    }
}

impl TargetAccess for ExplicitTarget {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn diag(&self) -> &[f64] {
        &self.diag
    }

    fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.h.mul_vec(u)
    }
}

/// Current approximation `Q` of the squared Hessian.
#[derive(Debug, Clone)]
pub struct ApproxState {
    q: SymMatrix,
    fact: Option<SpdFactorization>,
    skipped: usize,
    applied: usize,
}

impl ApproxState {
    pub fn new(q: SymMatrix) -> Self {
        Self {
            q,
            fact: None,
            skipped: 0,
            applied: 0,
        }
    }

    /// `c * I`, the usual starting point with `c = L1²`.
    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        Self::new(SymMatrix::scaled_identity(dim, c))
    }

    pub fn q(&self) -> &SymMatrix {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    /// SR1 updates skipped so far because of a degenerate denominator.
    pub fn skipped_count(&self) -> usize {
        self.skipped
    }

    /// SR1 updates actually applied so far.
    pub fn applied_count(&self) -> usize {
        self.applied
    }

    pub fn is_factorization_fresh(&self) -> bool {
        self.fact.is_some()
    }

    /// Cholesky factor of `Q`, recomputed if any update invalidated it.
    pub fn factorization(&mut self) -> Result<&SpdFactorization> {
        if self.fact.is_none() {
            self.fact = Some(spd_factorize(&self.q)?);
        }
        Ok(self.fact.as_ref().expect("just set"))
    }

    /// `Q^{-1} b`.
    pub fn solve(&mut self, b: &[f64]) -> Result<Vec<f64>> {
        self.factorization()?.solve(b)
    }

    fn replace(&mut self, q: SymMatrix) {
        self.q = q;
        self.fact = None;
    }
}

/// What a single SR1 step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    Applied,
    Skipped,
}

/// Index `i` maximizing `Q[i][i] / H[i][i]`; ties go to the lowest index.
pub fn greedy_vector(q: &SymMatrix, diag_h: &[f64]) -> Result<usize> {
    check_dim(q.dim(), diag_h.len())?;
    if q.dim() == 0 {
        return Err(Error::InvalidRange("empty approximation".into()));
    }
    let mut best = 0;
    let mut best_ratio = f64::NEG_INFINITY;
    for (i, &h) in diag_h.iter().enumerate() {
        if !(h > 0.0) {
            return Err(Error::NonPositiveDiagonal { index: i, value: h });
        }
        let ratio = q.get(i, i) / h;
        if ratio > best_ratio {
            best = i;
            best_ratio = ratio;
        }
    }
    Ok(best)
}

/// `SR1(Q, H, u) = Q - v v^T / s` with `v = (Q - H) u`, `s = u^T v`.
///
/// Returns `None` (skip, `Q` stays as is) when `s <= tol_rel * u^T Q u`.
pub fn sr1_update(q: &SymMatrix, hu: &[f64], u: &[f64], tol_rel: f64) -> Result<Option<SymMatrix>> {
    check_dim(q.dim(), hu.len())?;
    check_dim(q.dim(), u.len())?;
    let qu = q.mul_vec(u)?;
    let v: Vec<f64> = qu.iter().zip(hu).map(|(a, b)| a - b).collect();
    let s = dot(u, &v);
    let uqu = dot(u, &qu);
    if !(s > tol_rel * uqu) {
        return Ok(None);
    }
    rank_one_symmetric(q, &v, -1.0 / s).map(Some)
}

fn curvature_terms(q: &SymMatrix, hu: &[f64], u: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    check_dim(q.dim(), hu.len())?;
    check_dim(q.dim(), u.len())?;
    let qu = q.mul_vec(u)?;
    let uhu = dot(u, hu);
    let uqu = dot(u, &qu);
    Ok((qu, uqu, uhu))
}

/// Davidon-Fletcher-Powell update toward `H` along `u`.
pub fn dfp_update(q: &SymMatrix, hu: &[f64], u: &[f64]) -> Result<SymMatrix> {
    let (qu, uqu, uhu) = curvature_terms(q, hu, u)?;
    if !(uhu > 0.0) {
        return Err(Error::DegenerateCurvature(uhu));
    }
    let c = (1.0 + uqu / uhu) / uhu;
    Ok(SymMatrix::from_upper_fn(q.dim(), |i, j| {
        q.get(i, j) - (hu[i] * qu[j] + qu[i] * hu[j]) / uhu + c * (hu[i] * hu[j])
    }))
}

/// Broyden-Fletcher-Goldfarb-Shanno update toward `H` along `u`.
pub fn bfgs_update(q: &SymMatrix, hu: &[f64], u: &[f64]) -> Result<SymMatrix> {
    let (qu, uqu, uhu) = curvature_terms(q, hu, u)?;
    if !(uhu > 0.0) {
        return Err(Error::DegenerateCurvature(uhu));
    }
    if !(uqu > 0.0) {
        return Err(Error::DegenerateCurvature(uqu));
    }
    Ok(SymMatrix::from_upper_fn(q.dim(), |i, j| {
        q.get(i, j) - (qu[i] * qu[j]) / uqu + (hu[i] * hu[j]) / uhu
    }))
}

/// `tau * DFP + (1 - tau) * SR1`; a skipped SR1 contributes `Q` itself.
pub fn broyden_update(q: &SymMatrix, hu: &[f64], u: &[f64], tau: f64) -> Result<SymMatrix> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidRange(format!("tau = {tau} outside [0, 1]")));
    }
    let sr1 = || -> Result<SymMatrix> {
        Ok(sr1_update(q, hu, u, SR1_TOL_REL)?.unwrap_or_else(|| q.clone()))
    };
    if tau == 0.0 {
        return sr1();
    }
    if tau == 1.0 {
        return dfp_update(q, hu, u);
    }
    let dfp = dfp_update(q, hu, u)?;
    let sr1 = sr1()?;
    Ok(SymMatrix::from_upper_fn(q.dim(), |i, j| {
        tau * dfp.get(i, j) + (1.0 - tau) * sr1.get(i, j)
    }))
}

fn basis(dim: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[i] = 1.0;
    e
}

/// One SR1 step of `state` toward `target` along an arbitrary direction.
pub fn sr1_along<T: TargetAccess + ?Sized>(
    state: &mut ApproxState,
    target: &T,
    u: &[f64],
) -> Result<UpdateOutcome> {
    check_dim(state.dim(), target.dim())?;
    let hu = target.apply(u)?;
    match sr1_update(&state.q, &hu, u, SR1_TOL_REL)? {
        Some(q) => {
            state.replace(q);
            state.applied += 1;
            Ok(UpdateOutcome::Applied)
        }
        None => {
            state.skipped += 1;
            Ok(UpdateOutcome::Skipped)
        }
    }
}

/// Greedy SR1: update along the basis vector chosen by [`greedy_vector`].
pub fn gsr1<T: TargetAccess + ?Sized>(
    state: &mut ApproxState,
    target: &T,
) -> Result<UpdateOutcome> {
    check_dim(state.dim(), target.dim())?;
    let i = greedy_vector(&state.q, target.diag())?;
    sr1_along(state, target, &basis(state.dim(), i))
}

/// `n` nested greedy SR1 updates against the same target. Returns how many
/// were applied (the rest were skipped).
pub fn gsr1_n<T: TargetAccess + ?Sized>(
    state: &mut ApproxState,
    target: &T,
    n: usize,
) -> Result<usize> {
    let mut applied = 0;
    for _ in 0..n {
        if gsr1(state, target)? == UpdateOutcome::Applied {
            applied += 1;
        }
    }
    Ok(applied)
}

/// `Q <- (1 + m r) Q`, keeping a fresh factorization fresh.
pub fn scale_correction(state: &mut ApproxState, m: f64, r: f64) {
    let c = 1.0 + m * r;
    if c == 1.0 {
        return;
    }
    state.q.scale_mut(c);
    if let Some(f) = state.fact.as_mut() {
        f.rescale(c);
    }
}
