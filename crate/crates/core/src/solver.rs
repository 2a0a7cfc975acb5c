//! Solver drivers: MGSR1-SP, ExtraGradient and the Random-SR1 baseline.
//!
//! All three share one loop in [`solve_observed`]. An iteration `k` computes
//! the gradient at `z_k`, records `lambda_k = ||g_k||`, and then either stops
//! (converged, iteration budget spent, or diverged) or takes a step.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::greedy_qn::{
    gsr1, scale_correction, sr1_along, ApproxState, SquaredHessian, TargetAccess, UpdateOutcome,
};
use crate::linalg::{eig_extremes, norm, spd_factorize, SymMatrix};

/// `lambda_k` above this (or non-finite) ends the run as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Curvature constants of a saddle objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Strong convexity / concavity modulus.
    pub mu: f64,
    /// Lipschitz constant of the gradient.
    pub l1: f64,
    /// Lipschitz constant of the Hessian.
    pub l2: f64,
}

impl Constants {
    pub fn kappa(&self) -> f64 {
        self.l1 / self.mu
    }

    /// `beta = L2 / (2 mu^2)`, the quadratic coefficient of the rate bound.
    pub fn beta(&self) -> f64 {
        self.l2 / (2.0 * self.mu * self.mu)
    }
}

/// A smooth strongly-convex-strongly-concave objective `f(x, y)` on the
/// stacked variable `z = [x; y]`.
pub trait SaddleProblem: Sync {
    /// `(d_x, d_y)`.
    fn dims(&self) -> (usize, usize);

    fn dim(&self) -> usize {
        let (dx, dy) = self.dims();
        dx + dy
    }

    fn value(&self, z: &[f64]) -> Result<f64>;

    fn gradient(&self, z: &[f64]) -> Result<Vec<f64>>;

    /// The explicit, generally indefinite, Hessian.
    fn hessian(&self, z: &[f64]) -> Result<SymMatrix>;

    fn constants(&self) -> Constants;

    /// Constants known in closed form, if any.
    fn exact_constants(&self) -> Option<Constants> {
        None
    }

    /// True when the Hessian does not depend on `z`.
    fn hessian_is_constant(&self) -> bool {
        false
    }

    /// Lower bound on `mu` implied by the regularizers.
    fn mu_floor(&self) -> f64 {
        0.0
    }
}

/// `M = 2 kappa^2 L2 / L1`.
pub fn default_m(constants: &Constants) -> f64 {
    let kappa = constants.kappa();
    2.0 * kappa * kappa * constants.l2 / constants.l1
}

/// Euclidean norm of the gradient.
pub fn convergence_measure(g: &[f64]) -> f64 {
    norm(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Mgsr1,
    ExtraGradient,
    RandomSr1,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Mgsr1, Method::ExtraGradient, Method::RandomSr1];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Mgsr1 => "mgsr1",
            Method::ExtraGradient => "extragradient",
            Method::RandomSr1 => "random_sr1",
        }
    }

    /// Whether the method uses the inner-round count `n`.
    pub fn uses_inner_rounds(&self) -> bool {
        !matches!(self, Method::ExtraGradient)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mgsr1" | "mgsr1-sp" | "gsr1" => Ok(Method::Mgsr1),
            "extragradient" | "eg" => Ok(Method::ExtraGradient),
            "random_sr1" | "random-sr1" | "randomsr1" => Ok(Method::RandomSr1),
            other => Err(Error::InvalidRange(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Quasi-Newton stepsize `alpha`.
    pub alpha: f64,
    /// Greedy (or random) SR1 rounds per iteration against `H_k`.
    pub n: usize,
    /// Overrides `M = 2 kappa^2 L2 / L1` when set.
    pub m_override: Option<f64>,
    /// ExtraGradient stepsize; `1 / L1` when unset.
    pub eg_step: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// Record `eta_k` each iteration (costs a generalized eigenproblem).
    pub eta_tracking: bool,
    /// Apply the `(1 + M r_k)` scaling.
    pub correction: bool,
    /// Measure per-step wall time; when off, `step_time_ms` is 0 and traces
    /// are bit-reproducible.
    pub record_timing: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Mgsr1,
            alpha: 1.0,
            n: 20,
            m_override: None,
            eg_step: None,
            max_iters: 500,
            tol: 1e-8,
            seed: 0,
            eta_tracking: false,
            correction: true,
            record_timing: false,
        }
    }
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidRange(what.to_string()));
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad("alpha must be finite and > 0");
        }
        if let Some(m) = self.m_override {
            if !(m.is_finite() && m >= 0.0) {
                return bad("M must be finite and >= 0");
            }
        }
        if let Some(s) = self.eg_step {
            if !(s.is_finite() && s > 0.0) {
                return bad("extragradient step must be finite and > 0");
            }
        }
        if !(self.tol > 0.0) || self.tol.is_nan() {
            return bad("tol must be > 0");
        }
        Ok(())
    }

    /// The correction constant `M` used for `problem`.
    pub fn m_for(&self, constants: &Constants) -> f64 {
        self.m_override.unwrap_or_else(|| default_m(constants))
    }
}

/// One row of a convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub lambda: f64,
    /// `||z_{k+1} - z_k||`; 0 on the terminal record.
    pub r: f64,
    pub step_time_ms: f64,
    /// SR1 updates skipped during this iteration.
    pub skipped_updates: usize,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIters,
    Diverged,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::MaxIters => "MaxIters",
            Status::Diverged => "Diverged",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Converged" => Ok(Status::Converged),
            "MaxIters" => Ok(Status::MaxIters),
            "Diverged" => Ok(Status::Diverged),
            other => Err(Error::InvalidRange(format!("unknown status '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub config: SolverConfig,
    pub records: Vec<IterationRecord>,
    pub status: Status,
    pub final_z: Vec<f64>,
    /// Why the run diverged, when it did.
    pub failure: Option<String>,
}

impl Trace {
    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_lambda(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.lambda)
    }
}

/// `G(z) = (grad_x f, -grad_y f)`.
fn monotone_operator<P: SaddleProblem + ?Sized>(problem: &P, z: &[f64]) -> Result<Vec<f64>> {
    let (dx, _) = problem.dims();
    let mut g = problem.gradient(z)?;
    g[dx..].iter_mut().for_each(|v| *v = -*v);
    Ok(g)
}

/// One ExtraGradient step with stepsize `s`.
pub fn extragradient_step<P: SaddleProblem + ?Sized>(
    problem: &P,
    z: &[f64],
    s: f64,
) -> Result<Vec<f64>> {
    check_dim(problem.dim(), z.len())?;
    let g = monotone_operator(problem, z)?;
    let w: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - s * gi).collect();
    let gw = monotone_operator(problem, &w)?;
    let next: Vec<f64> = z.iter().zip(&gw).map(|(zi, gi)| zi - s * gi).collect();
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::NonFinite("extragradient iterate"))
    }
}

/// How SR1 directions are chosen.
pub enum DirectionRule<'a> {
    Greedy,
    /// i.i.d. standard normal directions.
    Random(&'a mut ChaCha8Rng),
}

impl DirectionRule<'_> {
    fn update<T: TargetAccess>(
        &mut self,
        state: &mut ApproxState,
        target: &T,
    ) -> Result<UpdateOutcome> {
        match self {
            DirectionRule::Greedy => gsr1(state, target),
            DirectionRule::Random(rng) => {
                let u: Vec<f64> = (0..state.dim())
                    .map(|_| StandardNormal.sample(&mut **rng))
                    .collect();
                sr1_along(state, target, &u)
            }
        }
    }
}

/// Parameters of a single quasi-Newton step.
#[derive(Debug, Clone, Copy)]
pub struct StepParams {
    pub alpha: f64,
    pub n: usize,
    pub m: f64,
    pub correction: bool,
}

/// Result of a quasi-Newton step.
#[derive(Debug, Clone)]
pub struct QnStep {
    pub z_next: Vec<f64>,
    pub r: f64,
    pub skipped: usize,
    /// `H_{k+1}`, reused as the current target of the next iteration.
    pub next_target: SquaredHessian,
}

/// One iteration of the quasi-Newton scheme given `g_k` and `H_k = Ĥ_k²`:
/// step with `Q_k`, `n` rounds against `H_k`, correction by `(1 + M r_k)`,
/// and a final update against `H_{k+1}`.
pub fn quasi_newton_step<P: SaddleProblem + ?Sized>(
    problem: &P,
    z: &[f64],
    g: &[f64],
    current: &SquaredHessian,
    state: &mut ApproxState,
    params: &StepParams,
    rule: &mut DirectionRule<'_>,
) -> Result<QnStep> {
    check_dim(problem.dim(), z.len())?;
    check_dim(z.len(), state.dim())?;
    let skipped_before = state.skipped_count();

    let hg = current.hessian().mul_vec(g)?;
    let direction = state.solve(&hg)?;
    let z_next: Vec<f64> = z
        .iter()
        .zip(&direction)
        .map(|(zi, di)| zi - params.alpha * di)
        .collect();
    if !z_next.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("quasi-Newton iterate"));
    }

    for _ in 0..params.n {
        rule.update(state, current)?;
    }

    let r = params.alpha * norm(&direction);
    if params.correction {
        scale_correction(state, params.m, r);
    }

    let next_target = SquaredHessian::new(problem.hessian(&z_next)?);
    rule.update(state, &next_target)?;
    // refresh now so an SPD failure surfaces in this iteration
    state.factorization()?;

    Ok(QnStep {
        z_next,
        r,
        skipped: state.skipped_count() - skipped_before,
        next_target,
    })
}

fn step_params<P: SaddleProblem + ?Sized>(problem: &P, cfg: &SolverConfig) -> StepParams {
    StepParams {
        alpha: cfg.alpha,
        n: cfg.n,
        m: cfg.m_for(&problem.constants()),
        correction: cfg.correction,
    }
}

/// Single MGSR1-SP iteration from scratch at `z`.
pub fn mgsr1_step<P: SaddleProblem + ?Sized>(
    problem: &P,
    z: &[f64],
    state: &mut ApproxState,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, IterationRecord)> {
    let g = problem.gradient(z)?;
    let current = SquaredHessian::new(problem.hessian(z)?);
    let step = quasi_newton_step(
        problem,
        z,
        &g,
        &current,
        state,
        &step_params(problem, cfg),
        &mut DirectionRule::Greedy,
    )?;
    Ok((
        step.z_next,
        bare_record(0, convergence_measure(&g), step.r, step.skipped),
    ))
}

/// Single Random-SR1 iteration from scratch at `z`.
pub fn random_sr1_step<P: SaddleProblem + ?Sized>(
    problem: &P,
    z: &[f64],
    state: &mut ApproxState,
    cfg: &SolverConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, IterationRecord)> {
    let g = problem.gradient(z)?;
    let current = SquaredHessian::new(problem.hessian(z)?);
    let step = quasi_newton_step(
        problem,
        z,
        &g,
        &current,
        state,
        &step_params(problem, cfg),
        &mut DirectionRule::Random(rng),
    )?;
    Ok((
        step.z_next,
        bare_record(0, convergence_measure(&g), step.r, step.skipped),
    ))
}

fn bare_record(k: usize, lambda: f64, r: f64, skipped: usize) -> IterationRecord {
    IterationRecord {
        k,
        lambda,
        r,
        step_time_ms: 0.0,
        skipped_updates: skipped,
        eta: None,
    }
}

/// Smallest `eta` with `Q <= eta H`: the largest eigenvalue of
/// `L^{-1} Q L^{-T}` where `H = L L^T`.
pub fn track_eta(q: &SymMatrix, h: &SymMatrix) -> Result<f64> {
    check_dim(h.dim(), q.dim())?;
    let d = h.dim();
    let fact = spd_factorize(h)?;
    // X = L^{-1} Q, column by column (Q symmetric so rows of Q are its columns)
    let mut x = vec![0.0; d * d];
    for col in 0..d {
        let y = fact.solve_lower(q.row(col))?;
        for i in 0..d {
            x[i * d + col] = y[i];
        }
    }
    // L^{-1} X^T
    let mut m = vec![0.0; d * d];
    for col in 0..d {
        let y = fact.solve_lower(&x[col * d..(col + 1) * d])?;
        for i in 0..d {
            m[i * d + col] = y[i];
        }
    }
    let (_, hi) = eig_extremes(&SymMatrix::from_dense_symmetrize(d, &m)?)?;
    Ok(hi)
}

/// Per-iteration view handed to observers before the step is taken.
pub struct IterationView<'a> {
    pub k: usize,
    pub z: &'a [f64],
    pub g: &'a [f64],
    /// `Q_k`, for quasi-Newton methods.
    pub q: Option<&'a SymMatrix>,
    /// `H_k = Ĥ_k²`, for quasi-Newton methods.
    pub target: Option<&'a SquaredHessian>,
}

/// Runs the configured method from `z0`.
pub fn solve<P: SaddleProblem + ?Sized>(
    problem: &P,
    cfg: &SolverConfig,
    z0: &[f64],
) -> Result<Trace> {
    solve_observed(problem, cfg, z0, |_| {})
}

/// [`solve`] with a callback invoked at every iteration that takes a step.
pub fn solve_observed<P, F>(
    problem: &P,
    cfg: &SolverConfig,
    z0: &[f64],
    mut observe: F,
) -> Result<Trace>
where
    P: SaddleProblem + ?Sized,
    F: FnMut(&IterationView<'_>),
{
    cfg.validate()?;
    check_dim(problem.dim(), z0.len())?;
    let constants = problem.constants();
    let d = problem.dim();
    let params = step_params(problem, cfg);
    let eg_step = cfg.eg_step.unwrap_or(1.0 / constants.l1);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = ApproxState::scaled_identity(d, constants.l1 * constants.l1);
    let mut target: Option<SquaredHessian> = None;
    let mut z = z0.to_vec();
    let mut records = Vec::new();
    let mut failure = None;

    let status = 'outer: loop {
        let k = records.len();
        let g = match problem.gradient(&z) {
            Ok(g) => g,
            Err(e) => {
                failure = Some(e.to_string());
                break Status::Diverged;
            }
        };
        let lambda = convergence_measure(&g);
        let mut record = bare_record(k, lambda, 0.0, 0);
        if !lambda.is_finite() || lambda > DIVERGENCE_THRESHOLD {
            records.push(record);
            failure = Some(format!("gradient norm {lambda:e} out of range"));
            break Status::Diverged;
        }
        if lambda <= cfg.tol {
            records.push(record);
            break Status::Converged;
        }
        if k >= cfg.max_iters {
            records.push(record);
            break Status::MaxIters;
        }

        let started = Instant::now();
        let outcome: Result<(Vec<f64>, f64, usize)> = match cfg.method {
            Method::ExtraGradient => {
                observe(&IterationView {
                    k,
                    z: &z,
                    g: &g,
                    q: None,
                    target: None,
                });
                extragradient_step(problem, &z, eg_step).map(|zn| {
                    let r = norm(&crate::linalg::sub(&zn, &z));
                    (zn, r, 0)
                })
            }
            Method::Mgsr1 | Method::RandomSr1 => {
                let current = match target.take() {
                    Some(t) => t,
                    None => match problem.hessian(&z) {
                        Ok(h) => SquaredHessian::new(h),
                        Err(e) => {
                            records.push(record);
                            failure = Some(e.to_string());
                            break 'outer Status::Diverged;
                        }
                    },
                };
                observe(&IterationView {
                    k,
                    z: &z,
                    g: &g,
                    q: Some(state.q()),
                    target: Some(&current),
                });
                if cfg.eta_tracking {
                    match track_eta(state.q(), &current.dense()) {
                        Ok(eta) => record.eta = Some(eta),
                        Err(e) => {
                            records.push(record);
                            failure = Some(e.to_string());
                            break 'outer Status::Diverged;
                        }
                    }
                }
                let mut rule = match cfg.method {
                    Method::Mgsr1 => DirectionRule::Greedy,
                    _ => DirectionRule::Random(&mut rng),
                };
                quasi_newton_step(problem, &z, &g, &current, &mut state, &params, &mut rule).map(
                    |step| {
                        target = Some(step.next_target);
                        (step.z_next, step.r, step.skipped)
                    },
                )
            }
        };
        if cfg.record_timing {
            record.step_time_ms = started.elapsed().as_secs_f64() * 1e3;
        }
        match outcome {
            Ok((z_next, r, skipped)) => {
                record.r = r;
                record.skipped_updates = skipped;
                records.push(record);
                z = z_next;
            }
            Err(e) => {
                records.push(record);
                failure = Some(e.to_string());
                break Status::Diverged;
            }
        }
    };

    Ok(Trace {
        config: cfg.clone(),
        records,
        status,
        final_z: z,
        failure,
    })
}
