//! Turns merged settings into a problem instance and solver configurations.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use spqn_core::data::{read_libsvm_file, SynthOptions};
use spqn_core::{
    AucProblem, Constants, Dataset, DebiasParams, DebiasProblem, Method, QuadraticSaddle,
    SaddleProblem, SolverConfig,
};

use crate::config::Settings;

pub const OUTDIR_ENV: &str = "SPQN_OUTDIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Quadratic,
    Auc,
    Debias,
}

impl std::str::FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "quadratic" => Ok(ProblemKind::Quadratic),
            "auc" => Ok(ProblemKind::Auc),
            "debias" => Ok(ProblemKind::Debias),
            _ => Err("expected quadratic, auc or debias".into()),
        }
    }
}

/// A problem instance with its starting point.
pub struct Instance {
    pub problem: Box<dyn SaddleProblem>,
    pub z0: Vec<f64>,
    pub description: String,
    /// Set when the sampled curvature fell below the regularization floor.
    pub warning: Option<String>,
}

pub fn outdir(settings: &Settings) -> PathBuf {
    settings
        .raw("outdir")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os(OUTDIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("spqn-out"))
}

pub fn methods(settings: &Settings, default: &[Method]) -> Result<Vec<Method>> {
    let list = settings
        .list::<Method>("method")?
        .unwrap_or_else(|| default.to_vec());
    if list.is_empty() {
        bail!("key 'method' lists no methods");
    }
    let mut seen = Vec::new();
    for m in list {
        if seen.contains(&m) {
            bail!("method '{m}' listed twice in key 'method'");
        }
        seen.push(m);
    }
    Ok(seen)
}

pub fn inner_rounds(settings: &Settings) -> Result<Vec<usize>> {
    let list = settings
        .list::<usize>("n")?
        .unwrap_or_else(|| vec![SolverConfig::default().n]);
    if list.is_empty() {
        bail!("key 'n' lists no values");
    }
    Ok(list)
}

/// Solver configuration for one method and inner-round count.
pub fn solver_config(settings: &Settings, method: Method, n: usize) -> Result<SolverConfig> {
    let base = SolverConfig::default();
    let cfg = SolverConfig {
        method,
        alpha: settings.get_or("alpha", base.alpha)?,
        n,
        m_override: settings.get("M")?,
        eg_step: settings.get("eg-step")?,
        max_iters: settings.get_or("max-iters", base.max_iters)?,
        tol: settings.get_or("tol", base.tol)?,
        seed: settings.get_or("seed", base.seed)?,
        eta_tracking: settings.flag("eta-tracking", base.eta_tracking)?,
        correction: settings.flag("correction", base.correction)?,
        record_timing: settings.flag("timing", base.record_timing)?,
    };
    cfg.validate().context("invalid solver settings")?;
    Ok(cfg)
}

pub fn instance(settings: &Settings) -> Result<Instance> {
    let kind: ProblemKind = settings.get_or("problem", ProblemKind::Quadratic)?;
    let seed: u64 = settings.get_or("seed", 0)?;
    match kind {
        ProblemKind::Quadratic => {
            let dx = settings.get_or("dx", 10usize)?;
            let dy = settings.get_or("dy", 10usize)?;
            let mu = settings.get_or("mu", 1.0)?;
            let l1 = settings.get_or("L1", 10.0)?;
            let q = QuadraticSaddle::random(seed, dx, dy, mu, l1)
                .context("building quadratic instance")?;
            let z0 = q.random_start(seed);
            let description = format!(
                "quadratic dx={dx} dy={dy} {}",
                describe_constants(&q.constants())
            );
            Ok(Instance {
                problem: Box::new(q),
                z0,
                description,
                warning: None,
            })
        }
        ProblemKind::Auc => {
            let ds = dataset(settings, false)?;
            let lambda = settings.get_or("lambda-reg", 1e-2)?;
            let p = AucProblem::new(&ds, lambda).context("building auc problem")?;
            let z0 = vec![0.0; p.dim()];
            let description = format!(
                "auc m={} d={} p={:.4} {}",
                ds.n_samples(),
                ds.n_features(),
                p.p(),
                describe_constants(&p.constants())
            );
            Ok(Instance {
                problem: Box::new(p),
                z0,
                description,
                warning: None,
            })
        }
        ProblemKind::Debias => {
            let ds = dataset(settings, true)?;
            let defaults = DebiasParams::default();
            let params = DebiasParams {
                lambda: settings.get_or("lambda-reg", defaults.lambda)?,
                gamma: settings.get_or("gamma", defaults.gamma)?,
                beta: settings.get_or("beta-reg", defaults.beta)?,
            };
            let p = DebiasProblem::new(&ds, params).context("building debias problem")?;
            let est = *p.estimate();
            let warning = est.floor_binds().then(|| {
                format!(
                    "sampled curvature {:.3e} is below the regularization floor; using mu = {:.3e}",
                    est.mu_sampled, est.constants.mu
                )
            });
            let z0 = vec![0.0; p.dim()];
            let description = format!(
                "debias m={} d={} {}",
                ds.n_samples(),
                ds.n_features(),
                describe_constants(&est.constants)
            );
            Ok(Instance {
                problem: Box::new(p),
                z0,
                description,
                warning,
            })
        }
    }
}

fn describe_constants(c: &Constants) -> String {
    format!(
        "mu={:.4e} L1={:.4e} L2={:.4e} kappa={:.3}",
        c.mu,
        c.l1,
        c.l2,
        c.kappa()
    )
}

/// Loads `dataset` (a LIBSVM path or `synthetic`). With `protected`, the
/// result carries a protected attribute.
fn dataset(settings: &Settings, protected: bool) -> Result<Dataset> {
    let why = if protected {
        "debias needs a LIBSVM path or 'synthetic'"
    } else {
        "auc needs a LIBSVM path or 'synthetic'"
    };
    let source = settings.require("dataset", why)?;
    let mut ds = if source == "synthetic" {
        let seed = settings.get_or("seed", 0u64)?;
        let mut opts = SynthOptions::new(
            seed,
            settings.get_or("synth-m", 2000usize)?,
            settings.get_or("synth-d", 50usize)?,
            settings.get_or("synth-p", if protected { 0.5 } else { 0.25 })?,
            settings.get_or("synth-sep", 1.0)?,
        );
        if protected {
            opts = opts.with_protected(settings.get_or("synth-protected", 0usize)?, 0.5);
        }
        opts.generate().context("generating synthetic dataset")?
    } else {
        let mut ds = read_libsvm_file(std::path::Path::new(source), None)
            .with_context(|| format!("reading dataset '{source}'"))?;
        if protected {
            let col: usize = settings
                .get("protected-col")?
                .ok_or_else(|| {
                    anyhow::anyhow!(
                        "missing required key 'protected-col' (debias on a file needs the protected feature index)"
                    )
                })?;
            if col == 0 {
                bail!("invalid value '0' for key 'protected-col': LIBSVM indices start at 1");
            }
            ds = ds
                .extract_protected(col - 1)
                .with_context(|| format!("extracting protected column {col}"))?;
        }
        ds
    };
    if settings.flag("scale", false)? {
        ds.min_max_scale();
    }
    Ok(ds)
}
