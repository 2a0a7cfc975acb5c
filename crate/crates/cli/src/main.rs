//! `spqn`: run and compare saddle point solvers on benchmark problems.
//!
//! Settings come from an optional `key = value` file (`--config`); any flag
//! given on the command line overrides the same key from the file.

mod commands;
mod config;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Settings;

#[derive(Parser)]
#[command(
    name = "spqn",
    version,
    about = "Quasi-Newton saddle point solver benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method and write `<outdir>/<method>.csv`.
    Run(Options),
    /// Run several methods concurrently and write one trace each plus `summary.csv`.
    Compare(Options),
    /// Write `<outdir>/plot.gp` plotting every trace in the output directory.
    Gnuplot(Options),
}

#[derive(Args, Default)]
struct Options {
    /// `key = value` settings file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// quadratic, auc or debias.
    #[arg(long)]
    problem: Option<String>,
    /// LIBSVM file, or `synthetic`.
    #[arg(long)]
    dataset: Option<String>,
    /// 1-based LIBSVM index of the protected feature (debias).
    #[arg(long = "protected-col")]
    protected_col: Option<String>,
    /// Comma separated: mgsr1, extragradient, random_sr1.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// Inner SR1 rounds; a comma separated list sweeps in compare.
    #[arg(long)]
    n: Option<String>,
    /// Correction constant; defaults to 2 kappa^2 L2 / L1.
    #[arg(long = "M")]
    m: Option<String>,
    #[arg(long = "max-iters")]
    max_iters: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory; falls back to $SPQN_OUTDIR, then ./spqn-out.
    #[arg(long)]
    outdir: Option<String>,
    #[arg(long = "eta-tracking", num_args = 0..=1, default_missing_value = "true")]
    eta_tracking: Option<String>,
    /// Quadratic x dimension.
    #[arg(long)]
    dx: Option<String>,
    /// Quadratic y dimension.
    #[arg(long)]
    dy: Option<String>,
    /// Quadratic strong convexity modulus.
    #[arg(long)]
    mu: Option<String>,
    /// Quadratic Hessian norm bound.
    #[arg(long = "L1")]
    l1: Option<String>,
    #[arg(long = "lambda-reg")]
    lambda_reg: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long = "beta-reg")]
    beta_reg: Option<String>,
    /// Min-max scale features to [0, 1].
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    scale: Option<String>,
    /// Record per-step wall time in the traces.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    timing: Option<String>,
    /// ExtraGradient stepsize; defaults to 1 / L1.
    #[arg(long = "eg-step")]
    eg_step: Option<String>,
    /// Apply the (1 + M r) scaling.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    correction: Option<String>,
    #[arg(long = "synth-m")]
    synth_m: Option<String>,
    #[arg(long = "synth-d")]
    synth_d: Option<String>,
    #[arg(long = "synth-p")]
    synth_p: Option<String>,
    #[arg(long = "synth-sep")]
    synth_sep: Option<String>,
    #[arg(long = "synth-protected")]
    synth_protected: Option<String>,
}

impl Options {
    fn flags(&self) -> Settings {
        let pairs: [(&str, &Option<String>); 28] = [
            ("problem", &self.problem),
            ("dataset", &self.dataset),
            ("protected-col", &self.protected_col),
            ("method", &self.method),
            ("alpha", &self.alpha),
            ("n", &self.n),
            ("M", &self.m),
            ("max-iters", &self.max_iters),
            ("tol", &self.tol),
            ("seed", &self.seed),
            ("outdir", &self.outdir),
            ("eta-tracking", &self.eta_tracking),
            ("dx", &self.dx),
            ("dy", &self.dy),
            ("mu", &self.mu),
            ("L1", &self.l1),
            ("lambda-reg", &self.lambda_reg),
            ("gamma", &self.gamma),
            ("beta-reg", &self.beta_reg),
            ("scale", &self.scale),
            ("timing", &self.timing),
            ("eg-step", &self.eg_step),
            ("correction", &self.correction),
            ("synth-m", &self.synth_m),
            ("synth-d", &self.synth_d),
            ("synth-p", &self.synth_p),
            ("synth-sep", &self.synth_sep),
            ("synth-protected", &self.synth_protected),
        ];
        let mut s = Settings::default();
        for (key, value) in pairs {
            if let Some(v) = value {
                s.set(key, v.trim());
            }
        }
        s
    }

    fn settings(&self) -> anyhow::Result<Settings> {
        let mut s = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        s.overlay(&self.flags());
        Ok(s)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run(o) => o.settings().and_then(|s| commands::run(&s)),
        Command::Compare(o) => o.settings().and_then(|s| commands::compare(&s)),
        Command::Gnuplot(o) => o.settings().and_then(|s| commands::gnuplot(&s)),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
