use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use spqn_core::data::write_trace_csv;
use spqn_core::{solve, Method, SolverConfig, Status, Trace};

use crate::config::Settings;
use crate::setup::{inner_rounds, instance, methods, outdir, solver_config, Instance};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLOT_FILE: &str = "plot.gp";

/// Process exit code for a finished run.
pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Converged => 0,
        Status::MaxIters => 2,
        Status::Diverged => 3,
    }
}

fn severity(status: Status) -> u8 {
    match status {
        Status::Converged => 0,
        Status::MaxIters => 1,
        Status::Diverged => 2,
    }
}

struct Outcome {
    file: String,
    trace: Trace,
    wall_ms: f64,
}

fn announce(inst: &Instance) {
    println!("{}", inst.description);
    if let Some(w) = &inst.warning {
        eprintln!("warning: {w}");
    }
}

fn timed_solve(inst: &Instance, cfg: &SolverConfig) -> Result<(Trace, f64)> {
    let start = Instant::now();
    let trace = solve(inst.problem.as_ref(), cfg, &inst.z0)
        .with_context(|| format!("running {}", cfg.method))?;
    Ok((trace, start.elapsed().as_secs_f64() * 1e3))
}

fn write_trace(dir: &Path, file: &str, trace: &Trace) -> Result<PathBuf> {
    let path = dir.join(file);
    let mut out = BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    write_trace_csv(trace, &mut out)?;
    out.flush()?;
    Ok(path)
}

fn create_outdir(settings: &Settings) -> Result<PathBuf> {
    let dir = outdir(settings);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn report(method: Method, n: Option<usize>, trace: &Trace, wall_ms: f64) {
    let n = n.map(|n| format!(" n={n}")).unwrap_or_default();
    println!(
        "{method}{n}: status={} iterations={} final_lambda={:.6e} wall_ms={wall_ms:.3}",
        trace.status,
        trace.iterations(),
        trace.final_lambda()
    );
    if let Some(reason) = &trace.failure {
        eprintln!("{method}{n}: {reason}");
    }
}

pub fn run(settings: &Settings) -> Result<i32> {
    let method = match methods(settings, &[Method::Mgsr1])?.as_slice() {
        [m] => *m,
        _ => bail!("run takes a single method in key 'method'; use compare for several"),
    };
    let n = match inner_rounds(settings)?.as_slice() {
        [n] => *n,
        _ => bail!("run takes a single value in key 'n'; use compare for a sweep"),
    };
    let cfg = solver_config(settings, method, n)?;
    let inst = instance(settings)?;
    announce(&inst);
    let dir = create_outdir(settings)?;
    let (trace, wall_ms) = timed_solve(&inst, &cfg)?;
    let path = write_trace(&dir, &format!("{method}.csv"), &trace)?;
    report(
        method,
        method.uses_inner_rounds().then_some(n),
        &trace,
        wall_ms,
    );
    println!("trace written to {}", path.display());
    Ok(exit_code(trace.status))
}

pub fn compare(settings: &Settings) -> Result<i32> {
    let methods = methods(settings, &Method::ALL)?;
    if methods.len() < 2 {
        bail!("compare needs at least two methods in key 'method'");
    }
    let rounds = inner_rounds(settings)?;
    let sweep = rounds.len() > 1;
    let mut jobs = Vec::new();
    for &method in &methods {
        if method.uses_inner_rounds() {
            for &n in &rounds {
                let file = if sweep {
                    format!("{method}_n{n}.csv")
                } else {
                    format!("{method}.csv")
                };
                jobs.push((file, solver_config(settings, method, n)?));
            }
        } else {
            jobs.push((
                format!("{method}.csv"),
                solver_config(settings, method, rounds[0])?,
            ));
        }
    }
    let inst = instance(settings)?;
    announce(&inst);
    let dir = create_outdir(settings)?;

    let results: Vec<Result<(Trace, f64)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(_, cfg)| {
                let inst = &inst;
                scope.spawn(move || timed_solve(inst, cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });

    let mut outcomes = Vec::with_capacity(jobs.len());
    for ((file, _), result) in jobs.into_iter().zip(results) {
        let (trace, wall_ms) = result?;
        write_trace(&dir, &file, &trace)?;
        outcomes.push(Outcome {
            file,
            trace,
            wall_ms,
        });
    }

    let mut summary = String::from("method,n,final_lambda,iters,wall_ms\n");
    let mut worst = Status::Converged;
    for o in &outcomes {
        let cfg = &o.trace.config;
        let n = cfg.method.uses_inner_rounds().then_some(cfg.n);
        report(cfg.method, n, &o.trace, o.wall_ms);
        summary.push_str(&format!(
            "{},{},{:.16e},{},{:.3}\n",
            cfg.method,
            n.map(|n| n.to_string()).unwrap_or_default(),
            o.trace.final_lambda(),
            o.trace.iterations(),
            o.wall_ms
        ));
        if severity(o.trace.status) > severity(worst) {
            worst = o.trace.status;
        }
    }
    let summary_path = dir.join(SUMMARY_FILE);
    fs::write(&summary_path, summary)
        .with_context(|| format!("writing {}", summary_path.display()))?;
    let files: Vec<&str> = outcomes.iter().map(|o| o.file.as_str()).collect();
    println!(
        "wrote {} and {SUMMARY_FILE} to {}",
        files.join(", "),
        dir.display()
    );
    Ok(exit_code(worst))
}

/// Writes a gnuplot script plotting every trace CSV in the output directory.
pub fn gnuplot(settings: &Settings) -> Result<i32> {
    let dir = outdir(settings);
    let mut traces: Vec<String> = fs::read_dir(&dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.file_name().to_string_lossy().into_owned())
        .filter(|name| name.ends_with(".csv") && name != SUMMARY_FILE)
        .collect();
    traces.sort();
    if traces.is_empty() {
        bail!("no trace CSVs in {}", dir.display());
    }
    let path = dir.join(PLOT_FILE);
    fs::write(&path, plot_script(&traces))
        .with_context(|| format!("writing {}", path.display()))?;
    println!(
        "wrote {}; render with: cd {} && gnuplot {PLOT_FILE}",
        path.display(),
        dir.display()
    );
    Ok(0)
}

fn plot_script(traces: &[String]) -> String {
    let mut s = String::from(
        "set datafile separator ','\n\
         set logscale y\n\
         set format y '%.0e'\n\
         set xlabel 'iteration'\n\
         set ylabel 'lambda'\n\
         set key top right\n\
         set terminal pngcairo size 900,600\n\
         set output 'convergence.png'\n\
         plot ",
    );
    let lines: Vec<String> = traces
        .iter()
        .map(|file| {
            let title = file.trim_end_matches(".csv");
            format!("'{file}' every ::1 using 1:2 with lines title '{title}'")
        })
        .collect();
    s.push_str(&lines.join(", \\\n     "));
    s.push('\n');
    s
}
