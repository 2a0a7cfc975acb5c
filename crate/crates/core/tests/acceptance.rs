//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::panic;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spqn_core::data::{
    parse_libsvm, parse_libsvm_with_dim, read_trace_csv, synth_binary, write_libsvm,
    write_trace_csv, SynthOptions,
};
use spqn_core::greedy_qn::{gsr1, UpdateOutcome};
use spqn_core::linalg::{eig_extremes, loewner_leq, norm, sub};
use spqn_core::problems::{
    default_fd_step, estimate_constants, finite_diff_gradient, finite_diff_hessian, sample_points,
};
use spqn_core::solver::{default_m, solve_observed};
use spqn_core::*;

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(u32, &str, Option<Duration>, Check); 10] = [
        (
            1,
            "finite recovery within d greedy updates",
            Some(Duration::from_secs(1)),
            finite_recovery,
        ),
        (
            2,
            "rank(Q - H) drops by one per applied update",
            None,
            rank_monotonicity,
        ),
        (
            3,
            "Loewner sandwich H_k <= Q_k along runs",
            Some(Duration::from_secs(30)),
            loewner_sandwich,
        ),
        (
            4,
            "per-iteration rate bound with tracked eta",
            Some(Duration::from_secs(10)),
            rate_bound,
        ),
        (
            5,
            "AUC/debias derivatives match finite differences",
            Some(Duration::from_secs(10)),
            derivatives,
        ),
        (
            6,
            "spectrum of squared Hessian within [mu^2, L1^2]",
            Some(Duration::from_secs(30)),
            squared_spectrum,
        ),
        (
            7,
            "MGSR1 vs ExtraGradient and Random-SR1 on synthetic data",
            Some(Duration::from_secs(300)),
            trend,
        ),
        (
            8,
            "final lambda non-increasing in inner rounds n",
            None,
            inner_rounds,
        ),
        (
            9,
            "M = 0 and correction-free traces for constant Hessians",
            None,
            zero_m,
        ),
        (
            10,
            "LIBSVM/CSV round trips and deterministic reruns",
            None,
            formats,
        ),
    ];

    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(lim)) if elapsed > lim => {
                Err(format!("took {elapsed:.2?}, limit {lim:?}"))
            }
            (r, _) => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        if result.is_err() {
            failed += 1;
        }
        println!("criterion {id:>2} [{tag}] {name} ({elapsed:.2?}): {detail}");
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn gaussian(seed: u64, d: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn rank(a: &SymMatrix, threshold: f64) -> usize {
    a.to_nalgebra()
        .singular_values()
        .iter()
        .filter(|&&s| s > threshold)
        .count()
}

/// Greedy SR1 from `L1^2 I` toward the squared Hessian of a d = 20 quadratic.
/// Returns the applied-update count, the final relative error and the rank
/// of `Q - H` after each applied update.
fn recovery_run(seed: u64) -> Result<(usize, f64, Vec<usize>), String> {
    let q = QuadraticSaddle::random(seed, 10, 10, 1.0, 10.0).map_err(err)?;
    let target = SquaredHessian::new(q.hessian(&[0.0; 20]).map_err(err)?);
    let h = target.dense();
    let l1 = q.constants().l1;
    let mut state = ApproxState::scaled_identity(20, l1 * l1);
    let (hmax, hnorm) = (eig_extremes(&h).map_err(err)?.1, h.frobenius_norm());
    let threshold = 1e-9 * hmax;
    let mut ranks = vec![rank(&state.q().sub(&h).map_err(err)?, threshold)];
    let mut applied = 0;
    for _ in 0..40 {
        if state.q().sub(&h).map_err(err)?.frobenius_norm() <= 1e-8 * hnorm {
            break;
        }
        if gsr1(&mut state, &target).map_err(err)? == UpdateOutcome::Applied {
            applied += 1;
            ranks.push(rank(&state.q().sub(&h).map_err(err)?, threshold));
        }
    }
    let rel = state.q().sub(&h).map_err(err)?.frobenius_norm() / hnorm;
    Ok((applied, rel, ranks))
}

const RECOVERY_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn finite_recovery() -> Result<String, String> {
    let mut worst = (0, 0.0f64);
    for seed in RECOVERY_SEEDS {
        let (applied, rel, _) = recovery_run(seed)?;
        ensure(applied <= 20 && rel <= 1e-8, || {
            format!("seed {seed}: {applied} updates, rel err {rel:.2e}")
        })?;
        worst = (worst.0.max(applied), worst.1.max(rel));
    }
    Ok(format!(
        "{} seeds, at most {} updates, worst ||Q-H||/||H|| = {:.1e}",
        RECOVERY_SEEDS.len(),
        worst.0,
        worst.1
    ))
}

fn rank_monotonicity() -> Result<String, String> {
    let mut steps = 0;
    for seed in RECOVERY_SEEDS {
        let (_, _, ranks) = recovery_run(seed)?;
        ensure(*ranks.last().unwrap() == 0, || {
            format!("seed {seed}: rank sequence {ranks:?}")
        })?;
        for w in ranks.windows(2) {
            ensure(w[1] + 1 == w[0], || {
                format!("seed {seed}: rank sequence {ranks:?}")
            })?;
            steps += 1;
        }
    }
    Ok(format!(
        "{steps} applied updates, each dropped the rank by exactly 1 down to 0"
    ))
}

/// Runs MGSR1 and checks `H_k <= Q_k` before every step. Returns the number
/// of iterations checked.
fn sandwich_run<P: SaddleProblem>(
    problem: &P,
    cfg: &SolverConfig,
    z0: &[f64],
) -> Result<usize, String> {
    let mut checked = 0;
    let mut violation: Option<String> = None;
    let trace = solve_observed(problem, cfg, z0, |view| {
        if violation.is_some() {
            return;
        }
        let h = view.target.expect("quasi-Newton view").dense();
        match loewner_leq(&h, view.q.expect("quasi-Newton view"), 1e-8) {
            Ok(true) => checked += 1,
            Ok(false) => violation = Some(format!("sandwich violated at iteration {}", view.k)),
            Err(e) => violation = Some(format!("iteration {}: {e}", view.k)),
        }
    })
    .map_err(err)?;
    if let Some(v) = violation {
        return Err(v);
    }
    ensure(trace.status != Status::Diverged, || {
        format!("run diverged: {:?}", trace.failure)
    })?;
    Ok(checked)
}

fn loewner_sandwich() -> Result<String, String> {
    let mut quad_iters = 0;
    for trial in 0..100u64 {
        let (dx, dy) = if trial % 2 == 0 { (3, 2) } else { (10, 10) };
        let l1 = 2.0 + (trial % 9) as f64;
        let q = QuadraticSaddle::random(1000 + trial, dx, dy, 1.0, l1).map_err(err)?;
        let cfg = SolverConfig {
            n: 1,
            max_iters: 60,
            ..SolverConfig::default()
        };
        quad_iters += sandwich_run(&q, &cfg, &gaussian(trial, dx + dy))
            .map_err(|e| format!("trial {trial}: {e}"))?;
    }
    let mut debias_iters = 0;
    for seed in 0..3u64 {
        let ds = SynthOptions::new(seed, 200, 30, 0.5, 1.0)
            .with_protected(0, 0.5)
            .generate()
            .map_err(err)?;
        let prob = DebiasProblem::new(&ds, DebiasParams::default()).map_err(err)?;
        let cfg = SolverConfig {
            n: 20,
            max_iters: 300,
            ..SolverConfig::default()
        };
        debias_iters += sandwich_run(&prob, &cfg, &vec![0.0; 31])
            .map_err(|e| format!("debias seed {seed}: {e}"))?;
    }
    Ok(format!(
        "100 quadratic trials ({quad_iters} iterations), 3 debias runs ({debias_iters} iterations)"
    ))
}

fn rate_bound() -> Result<String, String> {
    let mut checked = 0;
    let mut tightest = f64::INFINITY;
    for seed in 0..3u64 {
        let q = QuadraticSaddle::random(seed, 15, 15, 1.0, 100.0).map_err(err)?;
        let cfg = SolverConfig {
            n: 5,
            alpha: 1.0,
            eta_tracking: true,
            ..SolverConfig::default()
        };
        let t = solve(&q, &cfg, &gaussian(40 + seed, 30)).map_err(err)?;
        ensure(t.status == Status::Converged, || {
            format!("seed {seed}: {:?}", t.status)
        })?;
        for w in t.records.windows(2) {
            let eta = w[0].eta.ok_or("eta not recorded")?;
            let bound = (1.0 - 1.0 / eta) * w[0].lambda;
            ensure(w[1].lambda <= bound + 1e-9, || {
                format!(
                    "seed {seed}, k={}: {:.3e} > {:.3e}",
                    w[0].k, w[1].lambda, bound
                )
            })?;
            tightest = tightest.min(bound + 1e-9 - w[1].lambda);
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} iterations checked, smallest slack {tightest:.2e}"
    ))
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b)) / norm(b).max(1e-300)
}

fn fd_check<P: SaddleProblem>(name: &str, p: &P, seed: u64) -> Result<(f64, f64), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut g_worst, mut h_worst) = (0.0f64, 0.0f64);
    for i in 0..20 {
        let z: Vec<f64> = (0..p.dim())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let h = default_fd_step(&z);
        let g_err = rel_err(
            &finite_diff_gradient(p, &z, h).map_err(err)?,
            &p.gradient(&z).map_err(err)?,
        );
        let fh = finite_diff_hessian(p, &z, h).map_err(err)?;
        let h_err = rel_err(fh.as_slice(), p.hessian(&z).map_err(err)?.as_slice());
        ensure(g_err <= 1e-5 && h_err <= 1e-4, || {
            format!("{name} point {i}: grad {g_err:.1e}, hess {h_err:.1e}")
        })?;
        g_worst = g_worst.max(g_err);
        h_worst = h_worst.max(h_err);
    }
    Ok((g_worst, h_worst))
}

fn derivatives() -> Result<String, String> {
    let ds = synth_binary(5, 200, 10, 0.25, 1.0).map_err(err)?;
    let auc = AucProblem::new(&ds, 1e-2).map_err(err)?;
    let (ag, ah) = fd_check("auc", &auc, 1)?;
    let ds = SynthOptions::new(6, 200, 10, 0.5, 1.0)
        .with_protected(2, 0.5)
        .generate()
        .map_err(err)?;
    let deb = DebiasProblem::new(&ds, DebiasParams::default()).map_err(err)?;
    let (dg, dh) = fd_check("debias", &deb, 2)?;
    Ok(format!(
        "worst rel err: auc grad {ag:.1e} hess {ah:.1e}; debias grad {dg:.1e} hess {dh:.1e}"
    ))
}

fn spectrum_check<P: SaddleProblem>(
    name: &str,
    p: &P,
    c: Constants,
    points: &[Vec<f64>],
) -> Result<(), String> {
    for (i, z) in points.iter().enumerate() {
        let (lo, hi) = eig_extremes(&p.hessian(z).map_err(err)?.square()).map_err(err)?;
        ensure(lo >= c.mu * c.mu - 1e-6 && hi <= c.l1 * c.l1 + 1e-6, || {
            format!(
                "{name} point {i}: eig in [{lo:.3e}, {hi:.3e}], bounds [{:.3e}, {:.3e}]",
                c.mu * c.mu,
                c.l1 * c.l1
            )
        })?;
    }
    Ok(())
}

fn squared_spectrum() -> Result<String, String> {
    let mut out = Vec::new();
    for seed in 0..3u64 {
        let q = QuadraticSaddle::random(seed, 8, 7, 0.5, 20.0).map_err(err)?;
        let c = q
            .exact_constants()
            .ok_or("quadratic without exact constants")?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..15).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        spectrum_check("quadratic", &q, c, &points)?;
    }
    out.push("quadratic x3 (exact)".to_string());

    let ds = synth_binary(7, 500, 20, 0.25, 1.0).map_err(err)?;
    let auc = AucProblem::new(&ds, 1e-2).map_err(err)?;
    let z0 = vec![0.0; auc.dim()];
    let est = estimate_constants(&auc, &z0, 100).map_err(err)?;
    spectrum_check("auc", &auc, est.constants, &sample_points(&z0, 100))?;
    out.push(format!(
        "auc (mu {:.3e}, L1 {:.3e})",
        est.constants.mu, est.constants.l1
    ));

    let ds = SynthOptions::new(8, 500, 20, 0.5, 1.0)
        .with_protected(0, 0.5)
        .generate()
        .map_err(err)?;
    let deb = DebiasProblem::new(&ds, DebiasParams::default()).map_err(err)?;
    let z0 = vec![0.0; deb.dim()];
    let est = estimate_constants(&deb, &z0, 100).map_err(err)?;
    spectrum_check("debias", &deb, est.constants, &sample_points(&z0, 100))?;
    out.push(format!(
        "debias (mu {:.3e}, L1 {:.3e})",
        est.constants.mu, est.constants.l1
    ));
    Ok(format!("100 points each: {}", out.join(", ")))
}

/// Iterations to reach lambda <= 1e-6, or `None` if the budget ran out.
fn iterations_to(
    problem: &dyn SaddleProblem,
    method: Method,
    seed: u64,
    max_iters: usize,
) -> Result<Option<usize>, String> {
    let cfg = SolverConfig {
        n: 20,
        tol: 1e-6,
        max_iters,
        seed,
        ..SolverConfig::new(method)
    };
    let t = solve(problem, &cfg, &vec![0.0; problem.dim()]).map_err(err)?;
    Ok((t.status == Status::Converged).then(|| t.iterations()))
}

fn trend_for(
    name: &str,
    make: &dyn Fn(u64) -> Result<Box<dyn SaddleProblem>, String>,
) -> Result<String, String> {
    const EG_BUDGET: usize = 20_000;
    let (mut qn, mut rnd, mut eg) = (Vec::new(), Vec::new(), Vec::new());
    let mut eg_losses = Vec::new();
    for seed in 0..10u64 {
        let p = make(seed)?;
        let q = iterations_to(p.as_ref(), Method::Mgsr1, seed, 500)?
            .ok_or(format!("{name} seed {seed}: mgsr1 did not converge"))?;
        let r = iterations_to(p.as_ref(), Method::RandomSr1, seed, 500)?.unwrap_or(usize::MAX);
        let e = iterations_to(p.as_ref(), Method::ExtraGradient, seed, EG_BUDGET)?
            .unwrap_or(usize::MAX);
        if q >= e {
            eg_losses.push(format!("seed {seed}: mgsr1 {q} vs eg {e}"));
        }
        qn.push(q as f64);
        rnd.push(r as f64);
        eg.push(e as f64);
    }
    let (mq, mr, me) = (median(qn), median(rnd), median(eg));
    let summary =
        format!("{name}: median iterations mgsr1 {mq}, random_sr1 {mr}, extragradient {me}");
    ensure(eg_losses.is_empty(), || {
        format!(
            "{summary}; not faster than extragradient on {}",
            eg_losses.join(", ")
        )
    })?;
    ensure(mq <= mr, || format!("{summary}; median above random_sr1"))?;
    Ok(summary)
}

fn trend() -> Result<String, String> {
    let auc = trend_for("auc", &|seed| {
        let ds = synth_binary(seed, 2000, 50, 0.25, 1.0).map_err(err)?;
        Ok(Box::new(AucProblem::new(&ds, 1e-2).map_err(err)?) as Box<dyn SaddleProblem>)
    });
    let deb = trend_for("debias", &|seed| {
        let ds = SynthOptions::new(seed, 2000, 50, 0.5, 1.0)
            .with_protected(0, 0.5)
            .generate()
            .map_err(err)?;
        Ok(
            Box::new(DebiasProblem::new(&ds, DebiasParams::default()).map_err(err)?)
                as Box<dyn SaddleProblem>,
        )
    });
    match (auc, deb) {
        (Ok(a), Ok(d)) => Ok(format!("{a}; {d}")),
        (a, d) => Err([a, d]
            .into_iter()
            .map(|r| match r {
                Ok(s) => format!("ok {s}"),
                Err(s) => format!("failed {s}"),
            })
            .collect::<Vec<_>>()
            .join("; ")),
    }
}

fn inner_rounds() -> Result<String, String> {
    let ns = [1usize, 5, 20];
    let (mut medians, mut steps) = (Vec::new(), Vec::new());
    for n in ns {
        let (mut finals, mut iters) = (Vec::new(), Vec::new());
        for seed in 0..5u64 {
            let q = QuadraticSaddle::random(seed, 25, 25, 1.0, 100.0).map_err(err)?;
            let cfg = SolverConfig {
                n,
                max_iters: 30,
                ..SolverConfig::default()
            };
            let t = solve(&q, &cfg, &gaussian(seed, 50)).map_err(err)?;
            ensure(t.status != Status::Diverged, || {
                format!("n={n} seed {seed} diverged")
            })?;
            // values under the stopping tolerance count as equal
            finals.push(t.final_lambda().max(cfg.tol));
            iters.push(t.iterations() as f64);
        }
        medians.push(median(finals));
        steps.push(median(iters));
    }
    let text = ns
        .iter()
        .zip(medians.iter().zip(&steps))
        .map(|(n, (m, k))| format!("n={n}: {m:.2e} (median {k} iterations used)"))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(medians.windows(2).all(|w| w[1] <= w[0]), || {
        format!("medians increase: {text}")
    })?;
    Ok(format!("median lambda after 30 iterations: {text}"))
}

fn same_run(a: &Trace, b: &Trace) -> bool {
    a.records == b.records && a.final_z == b.final_z && a.status == b.status
}

fn zero_m() -> Result<String, String> {
    let ds = synth_binary(3, 300, 10, 0.25, 1.0).map_err(err)?;
    let auc = AucProblem::new(&ds, 1e-2).map_err(err)?;
    let quad = QuadraticSaddle::random(3, 10, 10, 1.0, 30.0).map_err(err)?;
    ensure(default_m(&auc.constants()) == 0.0, || "auc M != 0".into())?;
    ensure(default_m(&quad.constants()) == 0.0, || {
        "quadratic M != 0".into()
    })?;

    let runs: [(&str, &dyn SaddleProblem, Vec<f64>); 2] = [
        ("auc", &auc, vec![0.0; auc.dim()]),
        ("quadratic", &quad, gaussian(9, 20)),
    ];
    let mut iters = Vec::new();
    for (name, p, z0) in runs {
        for n in [0usize, 3, 20] {
            let with = SolverConfig {
                n,
                correction: true,
                ..SolverConfig::default()
            };
            let without = SolverConfig {
                correction: false,
                ..with.clone()
            };
            let a = solve(p, &with, &z0).map_err(err)?;
            let b = solve(p, &without, &z0).map_err(err)?;
            ensure(same_run(&a, &b), || format!("{name} n={n}: traces differ"))?;
            iters.push(a.iterations());
        }
    }
    Ok(format!(
        "M = 0 for both; 6 paired runs identical ({iters:?} iterations)"
    ))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn trace_bytes(t: &Trace) -> Result<Vec<u8>, String> {
    let mut buf = Vec::new();
    write_trace_csv(t, &mut buf).map_err(err)?;
    Ok(buf)
}

fn formats() -> Result<String, String> {
    for name in ["a9a_layout.libsvm", "adult_layout.libsvm"] {
        let text = std::fs::read_to_string(fixture(name)).map_err(|e| e.to_string())?;
        let ds = parse_libsvm(text.as_bytes()).map_err(err)?;
        let mut out = Vec::new();
        write_libsvm(&ds, &mut out).map_err(err)?;
        let back = parse_libsvm_with_dim(out.as_slice(), Some(ds.n_features())).map_err(err)?;
        ensure(back == ds, || {
            format!("{name}: LIBSVM round trip changed the dataset")
        })?;
        ensure(
            ds.n_features() <= 123 && ds.features().iter().all(|&v| v == 0.0 || v == 1.0),
            || format!("{name}: unexpected shape or values"),
        )?;
    }

    let q = QuadraticSaddle::random(2, 6, 6, 1.0, 20.0).map_err(err)?;
    let z0 = gaussian(2, 12);
    let cfg = SolverConfig {
        n: 2,
        eta_tracking: true,
        ..SolverConfig::default()
    };
    let t = solve(&q, &cfg, &z0).map_err(err)?;
    let bytes = trace_bytes(&t)?;
    let (recs, status) = read_trace_csv(bytes.as_slice()).map_err(err)?;
    ensure(status == t.status && recs.len() == t.records.len(), || {
        "CSV round trip lost records".into()
    })?;
    for (a, b) in recs.iter().zip(&t.records) {
        let bits = |r: &IterationRecord| {
            (
                r.k,
                r.lambda.to_bits(),
                r.r.to_bits(),
                r.step_time_ms.to_bits(),
                r.skipped_updates,
                r.eta.map(f64::to_bits),
            )
        };
        ensure(bits(a) == bits(b), || {
            format!("CSV round trip changed record {}", b.k)
        })?;
    }

    for method in Method::ALL {
        let cfg = SolverConfig {
            n: 4,
            seed: 11,
            max_iters: 200,
            ..SolverConfig::new(method)
        };
        let first = trace_bytes(&solve(&q, &cfg, &z0).map_err(err)?)?;
        let second = trace_bytes(&solve(&q, &cfg, &z0).map_err(err)?)?;
        ensure(first == second, || format!("{method}: reruns differ"))?;
    }
    Ok(format!(
        "2 LIBSVM fixtures, {}-row CSV bit-exact, 3 methods rerun byte-identical",
        t.records.len()
    ))
}
