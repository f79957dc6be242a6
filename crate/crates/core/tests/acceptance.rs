//! End-to-end acceptance checks, one PASS/FAIL line per criterion.

use std::path::{Path, PathBuf};
use std::time::Instant;

use flowlab_core::experiment::{self, ExperimentConfig};
use flowlab_core::fbm::{covariance, sample, FbmSpec, Method};
use flowlab_core::fraccalc::{left_frac_integral, left_weyl_derivative, lambda_alpha};
use flowlab_core::norms::w_one_minus_alpha_norm;
use flowlab_core::sde::{solve_forward, Builtin, CoefficientField, SolverConfig};
use flowlab_core::stats::{mean, median, slope};
use flowlab_core::young::{rs_integral, young_bound_check, zahle_integral};
use flowlab_core::{FracOrder, GridPath};
use statrs::function::gamma::gamma;

struct Check {
    label: String,
    passed: bool,
}

fn check(label: impl Into<String>, passed: bool) -> Check {
    Check {
        label: label.into(),
        passed,
    }
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(workspace().join("configs").join(format!("{name}.json"))).expect("shipped config loads")
}

/// Every criterion of a shipped experiment configuration.
fn experiment_checks(name: &str) -> Vec<Check> {
    match experiment::run(&config(name)) {
        Ok(result) => result
            .summary
            .criteria
            .iter()
            .map(|c| check(format!("{name}/{}: {}", c.name, c.detail), c.passed))
            .collect(),
        Err(e) => vec![check(format!("{name}: {e}"), false)],
    }
}

fn samplers() -> Vec<Check> {
    const N: u64 = 10_000;
    const GRID: usize = 256;
    let probes = [64, 128, 192, 256];
    let pairs = [(64, 128), (128, 256), (64, 256), (192, 256)];
    let mut out = Vec::new();
    for hurst in [0.6, 0.75, 0.9] {
        for method in [Method::Cholesky, Method::Circulant] {
            let mut sum_sq = vec![Vec::with_capacity(N as usize); probes.len()];
            let mut sum_prod = vec![Vec::with_capacity(N as usize); pairs.len()];
            for seed in 0..N {
                let spec = FbmSpec::unit(hurst, GRID, seed).unwrap();
                let p = sample(&spec, method).unwrap();
                let v = p.path().values();
                for (acc, &k) in sum_sq.iter_mut().zip(&probes) {
                    acc.push(v[k] * v[k]);
                }
                for (acc, &(a, b)) in sum_prod.iter_mut().zip(&pairs) {
                    acc.push(v[a] * v[b]);
                }
            }
            let band = |data: &[f64], target: f64| {
                let se = flowlab_core::stats::std_error(data);
                (mean(data) - target).abs() <= 3.0 * se
            };
            let t = |k: usize| k as f64 / GRID as f64;
            let var_ok = sum_sq.iter().zip(&probes).all(|(d, &k)| band(d, t(k).powf(2.0 * hurst)));
            let cov_ok = sum_prod
                .iter()
                .zip(&pairs)
                .all(|(d, &(a, b))| band(d, covariance(hurst, t(a), t(b)).unwrap()));
            out.push(check(format!("H = {hurst}, {method:?}: variance within 3 SE"), var_ok));
            out.push(check(format!("H = {hurst}, {method:?}: covariance within 3 SE"), cov_ok));
        }
    }
    out
}

fn fractional_calculus() -> Vec<Check> {
    let n = 4096;
    let mut out = Vec::new();
    for alpha in [0.25, 0.5, 0.75] {
        let a = FracOrder::new(alpha).unwrap();
        for power in [0, 1, 2, 3] {
            let f = GridPath::from_scalar_fn(1.0, n, |t| t.powi(power)).unwrap();
            let i = left_frac_integral(&f, a);
            let c = gamma(power as f64 + 1.0) / gamma(power as f64 + 1.0 + alpha);
            let err = (0..=n)
                .map(|k| (i.point(k)[0] - c * i.time(k).powf(power as f64 + alpha)).abs())
                .fold(0.0, f64::max);
            let worst = err / c;
            out.push(check(
                format!("I^{alpha} t^{power}: sup error relative to sup |I^{alpha} f| is {worst:.2e}"),
                worst <= 1e-4,
            ));
        }
        let f = GridPath::from_scalar_fn(1.0, n, |t| t * (1.0 - t)).unwrap();
        let back = left_weyl_derivative(&left_frac_integral(&f, a), a).unwrap();
        let err = (0..=n).map(|k| (back.point(k)[0] - f.point(k)[0]).abs()).fold(0.0, f64::max);
        out.push(check(format!("D^{alpha} I^{alpha} t(1-t): sup error {err:.2e}"), err <= 1e-3));
    }
    for alpha in [0.2, 0.3, 0.4] {
        let a = FracOrder::new(alpha).unwrap();
        let scale = gamma(alpha) * gamma(1.0 - alpha);
        let violations = (0..100u64)
            .filter(|&seed| {
                let g = sample(&FbmSpec::unit(0.75, 512, seed).unwrap(), Method::Circulant)
                    .unwrap()
                    .into_path();
                scale * lambda_alpha(&g, a).unwrap() > w_one_minus_alpha_norm(&g, a).unwrap()
            })
            .count();
        out.push(check(
            format!("Λ bound at α = {alpha}: {violations} violations over 100 paths"),
            violations == 0,
        ));
    }
    out
}

type Scalar = fn(f64) -> f64;

fn young_integrals() -> Vec<Check> {
    let mut out = Vec::new();
    let mut worst_slack = f64::INFINITY;
    let n = 4096;
    let smooth: [(&str, Scalar, Scalar); 3] = [
        ("sin dt^2", |t| t.sin(), |t| t * t),
        ("exp dcos", |t| t.exp(), |t| t.cos()),
        ("t dt^3", |t| t, |t| t * t * t),
    ];
    for (name, f, g) in smooth {
        let f = GridPath::from_scalar_fn(1.0, n, f).unwrap();
        let g = GridPath::from_scalar_fn(1.0, n, g).unwrap();
        let rs = rs_integral(&f, &g).unwrap()[0];
        let z = zahle_integral(&f, &g, None).unwrap().value[0];
        let gap = (rs - z).abs();
        for alpha in [0.3, 0.4] {
            let r = young_bound_check(&f, &g, FracOrder::new(alpha).unwrap()).unwrap();
            worst_slack = worst_slack.min(r.slack);
        }
        out.push(check(
            format!("{name}: |rs - fractional| = {gap:.2e}"),
            gap <= 1e-3 * (1.0 + rs.abs()),
        ));
    }

    let levels = [256, 512, 1024, 2048];
    let fine = 4096;
    let mut gaps = vec![Vec::new(); levels.len()];
    for seed in 0..20 {
        let b = sample(&FbmSpec::unit(0.75, fine, seed).unwrap(), Method::Circulant)
            .unwrap()
            .into_path();
        for (gap, &m) in gaps.iter_mut().zip(&levels) {
            let g = b.subsample(fine / m).unwrap();
            let f = GridPath::from_scalar_fn(1.0, m, |t| (2.0 * t).cos()).unwrap();
            let rs = rs_integral(&f, &g).unwrap()[0];
            let z = zahle_integral(&f, &g, None).unwrap().value[0];
            gap.push((rs - z).abs());
        }
        let g = b.subsample(4).unwrap();
        let f = GridPath::from_scalar_fn(1.0, g.steps(), |t| (2.0 * t).cos()).unwrap();
        for alpha in [0.3, 0.4] {
            let r = young_bound_check(&f, &g, FracOrder::new(alpha).unwrap()).unwrap();
            worst_slack = worst_slack.min(r.slack);
        }
    }
    let medians: Vec<f64> = gaps.iter().map(|g| median(g)).collect();
    let worst = medians.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
    let shown: Vec<String> = medians.iter().map(|m| format!("{m:.2e}")).collect();
    out.push(check(
        format!("fBm integrator: median gaps [{}], worst shrink factor {worst:.2}", shown.join(", ")),
        worst >= 1.5,
    ));
    out.push(check(format!("bound slack: smallest {worst_slack:.3e}"), worst_slack >= -1e-8));
    out
}

fn solver() -> Vec<Check> {
    let mut out = Vec::new();
    let additive = Builtin::Additive {
        rows: 2,
        cols: 2,
        sigma: vec![1.0, 0.5, -0.25, 2.0],
    };
    let cfg = SolverConfig::centred(1024, 0.75, &additive.constants()).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let b = sample(&FbmSpec::new(0.75, 2, 1.0, 1024, seed).unwrap(), Method::Circulant)
            .unwrap()
            .into_path();
        let x = solve_forward(&[1.0, -1.0], 0.0, &additive, &b, &cfg).unwrap();
        for k in 0..=1024 {
            let w = b.point(k);
            let exact = [1.0 + w[0] + 0.5 * w[1], -1.0 - 0.25 * w[0] + 2.0 * w[1]];
            worst = worst.max((x.point(k)[0] - exact[0]).abs()).max((x.point(k)[1] - exact[1]).abs());
        }
    }
    out.push(check(format!("additive: worst error {worst:.2e}"), worst <= 1e-12));

    let sigma0 = 0.5;
    let geometric = Builtin::Geometric { sigma0 };
    let levels = [128usize, 256, 512, 1024, 2048, 4096];
    let fine = 4096;
    let mut errors = vec![Vec::new(); levels.len()];
    for seed in 0..20 {
        let b = sample(&FbmSpec::unit(0.75, fine, seed).unwrap(), Method::Circulant)
            .unwrap()
            .into_path();
        let exact = (sigma0 * b.last()[0]).exp();
        for (e, &n) in errors.iter_mut().zip(&levels) {
            let driver = b.subsample(fine / n).unwrap();
            let cfg = SolverConfig::centred(n, 0.75, &geometric.constants()).unwrap();
            let x = solve_forward(&[1.0], 0.0, &geometric, &driver, &cfg).unwrap();
            e.push((x.last()[0] - exact).abs());
        }
    }
    let xs: Vec<f64> = levels.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| median(e).ln()).collect();
    let order = -slope(&xs, &ys);
    out.push(check(
        format!("geometric: fitted order {order:.3}, expected 0.5 ± 0.3"),
        (order - 0.5).abs() <= 0.3,
    ));
    out
}

fn reproducibility() -> Vec<Check> {
    let results = workspace().join("results");
    let mut out = Vec::new();
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&results)
        .map(|d| d.filter_map(|e| e.ok().map(|e| e.path())).collect())
        .unwrap_or_default();
    dirs.sort();
    out.push(check(format!("{} shipped results", dirs.len()), !dirs.is_empty()));
    for dir in dirs {
        let name = dir.file_name().unwrap().to_string_lossy().into_owned();
        match experiment::verify(&dir) {
            Ok(v) => out.push(check(
                format!("verify {name}: {} mismatches", v.mismatches.len()),
                v.consistent && v.passed,
            )),
            Err(e) => out.push(check(format!("verify {name}: {e}"), false)),
        }
        let cfg = config(&name);
        let tmp = tempfile::tempdir().unwrap();
        let rerun = experiment::run(&cfg).and_then(|r| r.persist(tmp.path()));
        let same = rerun.is_ok()
            && std::fs::read(tmp.path().join("records.csv")).ok() == std::fs::read(dir.join("records.csv")).ok();
        out.push(check(format!("rerun {name}: records bit-identical"), same));
    }
    out
}

type Criterion = fn() -> Vec<Check>;

fn main() {
    let criteria: [(&str, Criterion); 11] = [
        ("covariance and samplers", samplers),
        ("convergence rate of polygonal approximations", || {
            experiment_checks("rate")
                .into_iter()
                .filter(|c| c.label.contains("rate-") || c.label.contains("no-errors"))
                .collect()
        }),
        ("Λ along the approximation ladder", || {
            experiment_checks("rate")
                .into_iter()
                .filter(|c| c.label.contains("lambda-"))
                .collect()
        }),
        ("fractional calculus oracles", fractional_calculus),
        ("Young integral cross-validation", young_integrals),
        ("solver exactness and order", solver),
        ("flow property", || {
            let mut v = experiment_checks("flow_additive");
            v.extend(experiment_checks("flow_geometric"));
            v
        }),
        ("inverse flows and monotonicity", || {
            ["inverse_additive", "inverse_geometric", "sortedness_geometric", "sortedness_sin"]
                .into_iter()
                .flat_map(experiment_checks)
                .collect()
        }),
        ("continuity in initial condition and driver", || {
            [
                "init_continuity_additive",
                "init_continuity_geometric",
                "init_continuity_sin",
                "driver_continuity",
            ]
            .into_iter()
            .flat_map(experiment_checks)
            .collect()
        }),
        ("moment estimates", || experiment_checks("moments_sin")),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let checks = run();
        let ok = !checks.is_empty() && checks.iter().all(|c| c.passed);
        println!(
            "criterion {:>2} {name}: {} ({:.1}s)",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for c in &checks {
            println!("    [{}] {}", if c.passed { "ok" } else { "FAILED" }, c.label);
        }
        if !ok {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
