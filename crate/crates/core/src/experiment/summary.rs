use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Calibration, ExperimentConfig, Kind, Record};
use crate::stats::{mean, median, quantile, slope, std_error};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Plot-ready series: rows of `(x, y, q25, q75)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Summary {
    pub stats: BTreeMap<String, f64>,
    pub criteria: Vec<Criterion>,
    pub series: Vec<Series>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    fn put(&mut self, key: impl Into<String>, v: f64) {
        if v.is_finite() {
            self.stats.insert(key.into(), v);
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.criteria.push(Criterion {
            name: name.into(),
            passed,
            detail,
        });
    }
}

struct LevelStats {
    level: usize,
    median: f64,
    q25: f64,
    q75: f64,
    max: f64,
}

/// Per-level quartiles of one column over the selected successful records.
fn by_level(
    cfg: &ExperimentConfig,
    records: &[Record],
    column: &str,
    keep: impl Fn(&Record) -> bool,
) -> Vec<LevelStats> {
    cfg.ladder
        .iter()
        .map(|&n| {
            let v: Vec<f64> = records
                .iter()
                .filter(|r| r.level == n && r.is_ok() && keep(r))
                .map(|r| r.value(cfg.kind, column))
                .collect();
            LevelStats {
                level: n,
                median: median(&v),
                q25: quantile(&v, 0.25),
                q75: quantile(&v, 0.75),
                max: v.iter().copied().fold(f64::NAN, f64::max),
            }
        })
        .collect()
}

fn publish(s: &mut Summary, column: &str, levels: &[LevelStats]) {
    for l in levels {
        s.put(format!("{column}.median@{}", l.level), l.median);
        s.put(format!("{column}.q25@{}", l.level), l.q25);
        s.put(format!("{column}.q75@{}", l.level), l.q75);
        s.put(format!("{column}.max@{}", l.level), l.max);
    }
    s.series.push(Series {
        name: column.into(),
        points: levels.iter().map(|l| [l.level as f64, l.median, l.q25, l.q75]).collect(),
    });
}

/// Smallest decay factor of the medians per doubling of the grid.
fn worst_decay(levels: &[LevelStats]) -> f64 {
    levels
        .windows(2)
        .map(|w| {
            let doublings = (w[1].level as f64 / w[0].level as f64).log2();
            (w[0].median / w[1].median).powf(1.0 / doublings)
        })
        .fold(f64::INFINITY, f64::min)
}

fn strictly_decreasing(levels: &[LevelStats]) -> bool {
    levels.windows(2).all(|w| w[1].median < w[0].median)
}

fn medians_text(levels: &[LevelStats]) -> String {
    levels
        .iter()
        .map(|l| format!("{}: {:.3e}", l.level, l.median))
        .collect::<Vec<_>>()
        .join(", ")
}

/// `r < t` for a probe labelled `r/τ/t@x` or `r/t@x`.
fn nondegenerate(label: &str) -> bool {
    let times: Vec<f64> = label
        .split('@')
        .next()
        .unwrap_or("")
        .split('/')
        .filter_map(|v| v.parse().ok())
        .collect();
    match (times.first(), times.last()) {
        (Some(r), Some(t)) => t > r,
        _ => false,
    }
}

pub fn summarize(cfg: &ExperimentConfig, records: &[Record], calibration: Option<&Calibration>) -> Summary {
    let mut s = Summary::default();
    let failures = records.iter().filter(|r| !r.is_ok()).count();
    s.put("records", records.len() as f64);
    s.put("failed_records", failures as f64);
    match cfg.kind {
        Kind::Flow => {
            let cal = calibration.expect("flow summaries need a calibration");
            composition(&mut s, cfg, records, cal, &["forward", "backward"], |r| nondegenerate(&r.probe));
            let defect = records
                .iter()
                .filter(|r| r.is_ok())
                .map(|r| r.value(cfg.kind, "forward_grid_defect").max(r.value(cfg.kind, "backward_grid_defect")))
                .fold(0.0, f64::max);
            s.put("grid_defect.max", defect);
            s.check(
                "grid-composition",
                defect <= cfg.tolerances.exact,
                format!("largest grid-level composition defect {defect:.3e}"),
            );
        }
        Kind::Inverse => {
            let cal = calibration.expect("inverse summaries need a calibration");
            let identity = records.iter().any(|r| r.probe != "fan");
            if identity {
                composition(&mut s, cfg, records, cal, &["x_after_y", "y_after_x"], |r| {
                    r.probe != "fan" && nondegenerate(&r.probe)
                });
            }
            let fans: Vec<&Record> = records.iter().filter(|r| r.probe == "fan" && r.is_ok()).collect();
            if !fans.is_empty() {
                let count: f64 = fans
                    .iter()
                    .map(|r| r.value(cfg.kind, "inversions_forward") + r.value(cfg.kind, "inversions_backward"))
                    .sum();
                s.put("inversions.total", count);
                s.check(
                    "sortedness",
                    count == 0.0,
                    format!("{count} order inversions over {} fans", fans.len()),
                );
            }
        }
        Kind::Rate => rate(&mut s, cfg, records),
        Kind::InitContinuity => init_continuity(&mut s, cfg, records),
        Kind::DriverContinuity => driver_continuity(&mut s, cfg, records),
        Kind::Moments => moments(&mut s, cfg, records),
    }
    s.check("no-errors", failures == 0, format!("{failures} failed records"));
    s
}

fn composition(
    s: &mut Summary,
    cfg: &ExperimentConfig,
    records: &[Record],
    cal: &Calibration,
    columns: &[&str],
    keep: impl Fn(&Record) -> bool + Copy,
) {
    let top = *cfg.ladder.last().expect("nonempty ladder");
    let tol_top = cal.tolerance(top);
    s.put("tolerance.top", tol_top);
    for l in &cfg.ladder {
        s.put(format!("tolerance@{l}"), cal.tolerance(*l));
    }
    for &col in columns {
        let levels = by_level(cfg, records, col, keep);
        publish(s, col, &levels);
        let all_max = |n: usize| {
            records
                .iter()
                .filter(|r| r.level == n && r.is_ok())
                .map(|r| r.value(cfg.kind, col))
                .fold(0.0, f64::max)
        };
        if cal.constant == 0.0 {
            let worst = cfg.ladder.iter().map(|&n| all_max(n)).fold(0.0, f64::max);
            s.check(
                &format!("{col}-exact"),
                worst <= cal.floor,
                format!("largest discrepancy {worst:.3e} against {:.1e}", cal.floor),
            );
        } else {
            let decay = worst_decay(&levels);
            s.put(format!("{col}.worst_decay"), decay);
            s.check(
                &format!("{col}-decay"),
                decay >= cfg.tolerances.decay_ratio,
                format!(
                    "worst median decay per doubling {decay:.3} (need {}); medians {}",
                    cfg.tolerances.decay_ratio,
                    medians_text(&levels)
                ),
            );
            let worst = all_max(top);
            s.check(
                &format!("{col}-tolerance"),
                worst <= tol_top,
                format!("largest discrepancy at n = {top} is {worst:.3e}, tolerance {tol_top:.3e}"),
            );
        }
    }
}

fn rate(s: &mut Summary, cfg: &ExperimentConfig, records: &[Record]) {
    let all = |_: &Record| true;
    let err = by_level(cfg, records, "holder_error", all);
    let scaled = by_level(cfg, records, "scaled_error", all);
    let gap = by_level(cfg, records, "lambda_gap", all);
    let approx = by_level(cfg, records, "lambda_approx", all);
    publish(s, "holder_error", &err);
    publish(s, "scaled_error", &scaled);
    publish(s, "lambda_gap", &gap);
    publish(s, "lambda_approx", &approx);

    let theta = cfg.theta.unwrap_or(0.55);
    let xs: Vec<f64> = scaled.iter().map(|l| (l.level as f64).ln()).collect();
    let ys: Vec<f64> = scaled.iter().map(|l| l.median.ln()).collect();
    let fitted = slope(&xs, &ys);
    let predicted = theta - cfg.hurst;
    s.put("slope.fitted", fitted);
    s.put("slope.predicted", predicted);
    s.check(
        "rate-slope",
        (fitted - predicted).abs() <= cfg.tolerances.slope_window,
        format!("fitted slope {fitted:.4}, predicted {predicted:.2} ± {}", cfg.tolerances.slope_window),
    );
    s.check(
        "rate-monotone",
        strictly_decreasing(&err),
        format!("median errors {}", medians_text(&err)),
    );
    s.check(
        "lambda-gap-monotone",
        strictly_decreasing(&gap),
        format!("median Λ_α(B^n - B) {}", medians_text(&gap)),
    );
    let pooled: Vec<f64> = records
        .iter()
        .filter(|r| r.is_ok())
        .map(|r| r.value(cfg.kind, "lambda_approx"))
        .collect();
    let centre = median(&pooled);
    let band = cfg.tolerances.lambda_band;
    let within = approx.iter().all(|l| l.median >= centre / band && l.median <= centre * band);
    s.put("lambda_approx.median", centre);
    s.check(
        "lambda-uniform",
        within,
        format!("median Λ_α(B^n) {} against ladder-wide {centre:.3e}", medians_text(&approx)),
    );
}

fn spread(values: &[f64]) -> (f64, f64, f64) {
    let max = values.iter().copied().fold(f64::NAN, f64::max);
    let med = median(values);
    (max, med, max / med)
}

fn init_continuity(s: &mut Summary, cfg: &ExperimentConfig, records: &[Record]) {
    let ok: Vec<&Record> = records.iter().filter(|r| r.is_ok()).collect();
    let ratios: Vec<f64> = ok.iter().map(|r| r.value(cfg.kind, "ratio")).collect();
    let (max, med, ratio) = spread(&ratios);
    s.put("ratio.max", max);
    s.put("ratio.median", med);
    s.put("ratio.min", ratios.iter().copied().fold(f64::NAN, f64::min));
    s.put("ratio.spread", ratio);
    s.check(
        "init-bounded",
        ratio <= cfg.tolerances.ratio_spread,
        format!("max/median ratio {ratio:.3} over {} pairs", ratios.len()),
    );

    // ratio as the pairs get closer, in distance deciles
    let mut by_distance: Vec<(f64, f64)> = ok
        .iter()
        .map(|r| (r.value(cfg.kind, "distance"), r.value(cfg.kind, "ratio")))
        .collect();
    by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let bins = 10.min(by_distance.len()).max(1);
    let mut points = Vec::new();
    for b in 0..bins {
        let lo = b * by_distance.len() / bins;
        let hi = (b + 1) * by_distance.len() / bins;
        if lo == hi {
            continue;
        }
        let d: Vec<f64> = by_distance[lo..hi].iter().map(|p| p.0).collect();
        let v: Vec<f64> = by_distance[lo..hi].iter().map(|p| p.1).collect();
        points.push([median(&d), median(&v), quantile(&v, 0.25), quantile(&v, 0.75)]);
    }
    if let Some(first) = points.first() {
        let near = first[1];
        s.put("ratio.nearest_decile_median", near);
        let band = cfg.tolerances.ratio_spread;
        s.check(
            "init-stable",
            near <= med * band && near >= med / band,
            format!("median ratio of the closest pairs {near:.4} against overall {med:.4}"),
        );
    }
    s.series.push(Series {
        name: "ratio_by_distance".into(),
        points,
    });

    let c = cfg.field().map(|f| f.constants());
    if let Ok(c) = c {
        if c.m1 == 0.0 && c.l1 == 0.0 {
            let dev = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
            s.put("ratio.max_deviation_from_one", dev);
            s.check(
                "init-translation",
                dev <= 1e-9,
                format!("largest |ratio - 1| = {dev:.3e} for a translation flow"),
            );
        }
    }
}

fn driver_continuity(s: &mut Summary, cfg: &ExperimentConfig, records: &[Record]) {
    let all = |_: &Record| true;
    let norm = by_level(cfg, records, "norm", all);
    let gap = by_level(cfg, records, "lambda_gap", all);
    let ratio_levels = by_level(cfg, records, "ratio", all);
    publish(s, "norm", &norm);
    publish(s, "lambda_gap", &gap);
    publish(s, "ratio", &ratio_levels);
    let ok: Vec<&Record> = records.iter().filter(|r| r.is_ok()).collect();
    let ratios: Vec<f64> = ok.iter().map(|r| r.value(cfg.kind, "ratio")).collect();
    let (max, med, spread_v) = spread(&ratios);
    s.put("ratio.max", max);
    s.put("ratio.median", med);
    s.put("ratio.spread", spread_v);
    s.check(
        "driver-bounded",
        spread_v <= cfg.tolerances.ratio_spread,
        format!("max/median ratio {spread_v:.3} over {} cells", ratios.len()),
    );
    s.check(
        "driver-solution-decay",
        strictly_decreasing(&norm),
        format!("median solution gap {}", medians_text(&norm)),
    );
    s.check(
        "driver-lambda-decay",
        strictly_decreasing(&gap),
        format!("median Λ_α(g - h) {}", medians_text(&gap)),
    );
    let xs: Vec<f64> = ok.iter().map(|r| r.value(cfg.kind, "lambda_gap")).collect();
    let ys: Vec<f64> = ok.iter().map(|r| r.value(cfg.kind, "norm")).collect();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let through_origin = sxy / sxx;
    s.put("slope.through_origin", through_origin);
    if xs.len() > 2 {
        s.put("correlation", crate::stats::correlation(&xs, &ys));
    }
    s.check(
        "driver-slope",
        through_origin > 0.0,
        format!("slope through the origin {through_origin:.4e}"),
    );
}

type Functional = Box<dyn Fn(f64) -> f64>;

fn moments(s: &mut Summary, cfg: &ExperimentConfig, records: &[Record]) {
    let probes: Vec<String> = {
        let mut p: Vec<String> = records.iter().map(|r| r.probe.clone()).collect();
        p.dedup();
        p.sort();
        p.dedup();
        p
    };
    let mut functionals: Vec<(String, Functional)> = cfg
        .p
        .iter()
        .map(|&p| (format!("p={p}"), Box::new(move |x: f64| x.powf(p)) as Functional))
        .collect();
    if let Some(gamma) = cfg.gamma {
        let lambda = cfg.exp_lambda;
        functionals.push((
            format!("exp(λ={lambda},γ={gamma})"),
            Box::new(move |x: f64| (lambda * x.powf(gamma)).exp()),
        ));
    }
    for &n in &cfg.ladder {
        for probe in &probes {
            let sups: Vec<f64> = records
                .iter()
                .filter(|r| r.level == n && &r.probe == probe && r.is_ok())
                .map(|r| r.value(cfg.kind, "sup"))
                .collect();
            if sups.len() < 4 {
                continue;
            }
            let half = &sups[..sups.len() / 2];
            for (name, f) in &functionals {
                let full_v: Vec<f64> = sups.iter().map(|&x| f(x)).collect();
                let half_v: Vec<f64> = half.iter().map(|&x| f(x)).collect();
                let (full, part, se) = (mean(&full_v), mean(&half_v), std_error(&full_v));
                let key = format!("{name}@{n} {probe}");
                s.put(format!("estimate.{key}"), full);
                s.put(format!("half_estimate.{key}"), part);
                s.put(format!("std_error.{key}"), se);
                let moved = (full - part).abs();
                s.check(
                    &format!("moment-stable {key}"),
                    moved.is_finite() && moved <= cfg.tolerances.moment_sigmas * se,
                    format!(
                        "estimate {full:.6e} with N = {}, {part:.6e} with N = {}; moved {:.2} standard errors",
                        sups.len(),
                        half.len(),
                        if se > 0.0 { moved / se } else { 0.0 }
                    ),
                );
            }
        }
    }
}
