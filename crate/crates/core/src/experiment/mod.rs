//! Reproducible numerical experiments: a JSON configuration drives a ladder
//! of grid sizes over a list of seeds, producing per-cell records, summary
//! statistics and pass/fail criteria that can be re-derived from disk.

mod config;
mod record;
mod runners;
mod summary;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fbm::{sample, substream_seed, FbmSpec};
use crate::sde::{solve_forward, Builtin, CoefficientField, SolverConfig};

pub use config::{ExperimentConfig, InverseProbe, Kind, Seeds, Tolerances};
pub use record::{read_records, value_columns, write_records, Record};
pub use summary::{summarize, Criterion, Series, Summary};

/// Base seed of the tolerance calibration draws.
const CALIBRATION_SEED: u64 = 0xCA11_B7A7E;
const CALIBRATION_DRAWS: usize = 8;

/// Tolerance for composition discrepancies, `A n^{-(2H-1)/2}` floored,
/// with `A` fitted on the geometric closed form at the coarsest level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub sigma0: f64,
    pub base_n: usize,
    pub errors: Vec<f64>,
    pub exponent: f64,
    pub constant: f64,
    pub floor: f64,
}

impl Calibration {
    pub fn compute(cfg: &ExperimentConfig) -> Result<Self> {
        let c = cfg.field()?.constants();
        let sigma0 = c.m1.max(c.l1);
        let base_n = cfg.ladder[0];
        let exponent = (2.0 * cfg.hurst - 1.0) / 2.0;
        let mut errors = vec![0.0; CALIBRATION_DRAWS];
        if sigma0 > 0.0 {
            let field = Builtin::Geometric { sigma0 };
            let solver = match cfg.alpha {
                Some(a) => SolverConfig::new(a, base_n, cfg.hurst, &field.constants()),
                None => SolverConfig::centred(base_n, cfg.hurst, &field.constants()),
            }?
            .with_scheme(cfg.scheme);
            for (j, e) in errors.iter_mut().enumerate() {
                let seed = substream_seed(CALIBRATION_SEED, j);
                let spec = FbmSpec::new(cfg.hurst, 1, cfg.horizon, base_n, seed)?;
                let b = sample(&spec, cfg.sampler)?.into_path();
                let x = solve_forward(&[1.0], 0.0, &field, &b, &solver)?;
                *e = (0..=base_n)
                    .map(|k| (x.point(k)[0] - (sigma0 * b.point(k)[0]).exp()).abs())
                    .fold(0.0, f64::max);
            }
        }
        let worst = errors.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            sigma0,
            base_n,
            constant: cfg.tolerances.flow_safety * worst * (base_n as f64).powf(exponent),
            errors,
            exponent,
            floor: cfg.tolerances.flow_floor,
        })
    }

    pub fn tolerance(&self, n: usize) -> f64 {
        (self.constant * (n as f64).powf(-self.exponent)).max(self.floor)
    }
}

fn needs_calibration(kind: Kind) -> bool {
    matches!(kind, Kind::Flow | Kind::Inverse)
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub records: Vec<Record>,
    pub calibration: Option<Calibration>,
    pub summary: Summary,
    pub seconds: f64,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryFile {
    pub config: ExperimentConfig,
    pub record_count: usize,
    pub calibration: Option<Calibration>,
    pub stats: std::collections::BTreeMap<String, f64>,
    pub criteria: Vec<Criterion>,
    pub series: Vec<Series>,
    pub passed: bool,
    pub seconds: f64,
}

impl ExperimentResult {
    pub fn passed(&self) -> bool {
        self.summary.passed()
    }

    /// Writes `records.csv`, `summary.json` and one `series_<name>.csv` per series.
    pub fn persist(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        write_records(self.config.kind, &self.records, fs::File::create(dir.join("records.csv"))?)?;
        let file = SummaryFile {
            config: self.config.clone(),
            record_count: self.records.len(),
            calibration: self.calibration.clone(),
            stats: self.summary.stats.clone(),
            criteria: self.summary.criteria.clone(),
            series: self.summary.series.clone(),
            passed: self.passed(),
            seconds: self.seconds,
        };
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&file)?)?;
        for s in &self.summary.series {
            let mut w = csv::Writer::from_path(dir.join(format!("series_{}.csv", s.name)))?;
            w.write_record(["x", "median", "q25", "q75"])?;
            for p in &s.points {
                w.write_record(p.iter().map(|v| crate::path::format_f64(*v)))?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let start = Instant::now();
    let calibration = if needs_calibration(cfg.kind) {
        Some(Calibration::compute(cfg)?)
    } else {
        None
    };
    let records = runners::run_cells(cfg)?;
    let summary = summarize(cfg, &records, calibration.as_ref());
    Ok(ExperimentResult {
        config: cfg.clone(),
        records,
        calibration,
        summary,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs and persists into the configured output directory, if any.
pub fn run_and_persist(cfg: &ExperimentConfig, dir: Option<&Path>) -> Result<(ExperimentResult, Option<PathBuf>)> {
    let result = run(cfg)?;
    let target = dir.map(Path::to_path_buf).or_else(|| cfg.output_dir.clone());
    if let Some(d) = &target {
        result.persist(d)?;
    }
    Ok((result, target))
}

pub fn load_summary(dir: impl AsRef<Path>) -> Result<SummaryFile> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.as_ref().join("summary.json"))?)?)
}

pub fn load_records(dir: impl AsRef<Path>, kind: Kind) -> Result<Vec<Record>> {
    read_records(kind, fs::File::open(dir.as_ref().join("records.csv"))?)
}

/// Outcome of re-deriving a persisted result from its raw records.
#[derive(Debug, Clone, Serialize)]
pub struct Verification {
    pub consistent: bool,
    pub passed: bool,
    pub mismatches: Vec<String>,
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Recomputes calibration and summary from `records.csv` and compares them
/// with `summary.json` to a relative 1e-10.
pub fn verify(dir: impl AsRef<Path>) -> Result<Verification> {
    const REL: f64 = 1e-10;
    let dir = dir.as_ref();
    let stored = load_summary(dir)?;
    let records = load_records(dir, stored.config.kind)?;
    let mut mismatches = Vec::new();
    if records.len() != stored.record_count {
        mismatches.push(format!("{} records on disk, {} declared", records.len(), stored.record_count));
    }
    let seeds = stored.config.seeds.to_vec();
    for r in &records {
        if !seeds.contains(&r.seed) || !stored.config.ladder.contains(&r.level) {
            mismatches.push(format!("record for seed {} level {} is outside the configuration", r.seed, r.level));
            break;
        }
    }
    let calibration = if needs_calibration(stored.config.kind) {
        Some(Calibration::compute(&stored.config)?)
    } else {
        None
    };
    match (&calibration, &stored.calibration) {
        (Some(a), Some(b)) => {
            if !close(a.constant, b.constant, REL) || a.base_n != b.base_n {
                mismatches.push(format!("calibration constant {} recomputes to {}", b.constant, a.constant));
            }
        }
        (None, None) => {}
        _ => mismatches.push("calibration presence differs".into()),
    }
    let fresh = summarize(&stored.config, &records, calibration.as_ref());
    for (k, v) in &stored.stats {
        match fresh.stats.get(k) {
            Some(w) if close(*v, *w, REL) => {}
            Some(w) => mismatches.push(format!("{k}: stored {v}, recomputed {w}")),
            None => mismatches.push(format!("{k}: missing on recomputation")),
        }
    }
    for k in fresh.stats.keys().filter(|k| !stored.stats.contains_key(*k)) {
        mismatches.push(format!("{k}: not stored"));
    }
    let verdicts = |c: &[Criterion]| c.iter().map(|c| (c.name.clone(), c.passed)).collect::<Vec<_>>();
    if verdicts(&stored.criteria) != verdicts(&fresh.criteria) {
        mismatches.push("criteria verdicts differ".into());
    }
    if stored.passed != fresh.passed() {
        mismatches.push("overall verdict differs".into());
    }
    Ok(Verification {
        consistent: mismatches.is_empty(),
        passed: fresh.passed(),
        mismatches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for ReportFormat {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" => Ok(Self::Jsonl),
            other => invalid(format!("unknown report format {other:?}; expected csv or jsonl")),
        }
    }
}

/// Flat table of the stored statistics followed by the criteria.
pub fn report<W: Write>(dir: impl AsRef<Path>, format: ReportFormat, mut out: W) -> Result<()> {
    let s = load_summary(dir)?;
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["kind", "name", "value", "passed", "detail"])?;
            for (k, v) in &s.stats {
                w.write_record(["stat", k, &crate::path::format_f64(*v), "", ""])?;
            }
            for c in &s.criteria {
                w.write_record(["criterion", &c.name, "", if c.passed { "true" } else { "false" }, &c.detail])?;
            }
            w.flush()?;
        }
        ReportFormat::Jsonl => {
            for (k, v) in &s.stats {
                writeln!(out, "{}", serde_json::json!({"stat": k, "value": v}))?;
            }
            for c in &s.criteria {
                writeln!(out, "{}", serde_json::json!({"criterion": c.name, "passed": c.passed, "detail": c.detail}))?;
            }
        }
    }
    Ok(())
}
