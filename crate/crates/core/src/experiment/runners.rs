use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ExperimentConfig, InverseProbe, Kind, Record};
use crate::error::Result;
use crate::fbm::{holder_error, polygonal, sample, substream_seed, FbmSpec};
use crate::fraccalc::{lambda_alpha, FracOrder};
use crate::norms::w_alpha_lambda_norm;
use crate::path::{euclid, GridPath, HolderOrder};
use crate::sde::{flow_compose, solve_forward, CoefficientField, FlowMap};

/// Stream tag separating initial-point draws from driver sampling.
const PAIR_STREAM: usize = 0x5EED_0001;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn label_point(x: &[f64]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// The common fine driver of one seed.
pub(crate) fn fine_driver(cfg: &ExperimentConfig, components: usize, seed: u64) -> Result<GridPath> {
    let spec = FbmSpec::new(cfg.hurst, components, cfg.horizon, cfg.fine_n, seed)?;
    Ok(sample(&spec, cfg.sampler)?.into_path())
}

/// Default weight making `λ^{2α-1} Λ_α(B) = 1/4`.
pub(crate) fn default_weight(lambda: f64, alpha: f64) -> f64 {
    (4.0 * lambda).powf(1.0 / (1.0 - 2.0 * alpha))
}

/// Records of all seeds, in seed order, computed in parallel.
pub(crate) fn run_cells(cfg: &ExperimentConfig) -> Result<Vec<Record>> {
    let field = cfg.field()?;
    let seeds = cfg.seeds.to_vec();
    let per_seed: Vec<Vec<Record>> = seeds
        .par_iter()
        .map(|&seed| match cfg.kind {
            Kind::Flow => flow_cells(cfg, &field, seed),
            Kind::Inverse => inverse_cells(cfg, &field, seed),
            Kind::Rate => rate_cells(cfg, field.noise_dim(), seed),
            Kind::InitContinuity => init_cells(cfg, &field, seed),
            Kind::DriverContinuity => driver_cells(cfg, &field, seed),
            Kind::Moments => moment_cells(cfg, &field, seed),
        })
        .collect();
    Ok(per_seed.into_iter().flatten().collect())
}

/// Probes of one seed that cannot run because the driver itself failed.
fn failed_seed(cfg: &ExperimentConfig, seed: u64, probes: &[String], err: &crate::Error) -> Vec<Record> {
    let width = super::value_columns(cfg.kind).len();
    cfg.ladder
        .iter()
        .flat_map(|&n| probes.iter().map(move |p| Record::failed(seed, n, p.clone(), width, err)))
        .collect()
}

fn triple_label(t: &[f64; 3], x: &[f64]) -> String {
    format!("{}/{}/{}@{}", t[0], t[1], t[2], label_point(x))
}

fn flow_cells(cfg: &ExperimentConfig, field: &Arc<dyn CoefficientField>, seed: u64) -> Vec<Record> {
    let triples = cfg.triples();
    let probes: Vec<(usize, usize, String)> = triples
        .iter()
        .enumerate()
        .flat_map(|(ti, t)| {
            cfg.initial_points
                .iter()
                .enumerate()
                .map(move |(xi, x)| (ti, xi, triple_label(t, x)))
        })
        .collect();
    let labels: Vec<String> = probes.iter().map(|p| p.2.clone()).collect();
    let setup = || -> Result<(FlowMap, GridPath)> {
        let fine = fine_driver(cfg, field.noise_dim(), seed)?;
        Ok((FlowMap::new(fine.clone(), cfg.solver(cfg.fine_n)?, field.clone())?, fine))
    };
    let (reference, fine) = match setup() {
        Ok(v) => v,
        Err(e) => return failed_seed(cfg, seed, &labels, &e),
    };
    let mut out = Vec::new();
    for &n in &cfg.ladder {
        let map = cfg
            .solver(n)
            .and_then(|s| FlowMap::new(fine.subsample(cfg.fine_n / n)?, s, field.clone()));
        for (ti, xi, label) in &probes {
            let [r, tau, t] = triples[*ti];
            let x = &cfg.initial_points[*xi];
            let cell = || -> Result<Vec<f64>> {
                let map = map.as_ref().map_err(crate::Error::replicate)?;
                let (comp, direct) = flow_compose(map, r, tau, t, x)?;
                let target = reference.forward(r, t, x)?;
                let (bcomp, bdirect) = map.backward_compose(r, tau, t, x)?;
                let btarget = reference.backward(r, t, x)?;
                Ok(vec![
                    dist(&comp, &target),
                    dist(&bcomp, &btarget),
                    dist(&comp, &direct),
                    dist(&bcomp, &bdirect),
                ])
            };
            out.push(match cell() {
                Ok(v) => Record::ok(seed, n, label.clone(), v),
                Err(e) => Record::failed(seed, n, label.clone(), 4, &e),
            });
        }
    }
    out
}

fn fan_points(cfg: &ExperimentConfig) -> Vec<f64> {
    let k = cfg.fan.max(2);
    (0..k)
        .map(|i| -cfg.radius + 2.0 * cfg.radius * i as f64 / (k - 1) as f64)
        .collect()
}

/// Adjacent pairs of a sorted fan whose images are not strictly increasing.
fn inversions(images: &[f64]) -> f64 {
    images.windows(2).filter(|w| !(w[1] > w[0])).count() as f64
}

fn inverse_cells(cfg: &ExperimentConfig, field: &Arc<dyn CoefficientField>, seed: u64) -> Vec<Record> {
    let probes = cfg.inverse_probes();
    let pairs = cfg.time_pairs();
    let mut labels = Vec::new();
    if probes.contains(&InverseProbe::Identity) {
        for p in &pairs {
            for x in &cfg.initial_points {
                labels.push(format!("{}/{}@{}", p[0], p[1], label_point(x)));
            }
        }
    }
    let identity_count = labels.len();
    if probes.contains(&InverseProbe::Sortedness) {
        labels.push("fan".into());
    }
    let fine = match fine_driver(cfg, field.noise_dim(), seed) {
        Ok(f) => f,
        Err(e) => return failed_seed(cfg, seed, &labels, &e),
    };
    let fan = fan_points(cfg);
    let nan = f64::NAN;
    let mut out = Vec::new();
    for &n in &cfg.ladder {
        let map = cfg
            .solver(n)
            .and_then(|s| FlowMap::new(fine.subsample(cfg.fine_n / n)?, s, field.clone()));
        for (k, label) in labels.iter().enumerate() {
            let cell = || -> Result<Vec<f64>> {
                let map = map.as_ref().map_err(crate::Error::replicate)?;
                if k < identity_count {
                    let per = cfg.initial_points.len();
                    let [r, t] = pairs[k / per];
                    let x = &cfg.initial_points[k % per];
                    let y = map.backward(r, t, x)?;
                    let xy = map.forward(r, t, &y)?;
                    let fwd = map.forward(r, t, x)?;
                    let yx = map.backward(r, t, &fwd)?;
                    Ok(vec![dist(&xy, x), dist(&yx, x), nan, nan])
                } else {
                    let t = cfg.horizon;
                    let f: Vec<f64> = fan.iter().map(|&x| map.forward(0.0, t, &[x]).map(|v| v[0])).collect::<Result<_>>()?;
                    let b: Vec<f64> = fan.iter().map(|&x| map.backward(0.0, t, &[x]).map(|v| v[0])).collect::<Result<_>>()?;
                    Ok(vec![nan, nan, inversions(&f), inversions(&b)])
                }
            };
            out.push(match cell() {
                Ok(v) => Record::ok(seed, n, label.clone(), v),
                Err(e) => Record::failed(seed, n, label.clone(), 4, &e),
            });
        }
    }
    out
}

fn rate_cells(cfg: &ExperimentConfig, components: usize, seed: u64) -> Vec<Record> {
    let label = vec!["path".to_string()];
    let prepared = || -> Result<(GridPath, HolderOrder, FracOrder, usize)> {
        let fine = fine_driver(cfg, components, seed)?;
        let theta = HolderOrder::new(cfg.theta.unwrap_or(0.55))?;
        let alpha = FracOrder::new(cfg.rate_alpha()?)?;
        let factor = cfg.fine_n / cfg.lambda_grid.unwrap_or(cfg.fine_n);
        Ok((fine, theta, alpha, factor))
    };
    let (fine, theta, alpha, factor) = match prepared() {
        Ok(v) => v,
        Err(e) => return failed_seed(cfg, seed, &label, &e),
    };
    cfg.ladder
        .iter()
        .map(|&n| {
            let cell = || -> Result<Vec<f64>> {
                let approx = polygonal(&fine, n)?;
                let err = holder_error(&fine, &approx, theta)?;
                let gap = approx.sub(&fine)?.subsample(factor)?;
                let coarse = approx.subsample(factor)?;
                Ok(vec![
                    err,
                    err / (n as f64).ln().sqrt(),
                    lambda_alpha(&gap, alpha)?,
                    lambda_alpha(&coarse, alpha)?,
                ])
            };
            match cell() {
                Ok(v) => Record::ok(seed, n, "path", v),
                Err(e) => Record::failed(seed, n, "path", 4, &e),
            }
        })
        .collect()
}

/// Uniform draw from the Euclidean ball of radius `r` by rejection.
fn ball_point(rng: &mut ChaCha8Rng, d: usize, r: f64) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-r..=r)).collect();
        if euclid(&x) <= r {
            return x;
        }
    }
}

fn init_cells(cfg: &ExperimentConfig, field: &Arc<dyn CoefficientField>, seed: u64) -> Vec<Record> {
    let labels: Vec<String> = (0..cfg.pairs).map(|j| format!("pair-{j}")).collect();
    let fine = match fine_driver(cfg, field.noise_dim(), seed) {
        Ok(f) => f,
        Err(e) => return failed_seed(cfg, seed, &labels, &e),
    };
    let d = field.dim();
    let mut out = Vec::new();
    for &n in &cfg.ladder {
        let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, PAIR_STREAM));
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.pairs)
            .map(|_| (ball_point(&mut rng, d, cfg.radius), ball_point(&mut rng, d, cfg.radius)))
            .collect();
        let setup = || -> Result<(GridPath, crate::sde::SolverConfig, f64)> {
            let driver = fine.subsample(cfg.fine_n / n)?;
            let solver = cfg.solver(n)?;
            let weight = match cfg.lambda_weight {
                Some(w) => w,
                None => default_weight(lambda_alpha(&driver, solver.alpha)?, solver.alpha.value()),
            };
            Ok((driver, solver, weight))
        };
        let setup = setup();
        for (label, (x0, x1)) in labels.iter().zip(&pairs) {
            let cell = || -> Result<Vec<f64>> {
                let (driver, solver, weight) = setup.as_ref().map_err(crate::Error::replicate)?;
                let a = solve_forward(x0, 0.0, field.as_ref(), driver, solver)?;
                let b = solve_forward(x1, 0.0, field.as_ref(), driver, solver)?;
                let norm = w_alpha_lambda_norm(&a.sub(&b)?, solver.alpha, *weight)?;
                let distance = dist(x0, x1);
                Ok(vec![distance, norm, norm / distance, *weight])
            };
            out.push(match cell() {
                Ok(v) => Record::ok(seed, n, label.clone(), v),
                Err(e) => Record::failed(seed, n, label.clone(), 4, &e),
            });
        }
    }
    out
}

fn driver_cells(cfg: &ExperimentConfig, field: &Arc<dyn CoefficientField>, seed: u64) -> Vec<Record> {
    let labels: Vec<String> = cfg.initial_points.iter().map(|x| format!("x={}", label_point(x))).collect();
    let setup = || -> Result<(GridPath, crate::sde::SolverConfig, f64)> {
        let fine = fine_driver(cfg, field.noise_dim(), seed)?;
        let solver = cfg.solver(cfg.fine_n)?;
        let weight = match cfg.lambda_weight {
            Some(w) => w,
            None => default_weight(lambda_alpha(&fine, solver.alpha)?, solver.alpha.value()),
        };
        Ok((fine, solver, weight))
    };
    let (fine, solver, weight) = match setup() {
        Ok(v) => v,
        Err(e) => return failed_seed(cfg, seed, &labels, &e),
    };
    let exact: Vec<Result<GridPath>> = cfg
        .initial_points
        .iter()
        .map(|x| solve_forward(x, 0.0, field.as_ref(), &fine, &solver))
        .collect();
    let mut out = Vec::new();
    for &n in &cfg.ladder {
        let coarse = polygonal(&fine, n);
        let gap = coarse
            .as_ref()
            .map_err(crate::Error::replicate)
            .and_then(|h| lambda_alpha(&fine.sub(h)?, solver.alpha));
        for ((label, x), reference) in labels.iter().zip(&cfg.initial_points).zip(&exact) {
            let cell = || -> Result<Vec<f64>> {
                let h = coarse.as_ref().map_err(crate::Error::replicate)?;
                let gap = *gap.as_ref().map_err(crate::Error::replicate)?;
                let reference = reference.as_ref().map_err(crate::Error::replicate)?;
                let approx = solve_forward(x, 0.0, field.as_ref(), h, &solver)?;
                let norm = w_alpha_lambda_norm(&reference.sub(&approx)?, solver.alpha, weight)?;
                Ok(vec![norm, gap, norm / gap, weight])
            };
            out.push(match cell() {
                Ok(v) => Record::ok(seed, n, label.clone(), v),
                Err(e) => Record::failed(seed, n, label.clone(), 4, &e),
            });
        }
    }
    out
}

fn moment_cells(cfg: &ExperimentConfig, field: &Arc<dyn CoefficientField>, seed: u64) -> Vec<Record> {
    let labels: Vec<String> = cfg.initial_points.iter().map(|x| format!("x={}", label_point(x))).collect();
    let fine = match fine_driver(cfg, field.noise_dim(), seed) {
        Ok(f) => f,
        Err(e) => return failed_seed(cfg, seed, &labels, &e),
    };
    let mut out = Vec::new();
    for &n in &cfg.ladder {
        for (label, x) in labels.iter().zip(&cfg.initial_points) {
            let cell = || -> Result<Vec<f64>> {
                let driver = fine.subsample(cfg.fine_n / n)?;
                let sol = solve_forward(x, 0.0, field.as_ref(), &driver, &cfg.solver(n)?)?;
                let sup = (0..sol.len()).map(|k| sol.norm_at(k)).fold(0.0, f64::max);
                Ok(vec![sup])
            };
            out.push(match cell() {
                Ok(v) => Record::ok(seed, n, label.clone(), v),
                Err(e) => Record::failed(seed, n, label.clone(), 1, &e),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inversion_count() {
        assert_eq!(inversions(&[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(inversions(&[1.0, 1.0, 0.5]), 2.0);
    }

    #[test]
    fn ball_draws_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!(euclid(&ball_point(&mut rng, 3, 2.0)) <= 2.0);
        }
    }

    #[test]
    fn weight_rule() {
        let w = default_weight(0.5, 0.3);
        assert!((w.powf(2.0 * 0.3 - 1.0) * 0.5 - 0.25).abs() < 1e-12);
    }
}
