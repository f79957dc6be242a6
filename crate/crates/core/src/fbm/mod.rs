//! Exact sampling of multi-dimensional fractional Brownian motion and the
//! polygonal approximation used by the convergence experiments.

mod cholesky;
mod circulant;
mod polygon;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::path::GridPath;

pub use polygon::{holder_error, modulus_constant, polygonal};
pub use cholesky::{CholeskySampler, DEFAULT_MAX_CHOLESKY};
pub use circulant::CirculantSampler;

/// Everything needed to reproduce one sampled path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbmSpec {
    pub hurst: f64,
    pub components: usize,
    pub horizon: f64,
    pub grid_size: usize,
    pub seed: u64,
}

impl FbmSpec {
    pub fn new(hurst: f64, components: usize, horizon: f64, grid_size: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            hurst,
            components,
            horizon,
            grid_size,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Scalar path on `[0, 1]`.
    pub fn unit(hurst: f64, grid_size: usize, seed: u64) -> Result<Self> {
        Self::new(hurst, 1, 1.0, grid_size, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return domain(format!("Hurst parameter must lie in (0, 1), got {}", self.hurst));
        }
        if self.components == 0 {
            return invalid("fBm needs at least one component");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return invalid(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.grid_size < 2 {
            return invalid(format!("grid size must be at least 2, got {}", self.grid_size));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.grid_size as f64
    }
}

/// A sampled path together with the spec that produced it. `B(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbmPath {
    pub spec: FbmSpec,
    pub path: GridPath,
}

impl FbmPath {
    pub fn path(&self) -> &GridPath {
        &self.path
    }

    pub fn into_path(self) -> GridPath {
        self.path
    }
}

/// Exact sampling algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cholesky,
    #[default]
    Circulant,
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cholesky" => Ok(Self::Cholesky),
            "circulant" => Ok(Self::Circulant),
            other => invalid(format!("unknown sampler '{other}' (expected cholesky or circulant)")),
        }
    }
}

/// `R_H(t, s) = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2`.
pub fn covariance(hurst: f64, t: f64, s: f64) -> Result<f64> {
    if t < 0.0 || s < 0.0 {
        return domain(format!("covariance needs nonnegative times, got ({t}, {s})"));
    }
    if !(hurst > 0.0 && hurst < 1.0) {
        return domain(format!("Hurst parameter must lie in (0, 1), got {hurst}"));
    }
    let e = 2.0 * hurst;
    Ok(0.5 * (t.powf(e) + s.powf(e) - (t - s).abs().powf(e)))
}

/// Autocovariance of unit-step fractional Gaussian noise at lag `k`.
pub(crate) fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let e = 2.0 * hurst;
    let k = k as f64;
    let below = if k == 0.0 { 1.0 } else { (k - 1.0).powf(e) };
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + below)
}

/// Seed of the independent stream driving component `j`.
pub fn substream_seed(seed: u64, j: usize) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ (j as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn component_rng(seed: u64, j: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(seed, j))
}

/// Assemble a path from per-component increments, starting at zero.
pub(crate) fn assemble(spec: &FbmSpec, increments: Vec<Vec<f64>>) -> Result<FbmPath> {
    let components: Vec<Vec<f64>> = increments
        .into_iter()
        .map(|inc| {
            let mut acc = 0.0;
            let mut v = Vec::with_capacity(inc.len() + 1);
            v.push(0.0);
            for x in inc {
                acc += x;
                v.push(acc);
            }
            v
        })
        .collect();
    Ok(FbmPath {
        spec: *spec,
        path: GridPath::from_components(spec.horizon, &components)?,
    })
}

type SetupMap<V> = std::collections::HashMap<(u64, usize, u64), std::sync::Arc<V>>;

/// Read-mostly memo of per-grid sampler setup, keyed by `(H, n, T)`.
pub(crate) struct SetupCache<V> {
    map: std::sync::OnceLock<std::sync::RwLock<SetupMap<V>>>,
    capacity: usize,
}

impl<V> SetupCache<V> {
    pub(crate) const fn new(capacity: usize) -> Self {
        Self {
            map: std::sync::OnceLock::new(),
            capacity,
        }
    }

    pub(crate) fn get_or_try_insert(
        &self,
        hurst: f64,
        n: usize,
        horizon: f64,
        build: impl FnOnce() -> Result<V>,
    ) -> Result<std::sync::Arc<V>> {
        let key = (hurst.to_bits(), n, horizon.to_bits());
        let map = self.map.get_or_init(Default::default);
        if let Some(v) = map.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(v.clone());
        }
        let value = std::sync::Arc::new(build()?);
        let mut guard = map.write().unwrap_or_else(|e| e.into_inner());
        if guard.len() >= self.capacity {
            guard.clear();
        }
        Ok(guard.entry(key).or_insert(value).clone())
    }
}

/// Sample with the given method using default sampler settings.
pub fn sample(spec: &FbmSpec, method: Method) -> Result<FbmPath> {
    match method {
        Method::Cholesky => sample_cholesky(spec),
        Method::Circulant => sample_circulant(spec),
    }
}

pub fn sample_cholesky(spec: &FbmSpec) -> Result<FbmPath> {
    CholeskySampler::default().sample(spec)
}

pub fn sample_circulant(spec: &FbmSpec) -> Result<FbmPath> {
    CirculantSampler::default().sample(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn covariance_examples() {
        assert_relative_eq!(covariance(0.3, 1.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(covariance(0.5, 1.0, 2.0).unwrap(), 1.0);
        assert_relative_eq!(covariance(0.75, 1.0, 2.0).unwrap(), std::f64::consts::SQRT_2, max_relative = 1e-15);
        assert_relative_eq!(covariance(0.75, 0.5, 1.0).unwrap(), 0.5, max_relative = 1e-15);
        assert!(covariance(0.6, -1.0, 1.0).is_err());
        assert_eq!(covariance(0.8, 0.3, 0.7).unwrap(), covariance(0.8, 0.7, 0.3).unwrap());
    }

    #[test]
    fn noise_autocovariance_matches_covariance() {
        let h = 0.7;
        for k in 0..6usize {
            let kf = k as f64;
            let direct = covariance(h, kf + 1.0, 1.0).unwrap() - covariance(h, kf, 1.0).unwrap()
                - covariance(h, kf + 1.0, 0.0).unwrap()
                + covariance(h, kf, 0.0).unwrap();
            assert_relative_eq!(fgn_autocovariance(h, k), direct, epsilon = 1e-14);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(FbmSpec::unit(0.0, 8, 1).is_err());
        assert!(FbmSpec::unit(1.0, 8, 1).is_err());
        assert!(FbmSpec::unit(0.5, 1, 1).is_err());
        assert!(FbmSpec::new(0.5, 0, 1.0, 8, 1).is_err());
        assert!(FbmSpec::new(0.5, 1, 0.0, 8, 1).is_err());
    }

    #[test]
    fn substreams_differ() {
        let s: Vec<u64> = (0..4).map(|j| substream_seed(42, j)).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(s[i], s[j]);
            }
        }
        assert_ne!(substream_seed(1, 0), substream_seed(2, 0));
    }

    #[test]
    fn samplers_are_deterministic() {
        let spec = FbmSpec::new(0.75, 2, 1.0, 64, 9).unwrap();
        for method in [Method::Cholesky, Method::Circulant] {
            let a = sample(&spec, method).unwrap();
            let b = sample(&spec, method).unwrap();
            assert_eq!(a, b);
            assert!(a.path.first().iter().all(|&x| x == 0.0));
            assert_eq!(a.path.dim(), 2);
            assert_ne!(a.path.component_values(0), a.path.component_values(1));
        }
        let tiny = FbmSpec::unit(0.6, 2, 3).unwrap();
        assert_eq!(sample_cholesky(&tiny).unwrap().path.len(), 3);
        assert_eq!(sample_circulant(&tiny).unwrap().path.len(), 3);
    }
}
