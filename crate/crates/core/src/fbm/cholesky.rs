use rand_distr::{Distribution, StandardNormal};

use super::{assemble, component_rng, fgn_autocovariance, FbmPath, FbmSpec, SetupCache};
use crate::error::{invalid, Error, Result};

/// Largest grid the dense sampler accepts unless configured otherwise.
pub const DEFAULT_MAX_CHOLESKY: usize = 1 << 13;

/// Relative diagonal jitter, scaled by `trace / n`.
const JITTER: f64 = 1e-12;

static FACTORS: SetupCache<PackedLower> = SetupCache::new(8);

/// Exact sampler factoring the dense increment covariance.
#[derive(Debug, Clone, Copy)]
pub struct CholeskySampler {
    pub max_size: usize,
}

impl Default for CholeskySampler {
    fn default() -> Self {
        Self {
            max_size: DEFAULT_MAX_CHOLESKY,
        }
    }
}

/// Row-major packed lower triangle.
pub(crate) struct PackedLower {
    n: usize,
    data: Vec<f64>,
}

impl PackedLower {
    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }
}

impl CholeskySampler {
    pub fn sample(&self, spec: &FbmSpec) -> Result<FbmPath> {
        spec.validate()?;
        let n = spec.grid_size;
        if n > self.max_size {
            return invalid(format!(
                "grid size {n} exceeds the dense sampler limit {}; use the circulant sampler",
                self.max_size
            ));
        }
        let factor = FACTORS.get_or_try_insert(spec.hurst, n, 1.0, || factor_noise(spec.hurst, n))?;
        let scale = spec.step().powf(spec.hurst);
        let increments = (0..spec.components)
            .map(|j| {
                let mut rng = component_rng(spec.seed, j);
                let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                (0..n)
                    .map(|i| scale * factor.row(i).iter().zip(&z).map(|(l, x)| l * x).sum::<f64>())
                    .collect()
            })
            .collect();
        assemble(spec, increments)
    }
}

/// Cholesky factor of the unit-step noise covariance `γ(|i - j|)`.
fn factor_noise(hurst: f64, n: usize) -> Result<PackedLower> {
    let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(hurst, k)).collect();
    // every diagonal entry is γ(0), so trace / n = γ(0)
    let jitter = JITTER * gamma[0];
    let mut l = PackedLower {
        n,
        data: vec![0.0; n * (n + 1) / 2],
    };
    for i in 0..n {
        let ri = i * (i + 1) / 2;
        for j in 0..=i {
            let rj = j * (j + 1) / 2;
            let dot: f64 = l.data[ri..ri + j]
                .iter()
                .zip(&l.data[rj..rj + j])
                .map(|(a, b)| a * b)
                .sum();
            let mut a = gamma[i - j];
            if i == j {
                a += jitter;
                let pivot = a - dot;
                if !(pivot > 0.0) {
                    return Err(Error::Factorization { minor: i + 1, pivot });
                }
                l.data[ri + i] = pivot.sqrt();
            } else {
                l.data[ri + j] = (a - dot) / l.data[rj + j];
            }
        }
    }
    debug_assert_eq!(l.data.len(), l.n * (l.n + 1) / 2);
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_reproduces_covariance() {
        let n = 12;
        let l = factor_noise(0.8, n).unwrap();
        for i in 0..n {
            for j in 0..=i {
                let prod: f64 = l.row(i).iter().zip(l.row(j)).map(|(a, b)| a * b).sum();
                let want = fgn_autocovariance(0.8, i - j) + if i == j { JITTER } else { 0.0 };
                assert!((prod - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn size_guard() {
        let spec = FbmSpec::unit(0.7, 64, 1).unwrap();
        let small = CholeskySampler { max_size: 32 };
        assert!(matches!(small.sample(&spec), Err(Error::InvalidInput(_))));
    }
}
