use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{assemble, component_rng, fgn_autocovariance, FbmPath, FbmSpec, SetupCache};
use crate::error::{Error, Result};

static EMBEDDINGS: SetupCache<Embedding> = SetupCache::new(16);

/// Exact `O(n log n)` sampler by circulant embedding of the increment
/// covariance.
#[derive(Debug, Clone, Copy)]
pub struct CirculantSampler {
    /// Times the embedding may be doubled when it is not nonnegative definite.
    pub max_doublings: u32,
    /// Negative eigenvalues above `-tolerance · λ_max` are clamped to zero.
    pub tolerance: f64,
}

impl Default for CirculantSampler {
    fn default() -> Self {
        Self {
            max_doublings: 3,
            tolerance: 1e-10,
        }
    }
}

pub(crate) struct Embedding {
    /// `sqrt(λ_k / M)`
    amplitude: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl CirculantSampler {
    pub fn sample(&self, spec: &FbmSpec) -> Result<FbmPath> {
        spec.validate()?;
        let n = spec.grid_size;
        let emb = EMBEDDINGS.get_or_try_insert(spec.hurst, n, 1.0, || self.embed(spec.hurst, n))?;
        let scale = spec.step().powf(spec.hurst);
        let increments = (0..spec.components)
            .map(|j| {
                let mut rng = component_rng(spec.seed, j);
                let mut buf: Vec<Complex<f64>> = emb
                    .amplitude
                    .iter()
                    .map(|&a| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex::new(a * re, a * im)
                    })
                    .collect();
                emb.fft.process(&mut buf);
                buf[..n].iter().map(|c| scale * c.re).collect()
            })
            .collect();
        assemble(spec, increments)
    }

    fn embed(&self, hurst: f64, n: usize) -> Result<Embedding> {
        let mut planner = FftPlanner::new();
        let mut half = n;
        let mut last = (0, 0.0);
        for _ in 0..=self.max_doublings {
            let size = 2 * half;
            let mut row: Vec<Complex<f64>> = (0..size)
                .map(|k| {
                    let lag = if k <= half { k } else { size - k };
                    Complex::new(fgn_autocovariance(hurst, lag), 0.0)
                })
                .collect();
            let fft = planner.plan_fft_forward(size);
            fft.process(&mut row);
            let max = row.iter().map(|c| c.re).fold(0.0, f64::max);
            let min = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
            if min >= -self.tolerance * max {
                let amplitude = row.iter().map(|c| (c.re.max(0.0) / size as f64).sqrt()).collect();
                return Ok(Embedding { amplitude, fft });
            }
            last = (size, min);
            half *= 2;
        }
        Err(Error::Embedding {
            size: last.0,
            value: last.1,
        })
    }
}
