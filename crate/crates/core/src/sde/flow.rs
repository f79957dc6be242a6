use std::collections::BTreeMap;
use std::sync::Arc;

use super::{backward_point, forward_point, CoefficientField, SolverConfig};
use crate::error::{invalid, Result};
use crate::path::GridPath;

/// The two-parameter families `X_{rt}(x)` and `Y_{rt}(x)` for one driver.
#[derive(Debug, Clone)]
pub struct FlowMap {
    driver: GridPath,
    config: SolverConfig,
    field: Arc<dyn CoefficientField>,
    realized: BTreeMap<(usize, usize, Vec<u64>), Vec<f64>>,
}

impl FlowMap {
    pub fn new(driver: GridPath, config: SolverConfig, field: Arc<dyn CoefficientField>) -> Result<Self> {
        if driver.dim() != field.noise_dim() {
            return invalid(format!(
                "driver has {} components, the coefficients expect {}",
                driver.dim(),
                field.noise_dim()
            ));
        }
        if driver.steps() != config.steps {
            return invalid(format!(
                "driver has {} steps but the solver is configured for {}",
                driver.steps(),
                config.steps
            ));
        }
        Ok(Self {
            driver,
            config,
            field,
            realized: BTreeMap::new(),
        })
    }

    pub fn driver(&self) -> &GridPath {
        &self.driver
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn field(&self) -> &dyn CoefficientField {
        self.field.as_ref()
    }

    fn indices(&self, r: f64, t: f64) -> Result<(usize, usize)> {
        let (i, j) = (self.driver.index_of(r)?, self.driver.index_of(t)?);
        if i > j {
            return invalid(format!("times out of order: {r} > {t}"));
        }
        Ok((i, j))
    }

    /// `X_{rt}(x)` between grid indices.
    pub fn forward_index(&self, r: usize, t: usize, x: &[f64]) -> Result<Vec<f64>> {
        if r > t || t > self.driver.steps() {
            return invalid(format!("bad index pair ({r}, {t})"));
        }
        forward_point(self.field.as_ref(), &self.driver, &self.config, x, r, t)
    }

    /// `Y_{rt}(x)` between grid indices.
    pub fn backward_index(&self, r: usize, t: usize, x: &[f64]) -> Result<Vec<f64>> {
        if r > t || t > self.driver.steps() {
            return invalid(format!("bad index pair ({r}, {t})"));
        }
        backward_point(self.field.as_ref(), &self.driver, &self.config, x, r, t)
    }

    pub fn forward(&self, r: f64, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let (i, j) = self.indices(r, t)?;
        self.forward_index(i, j, x)
    }

    pub fn backward(&self, r: f64, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let (i, j) = self.indices(r, t)?;
        self.backward_index(i, j, x)
    }

    /// Solve and store `X_{rt}(x)`; each cell is written once.
    pub fn realize(&mut self, r: f64, t: f64, x: &[f64]) -> Result<&[f64]> {
        let (i, j) = self.indices(r, t)?;
        let key = (i, j, x.iter().map(|v| v.to_bits()).collect());
        if !self.realized.contains_key(&key) {
            let value = self.forward_index(i, j, x)?;
            self.realized.insert(key.clone(), value);
        }
        Ok(&self.realized[&key])
    }

    /// Previously realized `X_{rt}(x)`, if any.
    pub fn realized(&self, r: f64, t: f64, x: &[f64]) -> Option<&[f64]> {
        let (i, j) = self.indices(r, t).ok()?;
        let key = (i, j, x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        self.realized.get(&key).map(Vec::as_slice)
    }

    /// `(Y_{rτ}(Y_{τt}(x)), Y_{rt}(x))`.
    pub fn backward_compose(&self, r: f64, tau: f64, t: f64, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (i, k) = self.indices(r, tau)?;
        let (_, j) = self.indices(tau, t)?;
        let inner = self.backward_index(k, j, x)?;
        Ok((self.backward_index(i, k, &inner)?, self.backward_index(i, j, x)?))
    }
}

/// `(X_{τt}(X_{rτ}(x)), X_{rt}(x))` for `r ≤ τ ≤ t` on the grid.
pub fn flow_compose(map: &FlowMap, r: f64, tau: f64, t: f64, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (i, k) = map.indices(r, tau)?;
    let (_, j) = map.indices(tau, t)?;
    let inner = map.forward_index(i, k, x)?;
    Ok((map.forward_index(k, j, &inner)?, map.forward_index(i, j, x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{sample_circulant, FbmSpec};
    use crate::sde::Builtin;

    fn map(field: Builtin, n: usize) -> FlowMap {
        let b = sample_circulant(&FbmSpec::unit(0.75, n, 8).unwrap()).unwrap().path;
        let cfg = SolverConfig::centred(n, 0.75, &field.constants()).unwrap();
        FlowMap::new(b, cfg, Arc::new(field)).unwrap()
    }

    #[test]
    fn identity_at_coincident_times() {
        let m = map(Builtin::Sin, 64);
        assert_eq!(m.forward(0.5, 0.5, &[0.3]).unwrap(), vec![0.3]);
        assert_eq!(m.backward(0.5, 0.5, &[0.3]).unwrap(), vec![0.3]);
    }

    #[test]
    fn composition() {
        let m = map(Builtin::Geometric { sigma0: 0.5 }, 256);
        for (r, tau, t) in [(0.0, 0.0, 1.0), (0.0, 1.0, 1.0), (0.25, 0.5, 0.75)] {
            let (a, b) = flow_compose(&m, r, tau, t, &[1.0]).unwrap();
            assert_eq!(a, b);
            let (a, b) = m.backward_compose(r, tau, t, &[1.0]).unwrap();
            assert_eq!(a, b);
        }
        assert!(flow_compose(&m, 0.5, 0.25, 1.0, &[1.0]).is_err());
    }

    #[test]
    fn additive_inverse_is_exact() {
        let m = map("additive:0.8".parse().unwrap(), 128);
        let y = m.backward(0.25, 1.0, &[2.0]).unwrap();
        let x = m.forward(0.25, 1.0, &y).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn realized_cells() {
        let mut m = map(Builtin::Sin, 64);
        assert!(m.realized(0.0, 1.0, &[1.0]).is_none());
        let v = m.realize(0.0, 1.0, &[1.0]).unwrap().to_vec();
        assert_eq!(m.realized(0.0, 1.0, &[1.0]).unwrap(), v.as_slice());
    }
}
