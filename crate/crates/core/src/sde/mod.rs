//! Pathwise solver for `dX = σ(t, X) dB + b(t, X) dt` driven by a Hölder
//! path, in forward and backward (inverse-flow) form.

mod coeffs;
mod expr;
mod flow;
mod validate;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::fraccalc::FracOrder;
use crate::path::{euclid, GridPath};

pub use coeffs::{coefficient_field, Builtin, CoefficientField, ExpressionField, ExpressionSpec, HypothesisConstants};
pub use expr::Expr;
pub use flow::{flow_compose, FlowMap};
pub use validate::{sup_estimate_check, validate_coefficients, CoefficientReport, Lattice, SupReport};

/// Default blow-up guard factor: the solver aborts once `|X| > factor (1 + |x|)`.
pub const DEFAULT_BLOWUP: f64 = 1e12;

/// `α₀ = min{1/2, β, δ/(1+δ)}`.
pub fn alpha0(beta: f64, delta: f64) -> Result<f64> {
    for (name, v) in [("beta", beta), ("delta", delta)] {
        if !(v > 0.0 && v <= 1.0) {
            return domain(format!("{name} must lie in (0, 1], got {v}"));
        }
    }
    Ok(0.5f64.min(beta).min(delta / (1.0 + delta)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Explicit left-point scheme.
    #[default]
    Euler,
    /// Two-stage trapezoidal predictor-corrector.
    Heun,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Self::Euler),
            "heun" => Ok(Self::Heun),
            other => invalid(format!("unknown scheme '{other}' (expected euler or heun)")),
        }
    }
}

/// Discretization settings, admitted only when `α ∈ (1 - H, α₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha: FracOrder,
    pub steps: usize,
    pub hurst: f64,
    pub scheme: Scheme,
    pub blowup: f64,
}

impl SolverConfig {
    pub fn new(alpha: f64, steps: usize, hurst: f64, constants: &HypothesisConstants) -> Result<Self> {
        constants.validate()?;
        if !(hurst > 0.5 && hurst < 1.0) {
            return domain(format!("the solver needs 1/2 < H < 1, got {hurst}"));
        }
        let a0 = alpha0(constants.beta, constants.delta)?;
        if !(alpha > 1.0 - hurst && alpha < a0) {
            return Err(Error::Hypothesis(format!(
                "alpha = {alpha} is outside the admissible window ({}, {a0})",
                1.0 - hurst
            )));
        }
        if steps == 0 {
            return invalid("the solver needs at least one step");
        }
        Ok(Self {
            alpha: FracOrder::new(alpha)?,
            steps,
            hurst,
            scheme: Scheme::Euler,
            blowup: DEFAULT_BLOWUP,
        })
    }

    /// The midpoint of the admissible window.
    pub fn centred(steps: usize, hurst: f64, constants: &HypothesisConstants) -> Result<Self> {
        let a0 = alpha0(constants.beta, constants.delta)?;
        Self::new(0.5 * (1.0 - hurst + a0), steps, hurst, constants)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }
}

/// Scratch buffers for one integration.
pub(crate) struct Stepper<'a> {
    field: &'a dyn CoefficientField,
    driver: &'a GridPath,
    scheme: Scheme,
    guard: f64,
    sigma: Vec<f64>,
    sigma2: Vec<f64>,
    drift: Vec<f64>,
    drift2: Vec<f64>,
    db: Vec<f64>,
    trial: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(
        field: &'a dyn CoefficientField,
        driver: &'a GridPath,
        cfg: &SolverConfig,
        x: &[f64],
    ) -> Result<Self> {
        let (d, m) = (field.dim(), field.noise_dim());
        if driver.dim() != m {
            return invalid(format!("driver has {} components, the coefficients expect {m}", driver.dim()));
        }
        if x.len() != d {
            return invalid(format!("initial point has dimension {}, expected {d}", x.len()));
        }
        if driver.steps() != cfg.steps {
            return invalid(format!(
                "driver has {} steps but the solver is configured for {}",
                driver.steps(),
                cfg.steps
            ));
        }
        Ok(Self {
            field,
            driver,
            scheme: cfg.scheme,
            guard: cfg.blowup * (1.0 + euclid(x)),
            sigma: vec![0.0; d * m],
            sigma2: vec![0.0; d * m],
            drift: vec![0.0; d],
            drift2: vec![0.0; d],
            db: vec![0.0; m],
            trial: vec![0.0; d],
        })
    }

    fn increment(&mut self, k: usize) {
        let (a, b) = (self.driver.point(k), self.driver.point(k + 1));
        for (q, v) in self.db.iter_mut().enumerate() {
            *v = b[q] - a[q];
        }
    }

    /// `out = x + sign (σ dB + b h)` with coefficients frozen at `(t, x)`.
    fn apply(sigma: &[f64], drift: &[f64], db: &[f64], h: f64, sign: f64, x: &[f64], out: &mut [f64]) {
        let m = db.len();
        for (i, o) in out.iter_mut().enumerate() {
            let noise: f64 = sigma[i * m..(i + 1) * m].iter().zip(db).map(|(s, d)| s * d).sum();
            *o = x[i] + sign * (noise + drift[i] * h);
        }
    }

    /// One step from grid point `k` to `k + 1`.
    pub(crate) fn forward(&mut self, k: usize, x: &mut [f64]) -> Result<()> {
        let h = self.driver.step();
        let t = self.driver.time(k);
        self.increment(k);
        self.field.sigma(t, x, &mut self.sigma);
        self.field.drift(t, x, &mut self.drift);
        match self.scheme {
            Scheme::Euler => {
                Self::apply(&self.sigma, &self.drift, &self.db, h, 1.0, x, &mut self.trial);
            }
            Scheme::Heun => {
                Self::apply(&self.sigma, &self.drift, &self.db, h, 1.0, x, &mut self.trial);
                let t1 = self.driver.time(k + 1);
                self.field.sigma(t1, &self.trial, &mut self.sigma2);
                self.field.drift(t1, &self.trial, &mut self.drift2);
                average(&mut self.sigma, &self.sigma2);
                average(&mut self.drift, &self.drift2);
                Self::apply(&self.sigma, &self.drift, &self.db, h, 1.0, x, &mut self.trial);
            }
        }
        x.copy_from_slice(&self.trial);
        self.check(k + 1, x)
    }

    /// One step from grid point `k + 1` back to `k`, subtracting the
    /// increment evaluated at the right end.
    pub(crate) fn backward(&mut self, k: usize, y: &mut [f64]) -> Result<()> {
        let h = self.driver.step();
        let t1 = self.driver.time(k + 1);
        self.increment(k);
        self.field.sigma(t1, y, &mut self.sigma);
        self.field.drift(t1, y, &mut self.drift);
        match self.scheme {
            Scheme::Euler => {
                Self::apply(&self.sigma, &self.drift, &self.db, h, -1.0, y, &mut self.trial);
            }
            Scheme::Heun => {
                Self::apply(&self.sigma, &self.drift, &self.db, h, -1.0, y, &mut self.trial);
                let t = self.driver.time(k);
                self.field.sigma(t, &self.trial, &mut self.sigma2);
                self.field.drift(t, &self.trial, &mut self.drift2);
                average(&mut self.sigma, &self.sigma2);
                average(&mut self.drift, &self.drift2);
                Self::apply(&self.sigma, &self.drift, &self.db, h, -1.0, y, &mut self.trial);
            }
        }
        y.copy_from_slice(&self.trial);
        self.check(k, y)
    }

    fn check(&self, step: usize, x: &[f64]) -> Result<()> {
        let norm = euclid(x);
        if !(norm <= self.guard) {
            return Err(Error::BlowUp {
                step,
                norm,
                bound: self.guard,
            });
        }
        Ok(())
    }
}

fn average(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x = 0.5 * (*x + y);
    }
}

/// `X_{r t}(x)` at grid index `t` for a start at grid index `r ≤ t`.
pub(crate) fn forward_point(
    field: &dyn CoefficientField,
    driver: &GridPath,
    cfg: &SolverConfig,
    x: &[f64],
    r: usize,
    t: usize,
) -> Result<Vec<f64>> {
    let mut s = Stepper::new(field, driver, cfg, x)?;
    let mut state = x.to_vec();
    for k in r..t {
        s.forward(k, &mut state)?;
    }
    Ok(state)
}

/// `Y_{r t}(x)` at grid index `r` for a terminal value at grid index `t ≥ r`.
pub(crate) fn backward_point(
    field: &dyn CoefficientField,
    driver: &GridPath,
    cfg: &SolverConfig,
    x: &[f64],
    r: usize,
    t: usize,
) -> Result<Vec<f64>> {
    let mut s = Stepper::new(field, driver, cfg, x)?;
    let mut state = x.to_vec();
    for k in (r..t).rev() {
        s.backward(k, &mut state)?;
    }
    Ok(state)
}

/// Forward solution `s ↦ X_{r s}(x)` on the grid points from `r` to the horizon.
pub fn solve_forward(
    x: &[f64],
    r: f64,
    field: &dyn CoefficientField,
    driver: &GridPath,
    cfg: &SolverConfig,
) -> Result<GridPath> {
    let start = driver.index_of(r)?;
    let n = driver.steps();
    if start == n {
        return invalid("start time must lie before the horizon");
    }
    let mut s = Stepper::new(field, driver, cfg, x)?;
    let mut state = x.to_vec();
    let mut values = Vec::with_capacity((n - start + 1) * x.len());
    values.extend_from_slice(&state);
    for k in start..n {
        s.forward(k, &mut state)?;
        values.extend_from_slice(&state);
    }
    GridPath::with_origin(driver.time(start), driver.end_time() - driver.time(start), x.len(), values)
}

/// Backward solution `s ↦ Y_{s t}(x)` on the grid points from the origin to `t`.
pub fn solve_backward(
    x: &[f64],
    t: f64,
    field: &dyn CoefficientField,
    driver: &GridPath,
    cfg: &SolverConfig,
) -> Result<GridPath> {
    let end = driver.index_of(t)?;
    if end == 0 {
        return invalid("terminal time must lie after the origin");
    }
    let d = x.len();
    let mut s = Stepper::new(field, driver, cfg, x)?;
    let mut state = x.to_vec();
    let mut values = vec![0.0; (end + 1) * d];
    values[end * d..].copy_from_slice(&state);
    for k in (0..end).rev() {
        s.backward(k, &mut state)?;
        values[k * d..(k + 1) * d].copy_from_slice(&state);
    }
    GridPath::with_origin(driver.origin(), driver.time(end) - driver.origin(), d, values)
}
