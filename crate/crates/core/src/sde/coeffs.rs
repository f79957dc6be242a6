use std::fmt::Debug;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use crate::error::{domain, invalid, Error, Result};

/// Regularity constants declared for a coefficient pair `(σ, b)`.
///
/// `m1`: Lipschitz constant of `σ` in `x`; `m2`: `δ`-Hölder constant of
/// `∂_x σ`; `m3`: `β`-Hölder constant in time of `σ` and `∂_x σ`; `l1`:
/// Lipschitz constant of `b`; `l2`: linear growth,
/// `|σ(t,x)| + |b(t,x)| ≤ l2 (1 + |x|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisConstants {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub l1: f64,
    pub l2: f64,
    pub beta: f64,
    pub delta: f64,
}

impl HypothesisConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("beta", self.beta), ("delta", self.delta)] {
            if !(v > 0.0 && v <= 1.0) {
                return domain(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        for (name, v) in [("M1", self.m1), ("M2", self.m2), ("M3", self.m3), ("L1", self.l1), ("L2", self.l2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return domain(format!("{name} must be a nonnegative number, got {v}"));
            }
        }
        Ok(())
    }

    /// Smooth, time-independent coefficients: `β = δ = 1`.
    pub fn smooth(m1: f64, m2: f64, l1: f64, l2: f64) -> Self {
        Self {
            m1,
            m2,
            m3: 0.0,
            l1,
            l2,
            beta: 1.0,
            delta: 1.0,
        }
    }
}

/// The coefficients of `dX = σ(t, X) dB + b(t, X) dt` in `R^d` driven by an
/// `m`-dimensional path. `σ` is written row-major as a `d × m` matrix.
pub trait CoefficientField: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn sigma(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn constants(&self) -> HypothesisConstants;
    fn name(&self) -> String;

    /// `sup |σ|` when `σ` is bounded.
    fn sigma_bound(&self) -> Option<f64> {
        None
    }
}

/// Coefficient fields available by name.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Zero,
    /// Constant `σ`, no drift.
    Additive { rows: usize, cols: usize, sigma: Vec<f64> },
    /// `σ(x) = σ₀ x`, no drift.
    Geometric { sigma0: f64 },
    /// `σ(x) = sin x`, no drift.
    Sin,
    /// Constant scalar `σ` and `b(t, x) = -x`.
    LinearDrift { sigma: f64 },
}

fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl CoefficientField for Builtin {
    fn dim(&self) -> usize {
        match self {
            Self::Additive { rows, .. } => *rows,
            _ => 1,
        }
    }

    fn noise_dim(&self) -> usize {
        match self {
            Self::Additive { cols, .. } => *cols,
            _ => 1,
        }
    }

    fn sigma(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        match self {
            Self::Zero => out[0] = 0.0,
            Self::Additive { sigma, .. } => out.copy_from_slice(sigma),
            Self::Geometric { sigma0 } => out[0] = sigma0 * x[0],
            Self::Sin => out[0] = x[0].sin(),
            Self::LinearDrift { sigma } => out[0] = *sigma,
        }
    }

    fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        match self {
            Self::LinearDrift { .. } => out[0] = -x[0],
            _ => out.fill(0.0),
        }
    }

    fn constants(&self) -> HypothesisConstants {
        match self {
            Self::Zero => HypothesisConstants::smooth(0.0, 0.0, 0.0, 0.0),
            Self::Additive { sigma, .. } => HypothesisConstants::smooth(0.0, 0.0, 0.0, frobenius(sigma)),
            Self::Geometric { sigma0 } => HypothesisConstants::smooth(sigma0.abs(), 0.0, 0.0, sigma0.abs()),
            Self::Sin => HypothesisConstants::smooth(1.0, 1.0, 0.0, 1.0),
            Self::LinearDrift { sigma } => HypothesisConstants::smooth(0.0, 0.0, 1.0, sigma.abs().max(1.0)),
        }
    }

    fn name(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Additive { rows, cols, sigma } => {
                let body: Vec<String> = sigma
                    .chunks(*cols)
                    .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
                    .collect();
                debug_assert_eq!(body.len(), *rows);
                format!("additive:{}", body.join(";"))
            }
            Self::Geometric { sigma0 } => format!("geometric:{sigma0}"),
            Self::Sin => "sin".into(),
            Self::LinearDrift { sigma } => format!("linear-drift:{sigma}"),
        }
    }

    fn sigma_bound(&self) -> Option<f64> {
        match self {
            Self::Zero => Some(0.0),
            Self::Additive { sigma, .. } => Some(frobenius(sigma)),
            Self::Sin => Some(1.0),
            Self::LinearDrift { sigma } => Some(sigma.abs()),
            Self::Geometric { .. } => None,
        }
    }
}

fn parse_number(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse(format!("bad {what} '{s}'")))
}

impl std::str::FromStr for Builtin {
    type Err = Error;

    /// `zero`, `additive:<rows>` with rows `a,b;c,d`, `geometric:<σ₀>`,
    /// `sin`, `linear-drift[:<σ>]`.
    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.strip_prefix("builtin:").unwrap_or(spec);
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (spec, None),
        };
        match (name, arg) {
            ("zero", None) => Ok(Self::Zero),
            ("sin", None) => Ok(Self::Sin),
            ("geometric", Some(a)) => Ok(Self::Geometric {
                sigma0: parse_number(a, "sigma0")?,
            }),
            ("linear-drift", a) => Ok(Self::LinearDrift {
                sigma: a.map(|a| parse_number(a, "sigma")).transpose()?.unwrap_or(1.0),
            }),
            ("additive", Some(a)) => {
                let rows: Vec<Vec<f64>> = a
                    .split(';')
                    .map(|r| r.split(',').map(|v| parse_number(v, "matrix entry")).collect())
                    .collect::<Result<_>>()?;
                let cols = rows[0].len();
                if rows.iter().any(|r| r.len() != cols) {
                    return Err(Error::Parse(format!("ragged matrix '{a}'")));
                }
                Ok(Self::Additive {
                    rows: rows.len(),
                    cols,
                    sigma: rows.concat(),
                })
            }
            _ => Err(Error::Parse(format!(
                "unknown coefficient field '{spec}' (expected zero, additive:<matrix>, geometric:<s>, sin, linear-drift[:<s>])"
            ))),
        }
    }
}

/// Declarative coefficient file: expressions for every entry of `σ`
/// (row-major) and `b`, and the declared constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpressionSpec {
    pub dim: usize,
    pub noise_dim: usize,
    pub sigma: Vec<String>,
    pub drift: Vec<String>,
    pub constants: HypothesisConstants,
    #[serde(default)]
    pub sigma_bound: Option<f64>,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ExpressionField {
    spec: ExpressionSpec,
    sigma: Vec<Expr>,
    drift: Vec<Expr>,
}

impl ExpressionField {
    pub fn new(spec: ExpressionSpec) -> Result<Self> {
        spec.constants.validate()?;
        if spec.dim == 0 || spec.noise_dim == 0 {
            return invalid("coefficient dimensions must be positive");
        }
        if spec.sigma.len() != spec.dim * spec.noise_dim {
            return invalid(format!(
                "sigma needs {} entries for a {}x{} matrix, got {}",
                spec.dim * spec.noise_dim,
                spec.dim,
                spec.noise_dim,
                spec.sigma.len()
            ));
        }
        if spec.drift.len() != spec.dim {
            return invalid(format!("drift needs {} entries, got {}", spec.dim, spec.drift.len()));
        }
        let parse = |v: &[String]| v.iter().map(|s| Expr::parse(s, spec.dim)).collect::<Result<Vec<_>>>();
        Ok(Self {
            sigma: parse(&spec.sigma)?,
            drift: parse(&spec.drift)?,
            spec,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl CoefficientField for ExpressionField {
    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn noise_dim(&self) -> usize {
        self.spec.noise_dim
    }

    fn sigma(&self, t: f64, x: &[f64], out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.sigma) {
            *o = e.eval(t, x);
        }
    }

    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.drift) {
            *o = e.eval(t, x);
        }
    }

    fn constants(&self) -> HypothesisConstants {
        self.spec.constants
    }

    fn name(&self) -> String {
        self.spec.name.clone().unwrap_or_else(|| "expression".into())
    }

    fn sigma_bound(&self) -> Option<f64> {
        self.spec.sigma_bound
    }
}

/// Resolve a field by builtin name, or from an expression file given as
/// `file:<path>`.
pub fn coefficient_field(spec: &str) -> Result<Arc<dyn CoefficientField>> {
    if let Some(path) = spec.strip_prefix("file:") {
        return Ok(Arc::new(ExpressionField::load(path)?));
    }
    Ok(Arc::new(spec.parse::<Builtin>()?))
}
