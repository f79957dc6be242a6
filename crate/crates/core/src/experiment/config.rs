use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fbm::Method;
use crate::sde::{coefficient_field, CoefficientField, Scheme, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Flow,
    Inverse,
    Rate,
    InitContinuity,
    DriverContinuity,
    Moments,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Flow => "flow",
            Self::Inverse => "inverse",
            Self::Rate => "rate",
            Self::InitContinuity => "init-continuity",
            Self::DriverContinuity => "driver-continuity",
            Self::Moments => "moments",
        }
    }
}

/// Seeds as an explicit list or as `count` consecutive values from `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { start: u64, count: u64 },
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Self::List(v) => v.clone(),
            Self::Range { start, count } => (*start..start + count).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::List(v) => v.len(),
            Self::Range { count, .. } => *count as usize,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Probes of the inverse experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InverseProbe {
    /// `|X(Y(x)) - x|` and `|Y(X(x)) - x|` for every time pair.
    Identity,
    /// Order preservation of `x ↦ X_{0T}(x)` and `x ↦ Y_{0T}(x)` on a sorted fan.
    Sortedness,
}

/// Thresholds used by the acceptance checks; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Lower floor of the flow tolerance schedule.
    pub flow_floor: f64,
    /// Safety factor applied to the calibrated constant.
    pub flow_safety: f64,
    /// Minimal decay of median discrepancies per doubling of `n`.
    pub decay_ratio: f64,
    /// Half-width of the admissible window around the predicted rate slope.
    pub slope_window: f64,
    /// Admissible `max / median` for continuity ratios.
    pub ratio_spread: f64,
    /// Admissible band `[1/b, b]` around the ladder-wide median of `Λ_α(B^n)`.
    pub lambda_band: f64,
    /// Estimates may move by this many standard errors when `N` doubles.
    pub moment_sigmas: f64,
    /// Absolute threshold for quantities that are exact in theory.
    pub exact: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            flow_floor: 1e-12,
            flow_safety: 10.0,
            decay_ratio: 1.3,
            slope_window: 0.1,
            ratio_spread: 10.0,
            lambda_band: 2.0,
            moment_sigmas: 3.0,
            exact: 1e-12,
        }
    }
}

/// Declarative description of one experiment. Unset optional fields take
/// kind-specific defaults documented on each field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub hurst: f64,
    /// Fractional order; defaults to the middle of the admissible window.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "one")]
    pub horizon: f64,
    /// Grid of the common fine driver.
    pub fine_n: usize,
    /// Grid sizes compared; each must divide `fine_n`.
    pub ladder: Vec<usize>,
    pub seeds: Seeds,
    /// Builtin coefficient name or `file:<path>`.
    #[serde(default = "default_coefficients")]
    pub coefficients: String,
    #[serde(default = "default_points")]
    pub initial_points: Vec<Vec<f64>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub sampler: Method,
    /// Time triples `(r, τ, t)`; defaults to all ordered triples of `{0, T/4, T/2, 3T/4, T}`.
    #[serde(default)]
    pub triples: Option<Vec<[f64; 3]>>,
    /// Inverse probes to run (default: both).
    #[serde(default)]
    pub probes: Option<Vec<InverseProbe>>,
    /// Number of initial points in the sortedness fan.
    #[serde(default = "default_fan")]
    pub fan: usize,
    /// Hölder order for the rate experiment.
    #[serde(default)]
    pub theta: Option<f64>,
    /// Grid on which `Λ_α` is evaluated in the rate experiment (default `fine_n`).
    #[serde(default)]
    pub lambda_grid: Option<usize>,
    /// Weight of the `‖·‖_{α,λ}` norm; defaults to `(4 Λ_α(B))^{1/(1-2α)}`.
    #[serde(default)]
    pub lambda_weight: Option<f64>,
    /// Initial-point pairs per seed for init-continuity.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Radius of the ball the pairs are drawn from.
    #[serde(default = "two")]
    pub radius: f64,
    /// Moment orders.
    #[serde(default = "default_moments")]
    pub p: Vec<f64>,
    /// Exponent and weight of the exponential moment `E exp(λ sup|X|^γ)`.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "one")]
    pub exp_lambda: f64,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn default_coefficients() -> String {
    "geometric:0.5".into()
}

fn default_points() -> Vec<Vec<f64>> {
    vec![vec![1.0]]
}

fn default_fan() -> usize {
    9
}

fn default_pairs() -> usize {
    100
}

fn default_moments() -> Vec<f64> {
    vec![2.0, 4.0, 8.0]
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn field(&self) -> Result<std::sync::Arc<dyn CoefficientField>> {
        coefficient_field(&self.coefficients)
    }

    /// Solver settings for grid size `n`, passing the admissibility gate.
    pub fn solver(&self, n: usize) -> Result<SolverConfig> {
        let c = self.field()?.constants();
        let cfg = match self.alpha {
            Some(a) => SolverConfig::new(a, n, self.hurst, &c)?,
            None => SolverConfig::centred(n, self.hurst, &c)?,
        };
        Ok(cfg.with_scheme(self.scheme))
    }

    pub fn triples(&self) -> Vec<[f64; 3]> {
        self.triples.clone().unwrap_or_else(|| {
            let q: Vec<f64> = (0..5).map(|k| self.horizon * k as f64 / 4.0).collect();
            let mut out = Vec::new();
            for a in 0..5 {
                for b in a..5 {
                    for c in b..5 {
                        out.push([q[a], q[b], q[c]]);
                    }
                }
            }
            out
        })
    }

    /// Ordered pairs `r < t` of the quarter grid.
    pub fn time_pairs(&self) -> Vec<[f64; 2]> {
        let q: Vec<f64> = (0..5).map(|k| self.horizon * k as f64 / 4.0).collect();
        let mut out = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                out.push([q[a], q[b]]);
            }
        }
        out
    }

    pub fn inverse_probes(&self) -> Vec<InverseProbe> {
        self.probes
            .clone()
            .unwrap_or_else(|| vec![InverseProbe::Identity, InverseProbe::Sortedness])
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return invalid("seed list is empty");
        }
        if self.ladder.is_empty() || self.ladder.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("ladder must be nonempty and strictly increasing");
        }
        if let Some(&bad) = self.ladder.iter().find(|&&n| n == 0 || !self.fine_n.is_multiple_of(n)) {
            return invalid(format!("ladder entry {bad} does not divide fine_n = {}", self.fine_n));
        }
        if !(self.horizon > 0.0) {
            return invalid("horizon must be positive");
        }
        let field = self.field()?;
        let uses_points = !matches!(self.kind, Kind::Rate | Kind::InitContinuity);
        if uses_points && (self.initial_points.is_empty() || self.initial_points.iter().any(|x| x.len() != field.dim())) {
            return invalid(format!("initial points must be nonempty and of dimension {}", field.dim()));
        }
        match self.kind {
            Kind::Rate => {
                let theta = self.theta.unwrap_or(0.55);
                if !(theta > 0.0 && theta < self.hurst) {
                    return invalid(format!("theta must lie in (0, H), got {theta}"));
                }
                if let Some(g) = self.lambda_grid {
                    if g == 0 || !self.fine_n.is_multiple_of(g) || self.ladder.iter().any(|n| g % n != 0) {
                        return invalid("lambda_grid must divide fine_n and be a multiple of every ladder entry");
                    }
                }
                self.rate_alpha()?;
            }
            _ => {
                for &n in &self.ladder {
                    self.solver(n)?;
                }
                self.solver(self.fine_n)?;
            }
        }
        if let Some(w) = self.lambda_weight {
            if !(w >= 0.0) {
                return invalid("lambda_weight must be nonnegative");
            }
        }
        if self.kind == Kind::Moments && field.dim() != 1 && self.gamma.is_some() {
            return invalid("the exponential moment is defined for scalar equations");
        }
        if self.kind == Kind::Inverse && self.inverse_probes().contains(&InverseProbe::Sortedness) && field.dim() != 1 {
            return invalid("the sortedness probe needs a scalar equation");
        }
        if self.kind == Kind::InitContinuity && !(self.radius > 0.0) {
            return invalid("radius must be positive");
        }
        Ok(())
    }

    /// `α` for the `Λ_α` ladder of the rate experiment: configured, else `1 - H + 0.05` capped below 1/2.
    pub fn rate_alpha(&self) -> Result<f64> {
        let a = self.alpha.unwrap_or_else(|| (1.0 - self.hurst + 0.05).min(0.45));
        if !(a > 1.0 - self.hurst && a < 0.5) {
            return invalid(format!("alpha = {a} must lie in (1 - H, 1/2) for the rate experiment"));
        }
        Ok(a)
    }
}
