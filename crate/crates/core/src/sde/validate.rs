use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CoefficientField, HypothesisConstants};
use crate::error::{domain, invalid, Error, Result};
use crate::norms::holder_seminorm;
use crate::path::{euclid, GridPath, HolderOrder};

/// Finite-difference step for `∂_x σ`.
const FD_STEP: f64 = 1e-5;

/// Sampling points for [`validate_coefficients`]: `points` states in the box
/// `[-radius, radius]^d` (a uniform grid when `d = 1`, seeded uniform draws
/// otherwise) and `times` equally spaced times in `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub radius: f64,
    pub points: usize,
    pub times: usize,
    pub horizon: f64,
    pub seed: u64,
}

impl Default for Lattice {
    fn default() -> Self {
        Self {
            radius: 2.0,
            points: 201,
            times: 5,
            horizon: 1.0,
            seed: 0,
        }
    }
}

impl Lattice {
    fn states(&self, d: usize) -> Vec<Vec<f64>> {
        if d == 1 {
            let p = self.points.max(2);
            return (0..p)
                .map(|k| vec![-self.radius + 2.0 * self.radius * k as f64 / (p - 1) as f64])
                .collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.points)
            .map(|_| (0..d).map(|_| rng.random_range(-self.radius..=self.radius)).collect())
            .collect()
    }

    fn time_points(&self) -> Vec<f64> {
        let k = self.times.max(2);
        (0..k).map(|i| self.horizon * i as f64 / (k - 1) as f64).collect()
    }
}

/// Empirical constants against the declared ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub empirical: HypothesisConstants,
    pub declared: HypothesisConstants,
    /// Names of declared constants the lattice contradicts.
    pub exceeded: Vec<String>,
    /// True when the declared constants are consistent with every lattice sample.
    pub consistent: bool,
}

struct Eval<'a> {
    field: &'a dyn CoefficientField,
    d: usize,
    m: usize,
}

impl Eval<'_> {
    fn sigma(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.d * self.m];
        self.field.sigma(t, x, &mut out);
        finite(out, "sigma", t, x)
    }

    fn drift(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.d];
        self.field.drift(t, x, &mut out);
        finite(out, "drift", t, x)
    }

    /// Central differences `∂_{x_i} σ(t, x)` for every `i`.
    fn jacobian(&self, t: f64, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        (0..self.d)
            .map(|i| {
                let mut hi = x.to_vec();
                let mut lo = x.to_vec();
                hi[i] += FD_STEP;
                lo[i] -= FD_STEP;
                let (a, b) = (self.sigma(t, &hi)?, self.sigma(t, &lo)?);
                Ok(a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * FD_STEP)).collect())
            })
            .collect()
    }
}

fn finite(v: Vec<f64>, what: &str, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{what} is not finite at t = {t}, x = {x:?}")))
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Estimate every regularity constant by maximizing difference ratios over
/// the lattice. Passing means "consistent with" the declaration, never a proof.
pub fn validate_coefficients(field: &dyn CoefficientField, lattice: &Lattice) -> Result<CoefficientReport> {
    let declared = field.constants();
    declared.validate()?;
    if !(lattice.radius > 0.0 && lattice.horizon > 0.0) || lattice.points < 2 {
        return invalid("lattice needs a positive radius and horizon and at least two points");
    }
    let ev = Eval {
        field,
        d: field.dim(),
        m: field.noise_dim(),
    };
    let states = lattice.states(ev.d);
    let times = lattice.time_points();
    let (beta, delta) = (declared.beta, declared.delta);
    let mut emp = HypothesisConstants {
        m1: 0.0,
        m2: 0.0,
        m3: 0.0,
        l1: 0.0,
        l2: 0.0,
        beta,
        delta,
    };

    for &t in &times {
        let sig: Vec<Vec<f64>> = states.iter().map(|x| ev.sigma(t, x)).collect::<Result<_>>()?;
        let drift: Vec<Vec<f64>> = states.iter().map(|x| ev.drift(t, x)).collect::<Result<_>>()?;
        let jac: Vec<Vec<Vec<f64>>> = states.iter().map(|x| ev.jacobian(t, x)).collect::<Result<_>>()?;
        for (p, x) in states.iter().enumerate() {
            emp.l2 = emp.l2.max((euclid(&sig[p]) + euclid(&drift[p])) / (1.0 + euclid(x)));
            for q in p + 1..states.len() {
                let r = dist(x, &states[q]);
                if r == 0.0 {
                    continue;
                }
                emp.m1 = emp.m1.max(dist(&sig[p], &sig[q]) / r);
                emp.l1 = emp.l1.max(dist(&drift[p], &drift[q]) / r);
                for i in 0..ev.d {
                    emp.m2 = emp.m2.max(dist(&jac[p][i], &jac[q][i]) / r.powf(delta));
                }
            }
        }
    }
    for (a, &s) in times.iter().enumerate() {
        for &t in &times[a + 1..] {
            let gap = (t - s).powf(beta);
            for x in &states {
                let ds = dist(&ev.sigma(t, x)?, &ev.sigma(s, x)?);
                let (jt, js) = (ev.jacobian(t, x)?, ev.jacobian(s, x)?);
                let dj = jt.iter().zip(&js).map(|(u, v)| dist(u, v)).fold(0.0, f64::max);
                emp.m3 = emp.m3.max((ds + dj) / gap);
            }
        }
    }

    let exceeds = |e: f64, d: f64| e > d * (1.0 + 1e-6) + 1e-6;
    let mut exceeded = Vec::new();
    for (name, e, d) in [
        ("M1", emp.m1, declared.m1),
        ("M2", emp.m2, declared.m2),
        ("M3", emp.m3, declared.m3),
        ("L1", emp.l1, declared.l1),
        ("L2", emp.l2, declared.l2),
    ] {
        if exceeds(e, d) {
            exceeded.push(name.to_string());
        }
    }
    Ok(CoefficientReport {
        empirical: emp,
        declared,
        consistent: exceeded.is_empty(),
        exceeded,
    })
}

/// Constants implied by one solution in the a priori sup bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupReport {
    pub sup: f64,
    pub initial: f64,
    pub driver_holder: f64,
    /// Smallest `k ≥ 0` making the exponential bound hold for this path.
    pub implied_k: f64,
    /// Smallest `k ≥ 0` for the bound specific to bounded `σ`, when it applies.
    pub implied_k_bounded: Option<f64>,
}

/// Implied constants in `sup|X| ≤ 2^{1 + k T s ‖B‖_θ^{1/θ}} (|X_0| + 1)` with
/// `s = ‖σ'‖_∞ ∨ |σ(0)|`, and, for bounded `σ`, in
/// `sup|X| ≤ |X_0| + k ‖σ‖_∞ (T^θ ∨ T ‖σ'‖_∞^{(1-θ)/θ}) ‖B‖_θ^{1/θ}`.
pub fn sup_estimate_check(
    solution: &GridPath,
    driver: &GridPath,
    field: &dyn CoefficientField,
    theta: HolderOrder,
) -> Result<SupReport> {
    let th = theta.value();
    if th <= 0.5 {
        return domain(format!("theta must exceed 1/2, got {th}"));
    }
    solution.check_same_grid(driver)?;
    let sup = (0..solution.len()).map(|k| solution.norm_at(k)).fold(0.0, f64::max);
    let initial = solution.norm_at(0);
    let holder = holder_seminorm(driver, theta);
    let strength = holder.powf(1.0 / th);
    let horizon = driver.horizon();
    let c = field.constants();
    let mut s0 = vec![0.0; field.dim() * field.noise_dim()];
    field.sigma(driver.origin(), &vec![0.0; field.dim()], &mut s0);
    let scale = c.m1.max(euclid(&s0));

    let exponent = ((sup / (initial + 1.0)).log2() - 1.0).max(0.0);
    let denom = horizon * scale * strength;
    let implied_k = if exponent == 0.0 { 0.0 } else { exponent / denom };

    let implied_k_bounded = field.sigma_bound().filter(|_| c.m1 > 0.0).map(|bound| {
        let spread = horizon.powf(th).max(horizon * c.m1.powf((1.0 - th) / th));
        let growth = (sup - initial).max(0.0);
        if growth == 0.0 {
            0.0
        } else {
            growth / (bound * spread * strength)
        }
    });
    Ok(SupReport {
        sup,
        initial,
        driver_holder: holder,
        implied_k,
        implied_k_bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{sample_circulant, FbmSpec};
    use crate::sde::{solve_forward, Builtin, SolverConfig};

    #[test]
    fn constant_sigma() {
        let f: Builtin = "additive:0.5,0;0,2".parse().unwrap();
        let r = validate_coefficients(&f, &Lattice::default()).unwrap();
        assert_eq!((r.empirical.m1, r.empirical.m2, r.empirical.m3, r.empirical.l1), (0.0, 0.0, 0.0, 0.0));
        assert!(r.empirical.l2 > 0.0 && r.consistent);
    }

    #[test]
    fn sine_constants_approach_one() {
        let r = validate_coefficients(&Builtin::Sin, &Lattice::default()).unwrap();
        assert!((r.empirical.m1 - 1.0).abs() < 1e-3, "{}", r.empirical.m1);
        assert!((r.empirical.m2 - 1.0).abs() < 1e-3, "{}", r.empirical.m2);
        assert!(r.consistent);
    }

    #[test]
    fn linear_drift_and_violations() {
        let f = Builtin::LinearDrift { sigma: 0.0 };
        let r = validate_coefficients(&f, &Lattice { radius: 100.0, ..Lattice::default() }).unwrap();
        assert!((r.empirical.l1 - 1.0).abs() < 1e-12);
        assert!(r.empirical.l2 <= 1.0 && r.empirical.l2 > 0.98);
        let json = r#"{"dim": 1, "noise_dim": 1, "sigma": ["3 * x1"], "drift": ["0"],
            "constants": {"m1": 1, "m2": 0, "m3": 0, "l1": 0, "l2": 3, "beta": 1, "delta": 1}}"#;
        let f = crate::sde::ExpressionField::from_json(json).unwrap();
        let r = validate_coefficients(&f, &Lattice::default()).unwrap();
        assert_eq!(r.exceeded, vec!["M1".to_string()]);
        let json = json.replace("3 * x1", "1 / x1");
        let f = crate::sde::ExpressionField::from_json(&json).unwrap();
        let odd = Lattice { points: 3, ..Lattice::default() };
        assert!(validate_coefficients(&f, &odd).is_err());
    }

    #[test]
    fn sup_reports() {
        let b = sample_circulant(&FbmSpec::unit(0.75, 512, 3).unwrap()).unwrap().path;
        let theta = HolderOrder::new(0.6).unwrap();
        let zero = Builtin::Zero;
        let cfg = SolverConfig::centred(512, 0.75, &zero.constants()).unwrap();
        let sol = solve_forward(&[2.0], 0.0, &zero, &b, &cfg).unwrap();
        let r = sup_estimate_check(&sol, &b, &zero, theta).unwrap();
        assert_eq!((r.sup, r.implied_k), (2.0, 0.0));
        let geo = Builtin::Geometric { sigma0: 1.0 };
        let sol = solve_forward(&[1.0], 0.0, &geo, &b, &cfg).unwrap();
        let r = sup_estimate_check(&sol, &b, &geo, theta).unwrap();
        assert!(r.implied_k.is_finite() && r.implied_k_bounded.is_none());
        let sol = solve_forward(&[1.0], 0.0, &Builtin::Sin, &b, &cfg).unwrap();
        let r = sup_estimate_check(&sol, &b, &Builtin::Sin, theta).unwrap();
        assert!(r.implied_k_bounded.unwrap().is_finite());
    }
}
