//! Riemann–Liouville fractional integrals, Weyl derivatives and the
//! functional `Λ_α` that controls every pathwise estimate.
//!
//! All operators are real-valued: the complex phases `(-1)^{±α}` attached to
//! the right-sided operators are dropped. Integrands are treated as
//! piecewise linear between grid points and integrated exactly against the
//! power kernels, so every operator is exact on piecewise-linear input.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, Error, Result};
use crate::norms::w_one_minus_alpha_norm;
use crate::path::GridPath;
use crate::quadrature::PowerWeights;

/// Values beyond this magnitude mean the singular integral did not converge.
const OVERFLOW_GUARD: f64 = 1e150;

/// A fractional exponent `α ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            domain(format!("fractional order must lie in (0, 1), got {alpha}"))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// The order `1 - α`.
    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

fn frac_integral(v: &[f64], h: f64, alpha: f64, side: Side) -> Vec<f64> {
    let n = v.len() - 1;
    let w = PowerWeights::new(alpha - 1.0, n);
    let scale = w.scale(h) / gamma(alpha);
    // node m of the kernel sits at distance m·h from the evaluation point
    let at = |i: usize, m: usize| match side {
        Side::Left => v[i - m],
        Side::Right => v[i + m],
    };
    (0..=n)
        .map(|i| {
            let span = match side {
                Side::Left => i,
                Side::Right => n - i,
            };
            if span == 0 {
                return 0.0;
            }
            let mut acc = w.right(0) * at(i, 0);
            for m in 1..span {
                acc += w.interior(m) * at(i, m);
            }
            acc += w.left(span) * at(i, span);
            scale * acc
        })
        .collect()
}

/// `I^α_{a+} f(x) = Γ(α)^{-1} ∫_a^x (x - y)^{α-1} f(y) dy`, componentwise.
pub fn left_frac_integral(f: &GridPath, alpha: FracOrder) -> GridPath {
    checked_components(f, |v| frac_integral(v, f.step(), alpha.value(), Side::Left))
        .expect("fractional integral of a finite path is finite")
}

/// `I^α_{b-} f(x) = Γ(α)^{-1} ∫_x^b (y - x)^{α-1} f(y) dy`, componentwise.
pub fn right_frac_integral(f: &GridPath, alpha: FracOrder) -> GridPath {
    checked_components(f, |v| frac_integral(v, f.step(), alpha.value(), Side::Right))
        .expect("fractional integral of a finite path is finite")
}

/// Marchaud form of the Weyl derivative at every grid point except the
/// singular endpoint, which is filled in afterwards.
fn weyl(v: &[f64], h: f64, alpha: f64, side: Side, pin: bool) -> Vec<f64> {
    let n = v.len() - 1;
    let w = PowerWeights::new(-alpha - 1.0, n);
    let scale = w.scale(h);
    let norm = 1.0 / gamma(1.0 - alpha);
    let anchor = match side {
        Side::Left => v[0],
        Side::Right => v[n],
    };
    let at = |i: usize, m: usize| match side {
        Side::Left => v[i - m],
        Side::Right => v[i + m],
    };
    let mut out: Vec<f64> = (0..=n)
        .map(|i| {
            let span = match side {
                Side::Left => i,
                Side::Right => n - i,
            };
            if span == 0 {
                return 0.0;
            }
            let vi = v[i];
            let mut acc = 0.0;
            for m in 1..span {
                acc += w.interior(m) * (vi - at(i, m));
            }
            acc += w.left(span) * (vi - at(i, span));
            let boundary = if pin { vi - anchor } else { vi };
            norm * (boundary / (span as f64 * h).powf(alpha) + alpha * scale * acc)
        })
        .collect();
    let (end, neighbour) = match side {
        Side::Left => (0, 1),
        Side::Right => (n, n - 1),
    };
    out[end] = if pin || v[end] == 0.0 { 0.0 } else { out[neighbour] };
    out
}

fn checked_components(f: &GridPath, op: impl Fn(&[f64]) -> Vec<f64>) -> Result<GridPath> {
    let comps: Vec<Vec<f64>> = (0..f.dim()).map(|j| op(&f.component_values(j))).collect();
    let mut values = Vec::with_capacity(f.values().len());
    for k in 0..f.len() {
        values.extend(comps.iter().map(|c| c[k]));
    }
    let bad = values.iter().position(|x| !x.is_finite() || x.abs() > OVERFLOW_GUARD);
    if let Some(k) = bad {
        return Err(Error::Regularity(format!(
            "singular integral diverged at grid point {}",
            k / f.dim()
        )));
    }
    GridPath::with_origin(f.origin(), f.horizon(), f.dim(), values)
}

/// Left Weyl derivative
/// `D^α_{a+} f(x) = Γ(1-α)^{-1} ( f(x)/(x-a)^α + α ∫_a^x (f(x) - f(y))/(x-y)^{α+1} dy )`.
///
/// The value at `x = a` is not defined by the formula: it is `0` when
/// `f(a) = 0` and otherwise repeats the first interior value.
pub fn left_weyl_derivative(f: &GridPath, alpha: FracOrder) -> Result<GridPath> {
    checked_components(f, |v| weyl(v, f.step(), alpha.value(), Side::Left, false))
}

/// Right Weyl derivative `D^α_{b-}` (real convention). With `pin_endpoint`
/// it acts on `f_{b-}(t) = f(t) - f(b)` and vanishes at `b`.
pub fn right_weyl_derivative(f: &GridPath, alpha: FracOrder, pin_endpoint: bool) -> Result<GridPath> {
    checked_components(f, |v| {
        weyl(v, f.step(), alpha.value(), Side::Right, pin_endpoint)
    })
}

/// Which right endpoints `t` enter the supremum defining `Λ_α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointMode {
    /// Every grid point.
    #[default]
    Exact,
    /// `⌈√n⌉` equally spaced grid points plus `T`; a lower bound.
    Decimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub value: f64,
    /// Grid indices `(s, t)` attaining the supremum.
    pub argmax: (usize, usize),
    pub mode: EndpointMode,
}

/// `Λ_α(g) = Γ(1-α)^{-1} sup_{s<t} |D^{1-α}_{t-} g_{t-}(s)|` over all grid pairs.
pub fn lambda_alpha(g: &GridPath, alpha: FracOrder) -> Result<f64> {
    lambda_alpha_with(g, alpha, EndpointMode::Exact).map(|e| e.value)
}

/// `Λ_α` with a choice of right endpoints, reporting where the supremum sits.
///
/// For fixed `s` the singular integral `∫_s^t (g(y) - g(s)) (y - s)^{α-2} dy`
/// is a running sum in `t`, so all `O(n²)` pairs cost `O(n²)` in total.
pub fn lambda_alpha_with(g: &GridPath, alpha: FracOrder, mode: EndpointMode) -> Result<LambdaEstimate> {
    let a = alpha.value();
    if a >= 0.5 {
        return domain(format!("Λ_α needs 0 < α < 1/2, got {a}"));
    }
    let n = g.steps();
    let h = g.step();
    let m = g.dim();
    let w = PowerWeights::new(a - 2.0, n);
    let scale = w.scale(h);
    let holder_w: Vec<f64> = (0..=n)
        .map(|j| if j == 0 { 0.0 } else { (j as f64 * h).powf(a - 1.0) })
        .collect();
    let endpoint = endpoint_mask(n, mode);
    let c = 1.0 - a;

    let (best, s, t) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0f64, i, i + 1);
            if m == 1 {
                let v = g.values();
                let vi = v[i];
                let mut cumulative = 0.0;
                for j in 1..=n - i {
                    let phi = v[i + j] - vi;
                    if endpoint[i + j] {
                        let d = (phi * holder_w[j] + c * scale * (cumulative + w.left(j) * phi)).abs();
                        if d > best.0 {
                            best = (d, i, i + j);
                        }
                    }
                    cumulative += w.interior(j) * phi;
                }
            } else {
                let gi = g.point(i);
                let mut cumulative = vec![0.0; m];
                for j in 1..=n - i {
                    let gj = g.point(i + j);
                    if endpoint[i + j] {
                        let mut sq = 0.0;
                        for q in 0..m {
                            let phi = gj[q] - gi[q];
                            let d = phi * holder_w[j] + c * scale * (cumulative[q] + w.left(j) * phi);
                            sq += d * d;
                        }
                        let d = sq.sqrt();
                        if d > best.0 {
                            best = (d, i, i + j);
                        }
                    }
                    for q in 0..m {
                        cumulative[q] += w.interior(j) * (gj[q] - gi[q]);
                    }
                }
            }
            best
        })
        .reduce(
            || (0.0, 0, 1),
            |x, y| if y.0 > x.0 || (y.0 == x.0 && (y.1, y.2) < (x.1, x.2)) { y } else { x },
        );
    let value = best / (gamma(a) * gamma(1.0 - a));
    if !value.is_finite() {
        return Err(Error::Regularity("Λ_α diverged".into()));
    }
    Ok(LambdaEstimate {
        value,
        argmax: (s, t),
        mode,
    })
}

fn endpoint_mask(n: usize, mode: EndpointMode) -> Vec<bool> {
    match mode {
        EndpointMode::Exact => vec![true; n + 1],
        EndpointMode::Decimated => {
            let count = (n as f64).sqrt().ceil() as usize;
            let mut mask = vec![false; n + 1];
            for k in 1..=count {
                mask[(k * n) / count] = true;
            }
            mask[n] = true;
            mask
        }
    }
}

/// The bound `Λ_α(g) ≤ ‖g‖_{1-α,∞,T} / (Γ(1-α) Γ(α))`.
pub fn lambda_alpha_upper_bound(g: &GridPath, alpha: FracOrder) -> Result<f64> {
    let a = alpha.value();
    Ok(w_one_minus_alpha_norm(g, alpha)? / (gamma(a) * gamma(1.0 - a)))
}
