//! Young integrals `∫ f dg` by Riemann–Stieltjes sums and by the fractional
//! integration-by-parts formula, plus the a priori bound
//! `|∫ f dg| ≤ Λ_α(g) ‖f‖_{α,1}`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::fraccalc::{lambda_alpha, left_weyl_derivative, right_weyl_derivative, FracOrder};
use crate::norms::{estimate_holder_order, f_alpha_one_norm};
use crate::path::{euclid, GridPath};
use crate::quadrature::PowerWeights;

/// Margin kept between `α` and the measured Hölder orders.
const ORDER_MARGIN: f64 = 0.01;

/// Relative tolerance under which a negative bound slack still counts as holding.
pub const BOUND_TOLERANCE: f64 = 1e-8;

/// Output dimension for an integrand of dimension `fd` against a driver of
/// dimension `m`: scalar `f` multiplies every driver component, otherwise
/// `f` is a row-major `d × m` matrix.
fn output_dim(fd: usize, m: usize) -> Result<usize> {
    if fd == 1 {
        Ok(m)
    } else if fd.is_multiple_of(m) {
        Ok(fd / m)
    } else {
        invalid(format!("integrand dimension {fd} is not a multiple of driver dimension {m}"))
    }
}

fn accumulate(out: &mut [f64], fk: &[f64], dg: &[f64]) {
    let m = dg.len();
    if fk.len() == 1 {
        for (o, d) in out.iter_mut().zip(dg) {
            *o += fk[0] * d;
        }
    } else {
        for (i, o) in out.iter_mut().enumerate() {
            *o += fk[i * m..(i + 1) * m].iter().zip(dg).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

/// Left-point Riemann–Stieltjes sum `Σ f(t_k) (g(t_{k+1}) - g(t_k))`.
pub fn rs_integral(f: &GridPath, g: &GridPath) -> Result<Vec<f64>> {
    let path = indefinite_integral(f, g)?;
    Ok(path.last().to_vec())
}

/// Running integral `t ↦ ∫_0^t f dg` built from the same left-point sums.
pub fn indefinite_integral(f: &GridPath, g: &GridPath) -> Result<GridPath> {
    f.check_same_grid(g)?;
    let m = g.dim();
    let d = output_dim(f.dim(), m)?;
    let mut values = Vec::with_capacity(d * g.len());
    let mut acc = vec![0.0; d];
    let mut dg = vec![0.0; m];
    values.extend_from_slice(&acc);
    for k in 0..g.steps() {
        let (a, b) = (g.point(k), g.point(k + 1));
        for q in 0..m {
            dg[q] = b[q] - a[q];
        }
        accumulate(&mut acc, f.point(k), &dg);
        values.extend_from_slice(&acc);
    }
    GridPath::with_origin(g.origin(), g.horizon(), d, values)
}

/// Result of the fractional representation of a Young integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZahleIntegral {
    pub value: Vec<f64>,
    pub alpha: f64,
    /// Measured Hölder orders of `f` and `g`.
    pub holder_f: f64,
    pub holder_g: f64,
    /// False when the orders do not leave room for `α`; the value is then a best effort.
    pub regular: bool,
}

/// Default order `(1 - μ + λ) / 2`, clipped into `(1 - μ + ε, λ - ε)`.
pub fn default_alpha(holder_f: f64, holder_g: f64) -> (f64, bool) {
    let lo = 1.0 - holder_g + ORDER_MARGIN;
    let hi = holder_f - ORDER_MARGIN;
    let mid = 0.5 * (1.0 - holder_g + holder_f);
    let regular = lo < hi;
    let a = if regular { mid.clamp(lo, hi) } else { mid };
    (a.clamp(ORDER_MARGIN, 1.0 - ORDER_MARGIN), regular)
}

/// `∫ f dg` for scalar components, as
/// `-∫ D^α_{0+} f(t) · D^{1-α}_{T-} g_{T-}(t) dt`.
fn zahle_scalar(f: &GridPath, g: &GridPath, alpha: FracOrder) -> Result<f64> {
    let a = alpha.value();
    let n = f.steps();
    let h = f.step();
    let gd = right_weyl_derivative(g, alpha.complement(), true)?;
    let gd = gd.values();
    let f0 = f.first()[0];
    let centred = f.map_values(|v| v - f0)?;
    let fd = left_weyl_derivative(&centred, alpha)?;
    let fd = fd.values();

    // f(0) t^{-α} / Γ(1-α) integrated exactly against the interpolant of gd
    let w = PowerWeights::new(-a, n);
    let mut singular = w.right(0) * gd[0] + w.left(n) * gd[n];
    for k in 1..n {
        singular += w.interior(k) * gd[k];
    }
    singular *= w.scale(h) * f0 / gamma(1.0 - a);

    let mut regular = 0.0;
    for k in 1..n {
        regular += fd[k] * gd[k];
    }
    regular += 0.5 * fd[n] * gd[n];
    regular *= h;
    Ok(-(singular + regular))
}

/// Young integral through the fractional integration-by-parts formula.
///
/// `α` defaults to a value between the measured Hölder orders; see
/// [`default_alpha`]. Vector and matrix layouts follow [`rs_integral`].
pub fn zahle_integral(f: &GridPath, g: &GridPath, alpha: Option<FracOrder>) -> Result<ZahleIntegral> {
    f.check_same_grid(g)?;
    let m = g.dim();
    let d = output_dim(f.dim(), m)?;
    let holder_f = estimate_holder_order(f);
    let holder_g = estimate_holder_order(g);
    let (alpha, regular) = match alpha {
        Some(a) => {
            let v = a.value();
            (a, holder_f > v && holder_g > 1.0 - v)
        }
        None => {
            let (v, ok) = default_alpha(holder_f, holder_g);
            (FracOrder::new(v)?, ok)
        }
    };
    let g_parts: Vec<GridPath> = (0..m).map(|j| g.component(j)).collect::<Result<_>>()?;
    let mut value = vec![0.0; d];
    for (i, out) in value.iter_mut().enumerate() {
        for (j, gj) in g_parts.iter().enumerate() {
            let fij = if f.dim() == 1 {
                if i != j {
                    continue;
                }
                f.clone()
            } else {
                f.component(i * m + j)?
            };
            *out += zahle_scalar(&fij, gj, alpha)?;
        }
    }
    Ok(ZahleIntegral {
        value,
        alpha: alpha.value(),
        holder_f,
        holder_g,
        regular,
    })
}

/// Both sides of `|∫_0^T f dg| ≤ Λ_α(g) ‖f‖_{α,1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Evaluate the Young bound for a scalar integrand.
pub fn young_bound_check(f: &GridPath, g: &GridPath, alpha: FracOrder) -> Result<BoundReport> {
    if f.dim() != 1 {
        return invalid("the bound check takes a scalar integrand");
    }
    let lhs = euclid(&rs_integral(f, g)?);
    let rhs = lambda_alpha(g, alpha)? * f_alpha_one_norm(f, alpha)?;
    let slack = rhs - lhs;
    Ok(BoundReport {
        lhs,
        rhs,
        slack,
        holds: slack >= -BOUND_TOLERANCE * rhs.abs().max(1.0),
    })
}
