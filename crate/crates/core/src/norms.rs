//! Hölder-scale and fractional Sobolev norms of grid paths.
//!
//! Suprema over continuous `(s, t)` are taken over grid pairs. Singular
//! integrals of increments use the product-integration rule in
//! [`crate::quadrature`], which is exact when the increment is linear in the
//! integration variable. Vector paths use the pointwise Euclidean norm.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::fraccalc::FracOrder;
use crate::path::{GridPath, HolderOrder};
use crate::quadrature::PowerWeights;

/// `sup_k |f(t_k)|`
pub fn sup_norm(f: &GridPath) -> f64 {
    (0..f.len()).map(|k| f.norm_at(k)).fold(0.0, f64::max)
}

/// `‖f‖_λ = max_{s<t} |f(t) - f(s)| / (t - s)^λ` over grid pairs.
pub fn holder_seminorm(f: &GridPath, lambda: HolderOrder) -> f64 {
    let n = f.steps();
    let h = f.step();
    let lam = lambda.value();
    let weights: Vec<f64> = (0..=n)
        .map(|j| if j == 0 { 0.0 } else { (j as f64 * h).powf(-lam) })
        .collect();
    weighted_pair_max(f, &weights)
}

/// Hölder norm `‖f‖_∞ + ‖f‖_θ`.
pub fn holder_norm(f: &GridPath, theta: HolderOrder) -> f64 {
    sup_norm(f) + holder_seminorm(f, theta)
}

/// `max_{i<k} |f(t_k) - f(t_i)| · w[k - i]`
pub(crate) fn weighted_pair_max(f: &GridPath, weights: &[f64]) -> f64 {
    let n = f.steps();
    if f.dim() == 1 {
        let v = f.values();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let vi = v[i];
                let tail = &v[i + 1..];
                let w = &weights[1..=tail.len()];
                // independent lanes let the compiler vectorize the max reduction
                let mut lanes = [0.0f64; 8];
                let (tc, tr) = (tail.chunks_exact(8), tail.len() % 8);
                for (xs, ws) in tc.zip(w.chunks_exact(8)) {
                    for q in 0..8 {
                        let r = (xs[q] - vi).abs() * ws[q];
                        lanes[q] = if r > lanes[q] { r } else { lanes[q] };
                    }
                }
                let start = tail.len() - tr;
                for (x, wj) in tail[start..].iter().zip(&w[start..]) {
                    let r = (x - vi).abs() * wj;
                    lanes[0] = if r > lanes[0] { r } else { lanes[0] };
                }
                lanes.iter().copied().fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    } else {
        (0..n)
            .into_par_iter()
            .map(|i| {
                (i + 1..=n)
                    .map(|k| f.distance(k, i) * weights[k - i])
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// `J(t_i) = ∫_{t_0}^{t_i} |f(t_i) - f(s)| (t_i - s)^{-α-1} ds` for every grid point.
pub(crate) fn left_increment_integrals(f: &GridPath, alpha: f64) -> Vec<f64> {
    let n = f.steps();
    let w = PowerWeights::new(-alpha - 1.0, n);
    let scale = w.scale(f.step());
    (0..=n)
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for m in 1..i {
                acc += w.interior(m) * f.distance(i, i - m);
            }
            acc += w.left(i) * f.distance(i, 0);
            scale * acc
        })
        .collect()
}

fn require_small_order(alpha: FracOrder) -> Result<f64> {
    let a = alpha.value();
    if a < 0.5 {
        Ok(a)
    } else {
        domain(format!("this norm needs 0 < α < 1/2, got {a}"))
    }
}

/// `‖f‖_{α,∞} = sup_t ( |f(t)| + ∫_0^t |f(t) - f(s)| / (t - s)^{α+1} ds )`
pub fn w_alpha_inf_norm(f: &GridPath, alpha: FracOrder) -> Result<f64> {
    w_alpha_lambda_norm(f, alpha, 0.0)
}

/// Exponentially weighted `‖f‖_{α,λ} = sup_t e^{-λt} ( |f(t)| + ∫_0^t … )`.
pub fn w_alpha_lambda_norm(f: &GridPath, alpha: FracOrder, lambda_weight: f64) -> Result<f64> {
    let a = require_small_order(alpha)?;
    if !(lambda_weight >= 0.0 && lambda_weight.is_finite()) {
        return domain(format!("weight λ must be finite and nonnegative, got {lambda_weight}"));
    }
    let integrals = left_increment_integrals(f, a);
    let h = f.step();
    let mut best = 0.0f64;
    for (k, j) in integrals.iter().enumerate() {
        let discount = if lambda_weight == 0.0 {
            1.0
        } else {
            (-lambda_weight * h * k as f64).exp()
        };
        best = best.max(discount * (f.norm_at(k) + j));
    }
    Ok(best)
}

/// `‖g‖_{1-α,∞,T} = sup_{s<t} ( |g(t) - g(s)| / (t - s)^{1-α} + ∫_s^t |g(y) - g(s)| / (y - s)^{2-α} dy )`
pub fn w_one_minus_alpha_norm(g: &GridPath, alpha: FracOrder) -> Result<f64> {
    let a = require_small_order(alpha)?;
    let n = g.steps();
    let h = g.step();
    let w = PowerWeights::new(a - 2.0, n);
    let scale = w.scale(h);
    let holder_w: Vec<f64> = (0..=n)
        .map(|j| if j == 0 { 0.0 } else { (j as f64 * h).powf(a - 1.0) })
        .collect();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0f64;
            let mut cumulative = 0.0;
            for j in 1..=n - i {
                let phi = g.distance(i + j, i);
                let value = phi * holder_w[j] + scale * (cumulative + w.left(j) * phi);
                best = best.max(value);
                cumulative += w.interior(j) * phi;
            }
            best
        })
        .reduce(|| 0.0, f64::max))
}

/// `‖f‖_{α,1} = ∫_0^T |f(s)| s^{-α} ds + ∫_0^T ∫_0^s |f(s) - f(y)| (s - y)^{-α-1} dy ds`
///
/// The inner singular integrals use product integration; the outer integral
/// of the second term uses the trapezoid rule.
pub fn f_alpha_one_norm(f: &GridPath, alpha: FracOrder) -> Result<f64> {
    let a = require_small_order(alpha)?;
    let n = f.steps();
    let h = f.step();
    let w = PowerWeights::new(-a, n);
    let mut first = w.right(0) * f.norm_at(0) + w.left(n) * f.norm_at(n);
    for k in 1..n {
        first += w.interior(k) * f.norm_at(k);
    }
    first *= w.scale(h);

    let inner = left_increment_integrals(f, a);
    let second = h * (inner.iter().sum::<f64>() - 0.5 * (inner[0] + inner[n]));
    Ok(first + second)
}

/// Least-squares Hölder exponent from the scaling of mean squared increments
/// over dyadic lags; `1` for paths with no variation. Clamped to `[0, 1]`.
pub fn estimate_holder_order(f: &GridPath) -> f64 {
    let n = f.steps();
    let h = f.step();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut lag = 1usize;
    let max_lag = (n / 4).max(1);
    while lag <= max_lag {
        let count = n + 1 - lag;
        let ms = (0..count)
            .map(|i| {
                let d = f.distance(i + lag, i);
                d * d
            })
            .sum::<f64>()
            / count as f64;
        if ms > 0.0 {
            xs.push((lag as f64 * h).ln());
            ys.push(0.5 * ms.ln());
        }
        lag *= 2;
    }
    if xs.len() < 2 {
        return 1.0;
    }
    crate::stats::slope(&xs, &ys).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ord(a: f64) -> FracOrder {
        FracOrder::new(a).unwrap()
    }

    fn line(n: usize) -> GridPath {
        GridPath::from_scalar_fn(1.0, n, |t| t).unwrap()
    }

    #[test]
    fn holder_examples() {
        let c = GridPath::constant(1.0, 64, &[3.0]).unwrap();
        assert_eq!(holder_seminorm(&c, HolderOrder::new(0.5).unwrap()), 0.0);
        assert_relative_eq!(holder_seminorm(&line(64), HolderOrder::new(1.0).unwrap()), 1.0, epsilon = 1e-12);
        let sqrt = GridPath::from_scalar_fn(1.0, 1024, f64::sqrt).unwrap();
        // brute force over all grid pairs, written independently
        let mut brute = 0.0f64;
        for i in 0..=1024usize {
            for k in i + 1..=1024usize {
                let (s, t) = (i as f64 / 1024.0, k as f64 / 1024.0);
                brute = brute.max((t.sqrt() - s.sqrt()) / (t - s).sqrt());
            }
        }
        let got = holder_seminorm(&sqrt, HolderOrder::new(0.5).unwrap());
        assert_relative_eq!(got, brute, epsilon = 1e-14);
        assert_relative_eq!(got, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn w_alpha_inf_examples() {
        let zero = GridPath::constant(1.0, 32, &[0.0]).unwrap();
        assert_eq!(w_alpha_inf_norm(&zero, ord(0.25)).unwrap(), 0.0);
        let c = GridPath::constant(1.0, 32, &[-2.5]).unwrap();
        assert_relative_eq!(w_alpha_inf_norm(&c, ord(0.25)).unwrap(), 2.5);
        assert_relative_eq!(w_alpha_inf_norm(&line(256), ord(0.25)).unwrap(), 7.0 / 3.0, epsilon = 1e-12);
        assert!(w_alpha_inf_norm(&line(8), ord(0.5)).is_err());
        assert!(w_alpha_inf_norm(&line(8), ord(0.7)).is_err());
    }

    #[test]
    fn w_one_minus_alpha_examples() {
        let c = GridPath::constant(1.0, 32, &[4.0]).unwrap();
        assert_eq!(w_one_minus_alpha_norm(&c, ord(0.25)).unwrap(), 0.0);
        assert_relative_eq!(w_one_minus_alpha_norm(&line(512), ord(0.25)).unwrap(), 5.0, epsilon = 1e-11);
    }

    #[test]
    fn w_alpha_lambda_examples() {
        let f = line(1024);
        assert_eq!(
            w_alpha_lambda_norm(&f, ord(0.25), 0.0).unwrap(),
            w_alpha_inf_norm(&f, ord(0.25)).unwrap()
        );
        let c = GridPath::constant(1.0, 32, &[1.5]).unwrap();
        assert_relative_eq!(w_alpha_lambda_norm(&c, ord(0.25), 7.0).unwrap(), 1.5);
        // grid maximum of e^{-10t}(t + t^{3/4}/0.75), precomputed
        assert_relative_eq!(
            w_alpha_lambda_norm(&f, ord(0.25), 10.0).unwrap(),
            0.126_102_025_298_692_8,
            epsilon = 1e-12
        );
        assert!(w_alpha_lambda_norm(&f, ord(0.25), -1.0).is_err());
    }

    #[test]
    fn f_alpha_one_examples() {
        let zero = GridPath::constant(1.0, 32, &[0.0]).unwrap();
        assert_eq!(f_alpha_one_norm(&zero, ord(0.25)).unwrap(), 0.0);
        let one = GridPath::constant(1.0, 64, &[1.0]).unwrap();
        assert_relative_eq!(f_alpha_one_norm(&one, ord(0.25)).unwrap(), 4.0 / 3.0, epsilon = 1e-12);
        let got = f_alpha_one_norm(&line(4096), ord(0.25)).unwrap();
        assert_relative_eq!(got, 28.0 / 21.0, max_relative = 1e-5);
    }

    #[test]
    fn refinement_stability_on_smooth_path() {
        let a = ord(0.3);
        let f = |n| GridPath::from_scalar_fn(1.0, n, |t| (3.0 * t).sin()).unwrap();
        let (coarse, fine) = (f(512), f(1024));
        let pairs = [
            (w_alpha_inf_norm(&coarse, a).unwrap(), w_alpha_inf_norm(&fine, a).unwrap()),
            (w_one_minus_alpha_norm(&coarse, a).unwrap(), w_one_minus_alpha_norm(&fine, a).unwrap()),
            (f_alpha_one_norm(&coarse, a).unwrap(), f_alpha_one_norm(&fine, a).unwrap()),
        ];
        for (c, f) in pairs {
            assert!((c - f).abs() < 1e-4 * f, "{c} vs {f}");
        }
    }

    #[test]
    fn holder_order_estimates() {
        let smooth = GridPath::from_scalar_fn(1.0, 1024, |t| t * (1.0 - t)).unwrap();
        assert!(estimate_holder_order(&smooth) > 0.95);
        let c = GridPath::constant(1.0, 64, &[1.0]).unwrap();
        assert_eq!(estimate_holder_order(&c), 1.0);
    }
}
