//! Product-integration weights for the power kernels `u^p`, `p > -2`.
//!
//! Every singular integral in the crate has the form
//! `∫_0^{m h} u^p φ(u) du` where `φ` is known at the nodes `u_j = j h` and is
//! taken to be linear between them. Integrating the kernel exactly against
//! the hat functions gives
//!
//! ```text
//! h^{p+1} [ right(0) φ_0 + Σ_{j=1}^{m-1} (left(j) + right(j)) φ_j + left(m) φ_m ]
//! ```
//!
//! The rule is exact for piecewise-linear `φ`. When `φ_0 = 0` (increment
//! integrands) the node-0 weight is never needed and any `p > -2` is allowed.

/// Switch to the binomial series once the cell is this far from the origin.
const SERIES_FROM: usize = 16;
const SERIES_TERMS: usize = 24;

#[derive(Debug, Clone)]
pub(crate) struct PowerWeights {
    p: f64,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl PowerWeights {
    /// Weights for nodes `0..=max_node` on the unit grid.
    pub(crate) fn new(p: f64, max_node: usize) -> Self {
        debug_assert!(p > -2.0, "kernel exponent must exceed -2");
        let mut left = vec![f64::NAN; max_node + 1];
        let mut right = vec![f64::NAN; max_node + 1];
        for j in 1..=max_node {
            left[j] = left_weight(p, j);
        }
        for (j, r) in right.iter_mut().enumerate() {
            if j > 0 || p > -1.0 {
                *r = right_weight(p, j);
            }
        }
        Self { p, left, right }
    }

    /// `h^{p+1}`, the factor that rescales unit-grid weights to step `h`.
    #[inline]
    pub(crate) fn scale(&self, h: f64) -> f64 {
        h.powf(self.p + 1.0)
    }

    #[inline]
    pub(crate) fn left(&self, j: usize) -> f64 {
        self.left[j]
    }

    #[inline]
    pub(crate) fn right(&self, j: usize) -> f64 {
        self.right[j]
    }

    /// Weight of an interior node (both adjacent cells).
    #[inline]
    pub(crate) fn interior(&self, j: usize) -> f64 {
        self.left[j] + self.right[j]
    }
}

fn binomial_series(p: f64, a: f64, term: impl Fn(usize) -> f64) -> f64 {
    let inv = 1.0 / a;
    let mut coef = 1.0;
    let mut pow = 1.0;
    let mut sum = 0.0;
    for k in 0..SERIES_TERMS {
        sum += coef * pow * term(k);
        coef *= (p - k as f64) / (k as f64 + 1.0);
        pow *= inv;
    }
    a.powf(p) * sum
}

/// `∫_a^{a+1} v^{q-1} dv` computed without cancellation for `a ≥ 1`.
fn power_moment(q: f64, a: f64) -> f64 {
    if a == 0.0 {
        return 1.0 / q;
    }
    if q.abs() < 1e-12 {
        return (1.0 / a).ln_1p();
    }
    a.powf(q) * (q * (1.0 / a).ln_1p()).exp_m1() / q
}

/// `∫_{j-1}^{j} v^p (v - (j-1)) dv`
fn left_weight(p: f64, j: usize) -> f64 {
    let a = (j - 1) as f64;
    if j > SERIES_FROM {
        return binomial_series(p, a, |k| 1.0 / (k as f64 + 2.0));
    }
    if j == 1 {
        return 1.0 / (p + 2.0);
    }
    power_moment(p + 2.0, a) - a * power_moment(p + 1.0, a)
}

/// `∫_j^{j+1} v^p (j + 1 - v) dv`
fn right_weight(p: f64, j: usize) -> f64 {
    let a = j as f64;
    if j >= SERIES_FROM {
        return binomial_series(p, a, |k| 1.0 / ((k as f64 + 1.0) * (k as f64 + 2.0)));
    }
    (a + 1.0) * power_moment(p + 1.0, a) - power_moment(p + 2.0, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Gauss-Legendre on a graded mesh; independent of the closed forms.
    fn reference(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        const X: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        // geometric grading toward `a` handles the endpoint singularity
        let mut edges = vec![b];
        let mut x = b;
        while x - a > 1e-64 * (b - a) && edges.len() < 600 {
            x = a + (x - a) * 0.7;
            edges.push(x);
        }
        edges.push(a);
        edges.reverse();
        let mut sum = 0.0;
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            for (xi, wi) in X.iter().zip(W.iter()) {
                sum += wi * half * f(mid + half * xi);
            }
        }
        sum
    }

    #[test]
    fn weights_match_quadrature() {
        for &p in &[-1.75, -1.3, -0.7, -0.25, 0.0, 0.4] {
            let w = PowerWeights::new(p, 40);
            for j in 1..=40usize {
                let a = (j - 1) as f64;
                let want = reference(|v| v.powf(p) * (v - a), a, a + 1.0);
                let got = w.left(j);
                assert!((got - want).abs() <= 1e-10 * want.abs().max(1e-12), "left p={p} j={j}: {got} vs {want}");
            }
            for j in 0..=40usize {
                if j == 0 && p <= -1.0 {
                    continue;
                }
                let a = j as f64;
                let want = reference(|v| v.powf(p) * (a + 1.0 - v), a, a + 1.0);
                let got = w.right(j);
                assert!((got - want).abs() <= 1e-10 * want.abs().max(1e-12), "right p={p} j={j}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn exact_for_linear_integrands() {
        // ∫_0^m u^p · u du = m^{p+2}/(p+2)
        let p = -1.3;
        let m = 300usize;
        let w = PowerWeights::new(p, m);
        let mut sum = 0.0;
        for j in 1..m {
            sum += w.interior(j) * j as f64;
        }
        sum += w.left(m) * m as f64;
        let want = (m as f64).powf(p + 2.0) / (p + 2.0);
        assert!((sum - want).abs() < 1e-11 * want);
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        let p = -1.45;
        let a = SERIES_FROM as f64;
        let closed = power_moment(p + 2.0, a) - a * power_moment(p + 1.0, a);
        let series = binomial_series(p, a, |k| 1.0 / (k as f64 + 2.0));
        assert!((closed - series).abs() < 1e-13 * series.abs());
    }
}
