use crate::error::{domain, invalid, Result};
use crate::norms::{holder_norm, weighted_pair_max};
use crate::path::{GridPath, HolderOrder};

/// Piecewise-linear interpolation of `path` through its values at the
/// `coarse_n + 1` knots `kT/coarse_n`, evaluated back on the fine grid.
pub fn polygonal(path: &GridPath, coarse_n: usize) -> Result<GridPath> {
    let n = path.steps();
    if coarse_n == 0 || !n.is_multiple_of(coarse_n) {
        return invalid(format!("coarse grid size {coarse_n} must divide the fine grid size {n}"));
    }
    let r = n / coarse_n;
    let d = path.dim();
    let mut values = Vec::with_capacity(path.values().len());
    for k in 0..coarse_n {
        let a = path.point(k * r);
        let b = path.point((k + 1) * r);
        for i in 0..r {
            let w = i as f64 / r as f64;
            values.extend((0..d).map(|q| a[q] + w * (b[q] - a[q])));
        }
    }
    values.extend_from_slice(path.last());
    GridPath::with_origin(path.origin(), path.horizon(), d, values)
}

/// `‖fine - approx‖_{C^θ}`: sup norm plus θ-Hölder seminorm of the difference.
pub fn holder_error(fine: &GridPath, approx: &GridPath, theta: HolderOrder) -> Result<f64> {
    Ok(holder_norm(&fine.sub(approx)?, theta))
}

/// Smallest `G` with `|B_t - B_s| ≤ G |t-s|^H sqrt(log(1/|t-s|))` over grid
/// pairs at lag at most `1/e`, where the logarithmic factor is at least one.
pub fn modulus_constant(path: &GridPath, hurst: f64) -> Result<f64> {
    if path.horizon() > 1.0 {
        return domain(format!(
            "modulus of continuity needs a horizon of at most 1, got {}; rescale time first",
            path.horizon()
        ));
    }
    if !(hurst > 0.0 && hurst < 1.0) {
        return domain(format!("Hurst parameter must lie in (0, 1), got {hurst}"));
    }
    let h = path.step();
    let cutoff = (-1.0f64).exp();
    let weights: Vec<f64> = (0..=path.steps())
        .map(|j| {
            let lag = j as f64 * h;
            if j == 0 || lag > cutoff {
                0.0
            } else {
                1.0 / (lag.powf(hurst) * (-lag.ln()).sqrt())
            }
        })
        .collect();
    Ok(weighted_pair_max(path, &weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{sample_circulant, FbmSpec};

    #[test]
    fn polygonal_identities() {
        let b = sample_circulant(&FbmSpec::unit(0.75, 1024, 5).unwrap()).unwrap().path;
        assert_eq!(polygonal(&b, 1024).unwrap(), b);
        let p = polygonal(&b, 16).unwrap();
        for k in 0..=16 {
            assert_eq!(p.point(64 * k), b.point(64 * k));
        }
        let affine = GridPath::from_scalar_fn(1.0, 64, |t| 2.0 - 3.0 * t).unwrap();
        let q = polygonal(&affine, 8).unwrap();
        for (x, y) in q.values().iter().zip(affine.values()) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!(polygonal(&b, 7).is_err());
    }

    #[test]
    fn polygonal_cells_are_lipschitz() {
        let b = sample_circulant(&FbmSpec::unit(0.6, 256, 2).unwrap()).unwrap().path;
        let p = polygonal(&b, 8).unwrap();
        let lip = HolderOrder::new(1.0).unwrap();
        for k in 0..8 {
            let cell = p.slice(32 * k, 32 * (k + 1)).unwrap();
            let slope = (b.point(32 * (k + 1))[0] - b.point(32 * k)[0]).abs() * 8.0;
            let got = crate::norms::holder_seminorm(&cell, lip);
            assert!((got - slope).abs() <= 1e-9 * slope.max(1.0));
        }
    }

    #[test]
    fn modulus_basics() {
        let c = GridPath::constant(1.0, 32, &[1.0]).unwrap();
        assert_eq!(modulus_constant(&c, 0.7).unwrap(), 0.0);
        let long = GridPath::constant(2.0, 32, &[1.0]).unwrap();
        assert!(modulus_constant(&long, 0.7).is_err());
        let b = sample_circulant(&FbmSpec::unit(0.75, 4096, 11).unwrap()).unwrap().path;
        let fine = modulus_constant(&b, 0.75).unwrap();
        let coarse = modulus_constant(&b.subsample(4).unwrap(), 0.75).unwrap();
        assert!(fine.is_finite() && coarse > 0.0);
        assert!(fine / coarse < 2.0 && coarse / fine < 2.0);
        assert!(holder_error(&b, &b, HolderOrder::new(0.5).unwrap()).unwrap() == 0.0);
    }
}
