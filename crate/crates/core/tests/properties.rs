use flowlab_core::fraccalc::{lambda_alpha, left_frac_integral, right_frac_integral, left_weyl_derivative};
use flowlab_core::norms::{holder_seminorm, sup_norm, w_alpha_inf_norm, w_one_minus_alpha_norm};
use flowlab_core::sde::{solve_forward, Builtin, CoefficientField, SolverConfig};
use flowlab_core::young::rs_integral;
use flowlab_core::{FracOrder, GridPath, HolderOrder};
use proptest::prelude::*;

fn path(values: Vec<f64>) -> GridPath {
    GridPath::scalar(1.0, values).unwrap()
}

fn values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, len)
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (8usize..64).prop_flat_map(|n| (values(n + 1), values(n + 1)))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()))
}

/// Norms evaluated on one path, in a fixed order.
fn norms(f: &GridPath, alpha: FracOrder) -> [f64; 5] {
    [
        sup_norm(f),
        holder_seminorm(f, HolderOrder::new(0.6).unwrap()),
        w_alpha_inf_norm(f, alpha).unwrap(),
        w_one_minus_alpha_norm(f, alpha).unwrap(),
        lambda_alpha(f, alpha).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norms_are_absolutely_homogeneous((a, _) in pair(), c in -5.0..5.0f64, alpha in 0.05..0.45f64) {
        let alpha = FracOrder::new(alpha).unwrap();
        let f = path(a);
        let base = norms(&f, alpha);
        let scaled = norms(&f.scaled(c), alpha);
        for (x, y) in base.iter().zip(&scaled) {
            prop_assert!(close(c.abs() * x, *y), "{} vs {}", c.abs() * x, y);
        }
    }

    #[test]
    fn norms_satisfy_the_triangle_inequality((a, b) in pair(), alpha in 0.05..0.45f64) {
        let alpha = FracOrder::new(alpha).unwrap();
        let (f, g) = (path(a), path(b));
        let sum = norms(&f.add(&g).unwrap(), alpha);
        let (nf, ng) = (norms(&f, alpha), norms(&g, alpha));
        for i in 0..sum.len() {
            prop_assert!(sum[i] <= (nf[i] + ng[i]) * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn increment_norms_ignore_constants((a, _) in pair(), c in -5.0..5.0f64, alpha in 0.05..0.45f64) {
        let alpha = FracOrder::new(alpha).unwrap();
        let f = path(a);
        let shifted = f.map_values(|v| v + c).unwrap();
        prop_assert!(close(lambda_alpha(&f, alpha).unwrap(), lambda_alpha(&shifted, alpha).unwrap()));
        let theta = HolderOrder::new(0.5).unwrap();
        prop_assert!(close(holder_seminorm(&f, theta), holder_seminorm(&shifted, theta)));
    }

    #[test]
    fn fractional_operators_are_linear((a, b) in pair(), p in -3.0..3.0f64, q in -3.0..3.0f64, alpha in 0.05..0.95f64) {
        let alpha = FracOrder::new(alpha).unwrap();
        let (f, g) = (path(a), path(b));
        let combo = f.scaled(p).add(&g.scaled(q)).unwrap();
        let ops: [fn(&GridPath, FracOrder) -> GridPath; 3] = [
            left_frac_integral,
            right_frac_integral,
            |f, a| left_weyl_derivative(f, a).unwrap(),
        ];
        for op in ops {
            let lhs = op(&combo, alpha);
            let rhs = op(&f, alpha).scaled(p).add(&op(&g, alpha).scaled(q)).unwrap();
            for (x, y) in lhs.values().iter().zip(rhs.values()) {
                prop_assert!((x - y).abs() <= 1e-8 * (1.0 + x.abs().max(y.abs())));
            }
        }
    }

    #[test]
    fn riemann_stieltjes_sums_are_bilinear((a, b) in pair(), c in -3.0..3.0f64) {
        let (f, g) = (path(a), path(b));
        let base = rs_integral(&f, &g).unwrap()[0];
        prop_assert!(close(rs_integral(&f.scaled(c), &g).unwrap()[0], c * base));
        prop_assert!(close(rs_integral(&f, &g.scaled(c)).unwrap()[0], c * base));
    }

    #[test]
    fn additive_noise_shifts_the_driver((a, b) in pair(), x0 in -5.0..5.0f64, s in -2.0..2.0f64) {
        let driver = GridPath::from_components(1.0, &[a.clone(), b.clone()]).unwrap();
        let field = Builtin::Additive { rows: 1, cols: 2, sigma: vec![s, 1.0] };
        let cfg = SolverConfig::centred(driver.steps(), 0.75, &field.constants()).unwrap();
        let x = solve_forward(&[x0], 0.0, &field, &driver, &cfg).unwrap();
        for k in 0..=driver.steps() {
            let exact = x0 + s * (a[k] - a[0]) + (b[k] - b[0]);
            prop_assert!((x.point(k)[0] - exact).abs() <= 1e-9);
        }
    }

    #[test]
    fn csv_round_trip_is_exact((a, b) in pair()) {
        let p = GridPath::from_components(2.0, &[a, b]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        prop_assert_eq!(GridPath::read_csv(buf.as_slice()).unwrap(), p);
    }
}
