use heis_beta::fields::{precompose_dilation, vertical_translate, CATALOG_NAMES};
use heis_beta::hgroup::{finite_difference, gauge};
use heis_beta::{catalog, Params, Point, ScalarField};
use proptest::prelude::*;

fn field(name: &str) -> ScalarField {
    let params = match name {
        "affine" => Params::new().with("a", "1,-2").with("b", "0.5"),
        "vertical-wave" => Params::new().with("omega", "4"),
        "coordinate" => Params::new().with("axis", "t"),
        "quadratic" => Params::new().with("j", "1").with("k", "2"),
        _ => Params::new(),
    };
    catalog(name, &params, 1).unwrap()
}

fn point() -> impl Strategy<Value = Point> {
    (prop::collection::vec(-2.0..2.0f64, 2), -2.0..2.0f64).prop_map(|(z, t)| Point::new(&z, t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn vertical_translations_compose(x in point(), a in -3.0..3.0f64, b in -3.0..3.0f64, k in 0usize..6) {
        let f = field(CATALOG_NAMES[k]);
        let two = vertical_translate(&vertical_translate(&f, a), b);
        let one = vertical_translate(&f, a + b);
        prop_assert!((two.eval(&x) - one.eval(&x)).abs() <= 1e-12 * (1.0 + one.eval(&x).abs()));
    }

    #[test]
    fn dilations_compose(x in point(), s in 0.2..5.0f64, u in 0.2..5.0f64, k in 0usize..6) {
        let f = field(CATALOG_NAMES[k]);
        let two = precompose_dilation(&precompose_dilation(&f, s).unwrap(), u).unwrap();
        let one = precompose_dilation(&f, s * u).unwrap();
        prop_assert!((two.eval(&x) - one.eval(&x)).abs() <= 1e-10 * (1.0 + one.eval(&x).abs()));
        let g2 = two.hgrad(&x).unwrap();
        let g1 = one.hgrad(&x).unwrap();
        for (a, b) in g2.iter().zip(g1.iter()) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }

    // Analytic gradients agree with group differences to O(h²).
    #[test]
    fn analytic_gradients_match_differences(x in point(), k in 0usize..6) {
        let f = field(CATALOG_NAMES[k]);
        prop_assume!(CATALOG_NAMES[k] != "bump" || gauge(&x) < 0.9 || gauge(&x) > 1.1);
        let g = f.hgrad(&x).unwrap();
        for j in 0..2 {
            let fd = finite_difference(|y| f.eval(y), j, &x, 1e-4).unwrap();
            prop_assert!((fd - g[j]).abs() <= 1e-6 * (1.0 + g[j].abs()), "{} {} {}", CATALOG_NAMES[k], fd, g[j]);
        }
    }

    // |f| ≤ decay(N) outside the support radius.
    #[test]
    fn decay_metadata_bounds_values(x in point(), s in 1.0..10.0f64, k in 0usize..6) {
        let f = field(CATALOG_NAMES[k]);
        let y = heis_beta::hgroup::dilate(s, &x).unwrap();
        if let Some(rho) = f.support_radius() {
            let n = gauge(&y);
            if n >= rho {
                prop_assert!(f.eval(&y).abs() <= f.decay_at(n).unwrap() * (1.0 + 1e-12));
            }
        }
        if let Some(rho) = f.support_radius() {
            let n = gauge(&y);
            if let (true, Some(bound)) = (n >= rho, f.hgrad_decay_at(n)) {
                let g = f.hgrad(&y).unwrap();
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                prop_assert!(norm <= bound * (1.0 + 1e-12), "{} {} {}", CATALOG_NAMES[k], norm, bound);
            }
        }
    }
}
