use gdw_core::airy::airy_kernel;
use gdw_core::bulk_kernel::{in_b_ns, solve_bulk_geometry};
use gdw_core::edge_kernel::{edge_kernel_scaled, mollifier_psi, solve_edge_geometry};
use gdw_core::ensembles::{compose_gauss_divisible, ElementLaw, EnsembleSpec};
use gdw_core::fredholm::tw_cdf;
use gdw_core::spectral::{eigenvalues, SpectrumScale};
use proptest::prelude::*;

fn points(max: usize) -> impl Strategy<Value = (Vec<f64>, f64)> {
    (1..=max).prop_flat_map(|n| (prop::collection::vec(-0.8f64..0.8, n), 0.5f64..3.0)).prop_map(|(u, k)| {
        let s = u.len() as f64 * k;
        (u.into_iter().map(|x| x * s).collect(), s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn edge_geometry_solves_level_equation((nu, s) in points(8)) {
        let g = solve_edge_geometry(&nu, s, 1e-3, 1e3).unwrap();
        prop_assert!(g.residual().abs() <= 1e-12);
        prop_assert!(nu.iter().all(|v| g.b > v / s));
        prop_assert!(g.d > 0.0 && g.a >= g.b);
    }

    #[test]
    fn edge_diagonal_is_nonnegative((nu, s) in points(4), xi in -1.5f64..1.5) {
        let g = solve_edge_geometry(&nu, s, 1e-3, 1e3).unwrap();
        prop_assert!(edge_kernel_scaled(&g, xi, xi).unwrap() >= -1e-10);
    }

    #[test]
    fn bulk_geometry_is_consistent((nu, s) in points(8)) {
        prop_assume!(in_b_ns(&nu, s));
        let g = solve_bulk_geometry(&nu, s).unwrap();
        prop_assert!(g.residual().abs() <= 1e-10);
        prop_assert!(g.b > 0.0 && g.a > 0.0);
    }

    #[test]
    fn mollifier_matches_pole_inside_and_vanishes_outside(x in -3.0f64..3.0) {
        let v = mollifier_psi(1.0, 4.0, 0.1, x).unwrap();
        if x.abs() <= 1.1 {
            prop_assert!((v - 1.0 / (4.0 - x)).abs() <= 1e-15);
        } else if x.abs() >= 1.3 {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn spectrum_is_sorted_and_reproducible(n in 1usize..20, seed in any::<u64>(), kappa in 0.0f64..2.0) {
        let spec = EnsembleSpec::new(n, ElementLaw::Rademacher, kappa, seed).unwrap();
        let a = eigenvalues(&compose_gauss_divisible(&spec).unwrap(), SpectrumScale::SqrtNW).unwrap().values;
        let b = eigenvalues(&compose_gauss_divisible(&spec).unwrap(), SpectrumScale::SqrtNW).unwrap().values;
        prop_assert_eq!(&a, &b);
        prop_assert!(a.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn tw_cdf_is_monotone_on_grid() {
    let vals: Vec<f64> = (-16..=8).map(|k| tw_cdf(k as f64 * 0.5).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] >= w[0]));
    assert!(vals[0] < 1e-6 && vals[vals.len() - 1] > 1.0 - 1e-6);
}

#[test]
fn airy_kernel_diagonal_positive() {
    for k in 0..=28 {
        let x = -5.0 + 0.25 * k as f64;
        assert!(airy_kernel(x, x) > 0.0);
    }
}
