use dephasing_core::bath::{
    bath_purity, complex_partition_function, configurations, gibbs_weight, partition_function,
    reduced_partition_function,
};
use dephasing_core::BathParams;
use dephasing_oracles::{bond_and_magnetization, partition_f64, precise, spins, Histogram};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn bath(j: f64, h: f64, beta: f64, n: usize) -> BathParams {
    BathParams::new(j, h, beta, n).unwrap()
}

#[test]
fn log_partition_matches_enumeration() {
    for n in 1..=12 {
        for (j, h, beta) in [
            (1.0, 0.0, 1.0),
            (0.5, 0.3, 2.0),
            (-0.8, 0.1, 0.7),
            (0.0, -1.2, 3.0),
        ] {
            let exact = partition_f64(n, j, h, beta).ln();
            let got = partition_function(&bath(j, h, beta, n));
            assert!(
                (got - exact).abs() <= 1e-10 * exact.abs().max(1.0),
                "n={n} j={j} h={h} beta={beta}"
            );
        }
    }
}

#[test]
fn complex_field_matches_enumeration() {
    let (n, j, h, beta, alpha) = (10, 1.0, 0.3, 1.0, 0.1);
    let b = bath(j, h, beta, n);
    let t_rec = std::f64::consts::PI / (2.0 * alpha);
    for i in 0..50 {
        let t = t_rec * i as f64 / 49.0;
        let eta = C64::new(beta * h, -2.0 * alpha * t);
        let exact: C64 = (0..(1u64 << n))
            .map(|c| {
                let (bd, m) = bond_and_magnetization(&spins(c, n));
                (C64::new(beta * j * bd as f64, 0.0) + eta * m as f64).exp()
            })
            .sum();
        let got = reduced_partition_function(&b, eta).to_complex();
        assert!((got - exact).norm() <= 1e-10 * exact.norm(), "t={t}");
    }
}

#[test]
fn complex_free_chain_is_cosh_power() {
    for n in 1..=12 {
        let b = bath(0.0, 0.4, 1.3, n);
        let field = C64::new(0.4, -0.25);
        let expected = (2.0 * (field * 1.3).cosh()).powi(n as i32);
        let got = complex_partition_function(&b, field).to_complex();
        assert!((got - expected).norm() <= 1e-12 * expected.norm());
    }
}

#[test]
fn purity_matches_high_precision_enumeration() {
    for n in [1, 4, 8, 12] {
        let hist = Histogram::enumerate(n);
        for (j, h, beta) in [(1.0, 0.1, 0.5), (0.0, 1.0, 2.0), (1.0, 0.5, 4.0), (0.3, 0.0, 0.1)] {
            let exact = precise::purity(&hist, j, h, beta);
            let got = bath_purity(&bath(j, h, beta, n));
            assert!((got - exact).abs() <= 1e-10 * exact, "n={n}");
        }
    }
    assert!((bath_purity(&bath(1.0, 0.3, 0.0, 12)) - 2f64.powi(-12)).abs() < 1e-18);
    assert!(bath_purity(&bath(1.0, 0.3, 40.0, 12)) > 1.0 - 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gibbs_weights_form_a_distribution(j in -2.0..2.0f64, h in -2.0..2.0f64, beta in 0.0..5.0f64) {
        let b = bath(j, h, beta, 10);
        let mut total = 0.0;
        for c in configurations(10) {
            let w = gibbs_weight(&c, &b).unwrap();
            prop_assert!(w >= 0.0);
            total += w;
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn real_and_complex_routes_agree(j in -2.0..2.0f64, h in -2.0..2.0f64, beta in 0.0..5.0f64, n in 1usize..40) {
        let b = bath(j, h, beta, n);
        let real = partition_function(&b);
        let cplx = complex_partition_function(&b, C64::new(h, 0.0));
        prop_assert!((cplx.ln_abs - real).abs() <= 1e-12 * real.abs().max(1.0));
    }

    #[test]
    fn purity_grows_with_beta(j in 0.0..2.0f64, h in 0.05..2.0f64, n in 1usize..30) {
        let mut last = 0.0;
        for i in 0..40 {
            let p = bath_purity(&bath(j, h, 0.1 * i as f64, n));
            prop_assert!(p >= last - 1e-12);
            prop_assert!(p > 0.0 && p <= 1.0);
            last = p;
        }
    }
}
