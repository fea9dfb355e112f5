use std::f64::consts::{FRAC_2_SQRT_PI, PI};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ramanujan_core::specfun::{erf, gamma, hermite, laguerre, sin_pi};
use ramanujan_core::transforms::{default_fd_step, nth_derivative_fd};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn gamma_recurrence_on_seeded_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(0.1..50.0);
        let lhs = gamma(x + 1.0).unwrap();
        let rhs = x * gamma(x).unwrap();
        assert!(rel(lhs, rhs) <= 1e-12, "x = {x}: {lhs} vs {rhs}");
    }
}

#[test]
fn gamma_reflection_on_seeded_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed + 1);
    let mut checked = 0;
    while checked < 500 {
        let s: f64 = rng.gen_range(-5.0..5.0);
        if (s - s.round()).abs() < 1e-6 {
            continue;
        }
        let product = gamma(s).unwrap() * gamma(1.0 - s).unwrap() * sin_pi(s) / PI;
        assert!((product - 1.0).abs() <= 1e-11, "s = {s}: {product}");
        checked += 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gamma_recurrence(x in 0.1f64..50.0) {
        let lhs = gamma(x + 1.0).unwrap();
        let rhs = x * gamma(x).unwrap();
        prop_assert!(rel(lhs, rhs) <= 1e-12);
    }

    #[test]
    fn gamma_reflection(s in -5.0f64..5.0) {
        prop_assume!((s - s.round()).abs() > 1e-6);
        let product = gamma(s).unwrap() * gamma(1.0 - s).unwrap() * sin_pi(s) / PI;
        prop_assert!((product - 1.0).abs() <= 1e-11);
    }

    #[test]
    fn erf_is_odd(x in -10.0f64..10.0) {
        prop_assert_eq!(erf(-x).to_bits(), (-erf(x)).to_bits());
    }

    #[test]
    fn erf_bounded_and_monotone(x in -6.0f64..6.0, dx in 1e-6f64..1.0) {
        prop_assert!(erf(x).abs() <= 1.0);
        prop_assert!(erf(x + dx) >= erf(x));
    }
}

#[test]
fn erf_odd_on_symmetric_grid() {
    for i in 0..=2000 {
        let x = -10.0 + i as f64 * 0.01;
        assert_eq!(erf(-x).to_bits(), (-erf(x)).to_bits(), "x = {x}");
    }
}

#[test]
fn erf_derivatives_match_hermite_rodrigues() {
    for n in 1..=4u32 {
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        for i in 0..100 {
            let x = -3.0 + 6.0 * i as f64 / 99.0;
            let (fd, _) = nth_derivative_fd(erf, x, n, default_fd_step(n, x)).unwrap();
            let exact = sign * FRAC_2_SQRT_PI * hermite(n - 1, x).unwrap() * (-x * x).exp();
            assert!((fd - exact).abs() <= 1e-5, "n = {n}, x = {x}: {fd} vs {exact}");
        }
    }
}

#[test]
fn laguerre_weight_derivatives_match_rodrigues() {
    for n in 1..=3u32 {
        let factorial = gamma(n as f64 + 1.0).unwrap();
        let grid: Vec<f64> = (0..=45).map(|i| 0.5 + 0.1 * i as f64).collect();
        let exact: Vec<f64> = grid
            .iter()
            .map(|&x| factorial * laguerre(n, x).unwrap() * (-x).exp())
            .collect();
        // L_n has roots in the range (L_1(1) = 0 exactly), where relative
        // error is undefined; measure against a floor tied to the grid maximum.
        let floor = 1e-3 * exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (&x, &want) in grid.iter().zip(&exact) {
            let f = |t: f64| t.powi(n as i32) * (-t).exp();
            let (fd, _) = nth_derivative_fd(f, x, n, default_fd_step(n, x)).unwrap();
            let err = (fd - want).abs() / want.abs().max(floor);
            assert!(err <= 1e-5, "n = {n}, x = {x}: {fd} vs {want}");
        }
    }
}

#[test]
fn polynomials_satisfy_their_differential_equations() {
    // Hermite's equation H_n'' - 2x H_n' + 2n H_n = 0 with H_n' = 2n H_{n-1}, and
    // L_n' = L_{n-1}' - L_{n-1} with x L_n' = n(L_n - L_{n-1}).
    for n in 2..=20u32 {
        for &x in &[-1.3, 0.2, 0.9, 2.4] {
            let h = |k: u32| hermite(k, x).unwrap();
            let hp = 2.0 * n as f64 * h(n - 1);
            let hpp = 4.0 * (n * (n - 1)) as f64 * h(n - 2);
            let residual = hpp - 2.0 * x * hp + 2.0 * n as f64 * h(n);
            let scale = hpp.abs() + (2.0 * x * hp).abs() + (2.0 * n as f64 * h(n)).abs();
            assert!(residual.abs() <= 1e-12 * scale, "H_{n}({x})");
        }
        for &x in &[0.3, 1.7, 5.5] {
            let l = |k: u32| laguerre(k, x).unwrap();
            let nf = n as f64;
            let lp = nf * (l(n) - l(n - 1)) / x;
            let lp_prev = (nf - 1.0) * (l(n - 1) - l(n - 2)) / x;
            // L_n' = L_{n-1}' - L_{n-1}
            assert!((lp - (lp_prev - l(n - 1))).abs() <= 1e-10 * (lp.abs() + lp_prev.abs() + 1.0), "L_{n}({x})");
        }
    }
}
