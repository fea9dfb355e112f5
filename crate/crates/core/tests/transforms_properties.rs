use proptest::prelude::*;

use ramanujan_core::quadrature::{integrate_mellin, QuadratureConfig};
use ramanujan_core::sequences::{catalog_get, shift_sequence, Params, SeriesPair};
use ramanujan_core::specfun::gamma;
use ramanujan_core::transforms::{frullani, hardy, lemma2, partial_fraction_sum, residue_check, rmt};

fn pair(id: &str, p: &[(&str, f64)]) -> SeriesPair {
    let params: Params = p.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    catalog_get(id, &params).unwrap()
}

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

/// For `F = shift(P, n) = (-1)^n P^{(n)}`, the master theorem at `s = n`
/// gives `Γ(n)φ_F(-n) = Γ(n)φ_P(0)`, which `(-1)^n` times the derivative-lemma left
/// side for `P` must reproduce.
#[test]
fn rmt_and_lemma2_agree_at_integer_orders() {
    for n in 1..=4u32 {
        let mut bases = vec![pair("exp", &[("a", 1.0)])];
        for m in [n + 1, n + 2] {
            bases.push(pair("power", &[("m", m as f64)]));
        }
        for base in &bases {
            let shifted = shift_sequence(base, n).unwrap();
            let via_rmt = rmt(&shifted, n as f64, &cfg()).unwrap().rhs;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let via_lemma2 = sign * lemma2(base, n, &cfg()).unwrap().lhs.value;
            assert!(
                (via_rmt - via_lemma2).abs() <= 1e-8,
                "{} n = {n}: {via_rmt} vs {via_lemma2}",
                base.name()
            );
            // The unshifted pair at s = n needs m > n, as φ(-n) = Γ(m-n)/Γ(m).
            let direct = rmt(base, n as f64, &cfg()).unwrap();
            assert!(direct.rel_discrepancy <= 1e-8, "{} n = {n}: {direct:?}", base.name());
        }
    }
}

#[test]
fn partial_fractions_converge_to_master_theorem() {
    let exp = pair("exp", &[("a", 1.0)]);
    for s in [0.5, 1.5, 2.5] {
        let target = gamma(s).unwrap() * exp.phi(-s);
        let errors: Vec<f64> = [10, 20, 40]
            .iter()
            .map(|&k| (partial_fraction_sum(&exp, s, k).unwrap() - target).abs())
            .collect();
        assert!(errors[1] < errors[0] && errors[2] < errors[1], "s = {s}: errors {errors:?} not decreasing");
        assert!(errors[2] <= 1e-6, "s = {s}: final error {} exceeds 1e-6", errors[2]);
    }
}

/// The sum reproduces the Mellin integral over `[0, 1]`, i.e. the lower
/// incomplete gamma function `γ(s, 1)` for the exponential pair.
#[test]
fn partial_fractions_equal_head_integral() {
    let exp = pair("exp", &[("a", 1.0)]);
    let reference = [(0.5, 1.493_648_265_624_854), (1.5, 0.378_944_691_640_984_7), (2.5, 0.200_537_596_290_034_7)];
    for (s, lower_gamma) in reference {
        let sum = partial_fraction_sum(&exp, s, 40).unwrap();
        assert!((sum - lower_gamma).abs() <= 1e-14, "s = {s}: {sum}");
        let tail = integrate_mellin(|x: f64| if x < 1.0 { 0.0 } else { (-x).exp() }, s, &cfg()).unwrap();
        let total = sum + tail.value;
        assert!((total - gamma(s).unwrap()).abs() <= 1e-9, "s = {s}: {total}");
    }
}

#[test]
fn residue_limits_converge_quadratically() {
    let pairs = [pair("exp", &[("a", 1.0)]), pair("power", &[("m", 3.0)]), pair("power", &[("m", 4.5)])];
    for p in &pairs {
        for m in 0..=2u32 {
            let (coarse, right) = residue_check(p, m, 1e-3).unwrap();
            let (fine, _) = residue_check(p, m, 1e-4).unwrap();
            let (e1, e2) = ((coarse - right).abs(), (fine - right).abs());
            assert!(e2 * 5.0 <= e1, "{} m = {m}: {e1:e} -> {e2:e}", p.name());
        }
    }
}

type Limits = (fn(f64) -> f64, f64, f64);

const FRULLANI_FUNCTIONS: [Limits; 3] = [
    (|x| (-x).exp(), 1.0, 0.0),
    (|x| 1.0 / (1.0 + x), 1.0, 0.0),
    (|x| x.atan(), 0.0, std::f64::consts::FRAC_PI_2),
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frullani_is_antisymmetric(which in 0usize..3, alpha in 0.2f64..6.0, beta in 0.2f64..6.0) {
        let (f, f0, finf) = FRULLANI_FUNCTIONS[which];
        let ab = frullani(f, f0, finf, alpha, beta, &cfg()).unwrap();
        let ba = frullani(f, f0, finf, beta, alpha, &cfg()).unwrap();
        prop_assert_eq!(ab.rhs, -ba.rhs);
        let budget = ab.lhs.error_estimate + ba.lhs.error_estimate;
        prop_assert!((ab.lhs.value + ba.lhs.value).abs() <= budget, "{} {} budget {}", ab.lhs.value, ba.lhs.value, budget);
    }

    #[test]
    fn lemma2_holds_for_exponential_family(a in 0.3f64..4.0, n in 1u32..6) {
        let r = lemma2(&pair("exp", &[("a", a)]), n, &cfg()).unwrap();
        prop_assert!(r.rel_discrepancy <= 1e-8, "{:?}", r);
    }
}

#[test]
fn hardy_matches_gamma_reflection() {
    let geo = pair("geometric", &[]);
    for s in [0.25, 0.5, 0.75] {
        let report = hardy(&geo, s, &cfg()).unwrap();
        let via_gamma = gamma(s).unwrap() * gamma(1.0 - s).unwrap() * geo.plain_phi(-s).unwrap();
        assert!((report.rhs - via_gamma).abs() <= 1e-11 * via_gamma, "s = {s}");
        assert!(report.passed, "s = {s}: {report:?}");
    }
}
