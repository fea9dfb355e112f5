//! Adaptive quadrature on finite and semi-infinite intervals.
//!
//! The base rule is the 15-point Gauss–Kronrod pair with the QUADPACK error
//! rescaling. Finite intervals are refined by global adaptive bisection
//! (largest error first). Semi-infinite integrals split into a head `[0, 1]`
//! and geometrically growing tail panels. Mellin integrals additionally
//! remove the `x^{s-1}` endpoint singularity by the substitution `u = x^s`.
//!
//! Integrands must be pure: results depend only on the configuration, and
//! all panel sums are accumulated in left-to-right order.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("integrand is not finite near x = {x}")]
    Evaluation { x: f64 },
    #[error("integrand has a non-integrable singularity near x = {x}")]
    Singularity { x: f64 },
}

pub type Result<T> = std::result::Result<T, QuadratureError>;

/// Tolerances and limits shared by every integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Ratio between consecutive tail panel endpoints.
    pub tail_cut_growth: f64,
    pub max_tail_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
            tail_cut_growth: 2.0,
            max_tail_panels: 60,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(QuadratureError::InvalidConfig(msg.to_string()));
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0) {
            return bad("tolerances must be non-negative");
        }
        if !(self.abs_tol > 0.0 || self.rel_tol > 0.0) {
            return bad("at least one of abs_tol, rel_tol must be positive");
        }
        if self.max_subdivisions == 0 {
            return bad("max_subdivisions must be at least 1");
        }
        if self.max_tail_panels == 0 {
            return bad("max_tail_panels must be at least 1");
        }
        if !(self.tail_cut_growth > 1.0 && self.tail_cut_growth.is_finite()) {
            return bad("tail_cut_growth must be finite and greater than 1");
        }
        Ok(())
    }

    /// The error level a result must reach to count as converged.
    pub fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Value of an integral with its absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl EvaluationResult {
    /// An exact value that needed no integrand evaluations.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        }
    }

    /// Multiplies value and error by a constant factor.
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            error_estimate: self.error_estimate * factor.abs(),
            ..self
        }
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

// Kronrod abscissae and weights, Gauss weights for the embedded 7-point rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    // Largest error first; ties broken by position so the order is total.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

enum RuleOutcome {
    Ok(Panel),
    NonFinite(f64),
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> RuleOutcome {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return RuleOutcome::NonFinite(center);
    }
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (x1, x2) = (center - dx, center + dx);
        let (y1, y2) = (f(x1), f(x2));
        if !y1.is_finite() {
            return RuleOutcome::NonFinite(x1);
        }
        if !y2.is_finite() {
            return RuleOutcome::NonFinite(x2);
        }
        fv1[j] = y1;
        fv2[j] = y2;
    }

    let mut res_k = WGK[7] * fc;
    let mut res_g = WG[3] * fc;
    let mut resabs = res_k.abs();
    for j in 0..7 {
        let pair = fv1[j] + fv2[j];
        res_k += WGK[j] * pair;
        resabs += WGK[j] * (fv1[j].abs() + fv2[j].abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * pair;
        }
    }
    let mean = 0.5 * res_k;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let h = half.abs();
    let err = rescale_error((res_k - res_g) * half, resabs * h, resasc * h);
    RuleOutcome::Ok(Panel {
        a,
        b,
        value: res_k * half,
        error: err,
    })
}

const EVALS_PER_RULE: usize = 15;
const NON_FINITE_RETRIES: u32 = 2;

/// Applies the rule to `[a, b]`, bisecting up to twice when the integrand is
/// non-finite at one of the nodes.
fn evaluate_panel<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    retries_left: u32,
    evaluations: &mut usize,
    out: &mut Vec<Panel>,
) -> Result<()> {
    *evaluations += EVALS_PER_RULE;
    match gauss_kronrod_15(f, a, b) {
        RuleOutcome::Ok(p) => {
            out.push(p);
            Ok(())
        }
        RuleOutcome::NonFinite(x) => {
            if retries_left == 0 {
                return Err(QuadratureError::Evaluation { x });
            }
            let mid = 0.5 * (a + b);
            evaluate_panel(f, a, mid, retries_left - 1, evaluations, out)?;
            evaluate_panel(f, mid, b, retries_left - 1, evaluations, out)
        }
    }
}

fn too_narrow(p: &Panel) -> bool {
    let mid = 0.5 * (p.a + p.b);
    !(mid > p.a && mid < p.b) || (p.b - p.a) <= 100.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE)
}

/// Integrates `f` over `[a, b]` by adaptive Gauss–Kronrod bisection.
///
/// Running out of subdivisions is not an error: the best value is returned
/// with `converged = false`.
pub fn integrate_finite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<EvaluationResult> {
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(QuadratureError::Domain(format!("bounds must be finite, got [{a}, {b}]")));
    }
    if a > b {
        return Err(QuadratureError::Domain(format!("lower bound {a} exceeds upper bound {b}")));
    }
    if a == b {
        return Ok(EvaluationResult::exact(0.0));
    }

    let mut evaluations = 0;
    let mut fresh = Vec::with_capacity(4);
    evaluate_panel(&f, a, b, NON_FINITE_RETRIES, &mut evaluations, &mut fresh)?;

    let mut active: BinaryHeap<Panel> = BinaryHeap::new();
    let mut settled: Vec<Panel> = Vec::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for p in fresh.drain(..) {
        total += p.value;
        total_err += p.error;
        active.push(p);
    }

    let mut subdivisions = 1;
    while total_err > cfg.target(total) && subdivisions < cfg.max_subdivisions {
        let Some(worst) = active.pop() else { break };
        if too_narrow(&worst) {
            settled.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        evaluate_panel(&f, worst.a, mid, NON_FINITE_RETRIES, &mut evaluations, &mut fresh)?;
        evaluate_panel(&f, mid, worst.b, NON_FINITE_RETRIES, &mut evaluations, &mut fresh)?;
        total -= worst.value;
        total_err -= worst.error;
        for p in fresh.drain(..) {
            total += p.value;
            total_err += p.error;
            active.push(p);
        }
        subdivisions += 1;
    }

    settled.extend(active);
    settled.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = settled.iter().map(|p| p.value).collect::<CompensatedSum>().value();
    let error_estimate = settled.iter().map(|p| p.error).collect::<CompensatedSum>().value();
    Ok(EvaluationResult {
        value,
        error_estimate,
        evaluations,
        converged: error_estimate <= cfg.target(value),
    })
}

/// Integrates `f` over `[start, ∞)` with panels
/// `[start·g^j, start·g^{j+1}]`, `g = tail_cut_growth`.
///
/// Stops after two consecutive panels fall below a tenth of the current
/// tolerance target. If the panel budget runs out first and the last panels
/// decay with a stable geometric ratio (the signature of an algebraic tail),
/// the remainder is summed as a geometric series; otherwise the result is
/// flagged as not converged.
pub fn integrate_tail<F: Fn(f64) -> f64>(
    f: F,
    start: f64,
    cfg: &QuadratureConfig,
) -> Result<EvaluationResult> {
    cfg.validate()?;
    if !(start > 0.0 && start.is_finite()) {
        return Err(QuadratureError::Domain(format!("tail start must be positive, got {start}")));
    }
    let mut values = CompensatedSum::new();
    let mut errors = CompensatedSum::new();
    let mut panels: Vec<f64> = Vec::new();
    let mut evaluations = 0;
    let mut all_converged = true;
    let mut small_in_a_row = 0;
    let mut lo = start;
    let mut stopped = false;

    for _ in 0..cfg.max_tail_panels {
        let hi = lo * cfg.tail_cut_growth;
        if !hi.is_finite() {
            break;
        }
        let panel = integrate_finite(&f, lo, hi, cfg)?;
        evaluations += panel.evaluations;
        all_converged &= panel.converged;
        values.add(panel.value);
        errors.add(panel.error_estimate);
        panels.push(panel.value);

        let magnitude = panel.value.abs() + panel.error_estimate;
        if magnitude < cfg.target(values.value()) / 10.0 {
            small_in_a_row += 1;
            if small_in_a_row == 2 {
                stopped = true;
                break;
            }
        } else {
            small_in_a_row = 0;
        }
        lo = hi;
    }

    if !stopped {
        match geometric_remainder(&panels) {
            Some((remainder, uncertainty)) => {
                values.add(remainder);
                errors.add(uncertainty);
                stopped = true;
            }
            None => all_converged = false,
        }
    }

    let value = values.value();
    let error_estimate = errors.value();
    Ok(EvaluationResult {
        value,
        error_estimate,
        evaluations,
        converged: stopped && all_converged && error_estimate <= cfg.target(value),
    })
}

/// Sum of the panels beyond the last one, assuming the last three panel
/// values continue geometrically. Returns the remainder and its uncertainty.
fn geometric_remainder(panels: &[f64]) -> Option<(f64, f64)> {
    let [.., p1, p2, p3] = panels else {
        return None;
    };
    if *p2 == 0.0 || *p1 == 0.0 {
        return None;
    }
    let r_prev = p2 / p1;
    let r_last = p3 / p2;
    let stable = (r_last - r_prev).abs() <= 1e-6 * r_last.abs();
    if !(stable && r_last > 0.0 && r_last < 0.999) {
        return None;
    }
    let remainder = p3 * r_last / (1.0 - r_last);
    let alternative = p3 * r_prev / (1.0 - r_prev);
    let uncertainty = (remainder - alternative).abs() + 8.0 * f64::EPSILON * remainder.abs();
    Some((remainder, uncertainty))
}

fn combine(head: EvaluationResult, tail: EvaluationResult, cfg: &QuadratureConfig) -> EvaluationResult {
    let value = [head.value, tail.value].into_iter().collect::<CompensatedSum>().value();
    let error_estimate = head.error_estimate + tail.error_estimate;
    EvaluationResult {
        value,
        error_estimate,
        evaluations: head.evaluations + tail.evaluations,
        converged: head.converged && tail.converged && error_estimate <= cfg.target(value),
    }
}

/// Integrates `f` over `[0, ∞)`: `[0, 1]` adaptively, then the tail panels.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    cfg: &QuadratureConfig,
) -> Result<EvaluationResult> {
    let head = integrate_finite(&f, 0.0, 1.0, cfg)?;
    let tail = integrate_tail(&f, 1.0, cfg)?;
    Ok(combine(head, tail, cfg))
}

/// Mellin transform `∫₀^∞ x^{s-1} F(x) dx` for real `s > 0`.
///
/// For `0 < s < 1` the head is computed as `(1/s)∫₀¹ F(u^{1/s}) du`, which
/// is free of the endpoint singularity.
pub fn integrate_mellin<F: Fn(f64) -> f64>(
    big_f: F,
    s: f64,
    cfg: &QuadratureConfig,
) -> Result<EvaluationResult> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(QuadratureError::Domain(format!("Mellin exponent must be positive, got {s}")));
    }
    let head = mellin_head(&big_f, s, cfg).map_err(|e| match e {
        QuadratureError::Evaluation { x } => QuadratureError::Singularity { x },
        other => other,
    })?;
    let tail = integrate_tail(|x: f64| x.powf(s - 1.0) * big_f(x), 1.0, cfg)?;
    Ok(combine(head, tail, cfg))
}

/// `∫₀¹ x^{s-1} F(x) dx`.
pub fn mellin_head<F: Fn(f64) -> f64>(
    big_f: F,
    s: f64,
    cfg: &QuadratureConfig,
) -> Result<EvaluationResult> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(QuadratureError::Domain(format!("Mellin exponent must be positive, got {s}")));
    }
    if s < 1.0 {
        let inv = 1.0 / s;
        let head = integrate_finite(|u: f64| big_f(u.powf(inv)), 0.0, 1.0, cfg)?;
        Ok(head.scaled(inv))
    } else {
        integrate_finite(|x: f64| x.powf(s - 1.0) * big_f(x), 0.0, 1.0, cfg)
    }
}
