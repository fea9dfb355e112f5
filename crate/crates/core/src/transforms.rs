//! Integral identities checked as two independently computed sides: the left
//! side by quadrature, the right side from special functions.

use thiserror::Error;

use crate::quadrature::{
    integrate_mellin, integrate_semi_infinite, CompensatedSum, EvaluationResult, QuadratureConfig,
    QuadratureError,
};
use crate::sequences::{SequenceError, SeriesPair};
use crate::specfun;

/// Tolerance applied to reports unless the caller overrides it.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Below this abscissa the Frullani integrand is held constant.
pub const FRULLANI_FREEZE: f64 = 1e-8;

/// Distance from a non-positive integer treated as a pole of `1/(s+k)`.
pub const PARTIAL_FRACTION_POLE_RADIUS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("pair '{0}' has phi(0) = 0 and is outside the master theorem")]
    NonstandardPair(String),
    #[error("pole at s = {s}: {reason}")]
    Pole { s: f64, reason: String },
    #[error("pair '{0}' is not given as a plain series")]
    Presentation(String),
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

pub type Result<T> = std::result::Result<T, TransformError>;

/// Outcome of checking one identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub lhs: EvaluationResult,
    pub rhs: f64,
    pub abs_discrepancy: f64,
    pub rel_discrepancy: f64,
    pub passed: bool,
    pub tolerance_used: f64,
}

impl IdentityReport {
    pub fn new(lhs: EvaluationResult, rhs: f64, tolerance: f64) -> Self {
        let abs_discrepancy = (lhs.value - rhs).abs();
        let rel_discrepancy = if abs_discrepancy == 0.0 {
            0.0
        } else {
            abs_discrepancy / rhs.abs()
        };
        let mut report = Self {
            lhs,
            rhs,
            abs_discrepancy,
            rel_discrepancy,
            passed: false,
            tolerance_used: tolerance,
        };
        report.passed = report.passes(tolerance);
        report
    }

    /// Whether the discrepancy is within `tolerance`, absolute or relative.
    pub fn passes(&self, tolerance: f64) -> bool {
        self.abs_discrepancy <= tolerance || self.rel_discrepancy <= tolerance
    }

    pub fn with_tolerance(self, tolerance: f64) -> Self {
        Self {
            passed: self.passes(tolerance),
            tolerance_used: tolerance,
            ..self
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(TransformError::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `∫₀^∞ (f(αx) − f(βx))/x dx = (f(∞) − f(0)) ln(α/β)`.
pub fn frullani<F: Fn(f64) -> f64>(
    f: F,
    f0: f64,
    finf: f64,
    alpha: f64,
    beta: f64,
    cfg: &QuadratureConfig,
) -> Result<IdentityReport> {
    check_positive("alpha", alpha)?;
    check_positive("beta", beta)?;
    let integrand = |x: f64| {
        let x = x.max(FRULLANI_FREEZE);
        (f(alpha * x) - f(beta * x)) / x
    };
    let lhs = integrate_semi_infinite(integrand, cfg)?;
    // ln α − ln β keeps the right side exactly antisymmetric in (α, β).
    let rhs = (finf - f0) * (alpha.ln() - beta.ln());
    Ok(IdentityReport::new(lhs, rhs, DEFAULT_TOLERANCE))
}

/// `∫₀^∞ x^{n−1} F^{(n)}(x) dx = (−1)^{n−1} (F(∞) − F(0)) Γ(n)`.
pub fn lemma2(pair: &SeriesPair, n: u32, cfg: &QuadratureConfig) -> Result<IdentityReport> {
    if n == 0 {
        return Err(TransformError::Domain("order must be at least 1".into()));
    }
    pair.derivative(n, 1.0)?;
    let (f0, finf) = (pair.f_at_zero(), pair.f_at_infinity());
    if !(f0.is_finite() && finf.is_finite()) {
        return Err(TransformError::Domain(format!(
            "limits of '{}' must be finite (F(0) = {f0}, F(inf) = {finf})",
            pair.name()
        )));
    }
    let power = n as i32 - 1;
    let lhs = integrate_semi_infinite(
        |x: f64| {
            let d = pair.derivative(n, x).unwrap_or(f64::NAN);
            if d == 0.0 {
                0.0
            } else {
                x.powi(power) * d
            }
        },
        cfg,
    )?;
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let gamma_n = specfun::gamma(n as f64).map_err(|e| TransformError::Domain(e.to_string()))?;
    let rhs = sign * (finf - f0) * gamma_n;
    Ok(IdentityReport::new(lhs, rhs, DEFAULT_TOLERANCE))
}

/// The master theorem `∫₀^∞ x^{s−1} F(x) dx = Γ(s) φ(−s)`, for integer and
/// non-integer `s` alike.
pub fn rmt(pair: &SeriesPair, s: f64, cfg: &QuadratureConfig) -> Result<IdentityReport> {
    if pair.is_nonstandard() {
        return Err(TransformError::NonstandardPair(pair.name().to_string()));
    }
    check_positive("s", s)?;
    let gamma_s = specfun::gamma(s).map_err(|e| TransformError::Pole {
        s,
        reason: e.to_string(),
    })?;
    let phi = pair.phi(-s);
    let rhs = gamma_s * phi;
    if !rhs.is_finite() {
        return Err(TransformError::Pole {
            s,
            reason: format!("Gamma(s) phi(-s) = {gamma_s} * {phi} is not finite"),
        });
    }
    let lhs = integrate_mellin(|x: f64| pair.closed_form(x), s, cfg)?;
    Ok(IdentityReport::new(lhs, rhs, DEFAULT_TOLERANCE))
}

/// Hardy's form for plain series `Σ φ̃(k)(−x)^k`:
/// `∫₀^∞ x^{s−1} F(x) dx = π/sin(πs) φ̃(−s)` on `0 < s < 1`.
pub fn hardy(pair: &SeriesPair, s: f64, cfg: &QuadratureConfig) -> Result<IdentityReport> {
    if pair.plain_phi(0.0).is_none() {
        return Err(TransformError::Presentation(pair.name().to_string()));
    }
    if !s.is_finite() || s.fract() == 0.0 {
        return Err(TransformError::Pole {
            s,
            reason: "s must be non-integer in (0,1)".into(),
        });
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(TransformError::Domain("s must be non-integer in (0,1)".into()));
    }
    let factor = specfun::reflection_factor(s).map_err(|e| TransformError::Pole {
        s,
        reason: e.to_string(),
    })?;
    let phi = pair.plain_phi(-s).unwrap_or(f64::NAN);
    let rhs = factor * phi;
    if !rhs.is_finite() {
        return Err(TransformError::Pole {
            s,
            reason: format!("phi(-s) = {phi} is not finite"),
        });
    }
    let lhs = integrate_mellin(|x: f64| pair.closed_form(x), s, cfg)?;
    Ok(IdentityReport::new(lhs, rhs, DEFAULT_TOLERANCE))
}

/// `Σ_{k=0}^{K} φ(k) (−1)^k / k! · 1/(s+k)`, which for entire `F` is the
/// Mellin integral over `[0, 1]`.
pub fn partial_fraction_sum(pair: &SeriesPair, s: f64, terms: u32) -> Result<f64> {
    if !s.is_finite() {
        return Err(TransformError::Domain(format!("s must be finite, got {s}")));
    }
    let mut sum = CompensatedSum::new();
    for k in 0..=terms {
        let denom = s + k as f64;
        if denom.abs() < PARTIAL_FRACTION_POLE_RADIUS {
            return Err(TransformError::Pole {
                s,
                reason: format!("1/(s+k) is singular at k = {k}"),
            });
        }
        let c = pair.coefficient(k);
        if c == 0.0 {
            continue;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum.add(sign * c / denom);
    }
    Ok(sum.value())
}

/// Residue of `Γ(s)φ(−s)` at `s = −m`: `left` is `(s+m)Γ(s)φ(−s)` averaged
/// over `s = −m ± eps`, `right` is `(−1)^m φ(m)/m!`.
pub fn residue_check(pair: &SeriesPair, m: u32, eps: f64) -> Result<(f64, f64)> {
    if pair.is_nonstandard() {
        return Err(TransformError::NonstandardPair(pair.name().to_string()));
    }
    if !(eps > 0.0 && eps <= 1e-2) {
        return Err(TransformError::Domain(format!("eps must lie in (0, 1e-2], got {eps}")));
    }
    let mf = m as f64;
    let side = |offset: f64| -> Result<f64> {
        let s = -mf + offset;
        let g = specfun::gamma(s).map_err(|e| TransformError::Pole {
            s,
            reason: e.to_string(),
        })?;
        let v = offset * g * pair.phi(-s);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(TransformError::Pole {
                s,
                reason: "phi(-s) is singular near the pole".into(),
            })
        }
    };
    let left = 0.5 * (side(eps)? + side(-eps)?);
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let right = sign * pair.coefficient(m);
    if !right.is_finite() {
        return Err(TransformError::Pole {
            s: -mf,
            reason: format!("phi({m}) is not finite"),
        });
    }
    Ok((left, right))
}

/// Central difference of order `n` with spacing `h`.
fn central_difference<F: Fn(f64) -> f64>(f: &F, x: f64, n: u32, h: f64) -> f64 {
    let mut sum = CompensatedSum::new();
    let mut binom = 1.0;
    let half = n as f64 / 2.0;
    for j in 0..=n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum.add(sign * binom * f(x + (half - j as f64) * h));
        binom *= (n - j) as f64 / (j + 1) as f64;
    }
    sum.value() / h.powi(n as i32)
}

/// Finite-difference estimate of `f^{(n)}(x)` for `1 ≤ n ≤ 6`, Richardson
/// extrapolated from steps `h` and `h/2`. Returns the value and the size of
/// the extrapolation correction as an accuracy estimate.
pub fn nth_derivative_fd<F: Fn(f64) -> f64>(f: F, x: f64, n: u32, h: f64) -> Result<(f64, f64)> {
    if !(1..=6).contains(&n) {
        return Err(TransformError::Domain(format!("derivative order must be 1..=6, got {n}")));
    }
    check_positive("h", h)?;
    let coarse = central_difference(&f, x, n, h);
    let fine = central_difference(&f, x, n, h / 2.0);
    let correction = (fine - coarse) / 3.0;
    Ok((fine + correction, correction.abs()))
}

/// A step for [`nth_derivative_fd`] balancing the fourth-order truncation
/// error against rounding.
pub fn default_fd_step(n: u32, x: f64) -> f64 {
    f64::EPSILON.powf(1.0 / (n as f64 + 4.0)) * x.abs().max(1.0)
}
