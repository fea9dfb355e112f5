//! Named identity checks drawn from the classical applications of the master
//! theorem, runnable as a regression suite.

use std::fmt;

use rayon::prelude::*;

use crate::expr;
use crate::quadrature::{EvaluationResult, QuadratureConfig};
use crate::sequences::{catalog_get, Params};
use crate::transforms::{self, IdentityReport};

/// Step used by residue cases.
pub const RESIDUE_EPS: f64 = 1e-4;

/// Which transform a case runs, with its order or exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseKind {
    Frullani { alpha: f64, beta: f64 },
    Lemma2 { n: u32 },
    Rmt { s: f64 },
    Hardy { s: f64 },
    Residue { m: u32 },
}

impl CaseKind {
    pub fn name(&self) -> &'static str {
        match self {
            CaseKind::Frullani { .. } => "frullani",
            CaseKind::Lemma2 { .. } => "lemma2",
            CaseKind::Rmt { .. } => "rmt",
            CaseKind::Hardy { .. } => "hardy",
            CaseKind::Residue { .. } => "residue",
        }
    }

    /// The order or exponent, as a real.
    pub fn order(&self) -> f64 {
        match *self {
            CaseKind::Frullani { alpha, beta } => alpha / beta,
            CaseKind::Lemma2 { n } => n as f64,
            CaseKind::Rmt { s } | CaseKind::Hardy { s } => s,
            CaseKind::Residue { m } => m as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceKind {
    Relative,
    Absolute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCase {
    pub name: String,
    pub kind: CaseKind,
    pub catalog_id: String,
    pub params: Params,
    /// Expected value, as an expression over constants, `pi` and special
    /// functions.
    pub exact_value: String,
    /// Factor applied to the transform's left side before comparing it with
    /// `exact_value`.
    pub scale: f64,
    pub tolerance: f64,
    pub tolerance_kind: ToleranceKind,
    pub description: String,
}

impl IdentityCase {
    pub fn exact(&self) -> Result<f64, expr::ExprError> {
        expr::parse(&self.exact_value)?.evaluate(&[("pi", std::f64::consts::PI)])
    }

    /// Whether `report` is within this case's tolerance.
    pub fn accepts(&self, report: &IdentityReport, tolerance: f64) -> bool {
        match self.tolerance_kind {
            ToleranceKind::Relative => report.rel_discrepancy <= tolerance,
            ToleranceKind::Absolute => report.abs_discrepancy <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseOutcome {
    pub case: IdentityCase,
    /// Scaled left side against `exact_value`; absent when the case errored.
    pub report: Option<IdentityReport>,
    /// Right side computed by the transform, times the case scale.
    pub transform_rhs: Option<f64>,
    pub error: Option<String>,
    pub passed: bool,
}

impl fmt::Display for CaseOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "pass" } else { "FAIL" };
        match (&self.report, &self.error) {
            (Some(r), _) => write!(
                f,
                "{status} {:<16} lhs={:.15e} exact={:.15e} rel={:.3e}",
                self.case.name, r.lhs.value, r.rhs, r.rel_discrepancy
            ),
            (None, Some(e)) => write!(f, "{status} {:<16} error: {e}", self.case.name),
            (None, None) => write!(f, "{status} {:<16}", self.case.name),
        }
    }
}

fn case(
    name: impl Into<String>,
    kind: CaseKind,
    catalog_id: &str,
    params: &[(&str, f64)],
    exact_value: impl Into<String>,
    tolerance: f64,
    description: impl Into<String>,
) -> IdentityCase {
    IdentityCase {
        name: name.into(),
        kind,
        catalog_id: catalog_id.to_string(),
        params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        exact_value: exact_value.into(),
        scale: 1.0,
        tolerance,
        tolerance_kind: ToleranceKind::Relative,
        description: description.into(),
    }
}

/// The built-in regression cases.
pub fn builtin_cases() -> Vec<IdentityCase> {
    let mut cases = vec![
        case(
            "euler_n3_a2",
            CaseKind::Rmt { s: 3.0 },
            "exp",
            &[("a", 2.0)],
            "gamma(3)/8",
            1e-9,
            "Euler integral: x^(n-1) exp(-a x) integrates to a^(-n) Gamma(n)",
        ),
        case(
            "euler_half",
            CaseKind::Rmt { s: 0.5 },
            "exp",
            &[("a", 1.0)],
            "sqrt(pi)",
            1e-8,
            "Gamma(1/2) from the exponential pair at non-integer s",
        ),
        case(
            "beta_2_3",
            CaseKind::Rmt { s: 2.0 },
            "power",
            &[("m", 5.0)],
            "1/12",
            1e-9,
            "Beta integral B(2,3); the power pair takes the total exponent m = 2 + 3",
        ),
        IdentityCase {
            scale: std::f64::consts::PI.sqrt() / 2.0,
            ..case(
                "gaussian",
                CaseKind::Lemma2 { n: 1 },
                "erf",
                &[],
                "sqrt(pi)/2",
                1e-10,
                "Gaussian integral via the first derivative of erf, scaled by sqrt(pi)/2",
            )
        },
    ];
    for n in 2..=4u32 {
        // Undo the Rodrigues factor (-1)^(n-1) 2/sqrt(pi) in erf's derivative.
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        cases.push(IdentityCase {
            scale: sign * std::f64::consts::PI.sqrt() / 2.0,
            ..case(
                format!("hermite_{n}"),
                CaseKind::Lemma2 { n },
                "erf",
                &[],
                format!("sqrt(pi)/2*gamma({n})"),
                1e-8,
                format!("x^{} H_{}(x) exp(-x^2) integrates to (sqrt(pi)/2) Gamma({n})", n - 1, n - 1),
            )
        });
    }
    for n in 2..=4u32 {
        cases.push(IdentityCase {
            tolerance_kind: ToleranceKind::Absolute,
            ..case(
                format!("laguerre_zero_{n}"),
                CaseKind::Lemma2 { n },
                "laguerre_weight",
                &[("n", n as f64)],
                "0",
                1e-9,
                format!("x^{} L_{n}(x) exp(-x) integrates to 0", n - 1),
            )
        });
    }
    cases.push(case(
        "hardy_half",
        CaseKind::Hardy { s: 0.5 },
        "geometric",
        &[],
        "pi",
        1e-8,
        "Hardy's form with the geometric series: x^(-1/2)/(1+x) integrates to pi",
    ));
    cases.push(case(
        "frullani_exp",
        CaseKind::Frullani { alpha: 2.0, beta: 1.0 },
        "exp",
        &[("a", 1.0)],
        "-ln(2)",
        1e-9,
        "Frullani integral of exp(-2x) - exp(-x) over x",
    ));
    for (m, exact) in [(0u32, "1"), (1, "-1"), (2, "1/2")] {
        cases.push(IdentityCase {
            tolerance_kind: ToleranceKind::Absolute,
            ..case(
                format!("residue_m{m}"),
                CaseKind::Residue { m },
                "exp",
                &[("a", 1.0)],
                exact,
                1e-6,
                format!("residue of Gamma(s) at s = -{m} is (-1)^{m}/{m}!"),
            )
        });
    }
    cases.push(case(
        "harmonic_half",
        CaseKind::Rmt { s: 0.5 },
        "harmonic_shifted",
        &[],
        "2*sqrt(pi)",
        1e-7,
        "phi(k) = 1/(k+1) at s = 1/2 gives 2 sqrt(pi)",
    ));
    cases
}

fn evaluate(case: &IdentityCase, cfg: &QuadratureConfig) -> Result<(IdentityReport, f64), String> {
    let pair = catalog_get(&case.catalog_id, &case.params).map_err(|e| e.to_string())?;
    let exact = case.exact().map_err(|e| format!("exact value: {e}"))?;
    let raw = match case.kind {
        CaseKind::Frullani { alpha, beta } => transforms::frullani(
            |x| pair.closed_form(x),
            pair.f_at_zero(),
            pair.f_at_infinity(),
            alpha,
            beta,
            cfg,
        ),
        CaseKind::Lemma2 { n } => transforms::lemma2(&pair, n, cfg),
        CaseKind::Rmt { s } => transforms::rmt(&pair, s, cfg),
        CaseKind::Hardy { s } => transforms::hardy(&pair, s, cfg),
        CaseKind::Residue { m } => transforms::residue_check(&pair, m, RESIDUE_EPS)
            .map(|(left, right)| IdentityReport::new(EvaluationResult::exact(left), right, case.tolerance)),
    }
    .map_err(|e| e.to_string())?;
    let report = IdentityReport::new(raw.lhs.scaled(case.scale), exact, case.tolerance);
    Ok((report, raw.rhs * case.scale))
}

/// Runs every case, in parallel, preserving order. A case that errors is
/// reported as failed with its reason.
pub fn run_corpus(cases: &[IdentityCase], cfg: &QuadratureConfig) -> Vec<CaseOutcome> {
    cases
        .par_iter()
        .map(|case| match evaluate(case, cfg) {
            Ok((report, transform_rhs)) => CaseOutcome {
                passed: case.accepts(&report, case.tolerance),
                case: case.clone(),
                report: Some(report),
                transform_rhs: Some(transform_rhs),
                error: None,
            },
            Err(error) => CaseOutcome {
                case: case.clone(),
                report: None,
                transform_rhs: None,
                error: Some(error),
                passed: false,
            },
        })
        .collect()
}
