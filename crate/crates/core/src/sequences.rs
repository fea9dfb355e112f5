//! Coefficient sequences `φ(k)` and the functions they generate,
//! `F(x) = Σ_{k≥0} φ(k) (-x)^k / k!`.
//!
//! A [`SeriesPair`] bundles the sequence (extended to all reals, since the
//! master theorem evaluates `φ(-s)`) with a closed form that is valid on the
//! whole half line, analytic derivatives, and the limits of `F` at 0 and ∞.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_2_SQRT_PI;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::ExprNode;
use crate::dd::Dd;
use crate::quadrature::CompensatedSum;
use crate::specfun;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type CoefficientFn = Arc<dyn Fn(u32) -> f64 + Send + Sync>;
pub type DerivativeFn = Arc<dyn Fn(u32, f64) -> f64 + Send + Sync>;
pub type Params = BTreeMap<String, f64>;

/// Relative size below which a series term counts as negligible.
pub const SERIES_STOP_RATIO: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SequenceError {
    #[error("x = {x} is outside the radius of convergence {radius}")]
    Radius { x: f64, radius: f64 },
    #[error("series did not settle within {terms} terms")]
    NonConvergence { terms: usize },
    #[error("derivative of order {order} unavailable (maximum {max})")]
    DerivativeUnavailable { order: u32, max: u32 },
    #[error("unknown catalog entry '{0}'")]
    UnknownEntry(String),
    #[error("parameter error: {0}")]
    ParamDomain(String),
    #[error("inconsistent series pair: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, SequenceError>;

/// Which series convention the pair was specified in.
#[derive(Clone)]
pub enum Presentation {
    /// `F(x) = Σ φ(k)(-x)^k/k!`.
    Factorial,
    /// `F(x) = Σ φ̃(k)(-x)^k`, stored with `φ(k) = Γ(k+1)·φ̃(k)`.
    Plain(RealFn),
}

impl fmt::Debug for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Presentation::Factorial => f.write_str("Factorial"),
            Presentation::Plain(_) => f.write_str("Plain"),
        }
    }
}

/// A coefficient sequence with its generating function.
#[derive(Clone)]
pub struct SeriesPair {
    name: String,
    phi: RealFn,
    coefficient: CoefficientFn,
    closed_form: RealFn,
    derivative: DerivativeFn,
    derivative_max: u32,
    limit_at_infinity: CoefficientFn,
    f_at_zero: f64,
    f_at_infinity: f64,
    convergence_radius: f64,
    params: Params,
    nonstandard: bool,
    presentation: Presentation,
    recurrence: Option<TermRecurrence>,
}

/// Exact structure of the coefficients `c_k = φ(k)/k!`: zero except at
/// `k = offset + j·stride`, with `c_offset = lead` and
/// `c_{k+stride} = c_k · ratio(k)`.
///
/// Lets [`eval_series`] run in double-double arithmetic, which keeps the sum
/// accurate when its terms cancel heavily.
#[derive(Clone)]
pub struct TermRecurrence {
    pub offset: u32,
    pub stride: u32,
    pub lead: Dd,
    pub ratio: Arc<dyn Fn(u32) -> Dd + Send + Sync>,
}

impl fmt::Debug for SeriesPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeriesPair")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("derivative_max", &self.derivative_max)
            .field("f_at_zero", &self.f_at_zero)
            .field("f_at_infinity", &self.f_at_infinity)
            .field("convergence_radius", &self.convergence_radius)
            .field("nonstandard", &self.nonstandard)
            .field("presentation", &self.presentation)
            .finish()
    }
}

/// Assembles a [`SeriesPair`] and checks its invariants.
pub struct SeriesPairBuilder {
    name: String,
    phi: RealFn,
    closed_form: RealFn,
    coefficient: Option<CoefficientFn>,
    derivative: Option<(u32, DerivativeFn)>,
    limit_at_infinity: Option<CoefficientFn>,
    f_at_zero: Option<f64>,
    f_at_infinity: f64,
    convergence_radius: f64,
    params: Params,
    presentation: Presentation,
    recurrence: Option<TermRecurrence>,
}

impl SeriesPairBuilder {
    /// `φ(k)/k!`, when a form stable for large `k` is known.
    pub fn coefficient(mut self, c: impl Fn(u32) -> f64 + Send + Sync + 'static) -> Self {
        self.coefficient = Some(Arc::new(c));
        self
    }

    /// Analytic derivatives up to `max` (order 0 need not be handled).
    pub fn derivatives(mut self, max: u32, d: impl Fn(u32, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some((max, Arc::new(d)));
        self
    }

    /// `lim_{x→∞} F^{(n)}(x)` for `n ≥ 1`. Defaults to 0.
    pub fn derivative_limits(mut self, l: impl Fn(u32) -> f64 + Send + Sync + 'static) -> Self {
        self.limit_at_infinity = Some(Arc::new(l));
        self
    }

    /// `F(0)`. Defaults to `φ(0)`.
    pub fn f_at_zero(mut self, v: f64) -> Self {
        self.f_at_zero = Some(v);
        self
    }

    pub fn f_at_infinity(mut self, v: f64) -> Self {
        self.f_at_infinity = v;
        self
    }

    pub fn radius(mut self, r: f64) -> Self {
        self.convergence_radius = r;
        self
    }

    pub fn params(mut self, p: Params) -> Self {
        self.params = p;
        self
    }

    /// Marks the pair as a plain series `Σ φ̃(k)(-x)^k`; `phi` must then be
    /// `Γ(k+1)·φ̃(k)`.
    pub fn recurrence(
        mut self,
        offset: u32,
        stride: u32,
        lead: Dd,
        ratio: impl Fn(u32) -> Dd + Send + Sync + 'static,
    ) -> Self {
        self.recurrence = Some(TermRecurrence {
            offset,
            stride: stride.max(1),
            lead,
            ratio: Arc::new(ratio),
        });
        self
    }

    pub fn plain(mut self, plain_phi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.presentation = Presentation::Plain(Arc::new(plain_phi));
        self
    }

    pub fn build(self) -> Result<SeriesPair> {
        let phi = self.phi;
        let phi0 = phi(0.0);
        let f_at_zero = self.f_at_zero.unwrap_or(phi0);
        if !(self.convergence_radius > 0.0) {
            return Err(SequenceError::Inconsistent("radius must be positive".into()));
        }
        if (phi0 - f_at_zero).abs() > 1e-12 * f_at_zero.abs().max(1.0) {
            return Err(SequenceError::Inconsistent(format!(
                "phi(0) = {phi0} differs from F(0) = {f_at_zero}"
            )));
        }
        let at_zero = (self.closed_form)(0.0);
        if at_zero.is_finite() && (at_zero - f_at_zero).abs() > 1e-12 * f_at_zero.abs().max(1.0) {
            return Err(SequenceError::Inconsistent(format!(
                "closed form at 0 is {at_zero}, expected {f_at_zero}"
            )));
        }
        let coefficient = self.coefficient.unwrap_or_else(|| {
            let phi = phi.clone();
            Arc::new(move |k| phi_over_factorial(phi(k as f64), k))
        });
        let (derivative_max, derivative) = self
            .derivative
            .unwrap_or_else(|| (0, Arc::new(|_, _| f64::NAN)));
        let closed = self.closed_form.clone();
        let derivative: DerivativeFn = Arc::new(move |n, x| if n == 0 { closed(x) } else { derivative(n, x) });
        let finf = self.f_at_infinity;
        let limits = self.limit_at_infinity.unwrap_or_else(|| Arc::new(|_| 0.0));
        let limit_at_infinity: CoefficientFn = Arc::new(move |n| if n == 0 { finf } else { limits(n) });
        Ok(SeriesPair {
            name: self.name,
            nonstandard: phi0 == 0.0,
            phi,
            coefficient,
            closed_form: self.closed_form,
            derivative,
            derivative_max,
            limit_at_infinity,
            f_at_zero,
            f_at_infinity: finf,
            convergence_radius: self.convergence_radius,
            params: self.params,
            presentation: self.presentation,
            recurrence: self.recurrence,
        })
    }
}

fn phi_over_factorial(phi: f64, k: u32) -> f64 {
    if phi == 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    if k <= 170 {
        if let Ok(fact) = specfun::gamma(kf + 1.0) {
            let v = phi / fact;
            if v.is_finite() {
                return v;
            }
        }
    }
    match specfun::ln_gamma(kf + 1.0) {
        Ok(lf) => phi.signum() * (phi.abs().ln() - lf).exp(),
        Err(_) => f64::NAN,
    }
}

impl SeriesPair {
    pub fn builder(
        name: impl Into<String>,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        closed_form: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> SeriesPairBuilder {
        SeriesPairBuilder {
            name: name.into(),
            phi: Arc::new(phi),
            closed_form: Arc::new(closed_form),
            coefficient: None,
            derivative: None,
            limit_at_infinity: None,
            f_at_zero: None,
            f_at_infinity: 0.0,
            convergence_radius: f64::INFINITY,
            params: Params::new(),
            presentation: Presentation::Factorial,
            recurrence: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `φ` at any real argument; poles give a non-finite value.
    pub fn phi(&self, k: f64) -> f64 {
        (self.phi)(k)
    }

    /// `φ(k)/k!`.
    pub fn coefficient(&self, k: u32) -> f64 {
        (self.coefficient)(k)
    }

    pub fn closed_form(&self, x: f64) -> f64 {
        (self.closed_form)(x)
    }

    /// `F^{(order)}(x)`.
    pub fn derivative(&self, order: u32, x: f64) -> Result<f64> {
        if order > self.derivative_max {
            return Err(SequenceError::DerivativeUnavailable {
                order,
                max: self.derivative_max,
            });
        }
        Ok((self.derivative)(order, x))
    }

    pub fn derivative_max(&self) -> u32 {
        self.derivative_max
    }

    pub fn f_at_zero(&self) -> f64 {
        self.f_at_zero
    }

    pub fn f_at_infinity(&self) -> f64 {
        self.f_at_infinity
    }

    pub fn convergence_radius(&self) -> f64 {
        self.convergence_radius
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// True when `φ(0) = 0`, which rules the pair out of the master theorem.
    pub fn is_nonstandard(&self) -> bool {
        self.nonstandard
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    /// `φ̃` for plain-series pairs.
    pub fn plain_phi(&self, k: f64) -> Option<f64> {
        match &self.presentation {
            Presentation::Plain(p) => Some(p(k)),
            Presentation::Factorial => None,
        }
    }

    /// Replaces the derivative table, e.g. with a finite-difference
    /// approximation for pairs that have no analytic derivatives.
    pub fn with_derivatives(
        mut self,
        max: u32,
        d: impl Fn(u32, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let closed = self.closed_form.clone();
        self.derivative = Arc::new(move |n, x| if n == 0 { closed(x) } else { d(n, x) });
        self.derivative_max = max;
        self
    }
}

/// A truncated series value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// Magnitude of the first omitted term.
    pub truncation_bound: f64,
    pub terms: usize,
    /// `Σ |term|`, which bounds the rounding error of the sum.
    pub magnitude_sum: f64,
}

fn series_term(pair: &SeriesPair, k: u32, x: f64) -> f64 {
    let c = pair.coefficient(k);
    if c == 0.0 {
        return 0.0;
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let p = x.powi(k as i32);
    let t = c * p;
    if t.is_finite() && p.is_finite() && p != 0.0 {
        sign * t
    } else {
        sign * c.signum() * (c.abs().ln() + k as f64 * x.ln()).exp()
    }
}

/// Sums `Σ φ(k)(-x)^k/k!` until two successive terms are negligible
/// relative to the partial sum.
pub fn eval_series(pair: &SeriesPair, x: f64, max_terms: usize) -> Result<SeriesValue> {
    if !(x >= 0.0) || x >= pair.convergence_radius {
        return Err(SequenceError::Radius {
            x,
            radius: pair.convergence_radius,
        });
    }
    if max_terms == 0 {
        return Err(SequenceError::NonConvergence { terms: 0 });
    }
    if let Some(rec) = &pair.recurrence {
        return eval_recurrence(rec, x, max_terms);
    }
    if x == 0.0 {
        return Ok(SeriesValue {
            value: pair.coefficient(0),
            truncation_bound: 0.0,
            terms: 1,
            magnitude_sum: pair.coefficient(0).abs(),
        });
    }
    let mut sum = CompensatedSum::new();
    let mut magnitude = 0.0;
    let mut next = series_term(pair, 0, x);
    for k in 0..max_terms as u32 {
        let term = next;
        next = series_term(pair, k + 1, x);
        let partial = sum.value();
        let limit = SERIES_STOP_RATIO * partial.abs();
        if partial != 0.0 && term.abs() <= limit && next.abs() <= limit {
            return Ok(SeriesValue {
                value: partial,
                truncation_bound: term.abs(),
                terms: k as usize,
                magnitude_sum: magnitude,
            });
        }
        if !term.is_finite() {
            return Err(SequenceError::NonConvergence { terms: k as usize });
        }
        sum.add(term);
        magnitude += term.abs();
    }
    Err(SequenceError::NonConvergence { terms: max_terms })
}

fn eval_recurrence(rec: &TermRecurrence, x: f64, max_terms: usize) -> Result<SeriesValue> {
    let neg_x = Dd::from_f64(-x);
    let mut step = Dd::ONE;
    for _ in 0..rec.stride {
        step = step * neg_x;
    }
    let mut term = rec.lead;
    for _ in 0..rec.offset {
        term = term * neg_x;
    }
    let mut sum = Dd::ZERO;
    let mut magnitude = 0.0;
    let mut k = rec.offset;
    let mut next = term * (rec.ratio)(k) * step;
    while (k as usize) < max_terms {
        let limit = SERIES_STOP_RATIO * sum.hi.abs();
        if sum.hi != 0.0 && term.hi.abs() <= limit && next.hi.abs() <= limit {
            return Ok(SeriesValue {
                value: sum.to_f64(),
                truncation_bound: term.hi.abs(),
                terms: k as usize,
                magnitude_sum: magnitude,
            });
        }
        if !term.is_finite() {
            break;
        }
        sum = sum + term;
        magnitude += term.hi.abs();
        k += rec.stride;
        term = next;
        next = term * (rec.ratio)(k) * step;
    }
    Err(SequenceError::NonConvergence { terms: k as usize })
}

/// The pair generated by `F^{(n)}`: `φ'(k) = φ(n+k)` and
/// `F'(x) = (-1)^n F^{(n)}(x)`.
pub fn shift_sequence(pair: &SeriesPair, n: u32) -> Result<SeriesPair> {
    if n == 0 {
        return Ok(pair.clone());
    }
    if n > pair.derivative_max {
        return Err(SequenceError::DerivativeUnavailable {
            order: n,
            max: pair.derivative_max,
        });
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let nf = n as f64;

    let p = pair.clone();
    let phi = move |k: f64| p.phi(nf + k);
    let p = pair.clone();
    let closed = move |x: f64| sign * (p.derivative)(n, x);
    let p = pair.clone();
    // φ(n+k)/k! = [φ(n+k)/(n+k)!]·(k+1)(k+2)…(k+n)
    let coefficient = move |k: u32| {
        let rising: f64 = (1..=n).map(|i| (k + i) as f64).product();
        p.coefficient(n + k) * rising
    };
    let p = pair.clone();
    let derivative = move |j: u32, x: f64| sign * (p.derivative)(n + j, x);
    let p = pair.clone();
    let limits = move |j: u32| sign * (p.limit_at_infinity)(n + j);

    let mut builder = SeriesPair::builder(format!("{}^({n})", pair.name), phi, closed)
        .coefficient(coefficient)
        .derivatives(pair.derivative_max - n, derivative)
        .derivative_limits(limits)
        .f_at_zero(sign * (pair.derivative)(n, 0.0))
        .f_at_infinity(sign * (pair.limit_at_infinity)(n))
        .radius(pair.convergence_radius)
        .params(pair.params.clone());
    if let Presentation::Plain(plain) = &pair.presentation {
        let plain = plain.clone();
        builder = builder.plain(move |k| specfun::gamma_ratio(nf + k + 1.0, k + 1.0) * plain(nf + k));
    }
    builder.build()
}

/// Describes a tunable catalog parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub constraint: &'static str,
}

/// A named, parameterised series pair.
#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub description: &'static str,
    /// The integral identity the entry exercises.
    pub identity: &'static str,
    pub params: &'static [ParamSpec],
    builder: fn(&Params) -> Result<SeriesPair>,
}

impl CatalogEntry {
    pub fn build(&self, params: &Params) -> Result<SeriesPair> {
        let mut full = Params::new();
        for spec in self.params {
            full.insert(spec.name.to_string(), spec.default);
        }
        for (name, value) in params {
            if !self.params.iter().any(|p| p.name == name) {
                return Err(SequenceError::ParamDomain(format!(
                    "'{}' has no parameter '{name}'",
                    self.id
                )));
            }
            if !value.is_finite() {
                return Err(SequenceError::ParamDomain(format!("{name} must be finite")));
            }
            full.insert(name.clone(), *value);
        }
        (self.builder)(&full)
    }
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        id: "exp",
        description: "phi(k) = a^k, F(x) = exp(-a x)",
        identity: "Euler gamma integral",
        params: &[ParamSpec { name: "a", default: 1.0, constraint: "a > 0" }],
        builder: build_exp,
    },
    CatalogEntry {
        id: "power",
        description: "phi(k) = Gamma(m+k)/Gamma(m), F(x) = (1+x)^(-m); the beta integral B(n, m-n) uses total exponent m",
        identity: "beta integral",
        params: &[ParamSpec { name: "m", default: 1.0, constraint: "m > 0" }],
        builder: build_power,
    },
    CatalogEntry {
        id: "erf",
        description: "F(x) = erf(x), derivatives (-1)^(n-1) (2/sqrt(pi)) H_(n-1)(x) exp(-x^2); phi(0) = 0",
        identity: "Gaussian and Hermite integrals",
        params: &[],
        builder: build_erf,
    },
    CatalogEntry {
        id: "laguerre_weight",
        description: "F(x) = x^n exp(-x), n-th derivative n! L_n(x) exp(-x); phi(0) = 0",
        identity: "Laguerre integral",
        params: &[ParamSpec { name: "n", default: 1.0, constraint: "integer 1 <= n <= 60" }],
        builder: build_laguerre_weight,
    },
    CatalogEntry {
        id: "geometric",
        description: "plain series sum (-x)^k = 1/(1+x), stored as phi(k) = k!",
        identity: "Hardy's form of the master theorem",
        params: &[],
        builder: build_geometric,
    },
    CatalogEntry {
        id: "harmonic_shifted",
        description: "phi(k) = 1/(k+1), F(x) = (1 - exp(-x))/x with F(0) = 1",
        identity: "master theorem at non-integer s",
        params: &[],
        builder: build_harmonic_shifted,
    },
];

pub fn catalog_entry(id: &str) -> Result<&'static CatalogEntry> {
    CATALOG
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| SequenceError::UnknownEntry(id.to_string()))
}

/// Builds the catalog pair `id` with `params`; omitted parameters take
/// their defaults.
pub fn catalog_get(id: &str, params: &Params) -> Result<SeriesPair> {
    catalog_entry(id)?.build(params)
}

const MAX_ANALYTIC_ORDER: u32 = 60;

fn neg_one_pow(n: u32) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn rising(m: f64, n: u32) -> f64 {
    (0..n).map(|i| m + i as f64).product()
}

fn build_exp(params: &Params) -> Result<SeriesPair> {
    let a = params["a"];
    if !(a > 0.0) {
        return Err(SequenceError::ParamDomain(format!("exp requires a > 0, got {a}")));
    }
    SeriesPair::builder("exp", move |k| a.powf(k), move |x| (-a * x).exp())
        .coefficient(move |k| (1..=k).fold(1.0, |acc, i| acc * a / i as f64))
        .recurrence(0, 1, Dd::ONE, move |k| Dd::from(a) / Dd::from(k as f64 + 1.0))
        .derivatives(MAX_ANALYTIC_ORDER, move |n, x| (-a).powi(n as i32) * (-a * x).exp())
        .f_at_zero(1.0)
        .f_at_infinity(0.0)
        .params(params.clone())
        .build()
}

fn build_power(params: &Params) -> Result<SeriesPair> {
    let m = params["m"];
    if !(m > 0.0) {
        return Err(SequenceError::ParamDomain(format!("power requires m > 0, got {m}")));
    }
    SeriesPair::builder(
        "power",
        move |k| specfun::gamma_ratio(m + k, m),
        move |x| (1.0 + x).powf(-m),
    )
    .coefficient(move |k| (0..k).fold(1.0, |acc, i| acc * (m + i as f64) / (i + 1) as f64))
    .recurrence(0, 1, Dd::ONE, move |k| (Dd::from(m) + Dd::from(k as f64)) / Dd::from(k as f64 + 1.0))
    .derivatives(MAX_ANALYTIC_ORDER, move |n, x| {
        neg_one_pow(n) * rising(m, n) * (1.0 + x).powf(-m - n as f64)
    })
    .f_at_zero(1.0)
    .f_at_infinity(0.0)
    .radius(1.0)
    .params(params.clone())
    .build()
}

/// `φ(k)/k!` for erf: zero at even `k`, `(2/√π)(-1)^{j+1}/(j!(2j+1))` at
/// `k = 2j+1`.
fn erf_coefficient(k: u32) -> f64 {
    if k % 2 == 0 {
        return 0.0;
    }
    let j = (k - 1) / 2;
    let inv_j_fact = (1..=j).fold(1.0, |acc, i| acc / i as f64);
    -neg_one_pow(j) * FRAC_2_SQRT_PI * inv_j_fact / k as f64
}

fn build_erf(params: &Params) -> Result<SeriesPair> {
    // φ is defined on the non-negative integers only.
    let phi = |k: f64| {
        if k < 0.0 || k.fract() != 0.0 || k > u32::MAX as f64 {
            return f64::NAN;
        }
        let k = k as u32;
        if k % 2 == 0 {
            return 0.0;
        }
        // (2/√π)(-1)^{j+1}(2j)!/j!
        let j = (k - 1) / 2;
        -neg_one_pow(j) * FRAC_2_SQRT_PI * specfun::gamma_ratio(2.0 * j as f64 + 1.0, j as f64 + 1.0)
    };
    SeriesPair::builder("erf", phi, specfun::erf)
        .coefficient(erf_coefficient)
        // c_{2j+3}/c_{2j+1} = -(2j+1)/((j+1)(2j+3))
        .recurrence(1, 2, -Dd::FRAC_2_SQRT_PI, |k| {
            let j = ((k - 1) / 2) as f64;
            -(Dd::from(k as f64) / (Dd::from(j + 1.0) * Dd::from(k as f64 + 2.0)))
        })
        .derivatives(specfun::MAX_POLY_DEGREE + 1, |n, x| {
            let h = specfun::hermite(n - 1, x).unwrap_or(f64::NAN);
            neg_one_pow(n - 1) * FRAC_2_SQRT_PI * h * (-x * x).exp()
        })
        .f_at_zero(0.0)
        .f_at_infinity(1.0)
        .params(params.clone())
        .build()
}

/// `d^j/dx^j [x^n e^{-x}]` by the Leibniz rule.
fn laguerre_weight_derivative(n: u32, j: u32, x: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    let mut binom = 1.0; // C(j, i)
    let mut falling = 1.0; // n!/(n-i)!
    for i in 0..=j.min(n) {
        acc.add(binom * falling * x.powi((n - i) as i32) * neg_one_pow(j - i));
        binom *= (j - i) as f64 / (i + 1) as f64;
        falling *= (n - i) as f64;
    }
    acc.value() * (-x).exp()
}

fn build_laguerre_weight(params: &Params) -> Result<SeriesPair> {
    let nf = params["n"];
    if !(nf >= 1.0 && nf <= specfun::MAX_POLY_DEGREE as f64 && nf.fract() == 0.0) {
        return Err(SequenceError::ParamDomain(format!(
            "laguerre_weight requires an integer 1 <= n <= {}, got {nf}",
            specfun::MAX_POLY_DEGREE
        )));
    }
    let n = nf as u32;
    let sign = neg_one_pow(n);
    // (-1)^n k(k-1)…(k-n+1), which vanishes at k = 0..n-1.
    let phi = move |k: f64| sign * (0..n).map(|i| k - i as f64).product::<f64>();
    let coefficient = move |k: u32| {
        if k < n {
            0.0
        } else {
            sign * (1..=k - n).fold(1.0, |acc, i| acc / i as f64)
        }
    };
    let n_fact = specfun::gamma(nf + 1.0).unwrap_or(f64::NAN);
    SeriesPair::builder("laguerre_weight", phi, move |x| x.powi(n as i32) * (-x).exp())
        .coefficient(coefficient)
        .recurrence(n, 1, Dd::from(sign), move |k| Dd::ONE / Dd::from((k - n + 1) as f64))
        .derivatives(MAX_ANALYTIC_ORDER, move |j, x| {
            if j == n {
                n_fact * specfun::laguerre(n, x).unwrap_or(f64::NAN) * (-x).exp()
            } else {
                laguerre_weight_derivative(n, j, x)
            }
        })
        .f_at_zero(0.0)
        .f_at_infinity(0.0)
        .params(params.clone())
        .build()
}

fn build_geometric(params: &Params) -> Result<SeriesPair> {
    SeriesPair::builder(
        "geometric",
        |k| specfun::gamma_ratio(k + 1.0, 1.0),
        |x| 1.0 / (1.0 + x),
    )
    .coefficient(|_| 1.0)
    .recurrence(0, 1, Dd::ONE, |_| Dd::ONE)
    .derivatives(MAX_ANALYTIC_ORDER, |n, x| {
        neg_one_pow(n) * rising(1.0, n) * (1.0 + x).powi(-(n as i32) - 1)
    })
    .f_at_zero(1.0)
    .f_at_infinity(0.0)
    .radius(1.0)
    .plain(|_| 1.0)
    .params(params.clone())
    .build()
}

/// `∫₀¹ tⁿ e^{-xt} dt`, so that `F^{(n)}(x) = (-1)ⁿ` times this for
/// `F(x) = (1 - e^{-x})/x`.
fn harmonic_moment(n: u32, x: f64) -> f64 {
    let nf = n as f64;
    if x <= nf + 40.0 {
        // e^{-x} Σ_k x^k n!/(n+k+1)!, all terms positive.
        let mut term = 1.0 / (nf + 1.0);
        let mut sum = term;
        let mut k = 0.0;
        loop {
            term *= x / (nf + k + 2.0);
            sum += term;
            k += 1.0;
            if term <= f64::EPSILON * 0.25 * sum {
                break;
            }
        }
        (-x).exp() * sum
    } else {
        // n!/x^{n+1} (1 - e^{-x} Σ_{j≤n} x^j/j!), the subtracted part tiny.
        let mut partial = 0.0;
        let mut t = 1.0;
        for j in 0..=n {
            if j > 0 {
                t *= x / j as f64;
            }
            partial += t;
        }
        let q = (-x).exp() * partial;
        let lead = (specfun::ln_gamma(nf + 1.0).unwrap_or(0.0) - (nf + 1.0) * x.ln()).exp();
        lead * (1.0 - q)
    }
}

fn build_harmonic_shifted(params: &Params) -> Result<SeriesPair> {
    SeriesPair::builder(
        "harmonic_shifted",
        |k| 1.0 / (k + 1.0),
        |x| if x == 0.0 { 1.0 } else { -(-x).exp_m1() / x },
    )
    .coefficient(|k| (1..=k + 1).fold(1.0, |acc, i| acc / i as f64))
    .recurrence(0, 1, Dd::ONE, |k| Dd::ONE / Dd::from(k as f64 + 2.0))
    .derivatives(MAX_ANALYTIC_ORDER, |n, x| neg_one_pow(n) * harmonic_moment(n, x))
    .f_at_zero(1.0)
    .f_at_infinity(0.0)
    .params(params.clone())
    .build()
}

/// A pair from user expressions: `phi_expr` in the variable `k`,
/// `closed_expr` in `x`, both may reference `params` and `pi`.
///
/// Evaluation errors surface as NaN. Such pairs carry no derivatives and an
/// infinite nominal radius.
pub fn expression_pair(
    phi_expr: ExprNode,
    closed_expr: ExprNode,
    params: Params,
    plain: bool,
    f_at_infinity: f64,
) -> Result<SeriesPair> {
    let lookup_params = Arc::new(params.clone());
    let make = |expr: ExprNode, var: &'static str| {
        let params = lookup_params.clone();
        move |v: f64| {
            expr.eval_with(&|name: &str| {
                if name == var {
                    Some(v)
                } else if name == "pi" && !params.contains_key("pi") {
                    Some(std::f64::consts::PI)
                } else {
                    params.get(name).copied()
                }
            })
            .unwrap_or(f64::NAN)
        }
    };
    let user_phi = make(phi_expr, "k");
    let closed = make(closed_expr, "x");
    let phi0 = user_phi(0.0);
    if !phi0.is_finite() {
        return Err(SequenceError::Inconsistent(format!("phi(0) evaluates to {phi0}")));
    }
    let builder = if plain {
        let plain_phi = Arc::new(user_phi);
        let for_phi = plain_phi.clone();
        SeriesPair::builder("user", move |k| specfun::gamma_ratio(k + 1.0, 1.0) * for_phi(k), closed)
            .plain(move |k| plain_phi(k))
    } else {
        SeriesPair::builder("user", user_phi, closed)
    };
    builder.f_at_infinity(f_at_infinity).params(params).build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, f64)]) -> Params {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn get(id: &str, p: &[(&str, f64)]) -> SeriesPair {
        catalog_get(id, &params(p)).unwrap()
    }

    #[test]
    fn eval_series_examples() {
        let exp = get("exp", &[("a", 1.0)]);
        assert_eq!(eval_series(&exp, 0.0, 10).unwrap().value, 1.0);
        let e1 = eval_series(&exp, 1.0, 50).unwrap();
        assert!((e1.value - 0.367_879_441_171_442_33).abs() <= 1e-15);

        let geo = get("geometric", &[]);
        let g = eval_series(&geo, 0.5, 80).unwrap();
        // brute force Σ(-0.5)^k
        let brute: f64 = (0..80).map(|k| (-0.5f64).powi(k)).sum();
        assert!((g.value - brute).abs() <= 1e-15);
        assert!((g.value - 2.0 / 3.0).abs() <= 1e-9);
    }

    #[test]
    fn eval_series_errors() {
        let geo = get("geometric", &[]);
        assert!(matches!(eval_series(&geo, 1.0, 100), Err(SequenceError::Radius { .. })));
        assert!(matches!(eval_series(&geo, 0.99, 10), Err(SequenceError::NonConvergence { .. })));
        assert!(eval_series(&geo, -0.1, 10).is_err());
    }

    #[test]
    fn eval_series_skips_leading_zero_terms() {
        let lw = get("laguerre_weight", &[("n", 3.0)]);
        let v = eval_series(&lw, 0.7, 200).unwrap();
        assert!((v.value - 0.343 * (-0.7f64).exp()).abs() < 1e-15);
        let erf = get("erf", &[]);
        let v = eval_series(&erf, 1.0, 200).unwrap();
        assert!((v.value - specfun::erf(1.0)).abs() < 1e-15);
    }

    #[test]
    fn shift_examples() {
        let exp = get("exp", &[("a", 1.0)]);
        let s = shift_sequence(&exp, 2).unwrap();
        for k in 0..5 {
            assert_eq!(s.phi(k as f64), 1.0);
        }
        for x in [0.0, 0.3, 2.0] {
            assert!((s.closed_form(x) - (-x).exp()).abs() < 1e-16);
        }

        let exp2 = get("exp", &[("a", 2.0)]);
        let s = shift_sequence(&exp2, 1).unwrap();
        for k in 0..6 {
            assert_eq!(s.phi(k as f64), 2f64.powi(k + 1));
        }
        assert!((s.closed_form(0.4) - 2.0 * (-0.8f64).exp()).abs() < 1e-15);

        let pow3 = get("power", &[("m", 3.0)]);
        let s = shift_sequence(&pow3, 1).unwrap();
        for k in 0..=5 {
            let want = specfun::gamma(4.0 + k as f64).unwrap() / 2.0;
            assert!((s.phi(k as f64) - want).abs() <= 1e-12 * want);
        }
        assert!((s.closed_form(0.5) - 3.0 * 1.5f64.powi(-4)).abs() < 1e-15);
        assert_eq!(s.f_at_zero(), 3.0);
        assert_eq!(s.f_at_infinity(), 0.0);
    }

    #[test]
    fn shift_beyond_available_derivatives_fails() {
        let exp = get("exp", &[]);
        assert!(matches!(
            shift_sequence(&exp, 61),
            Err(SequenceError::DerivativeUnavailable { order: 61, max: 60 })
        ));
        let user = expression_pair(
            crate::expr::parse("1").unwrap(),
            crate::expr::parse("exp(-x)").unwrap(),
            Params::new(),
            false,
            0.0,
        )
        .unwrap();
        assert!(shift_sequence(&user, 1).is_err());
    }

    #[test]
    fn catalog_examples() {
        let exp = get("exp", &[("a", 2.0)]);
        assert_eq!(exp.phi(3.0), 8.0);
        assert_eq!(exp.closed_form(0.0), 1.0);

        let p = get("power", &[("m", 5.0)]);
        assert!((p.phi(1.0) - 5.0).abs() < 1e-13);
        assert!((p.phi(2.0) - 30.0).abs() < 1e-12);

        let erf = get("erf", &[]);
        assert_eq!(erf.f_at_infinity(), 1.0);
        assert!(erf.is_nonstandard());
        assert!(get("laguerre_weight", &[("n", 2.0)]).is_nonstandard());
        assert!(!get("harmonic_shifted", &[]).is_nonstandard());
        assert_eq!(get("harmonic_shifted", &[]).closed_form(0.0), 1.0);
    }

    #[test]
    fn recurrences_match_coefficients() {
        for entry in CATALOG {
            let pair = entry.build(&Params::new()).unwrap();
            let rec = pair.recurrence.clone().unwrap();
            let mut c = rec.lead;
            for k in 0..40u32 {
                let want = pair.coefficient(k);
                let got = if k >= rec.offset && (k - rec.offset) % rec.stride == 0 {
                    let v = c.to_f64();
                    c = c * (rec.ratio)(k);
                    v
                } else {
                    0.0
                };
                assert!((got - want).abs() <= 1e-14 * want.abs(), "{} k={k}: {got} vs {want}", entry.id);
            }
        }
    }

    #[test]
    fn catalog_ids_unique() {
        for (i, a) in CATALOG.iter().enumerate() {
            for b in &CATALOG[i + 1..] {
                assert_ne!(a.id, b.id);
            }
        }
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(catalog_get("nope", &Params::new()), Err(SequenceError::UnknownEntry(_))));
        for (id, p) in [
            ("exp", ("a", 0.0)),
            ("exp", ("b", 1.0)),
            ("power", ("m", -1.0)),
            ("laguerre_weight", ("n", 2.5)),
            ("laguerre_weight", ("n", 0.0)),
        ] {
            assert!(matches!(catalog_get(id, &params(&[p])), Err(SequenceError::ParamDomain(_))), "{id} {p:?}");
        }
    }

    #[test]
    fn erf_derivatives_follow_rodrigues() {
        let erf = get("erf", &[]);
        let x: f64 = 0.7;
        let g = (-x * x).exp() * FRAC_2_SQRT_PI;
        assert!((erf.derivative(1, x).unwrap() - g).abs() < 1e-15);
        assert!((erf.derivative(2, x).unwrap() + 2.0 * x * g).abs() < 1e-15);
        assert!((erf.derivative(3, x).unwrap() - (4.0 * x * x - 2.0) * g).abs() < 1e-15);
    }

    #[test]
    fn laguerre_weight_leibniz_matches_rodrigues() {
        for n in 1..=6u32 {
            for x in [0.3, 1.7, 4.0] {
                let leibniz = laguerre_weight_derivative(n, n, x);
                let rodrigues = specfun::gamma(n as f64 + 1.0).unwrap()
                    * specfun::laguerre(n, x).unwrap()
                    * (-x).exp();
                assert!((leibniz - rodrigues).abs() < 1e-12 * (1.0 + rodrigues.abs()), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn harmonic_moment_branches_agree_with_quadrature() {
        use crate::quadrature::{integrate_finite, QuadratureConfig};
        let cfg = QuadratureConfig { abs_tol: 0.0, rel_tol: 1e-14, ..QuadratureConfig::default() };
        for n in [0u32, 1, 3, 6] {
            for x in [0.0, 0.5, 3.0, 20.0, n as f64 + 39.0, n as f64 + 41.0, 120.0] {
                let q = integrate_finite(|t: f64| t.powi(n as i32) * (-x * t).exp(), 0.0, 1.0, &cfg).unwrap();
                let got = harmonic_moment(n, x);
                assert!((got - q.value).abs() <= 1e-12 * q.value.abs().max(1e-300) + 1e-300, "n={n} x={x}: {got} vs {}", q.value);
            }
        }
    }

    #[test]
    fn plain_presentation_for_geometric() {
        let geo = get("geometric", &[]);
        assert_eq!(geo.plain_phi(-0.3), Some(1.0));
        assert_eq!(get("exp", &[]).plain_phi(1.0), None);
        let shifted = shift_sequence(&geo, 2).unwrap();
        // Σ φ̃'(k)(-x)^k = F''(x) = 2/(1+x)^3 = Σ (k+1)(k+2)(-x)^k
        assert!((shifted.plain_phi(3.0).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn expression_pairs() {
        let pair = expression_pair(
            crate::expr::parse("1/(k+1)").unwrap(),
            crate::expr::parse("(1-exp(-x))/x").unwrap(),
            Params::new(),
            false,
            0.0,
        )
        .unwrap();
        assert_eq!(pair.phi(-0.5), 2.0);
        assert_eq!(pair.f_at_zero(), 1.0);
        assert!(pair.closed_form(0.0).is_nan());
        let v = eval_series(&pair, 1.0, 100).unwrap();
        assert!((v.value - pair.closed_form(1.0)).abs() < 1e-15);

        let bad = expression_pair(
            crate::expr::parse("1/k").unwrap(),
            crate::expr::parse("x").unwrap(),
            Params::new(),
            false,
            0.0,
        );
        assert!(bad.is_err());
    }
}
