//! Report formatting shared by the `ramanujan` binary and its tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Significant digits used for every printed or serialized number.
pub const SIGNIFICANT_DIGITS: usize = 15;

/// One machine-readable result line.
///
/// Keys serialize in declaration order: `command`, `inputs`, `lhs_value`,
/// `lhs_error`, `rhs_value`, `discrepancy`, `passed`, `evaluations`,
/// `warnings`. Non-finite numbers become `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub lhs_value: Option<f64>,
    pub lhs_error: Option<f64>,
    pub rhs_value: Option<f64>,
    pub discrepancy: Option<f64>,
    pub passed: bool,
    pub evaluations: u64,
    pub warnings: Vec<String>,
}

impl OutputRecord {
    pub fn new(command: impl Into<String>, inputs: BTreeMap<String, String>) -> Self {
        Self {
            command: command.into(),
            inputs,
            lhs_value: None,
            lhs_error: None,
            rhs_value: None,
            discrepancy: None,
            passed: false,
            evaluations: 0,
            warnings: Vec::new(),
        }
    }

    pub fn values(mut self, lhs: f64, lhs_error: f64, rhs: f64, discrepancy: f64) -> Self {
        self.lhs_value = json_number(lhs);
        self.lhs_error = json_number(lhs_error);
        self.rhs_value = json_number(rhs);
        self.discrepancy = json_number(discrepancy);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records contain only strings, numbers and booleans")
    }
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_significant(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

fn json_number(v: f64) -> Option<f64> {
    v.is_finite().then(|| round_significant(v))
}

/// Formats like C's `%.15g`.
pub fn fmt_g(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIGNIFICANT_DIGITS as i32 {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
