use std::collections::BTreeMap;
use std::fmt;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ramanujan_cli::{fmt_g, OutputRecord};
use ramanujan_core::corpus::{builtin_cases, run_corpus};
use ramanujan_core::expr;
use ramanujan_core::quadrature::{QuadratureConfig, QuadratureError};
use ramanujan_core::sequences::{self, Params, SeriesPair};
use ramanujan_core::transforms::{self, IdentityReport, TransformError, DEFAULT_TOLERANCE};

/// Numerically verify master-theorem style integral identities.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on
/// invalid input. The environment variable RMT_DEFAULT_TOL overrides the
/// default identity tolerance for `verify`.
#[derive(Parser)]
#[command(name = "ramanujan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check one identity for a catalog pair or a user-defined pair.
    Verify(VerifyArgs),
    /// Run the built-in identity corpus.
    Corpus(CorpusArgs),
    /// Compare Gamma(s) phi(-s) near s = -m with its residue.
    Residue(ResidueArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Identity {
    Frullani,
    Lemma2,
    Rmt,
    Hardy,
}

impl Identity {
    fn name(self) -> &'static str {
        match self {
            Identity::Frullani => "frullani",
            Identity::Lemma2 => "lemma2",
            Identity::Rmt => "rmt",
            Identity::Hardy => "hardy",
        }
    }
}

#[derive(Args)]
struct PairArgs {
    /// Catalog entry (exp, power, erf, laguerre_weight, geometric, harmonic_shifted).
    #[arg(long, conflicts_with_all = ["phi", "closed_form"])]
    catalog: Option<String>,
    /// Parameter as name=value; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Coefficient sequence phi(k) as an expression in k.
    #[arg(long, requires = "closed_form")]
    phi: Option<String>,
    /// Generating function F(x) as an expression in x.
    #[arg(long = "closed-form", requires = "phi")]
    closed_form: Option<String>,
    /// Read --phi as the plain-series coefficient of (-x)^k.
    #[arg(long, requires = "phi")]
    plain: bool,
    /// Limit of F at infinity for user-defined pairs.
    #[arg(long = "f-inf", default_value_t = 0.0, requires = "phi")]
    f_inf: f64,
}

#[derive(Args)]
struct VerifyArgs {
    identity: Identity,
    #[command(flatten)]
    pair: PairArgs,
    /// Mellin exponent (rmt, hardy).
    #[arg(long)]
    s: Option<f64>,
    /// Derivative order (lemma2).
    #[arg(long)]
    n: Option<u32>,
    /// Frullani scale of the first term.
    #[arg(long)]
    alpha: Option<f64>,
    /// Frullani scale of the second term.
    #[arg(long)]
    beta: Option<f64>,
    /// Use finite differences for derivatives of user-defined pairs.
    #[arg(long = "fd-derivatives")]
    fd_derivatives: bool,
    /// Identity tolerance, absolute or relative.
    #[arg(long)]
    tol: Option<f64>,
    /// Emit a JSON line instead of the table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CorpusArgs {
    /// Only run cases whose name contains this substring.
    #[arg(long)]
    filter: Option<String>,
    /// Emit one JSON line per case instead of the table.
    #[arg(long)]
    json: bool,
    /// Multiply every case tolerance by this factor.
    #[arg(long = "tol-scale", default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Args)]
struct ResidueArgs {
    #[arg(long)]
    catalog: String,
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Pole index: s = -m.
    #[arg(long)]
    m: u32,
    /// Offset from the pole; the check is repeated at eps/10.
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[arg(long)]
    json: bool,
}

/// Invalid input, reported with exit status 2.
#[derive(Debug)]
struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn input(msg: impl Into<String>) -> InputError {
    InputError(msg.into())
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Corpus(args) => cmd_corpus(args),
        Command::Residue(args) => cmd_residue(args),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn parse_params(raw: &[String]) -> Result<Params, InputError> {
    let mut params = Params::new();
    for item in raw {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| input(format!("--param expects NAME=VALUE, got '{item}'")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| input(format!("--param {name}: '{value}' is not a number")))?;
        params.insert(name.trim().to_string(), value);
    }
    Ok(params)
}

fn parse_expr(flag: &str, source: &str) -> Result<expr::ExprNode, InputError> {
    expr::parse(source).map_err(|e| input(format!("{flag}: {e}")))
}

fn build_pair(args: &PairArgs, inputs: &mut BTreeMap<String, String>) -> Result<SeriesPair, InputError> {
    let params = parse_params(&args.params)?;
    for (k, v) in &params {
        inputs.insert(format!("param.{k}"), fmt_g(*v));
    }
    match (&args.catalog, &args.phi, &args.closed_form) {
        (Some(id), _, _) => {
            inputs.insert("catalog".into(), id.clone());
            sequences::catalog_get(id, &params).map_err(|e| input(format!("--catalog {id}: {e}")))
        }
        (None, Some(phi), Some(closed)) => {
            inputs.insert("phi".into(), phi.clone());
            inputs.insert("closed_form".into(), closed.clone());
            if args.plain {
                inputs.insert("plain".into(), "true".into());
            }
            if args.f_inf != 0.0 {
                inputs.insert("f_inf".into(), fmt_g(args.f_inf));
            }
            let phi_expr = parse_expr("--phi", phi)?;
            let closed_expr = parse_expr("--closed-form", closed)?;
            sequences::expression_pair(phi_expr, closed_expr, params, args.plain, args.f_inf)
                .map_err(|e| input(format!("--phi: {e}")))
        }
        _ => Err(input("either --catalog or both --phi and --closed-form are required")),
    }
}

fn tolerance(flag: Option<f64>) -> Result<f64, InputError> {
    let tol = match flag {
        Some(t) => t,
        None => match std::env::var("RMT_DEFAULT_TOL") {
            Ok(raw) => raw
                .trim()
                .parse()
                .map_err(|_| input(format!("RMT_DEFAULT_TOL: '{raw}' is not a number")))?,
            Err(_) => DEFAULT_TOLERANCE,
        },
    };
    if tol >= 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(input(format!("--tol must be a non-negative number, got {tol}")))
    }
}

fn require<T>(value: Option<T>, flag: &str, identity: Identity) -> Result<T, InputError> {
    value.ok_or_else(|| input(format!("{flag} is required for {}", identity.name())))
}

/// Input problems become exit status 2; numerical failures are verification
/// failures.
fn classify(flag: &str, err: TransformError) -> Result<String, InputError> {
    match err {
        TransformError::Quadrature(QuadratureError::Evaluation { .. })
        | TransformError::Quadrature(QuadratureError::Singularity { .. }) => Ok(err.to_string()),
        TransformError::Pole { reason, .. } => Err(input(format!("{flag}: {reason}"))),
        other => Err(input(format!("{flag}: {other}"))),
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<Outcome, InputError> {
    let tol = tolerance(args.tol)?;
    let identity = args.identity;
    let mut inputs = BTreeMap::new();
    inputs.insert("identity".to_string(), identity.name().to_string());
    inputs.insert("tol".to_string(), fmt_g(tol));
    let mut pair = build_pair(&args.pair, &mut inputs)?;
    let user_pair = args.pair.catalog.is_none();
    let cfg = QuadratureConfig::default();

    let result = match identity {
        Identity::Frullani => {
            let alpha = require(args.alpha, "--alpha", identity)?;
            let beta = require(args.beta, "--beta", identity)?;
            inputs.insert("alpha".into(), fmt_g(alpha));
            inputs.insert("beta".into(), fmt_g(beta));
            transforms::frullani(
                |x| pair.closed_form(x),
                pair.f_at_zero(),
                pair.f_at_infinity(),
                alpha,
                beta,
                &cfg,
            )
            .map_err(|e| ("--alpha/--beta", e))
        }
        Identity::Lemma2 => {
            let n = require(args.n, "--n", identity)?;
            inputs.insert("n".into(), n.to_string());
            if user_pair {
                if !args.fd_derivatives {
                    return Err(input("--fd-derivatives is required for lemma2 on a user-defined pair"));
                }
                inputs.insert("fd_derivatives".into(), "true".into());
                let closed = pair.clone();
                pair = pair.with_derivatives(6, move |order, x| {
                    let h = transforms::default_fd_step(order, x);
                    transforms::nth_derivative_fd(|t| closed.closed_form(t), x, order, h)
                        .map(|(v, _)| v)
                        .unwrap_or(f64::NAN)
                });
            }
            transforms::lemma2(&pair, n, &cfg).map_err(|e| ("--n", e))
        }
        Identity::Rmt => {
            let s = require(args.s, "--s", identity)?;
            inputs.insert("s".into(), fmt_g(s));
            let regime = if s.fract() == 0.0 { "integer" } else { "non-integer" };
            inputs.insert("regime".into(), regime.into());
            transforms::rmt(&pair, s, &cfg).map_err(|e| ("--s", e))
        }
        Identity::Hardy => {
            let s = require(args.s, "--s", identity)?;
            inputs.insert("s".into(), fmt_g(s));
            transforms::hardy(&pair, s, &cfg).map_err(|e| ("--s", e))
        }
    };

    let command = format!("verify {}", identity.name());
    let record = match result {
        Ok(report) => verify_record(&command, inputs, report.with_tolerance(tol)),
        Err((flag, err)) => {
            let reason = classify(flag, err)?;
            let mut record = OutputRecord::new(&command, inputs);
            record.warnings.push(reason);
            record
        }
    };
    if args.json {
        println!("{}", record.to_json());
    } else {
        print_verify_table(&record);
    }
    Ok(if record.passed { Outcome::Pass } else { Outcome::Fail })
}

fn verify_record(command: &str, inputs: BTreeMap<String, String>, report: IdentityReport) -> OutputRecord {
    let mut record = OutputRecord::new(command, inputs).values(
        report.lhs.value,
        report.lhs.error_estimate,
        report.rhs,
        report.abs_discrepancy,
    );
    record.passed = report.passed;
    record.evaluations = report.lhs.evaluations as u64;
    if !report.lhs.converged {
        record
            .warnings
            .push("quadrature did not reach its requested tolerance".into());
    }
    if report.lhs.error_estimate > report.tolerance_used && report.passed {
        record
            .warnings
            .push("quadrature error estimate exceeds the identity tolerance".into());
    }
    record
}

fn opt_g(v: Option<f64>) -> String {
    v.map(fmt_g).unwrap_or_else(|| "-".into())
}

fn status(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "FAIL"
    }
}

fn print_verify_table(record: &OutputRecord) {
    println!(
        "{:<16} {:>22} {:>22} {:>22} {:>22} {:>6}",
        "identity", "lhs", "lhs_error", "rhs", "discrepancy", "status"
    );
    println!(
        "{:<16} {:>22} {:>22} {:>22} {:>22} {:>6}",
        record.command.trim_start_matches("verify "),
        opt_g(record.lhs_value),
        opt_g(record.lhs_error),
        opt_g(record.rhs_value),
        opt_g(record.discrepancy),
        status(record.passed)
    );
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_corpus(args: CorpusArgs) -> Result<Outcome, InputError> {
    if !(args.tol_scale > 0.0 && args.tol_scale.is_finite()) {
        return Err(input(format!("--tol-scale must be positive, got {}", args.tol_scale)));
    }
    let cases: Vec<_> = builtin_cases()
        .into_iter()
        .filter(|c| args.filter.as_deref().map_or(true, |f| c.name.contains(f)))
        .map(|mut c| {
            c.tolerance *= args.tol_scale;
            c
        })
        .collect();
    let outcomes = run_corpus(&cases, &QuadratureConfig::default());

    if !args.json {
        println!(
            "{:<16} {:>22} {:>22} {:>22} {:>10} {:>6}",
            "case", "lhs", "exact", "discrepancy", "tolerance", "status"
        );
    }
    let mut passed = 0;
    for outcome in &outcomes {
        passed += outcome.passed as usize;
        let case = &outcome.case;
        let mut inputs = BTreeMap::new();
        inputs.insert("case".to_string(), case.name.clone());
        inputs.insert("kind".to_string(), case.kind.name().to_string());
        inputs.insert("catalog".to_string(), case.catalog_id.clone());
        inputs.insert("order".to_string(), fmt_g(case.kind.order()));
        inputs.insert("exact_value".to_string(), case.exact_value.clone());
        inputs.insert("tolerance".to_string(), fmt_g(case.tolerance));
        for (k, v) in &case.params {
            inputs.insert(format!("param.{k}"), fmt_g(*v));
        }
        let mut record = OutputRecord::new("corpus", inputs);
        if let Some(r) = &outcome.report {
            record = record.values(r.lhs.value, r.lhs.error_estimate, r.rhs, r.abs_discrepancy);
            record.evaluations = r.lhs.evaluations as u64;
        }
        if let Some(e) = &outcome.error {
            record.warnings.push(e.clone());
        }
        record.passed = outcome.passed;

        if args.json {
            println!("{}", record.to_json());
        } else if let Some(e) = &outcome.error {
            println!("{:<16} error: {e}", case.name);
        } else {
            println!(
                "{:<16} {:>22} {:>22} {:>22} {:>10} {:>6}",
                case.name,
                opt_g(record.lhs_value),
                opt_g(record.rhs_value),
                opt_g(record.discrepancy),
                fmt_g(case.tolerance),
                status(outcome.passed)
            );
        }
    }
    if !args.json {
        println!("{passed}/{} cases passed", outcomes.len());
    }
    Ok(if passed == outcomes.len() { Outcome::Pass } else { Outcome::Fail })
}

fn cmd_residue(args: ResidueArgs) -> Result<Outcome, InputError> {
    let params = parse_params(&args.params)?;
    let pair = sequences::catalog_get(&args.catalog, &params)
        .map_err(|e| input(format!("--catalog {}: {e}", args.catalog)))?;
    if pair.is_nonstandard() {
        return Err(input(format!(
            "--catalog {}: nonstandard pair (phi(0) = 0) has no master-theorem residues",
            args.catalog
        )));
    }
    if !(args.eps > 0.0 && args.eps <= 1e-2) {
        return Err(input(format!("--eps must lie in (0, 0.01], got {}", args.eps)));
    }

    let mut rows = Vec::new();
    for eps in [args.eps, args.eps / 10.0] {
        let (left, right) = transforms::residue_check(&pair, args.m, eps).map_err(|e| input(format!("--m: {e}")))?;
        rows.push((eps, left, right, (left - right).abs()));
    }
    let (coarse, fine) = (rows[0].3, rows[1].3);
    // Converging, or already at rounding level.
    let converging = fine <= coarse || fine <= 1e-12 * rows[1].2.abs().max(1.0);

    if args.json {
        for &(eps, left, right, diff) in &rows {
            let mut inputs = BTreeMap::new();
            inputs.insert("catalog".to_string(), args.catalog.clone());
            inputs.insert("m".to_string(), args.m.to_string());
            inputs.insert("eps".to_string(), fmt_g(eps));
            for (k, v) in &params {
                inputs.insert(format!("param.{k}"), fmt_g(*v));
            }
            let mut record = OutputRecord::new("residue", inputs).values(left, 0.0, right, diff);
            record.passed = converging;
            println!("{}", record.to_json());
        }
    } else {
        println!("{:>10} {:>22} {:>22} {:>22}", "eps", "left", "right", "|left-right|");
        for &(eps, left, right, diff) in &rows {
            println!("{:>10} {:>22} {:>22} {:>22}", fmt_g(eps), fmt_g(left), fmt_g(right), fmt_g(diff));
        }
    }
    Ok(if converging { Outcome::Pass } else { Outcome::Fail })
}
