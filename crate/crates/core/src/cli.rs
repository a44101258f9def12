//! Command implementations behind the `quadcert` binary.
//!
//! Every command returns a [`Report`]; the binary prints it as JSON and maps
//! its status to the exit code.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::composite::{integrate_certified_with, CompositeError, CompositeOptions, LambdaPolicy};
use crate::exec::Execution;
use crate::functions::{Builtin, FunctionSpec, DEFAULT_PROBE_SAMPLES};
use crate::means::{mean_value, prop1_gap, prop2_gaps, prop3_gap, MeanKind};
use crate::oracle::{
    bounds_sweep, coefficient_sweep, comparison_slack, identity_sweep, rule_gap, DEFAULT_TOL,
    SWEEP_EXPONENTS,
};
use crate::rule::{
    bound_first_order, bound_power_mean, EndpointCurvature, Interval, LambdaRule, PowerExponent,
};

/// Identity residual threshold used by `verify --suite identity`.
pub const IDENTITY_THRESHOLD: f64 = 1e-10;

pub const CSV_HEADER: [&str; 5] = [
    "lambda",
    "gap",
    "bound_first_order",
    "bound_power_mean",
    "tightness",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Violated,
    Unconverged,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Violated | Status::Unconverged => 1,
            Status::Error => 2,
        }
    }
}

/// Top-level fields serialize in declaration order; keys inside `inputs` and
/// `results` are sorted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub status: Status,
}

impl Report {
    fn new(command: &str, inputs: Value, results: Value, status: Status) -> Self {
        Report {
            command: command.to_string(),
            inputs,
            results,
            status,
        }
    }

    fn error(command: &str, inputs: Value, message: impl ToString) -> Self {
        Self::new(
            command,
            inputs,
            json!({ "message": message.to_string() }),
            Status::Error,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are finite or null")
    }
}

#[derive(Debug, Parser)]
#[command(name = "quadcert", version, about = "Certified three-point quadrature")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Adaptive integration with a certified error bound
    Integrate(IntegrateArgs),
    /// Run an oracle verification suite over the built-in corpus
    Verify(VerifyArgs),
    /// Rule gap and bounds over a uniform λ grid
    Sweep(SweepArgs),
    /// Special means and the three mean inequalities
    Means(MeansArgs),
}

impl Command {
    pub fn run(&self) -> Report {
        match self {
            Command::Integrate(a) => cmd_integrate(a),
            Command::Verify(a) => cmd_verify(a),
            Command::Sweep(a) => cmd_sweep(a),
            Command::Means(a) => cmd_means(a),
        }
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct FunctionArgs {
    /// Integrand expression in x, e.g. "x^4" or "exp(x) - x"
    #[arg(
        long = "f",
        required_unless_present = "builtin",
        conflicts_with = "builtin"
    )]
    pub f: Option<String>,
    /// Catalog function: power:N, reciprocal, exp, ln, monomial-sum:c0,c1,...
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub b: f64,
}

impl FunctionArgs {
    fn resolve(&self) -> Result<(FunctionSpec, Interval), String> {
        let iv = Interval::new(self.a, self.b).map_err(|e| e.to_string())?;
        let spec = match (&self.f, &self.builtin) {
            (Some(text), _) => FunctionSpec::parse(text).map_err(|e| e.to_string())?,
            (None, Some(name)) => {
                let b = Builtin::parse(name).map_err(|e| e.to_string())?;
                b.check_domain(iv).map_err(|e| e.to_string())?;
                FunctionSpec::from_builtin(b)
            }
            (None, None) => return Err("one of --f or --builtin is required".into()),
        };
        Ok((spec, iv))
    }
}

/// `auto` or a number in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum LambdaChoice {
    #[serde(serialize_with = "auto_str")]
    Auto,
    Value(f64),
}

fn auto_str<S: serde::Serializer>(s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str("auto")
}

impl std::str::FromStr for LambdaChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(LambdaChoice::Auto);
        }
        s.trim()
            .parse::<f64>()
            .map(LambdaChoice::Value)
            .map_err(|_| format!("expected a number or 'auto', got {s:?}"))
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct IntegrateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub function: FunctionArgs,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Rule parameter in [0, 1], or "auto" for the per-cell minimizer [default: 1/3]
    #[arg(long)]
    pub lambda: Option<LambdaChoice>,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Skip the convexity probe of |f''|
    #[arg(long)]
    pub assume_convex: bool,
    /// Include the per-cell records in the report
    #[arg(long)]
    pub cells: bool,
}

pub fn cmd_integrate(args: &IntegrateArgs) -> Report {
    let inputs = json!(args);
    match run_integrate(args) {
        Ok((results, status)) => Report::new("integrate", inputs, results, status),
        Err(msg) => Report::error("integrate", inputs, msg),
    }
}

fn run_integrate(args: &IntegrateArgs) -> Result<(Value, Status), String> {
    let (spec, iv) = args.function.resolve()?;
    let q = PowerExponent::new(args.q).map_err(|e| e.to_string())?;
    let policy = match args.lambda {
        None => LambdaPolicy::fixed(LambdaRule::SIMPSON),
        Some(LambdaChoice::Auto) => LambdaPolicy::PerCellBest,
        Some(LambdaChoice::Value(l)) => {
            LambdaPolicy::fixed(LambdaRule::new(l).map_err(|e| e.to_string())?)
        }
    };
    let opts = CompositeOptions {
        assume_convex: args.assume_convex,
        ..CompositeOptions::default()
    };
    let cert =
        integrate_certified_with(&spec, iv, args.tol, policy, q, &opts).map_err(|e| match e {
            CompositeError::NotConvex { .. } => format!("{e} (pass --assume-convex to override)"),
            other => other.to_string(),
        })?;
    let mut results = json!({
        "function": spec.label(),
        "value": cert.value,
        "total_bound": cert.total_bound,
        "tol": cert.tol,
        "converged": cert.converged,
        "cell_count": cert.cell_count(),
        "evaluations": cert.evaluations,
        "policy": cert.policy,
        "q": cert.q,
    });
    if args.cells {
        results["cells"] = json!(cert.cells);
    }
    let status = if cert.converged {
        Status::Ok
    } else {
        Status::Unconverged
    };
    Ok((results, status))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identity,
    Bounds,
    Coefficients,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Run the sweep on one thread
    #[arg(long)]
    pub sequential: bool,
}

pub fn cmd_verify(args: &VerifyArgs) -> Report {
    let inputs = json!({ "suite": args.suite, "tol": args.tol });
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let outcome = match args.suite {
        Suite::Identity => identity_sweep(exec, args.tol, IDENTITY_THRESHOLD).map(|cases| {
            let max = cases.iter().fold(0.0_f64, |m, c| m.max(c.residual.abs()));
            let failures = cases.iter().filter(|c| !c.pass).count();
            (
                json!({ "threshold": IDENTITY_THRESHOLD, "max_abs_residual": max, "cases": cases }),
                failures,
            )
        }),
        Suite::Bounds => bounds_sweep(exec, &SWEEP_EXPONENTS, args.tol).map(|cases| {
            let failures = cases.iter().filter(|c| !c.pass).count();
            (
                json!({ "exponents": SWEEP_EXPONENTS, "cases": cases }),
                failures,
            )
        }),
        Suite::Coefficients => {
            coefficient_sweep(exec, PowerExponent::ONE, args.tol).map(|reports| {
                let max = reports.iter().fold(0.0_f64, |m, r| m.max(r.max_deviation));
                let failures = reports.iter().filter(|r| !r.pass).count();
                (json!({ "max_deviation": max, "cases": reports }), failures)
            })
        }
    };
    match outcome {
        Ok((mut results, failures)) => {
            results["failures"] = json!(failures);
            let status = if failures == 0 {
                Status::Ok
            } else {
                Status::Violated
            };
            Report::new("verify", inputs, results, status)
        }
        Err(e) => Report::error("verify", inputs, e),
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub function: FunctionArgs,
    /// Number of λ values, spaced uniformly on [0, 1]
    #[arg(long, default_value_t = 11)]
    pub lambda_grid: usize,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub assume_convex: bool,
    /// Write the rows as CSV to this path
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// One sweep row; field order is the CSV column order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    /// `mean − Q_λ`
    pub gap: f64,
    pub bound_first_order: f64,
    pub bound_power_mean: f64,
    /// `|gap| / bound_first_order`, absent when the bound is zero.
    pub tightness: Option<f64>,
}

pub fn sweep_rows(
    spec: &FunctionSpec,
    iv: Interval,
    n: usize,
    q: PowerExponent,
    tol: f64,
) -> Result<Vec<SweepRow>, String> {
    if n < 2 {
        return Err(format!("--lambda-grid needs at least 2 points, got {n}"));
    }
    let curv = EndpointCurvature::new(
        spec.try_abs_d2(iv.a()).map_err(|e| e.to_string())?,
        spec.try_abs_d2(iv.b()).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    (0..n)
        .map(|i| {
            let lambda = if i + 1 == n {
                1.0
            } else {
                i as f64 / (n - 1) as f64
            };
            let rule = LambdaRule::new(lambda).map_err(|e| e.to_string())?;
            let gap = rule_gap(&spec.integrand, iv, rule, tol).map_err(|e| e.to_string())?;
            let first = bound_first_order(iv.width(), curv, rule)
                .map_err(|e| e.to_string())?
                .value;
            let power = bound_power_mean(iv.width(), curv, q, rule)
                .map_err(|e| e.to_string())?
                .value;
            let tightness = (first > 0.0).then(|| gap.abs() / first);
            Ok(SweepRow {
                lambda,
                gap,
                bound_first_order: first,
                bound_power_mean: power,
                tightness,
            })
        })
        .collect()
}

pub fn write_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<(), String> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| e.to_string())?;
    }
    if rows.is_empty() {
        w.write_record(CSV_HEADER).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

pub fn cmd_sweep(args: &SweepArgs) -> Report {
    let inputs = json!(args);
    match run_sweep(args) {
        Ok((results, status)) => Report::new("sweep", inputs, results, status),
        Err(msg) => Report::error("sweep", inputs, msg),
    }
}

fn run_sweep(args: &SweepArgs) -> Result<(Value, Status), String> {
    let (spec, iv) = args.function.resolve()?;
    let q = PowerExponent::new(args.q).map_err(|e| e.to_string())?;
    let declared = spec.declared_convex_abs_d2 == Some(true);
    if !(args.assume_convex || declared) {
        let convex = spec
            .probe_convexity(iv, DEFAULT_PROBE_SAMPLES)
            .map_err(|e| e.to_string())?;
        if !convex {
            let e = CompositeError::NotConvex {
                a: iv.a(),
                b: iv.b(),
            };
            return Err(format!("{e} (pass --assume-convex to override)"));
        }
    }
    let rows = sweep_rows(&spec, iv, args.lambda_grid, q, args.tol)?;
    let violated = rows.iter().any(|r| {
        let slack = comparison_slack(args.tol, r.gap);
        r.gap.abs() > r.bound_first_order + slack || r.gap.abs() > r.bound_power_mean + slack
    });
    if let Some(path) = &args.csv {
        let file = std::fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        write_csv(&rows, file)?;
    }
    let results = json!({ "function": spec.label(), "columns": CSV_HEADER, "rows": rows });
    Ok((
        results,
        if violated {
            Status::Violated
        } else {
            Status::Ok
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PropChoice {
    #[value(name = "1")]
    #[serde(rename = "1")]
    One,
    #[value(name = "2")]
    #[serde(rename = "2")]
    Two,
    #[value(name = "3")]
    #[serde(rename = "3")]
    Three,
    All,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct MeansArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    /// Power for the x^n inequality (integer > 2)
    #[arg(long, default_value_t = 4)]
    pub n: i64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, value_enum, default_value = "all")]
    pub prop: PropChoice,
}

pub fn cmd_means(args: &MeansArgs) -> Report {
    let inputs = json!(args);
    match run_means(args) {
        Ok((results, status)) => Report::new("means", inputs, results, status),
        Err(msg) => Report::error("means", inputs, msg),
    }
}

fn run_means(args: &MeansArgs) -> Result<(Value, Status), String> {
    let (a, b) = (args.a, args.b);
    let q = PowerExponent::new(args.q).map_err(|e| e.to_string())?;
    let mean = |k| mean_value(k, a, b).map_err(|e| e.to_string());
    let mut results = json!({
        "means": {
            "arithmetic": mean(MeanKind::Arithmetic)?,
            "geometric": mean(MeanKind::Geometric)?,
            "harmonic": mean(MeanKind::Harmonic)?,
            "logarithmic": mean(MeanKind::Logarithmic)?,
            "identric": mean(MeanKind::Identric)?,
        }
    });
    let want = |p| args.prop == p || args.prop == PropChoice::All;
    let mut holds = true;
    if want(PropChoice::One) {
        let p = prop1_gap(args.n, a, b).map_err(|e| e.to_string())?;
        holds &= p.holds;
        results["prop1"] = json!(p);
    }
    if want(PropChoice::Two) {
        let p = prop2_gaps(a, b, q).map_err(|e| e.to_string())?;
        holds &= p.holds;
        results["prop2"] = json!(p);
    }
    if want(PropChoice::Three) {
        let p = prop3_gap(a, b, q).map_err(|e| e.to_string())?;
        holds &= p.holds;
        results["prop3"] = json!(p);
    }
    Ok((results, if holds { Status::Ok } else { Status::Violated }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("quadcert").chain(args.iter().copied()))
            .unwrap()
            .command
    }

    #[test]
    fn status_codes() {
        assert_eq!(Status::Ok.exit_code(), 0);
        assert_eq!(Status::Violated.exit_code(), 1);
        assert_eq!(Status::Unconverged.exit_code(), 1);
        assert_eq!(Status::Error.exit_code(), 2);
    }

    #[test]
    fn lambda_choice_parses() {
        assert_eq!("auto".parse::<LambdaChoice>().unwrap(), LambdaChoice::Auto);
        assert_eq!(
            "0.25".parse::<LambdaChoice>().unwrap(),
            LambdaChoice::Value(0.25)
        );
        assert!("third".parse::<LambdaChoice>().is_err());
    }

    #[test]
    fn function_flags_are_exclusive() {
        let r = Cli::try_parse_from([
            "quadcert",
            "integrate",
            "--f",
            "x",
            "--builtin",
            "exp",
            "--a",
            "0",
            "--b",
            "1",
        ]);
        assert!(r.is_err());
        let r = Cli::try_parse_from(["quadcert", "integrate", "--a", "0", "--b", "1"]);
        assert!(r.is_err());
    }

    #[test]
    fn integrate_linear_is_exact() {
        let rep = parse(&[
            "integrate",
            "--f",
            "x",
            "--a",
            "0",
            "--b",
            "5",
            "--tol",
            "1e-12",
            "--lambda",
            "1",
        ])
        .run();
        assert_eq!(rep.status, Status::Ok);
        assert_eq!(rep.results["value"].as_f64().unwrap(), 12.5);
        assert_eq!(rep.results["total_bound"].as_f64().unwrap(), 0.0);
    }

    #[test]
    fn negative_endpoints_parse() {
        let rep = parse(&["integrate", "--f", "x^2", "--a", "-1", "--b", "1"]).run();
        assert_eq!(rep.status, Status::Ok);
        assert!((rep.results["value"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn non_convex_is_an_error_unless_overridden() {
        let rep = parse(&["integrate", "--f", "sin(x)", "--a", "0", "--b", "3"]).run();
        assert_eq!(rep.status, Status::Error);
        assert!(rep.results["message"]
            .as_str()
            .unwrap()
            .contains("convexity of |f''| not established"));
        let rep = parse(&[
            "integrate",
            "--f",
            "sin(x)",
            "--a",
            "0",
            "--b",
            "3",
            "--assume-convex",
        ])
        .run();
        assert_ne!(rep.status, Status::Error);
    }

    #[test]
    fn csv_header_and_empty_tightness() {
        let spec = FunctionSpec::parse("2*x + 1").unwrap();
        let iv = Interval::new(0.0, 1.0).unwrap();
        let rows = sweep_rows(&spec, iv, 3, PowerExponent::ONE, 1e-12).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        for line in lines {
            assert!(line.ends_with(','), "{line}");
        }
    }

    #[test]
    fn means_spot_value() {
        let rep = parse(&["means", "--a", "1", "--b", "2", "--n", "4", "--prop", "1"]).run();
        assert_eq!(rep.status, Status::Ok);
        let gap = rep.results["prop1"]["gap"].as_f64().unwrap();
        assert!((gap - 1.0 / 120.0).abs() < 1e-12);
        assert!(rep.results["prop1"]["bound_printed"].is_f64());
        assert!(rep.results.get("prop2").is_none());
    }
}
