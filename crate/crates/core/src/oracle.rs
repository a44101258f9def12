//! Brute-force numerical reference for the rule-gap identity, the bounds and
//! the closed-form moment coefficients.
//!
//! Nothing here is a certificate. The reference integrator is adaptive
//! Gauss-Legendre with an error estimate taken from the difference between a
//! panel and its two halves. Kernel integrals are split at the kernel's roots
//! and at `t = 1/2` so every panel sees a smooth integrand.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::rule::{
    abs_kernel_mass, bound_first_order, bound_power_mean, kernel_k, moment_coefficients,
    rule_value, EndpointCurvature, Interval, LambdaRule, PowerExponent, RuleError,
};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_EVAL_BUDGET: usize = 1_000_000;
pub const BUDGET_ENV_VAR: &str = "QUADCERT_EVAL_BUDGET";

/// Evaluation budget, overridable through `QUADCERT_EVAL_BUDGET`.
pub fn default_budget() -> usize {
    static BUDGET: OnceLock<usize> = OnceLock::new();
    *BUDGET.get_or_init(|| {
        std::env::var(BUDGET_ENV_VAR)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&b| b > 0)
            .unwrap_or(DEFAULT_EVAL_BUDGET)
    })
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type IntegralFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `f`, optionally `f″` and a closed-form `∫ₐᵇ f`.
#[derive(Clone)]
pub struct IntegrandSpec {
    f: RealFn,
    d2: Option<RealFn>,
    exact_integral: Option<IntegralFn>,
    label: String,
}

impl fmt::Debug for IntegrandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegrandSpec")
            .field("label", &self.label)
            .field("d2", &self.d2.is_some())
            .field("exact_integral", &self.exact_integral.is_some())
            .finish()
    }
}

impl IntegrandSpec {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        IntegrandSpec {
            f: Arc::new(f),
            d2: None,
            exact_integral: None,
            label: label.into(),
        }
    }

    pub fn with_d2(mut self, d2: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d2 = Some(Arc::new(d2));
        self
    }

    pub fn with_exact_integral(
        mut self,
        int: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.exact_integral = Some(Arc::new(int));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn f(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn d2(&self, x: f64) -> Option<f64> {
        self.d2.as_ref().map(|g| g(x))
    }

    pub fn has_d2(&self) -> bool {
        self.d2.is_some()
    }

    pub fn exact_integral(&self, a: f64, b: f64) -> Option<f64> {
        self.exact_integral.as_ref().map(|g| g(a, b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RefResult {
    pub value: f64,
    pub est_error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OracleError {
    #[error("tolerance must be finite and positive, got {0}")]
    InvalidTolerance(f64),
    #[error("evaluation budget exhausted; best estimate {} (est. error {})", best.value, best.est_error)]
    BudgetExhausted { best: RefResult },
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("integrand {0:?} has no second derivative")]
    MissingSecondDerivative(String),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

// 7-point Gauss-Legendre on [-1, 1].
const GL_NODES: [f64; 4] = [
    0.0,
    0.405_845_151_377_397_2,
    0.741_531_185_599_394_4,
    0.949_107_912_342_758_5,
];
const GL_WEIGHTS: [f64; 4] = [
    0.417_959_183_673_469_4,
    0.381_830_050_505_118_9,
    0.279_705_391_489_276_7,
    0.129_484_966_168_869_7,
];
const GL_POINTS: usize = 7;

fn gauss7<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<f64, OracleError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut sum = 0.0;
    for (i, (&x, &w)) in GL_NODES.iter().zip(GL_WEIGHTS.iter()).enumerate() {
        let pts: &[f64] = if i == 0 { &[0.0] } else { &[-x, x] };
        for &s in pts {
            let xi = c + h * s;
            let v = f(xi);
            if !v.is_finite() {
                return Err(OracleError::NonFinite { x: xi });
            }
            sum += w * v;
        }
    }
    Ok(h * sum)
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    err: f64,
    seq: usize,
}

impl Panel {
    fn fine(&self) -> f64 {
        self.left + self.right
    }
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
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Globally adaptive bisection of `[a, b]` until the summed panel estimates
/// fall below `tol`.
pub fn integrate_fn<F>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    budget: usize,
) -> Result<RefResult, OracleError>
where
    F: Fn(f64) -> f64,
{
    if !(tol.is_finite() && tol > 0.0) {
        return Err(OracleError::InvalidTolerance(tol));
    }
    if a == b {
        return Ok(RefResult {
            value: 0.0,
            est_error: 0.0,
            evaluations: 0,
        });
    }
    let mut evaluations = 0;
    let mut seq = 0;
    let mut make = |a: f64, b: f64, coarse: f64, evals: &mut usize| -> Result<Panel, OracleError> {
        let m = 0.5 * (a + b);
        let left = gauss7(&f, a, m)?;
        let right = gauss7(&f, m, b)?;
        *evals += 2 * GL_POINTS;
        seq += 1;
        Ok(Panel {
            a,
            b,
            left,
            right,
            err: (left + right - coarse).abs(),
            seq,
        })
    };

    let whole = gauss7(&f, a, b)?;
    evaluations += GL_POINTS;
    let first = make(a, b, whole, &mut evaluations)?;
    let mut total_err = first.err;
    let mut active = BinaryHeap::from([first]);
    let mut settled: Vec<Panel> = Vec::new();

    let finish = |active: &BinaryHeap<Panel>, settled: &[Panel], evaluations: usize| {
        let mut all: Vec<&Panel> = active.iter().chain(settled.iter()).collect();
        all.sort_by(|p, q| p.a.total_cmp(&q.a));
        RefResult {
            value: all.iter().map(|p| p.fine()).sum(),
            est_error: all.iter().map(|p| p.err).sum(),
            evaluations,
        }
    };

    while total_err > tol {
        let Some(worst) = active.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        let noise = 64.0 * f64::EPSILON * (worst.left.abs() + worst.right.abs());
        if worst.err <= noise || m <= worst.a || m >= worst.b {
            // Rounding-limited; splitting cannot improve it.
            settled.push(worst);
            continue;
        }
        if evaluations + 4 * GL_POINTS > budget {
            active.push(worst);
            return Err(OracleError::BudgetExhausted {
                best: finish(&active, &settled, evaluations),
            });
        }
        let l = make(worst.a, m, worst.left, &mut evaluations)?;
        let r = make(m, worst.b, worst.right, &mut evaluations)?;
        total_err += l.err + r.err - worst.err;
        active.push(l);
        active.push(r);
        if total_err <= tol {
            // Drift guard: recompute from scratch before stopping.
            total_err = active.iter().chain(settled.iter()).map(|p| p.err).sum();
        }
    }
    Ok(finish(&active, &settled, evaluations))
}

pub fn reference_integral(
    spec: &IntegrandSpec,
    iv: Interval,
    tol: f64,
) -> Result<RefResult, OracleError> {
    integrate_fn(|x| spec.f(x), iv.a(), iv.b(), tol, default_budget())
}

fn interval_mean(spec: &IntegrandSpec, iv: Interval, tol: f64) -> Result<f64, OracleError> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(OracleError::InvalidTolerance(tol));
    }
    let integral = match spec.exact_integral(iv.a(), iv.b()) {
        Some(v) => v,
        None => reference_integral(spec, iv, tol * iv.width())?.value,
    };
    Ok(integral / iv.width())
}

fn finite_at(spec: &IntegrandSpec, x: f64) -> Result<f64, OracleError> {
    let v = spec.f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(OracleError::NonFinite { x })
    }
}

/// `mean − Q_λ` on `iv`.
pub fn rule_gap(
    spec: &IntegrandSpec,
    iv: Interval,
    rule: LambdaRule,
    tol: f64,
) -> Result<f64, OracleError> {
    let mean = interval_mean(spec, iv, tol)?;
    let fa = finite_at(spec, iv.a())?;
    let fm = finite_at(spec, iv.midpoint())?;
    let fb = finite_at(spec, iv.b())?;
    Ok(mean - rule_value(fa, fm, fb, rule))
}

/// `{0, λ, 1/2, 1−λ, 1}` sorted without duplicates.
fn kernel_breakpoints(rule: LambdaRule) -> Vec<f64> {
    let l = rule.lambda();
    let mut pts = vec![0.0, l, 0.5, 1.0 - l, 1.0];
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn kernel_integral<F>(rule: LambdaRule, tol: f64, g: F) -> Result<f64, OracleError>
where
    F: Fn(f64) -> f64,
{
    let pts = kernel_breakpoints(rule);
    let panel_tol = tol / (pts.len() - 1) as f64;
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += integrate_fn(&g, w[0], w[1], panel_tol, default_budget())?.value;
    }
    Ok(total)
}

fn second_derivative(spec: &IntegrandSpec) -> Result<&RealFn, OracleError> {
    spec.d2
        .as_ref()
        .ok_or_else(|| OracleError::MissingSecondDerivative(spec.label.clone()))
}

/// `(b−a)² ∫₀¹ k(t) f″(ta + (1−t)b) dt`
pub fn identity_rhs(
    spec: &IntegrandSpec,
    iv: Interval,
    rule: LambdaRule,
    tol: f64,
) -> Result<f64, OracleError> {
    let d2 = second_derivative(spec)?;
    let w2 = iv.width() * iv.width();
    let inner = kernel_integral(rule, tol / w2, |t| {
        kernel_k(t.clamp(0.0, 1.0), rule).unwrap_or(f64::NAN) * d2(iv.point(t))
    })?;
    Ok(w2 * inner)
}

/// Rule gap minus the kernel side of the identity; zero up to quadrature error.
pub fn identity_residual(
    spec: &IntegrandSpec,
    iv: Interval,
    rule: LambdaRule,
    tol: f64,
) -> Result<f64, OracleError> {
    Ok(rule_gap(spec, iv, rule, tol)? - identity_rhs(spec, iv, rule, tol)?)
}

/// `(b−a)² ∫₀¹ |k(t)| |f″(ta + (1−t)b)| dt`, the quantity both bounds dominate.
pub fn kernel_bound_oracle(
    spec: &IntegrandSpec,
    iv: Interval,
    rule: LambdaRule,
    tol: f64,
) -> Result<f64, OracleError> {
    let d2 = second_derivative(spec)?;
    let w2 = iv.width() * iv.width();
    let inner = kernel_integral(rule, tol / w2, |t| {
        kernel_k(t.clamp(0.0, 1.0), rule).unwrap_or(f64::NAN).abs() * d2(iv.point(t)).abs()
    })?;
    Ok(w2 * inner)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientCheck {
    pub name: &'static str,
    pub closed_form: f64,
    pub numeric: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientReport {
    pub lambda: f64,
    pub q: f64,
    pub checks: Vec<CoefficientCheck>,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Integrates every half-interval moment numerically and compares it with
/// the closed forms in [`crate::rule`].
pub fn verify_coefficients(
    rule: LambdaRule,
    q: PowerExponent,
    tol: f64,
) -> Result<CoefficientReport, OracleError> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(OracleError::InvalidTolerance(tol));
    }
    let l = rule.lambda();
    let left = move |t: f64| (t * (t - l)).abs();
    let right = move |t: f64| ((1.0 - t) * (1.0 - l - t)).abs();
    let inner_tol = tol / 16.0;
    // Only the half that the weight lives on contributes.
    let half = |g: &dyn Fn(f64) -> f64, lower: bool| -> Result<f64, OracleError> {
        kernel_integral(rule, inner_tol, |t| {
            let on = if lower { t <= 0.5 } else { t >= 0.5 };
            if on {
                g(t)
            } else {
                0.0
            }
        })
    };
    let lo_panels = |g: &dyn Fn(f64) -> f64| half(g, true);
    let hi_panels = |g: &dyn Fn(f64) -> f64| half(g, false);

    let c = moment_coefficients(rule);
    let mass = abs_kernel_mass(rule);
    let n_a1 = lo_panels(&|t| left(t) * t)?;
    let n_b1 = lo_panels(&|t| left(t) * (1.0 - t))?;
    let n_a2 = hi_panels(&|t| right(t) * t)?;
    let n_b2 = hi_panels(&|t| right(t) * (1.0 - t))?;
    let n_mass_left = lo_panels(&left)?;
    let n_mass_right = hi_panels(&right)?;
    let exponent = 1.0 - 1.0 / q.get();

    let check = |name, closed_form: f64, numeric: f64| CoefficientCheck {
        name,
        closed_form,
        numeric,
        deviation: (closed_form - numeric).abs(),
    };
    let checks = vec![
        check("a1", c.a1, n_a1),
        check("b1", c.b1, n_b1),
        check("a2", c.a2, n_a2),
        check("b2", c.b2, n_b2),
        check("mass_left", mass, n_mass_left),
        check("mass_right", mass, n_mass_right),
        check(
            "mass_power",
            mass.powf(exponent),
            n_mass_left.powf(exponent),
        ),
    ];
    let max_deviation = checks.iter().fold(0.0_f64, |m, c| m.max(c.deviation));
    Ok(CoefficientReport {
        lambda: l,
        q: q.get(),
        checks,
        max_deviation,
        pass: max_deviation < tol,
    })
}

/// One member of the verification corpus.
#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub spec: IntegrandSpec,
    pub iv: Interval,
}

/// `x², x³, x⁴, x⁵` and `exp` on `[0, 1]`, `1/x` and `−ln x` on `[1, 2]`.
/// Every member is convex with convex `|f″|` on its interval.
pub fn corpus() -> Vec<CorpusEntry> {
    let unit = Interval::new(0.0, 1.0).expect("valid");
    let one_two = Interval::new(1.0, 2.0).expect("valid");
    let power = |n: i32| {
        let nf = n as f64;
        IntegrandSpec::new(format!("x^{n}"), move |x| x.powi(n))
            .with_d2(move |x| nf * (nf - 1.0) * x.powi(n - 2))
            .with_exact_integral(move |a, b| (b.powi(n + 1) - a.powi(n + 1)) / (nf + 1.0))
    };
    vec![
        CorpusEntry {
            spec: power(2),
            iv: unit,
        },
        CorpusEntry {
            spec: power(3),
            iv: unit,
        },
        CorpusEntry {
            spec: power(4),
            iv: unit,
        },
        CorpusEntry {
            spec: power(5),
            iv: unit,
        },
        CorpusEntry {
            spec: IntegrandSpec::new("1/x", |x| 1.0 / x)
                .with_d2(|x| 2.0 / (x * x * x))
                .with_exact_integral(|a, b| (b / a).ln()),
            iv: one_two,
        },
        CorpusEntry {
            spec: IntegrandSpec::new("exp(x)", f64::exp)
                .with_d2(f64::exp)
                .with_exact_integral(|a, b| b.exp() - a.exp()),
            iv: unit,
        },
        CorpusEntry {
            spec: IntegrandSpec::new("-ln(x)", |x| -x.ln())
                .with_d2(|x| 1.0 / (x * x))
                .with_exact_integral(|a, b| (a * a.ln() - a) - (b * b.ln() - b)),
            iv: one_two,
        },
    ]
}

/// `λ ∈ {0, 0.1, …, 1.0}`.
pub fn lambda_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

pub const SWEEP_EXPONENTS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, 5.0];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCase {
    pub function: String,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub gap: f64,
    pub rhs: f64,
    pub residual: f64,
    pub pass: bool,
}

/// Identity residuals over corpus × λ grid, in corpus order.
pub fn identity_sweep(
    exec: Execution,
    tol: f64,
    threshold: f64,
) -> Result<Vec<IdentityCase>, OracleError> {
    let entries = corpus();
    let lambdas = lambda_grid();
    let jobs: Vec<(usize, f64)> = (0..entries.len())
        .flat_map(|i| lambdas.iter().map(move |&l| (i, l)))
        .collect();
    exec.map(&jobs, |&(i, l)| {
        let e = &entries[i];
        let rule = LambdaRule::new(l)?;
        let gap = rule_gap(&e.spec, e.iv, rule, tol)?;
        let rhs = identity_rhs(&e.spec, e.iv, rule, tol)?;
        let residual = gap - rhs;
        Ok(IdentityCase {
            function: e.spec.label().to_string(),
            a: e.iv.a(),
            b: e.iv.b(),
            lambda: l,
            gap,
            rhs,
            residual,
            pass: residual.abs() < threshold,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerMeanValue {
    pub q: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsCase {
    pub function: String,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub abs_gap: f64,
    pub kernel_bound: f64,
    pub first_order: f64,
    pub power_mean: Vec<PowerMeanValue>,
    /// `|gap| ≤ kernel_bound ≤ first_order`
    pub sandwich_holds: bool,
    pub pass: bool,
}

/// Slack for comparing two oracle-derived quantities.
pub fn comparison_slack(tol: f64, reference: f64) -> f64 {
    10.0 * tol + 1e-12 * reference.abs()
}

/// Checks the bound chain on every corpus entry and λ in the grid.
pub fn bounds_sweep(
    exec: Execution,
    exponents: &[f64],
    tol: f64,
) -> Result<Vec<BoundsCase>, OracleError> {
    let entries = corpus();
    let lambdas = lambda_grid();
    let exps: Vec<PowerExponent> = exponents
        .iter()
        .map(|&q| PowerExponent::new(q))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, f64)> = (0..entries.len())
        .flat_map(|i| lambdas.iter().map(move |&l| (i, l)))
        .collect();
    exec.map(&jobs, |&(i, l)| {
        let e = &entries[i];
        let rule = LambdaRule::new(l)?;
        let abs_gap = rule_gap(&e.spec, e.iv, rule, tol)?.abs();
        let kernel_bound = kernel_bound_oracle(&e.spec, e.iv, rule, tol)?;
        let curv = endpoint_curvature(&e.spec, e.iv)?;
        let first_order = bound_first_order(e.iv.width(), curv, rule)?.value;
        let slack = comparison_slack(tol, kernel_bound);
        let sandwich_holds = abs_gap <= kernel_bound + slack && kernel_bound <= first_order + slack;
        let power_mean = exps
            .iter()
            .map(|&q| {
                let bound = bound_power_mean(e.iv.width(), curv, q, rule)?.value;
                Ok(PowerMeanValue {
                    q: q.get(),
                    bound,
                    holds: kernel_bound <= bound + slack,
                })
            })
            .collect::<Result<Vec<_>, OracleError>>()?;
        let pass = sandwich_holds && power_mean.iter().all(|p| p.holds);
        Ok(BoundsCase {
            function: e.spec.label().to_string(),
            a: e.iv.a(),
            b: e.iv.b(),
            lambda: l,
            abs_gap,
            kernel_bound,
            first_order,
            power_mean,
            sandwich_holds,
            pass,
        })
    })
    .into_iter()
    .collect()
}

/// Numeric moment checks for every λ in the grid.
pub fn coefficient_sweep(
    exec: Execution,
    q: PowerExponent,
    tol: f64,
) -> Result<Vec<CoefficientReport>, OracleError> {
    exec.map(&lambda_grid(), |&l| {
        verify_coefficients(LambdaRule::new(l)?, q, tol)
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HadamardCase {
    pub function: String,
    pub midpoint_value: f64,
    pub mean: f64,
    pub endpoint_average: f64,
    /// `min(mean − f(m), (f(a)+f(b))/2 − mean)`
    pub margin: f64,
}

/// `f(m) ≤ mean ≤ (f(a)+f(b))/2` for every (convex) corpus member.
pub fn hadamard_sweep(exec: Execution, tol: f64) -> Result<Vec<HadamardCase>, OracleError> {
    exec.map(&corpus(), |e| {
        let mean = reference_integral(&e.spec, e.iv, tol * e.iv.width())?.value / e.iv.width();
        let midpoint_value = finite_at(&e.spec, e.iv.midpoint())?;
        let endpoint_average =
            0.5 * (finite_at(&e.spec, e.iv.a())? + finite_at(&e.spec, e.iv.b())?);
        Ok(HadamardCase {
            function: e.spec.label().to_string(),
            midpoint_value,
            mean,
            endpoint_average,
            margin: (mean - midpoint_value).min(endpoint_average - mean),
        })
    })
    .into_iter()
    .collect()
}

/// `|f″(a)|`, `|f″(b)|` of a spec.
pub fn endpoint_curvature(
    spec: &IntegrandSpec,
    iv: Interval,
) -> Result<EndpointCurvature, OracleError> {
    let d2 = second_derivative(spec)?;
    let (da, db) = (d2(iv.a()), d2(iv.b()));
    if !da.is_finite() {
        return Err(OracleError::NonFinite { x: iv.a() });
    }
    if !db.is_finite() {
        return Err(OracleError::NonFinite { x: iv.b() });
    }
    Ok(EndpointCurvature::from_second_derivatives(da, db)?)
}
