//! The lambda-parameterized three-point rule
//!
//! `Q_λ = λ·(f(a)+f(b))/2 + (1−λ)·f((a+b)/2)` approximates the interval mean
//! of `f`. λ = 0 is the midpoint rule, λ = 1 the trapezoid rule and λ = 1/3
//! Simpson's rule. The rule gap `mean − Q_λ` equals
//! `(b−a)² ∫₀¹ k(t) f″(ta + (1−t)b) dt` for the piecewise quadratic kernel
//! [`kernel_k`], and when `|f″|` is convex on `[a, b]` its absolute value is
//! bounded by [`bound_first_order`] and, for any `q ≥ 1`, by
//! [`bound_power_mean`].
//!
//! All coefficients are the simplified closed forms over the common
//! denominator `192 = 3·2⁶`.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleError {
    #[error("lambda must lie in [0, 1], got {0}")]
    LambdaOutOfRange(f64),
    #[error("regime {regime:?} is inconsistent with lambda = {lambda}")]
    RegimeMismatch { lambda: f64, regime: Regime },
    #[error("interval requires finite a < b, got [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("endpoint curvatures must be finite and nonnegative, got ({d2a}, {d2b})")]
    InvalidCurvature { d2a: f64, d2b: f64 },
    #[error("power exponent q must be finite and >= 1, got {0}")]
    InvalidExponent(f64),
    #[error("width must be finite and positive, got {0}")]
    InvalidWidth(f64),
    #[error("kernel argument t must lie in [0, 1], got {0}")]
    KernelDomain(f64),
}

/// Which closed-form branch of the bounds applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// λ ≤ 1/2
    Low,
    /// λ ≥ 1/2
    High,
}

/// One member of the rule family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaRule {
    lambda: f64,
    regime: Regime,
}

impl LambdaRule {
    pub const MIDPOINT: LambdaRule = LambdaRule {
        lambda: 0.0,
        regime: Regime::Low,
    };
    pub const TRAPEZOID: LambdaRule = LambdaRule {
        lambda: 1.0,
        regime: Regime::High,
    };
    pub const SIMPSON: LambdaRule = LambdaRule {
        lambda: 1.0 / 3.0,
        regime: Regime::Low,
    };

    /// Builds a rule, tagging λ = 1/2 as [`Regime::Low`].
    pub fn new(lambda: f64) -> Result<Self, RuleError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(RuleError::LambdaOutOfRange(lambda));
        }
        let regime = if lambda <= 0.5 {
            Regime::Low
        } else {
            Regime::High
        };
        Ok(LambdaRule { lambda, regime })
    }

    /// Builds a rule with an explicit regime; only λ = 1/2 accepts both tags.
    pub fn with_regime(lambda: f64, regime: Regime) -> Result<Self, RuleError> {
        let rule = Self::new(lambda)?;
        let consistent = match regime {
            Regime::Low => lambda <= 0.5,
            Regime::High => lambda >= 0.5,
        };
        if !consistent {
            return Err(RuleError::RegimeMismatch { lambda, regime });
        }
        Ok(LambdaRule { regime, ..rule })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self, RuleError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(RuleError::InvalidInterval { a, b });
        }
        Ok(Interval { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    /// The point `t·a + (1−t)·b`, i.e. `t = 0` maps to `b` and `t = 1` to `a`.
    pub fn point(&self, t: f64) -> f64 {
        t * self.a + (1.0 - t) * self.b
    }

    /// Left and right halves. Only valid while the midpoint is representable
    /// strictly inside the interval.
    pub fn bisect(&self) -> Option<(Interval, Interval)> {
        let m = self.midpoint();
        if m <= self.a || m >= self.b {
            return None;
        }
        Some((Interval { a: self.a, b: m }, Interval { a: m, b: self.b }))
    }
}

/// `|f″(a)|` and `|f″(b)|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EndpointCurvature {
    pub d2a: f64,
    pub d2b: f64,
}

impl EndpointCurvature {
    pub fn new(d2a: f64, d2b: f64) -> Result<Self, RuleError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(d2a) && ok(d2b)) {
            return Err(RuleError::InvalidCurvature { d2a, d2b });
        }
        Ok(EndpointCurvature { d2a, d2b })
    }

    /// Takes absolute values of signed second derivatives.
    pub fn from_second_derivatives(f2a: f64, f2b: f64) -> Result<Self, RuleError> {
        Self::new(f2a.abs(), f2b.abs())
    }
}

/// Exponent `q ≥ 1` of the power-mean bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PowerExponent(f64);

impl PowerExponent {
    pub const ONE: PowerExponent = PowerExponent(1.0);

    pub fn new(q: f64) -> Result<Self, RuleError> {
        if !(q.is_finite() && q >= 1.0) {
            return Err(RuleError::InvalidExponent(q));
        }
        Ok(PowerExponent(q))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundBranch {
    LowFirstOrder,
    HighFirstOrder,
    LowPowerMean,
    HighPowerMean,
}

/// A certified bound on `|mean − Q_λ|` together with the inputs it came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorBound {
    pub value: f64,
    pub lambda: f64,
    pub q: f64,
    pub width: f64,
    pub branch: BoundBranch,
}

/// Weights of `|f″(a)|^q` and `|f″(b)|^q` in the two half-interval moments
/// `∫₀^½ |t(t−λ)|·[t·A + (1−t)·B] dt = a1·A + b1·B` and
/// `∫_½^1 |(1−t)(1−λ−t)|·[t·A + (1−t)·B] dt = a2·A + b2·B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentCoefficients {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

impl MomentCoefficients {
    pub fn sum(&self) -> f64 {
        self.a1 + self.b1 + self.a2 + self.b2
    }
}

/// Which bound family [`best_lambda`] minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "q", rename_all = "snake_case")]
pub enum BoundKind {
    FirstOrder,
    PowerMean(PowerExponent),
}

impl BoundKind {
    pub fn evaluate(
        self,
        width: f64,
        curv: EndpointCurvature,
        rule: LambdaRule,
    ) -> Result<ErrorBound, RuleError> {
        match self {
            BoundKind::FirstOrder => bound_first_order(width, curv, rule),
            BoundKind::PowerMean(q) => bound_power_mean(width, curv, q, rule),
        }
    }

    /// The `q = 1` power-mean bound is the first-order bound.
    pub fn from_q(q: PowerExponent) -> Self {
        if q.get() == 1.0 {
            BoundKind::FirstOrder
        } else {
            BoundKind::PowerMean(q)
        }
    }
}

/// Kernel of the rule-gap identity.
pub fn kernel_k(t: f64, rule: LambdaRule) -> Result<f64, RuleError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(RuleError::KernelDomain(t));
    }
    let lambda = rule.lambda;
    Ok(if t <= 0.5 {
        0.5 * t * (t - lambda)
    } else {
        0.5 * (1.0 - t) * (1.0 - lambda - t)
    })
}

/// `Q_λ` from the endpoint and midpoint values.
pub fn rule_value(fa: f64, fm: f64, fb: f64, rule: LambdaRule) -> f64 {
    rule.lambda * 0.5 * (fa + fb) + (1.0 - rule.lambda) * fm
}

/// `∫₀^½ |t(t−λ)| dt`, equal by symmetry to the same integral over the right half.
pub fn abs_kernel_mass(rule: LambdaRule) -> f64 {
    let l = rule.lambda;
    match rule.regime {
        Regime::Low => l.powi(3) / 3.0 + (1.0 - 3.0 * l) / 24.0,
        Regime::High => (3.0 * l - 1.0) / 24.0,
    }
}

pub fn moment_coefficients(rule: LambdaRule) -> MomentCoefficients {
    let l = rule.lambda;
    match rule.regime {
        Regime::Low => {
            let shared = l.powi(4) / 6.0 + (3.0 - 8.0 * l) / 192.0;
            MomentCoefficients {
                a1: shared,
                b1: (2.0 - l) * l.powi(3) / 6.0 + (5.0 - 16.0 * l) / 192.0,
                a2: (1.0 + l) * (1.0 - l).powi(3) / 6.0 + (48.0 * l - 27.0) / 192.0,
                b2: shared,
            }
        }
        Regime::High => {
            let inner = (8.0 * l - 3.0) / 192.0;
            let outer = (16.0 * l - 5.0) / 192.0;
            MomentCoefficients {
                a1: inner,
                b1: outer,
                a2: outer,
                b2: inner,
            }
        }
    }
}

fn check_width(width: f64) -> Result<(), RuleError> {
    if !(width.is_finite() && width > 0.0) {
        return Err(RuleError::InvalidWidth(width));
    }
    Ok(())
}

/// Bound on `|mean − Q_λ|` linear in the endpoint curvatures. Valid whenever
/// `|f″|` is convex on the interval.
pub fn bound_first_order(
    width: f64,
    curv: EndpointCurvature,
    rule: LambdaRule,
) -> Result<ErrorBound, RuleError> {
    check_width(width)?;
    let l = rule.lambda;
    let w2 = width * width;
    let (value, branch) = match rule.regime {
        Regime::Low => {
            let ca = l.powi(4) + (1.0 + l) * (1.0 - l).powi(3) + (5.0 * l - 3.0) / 4.0;
            let cb = l.powi(4) + (2.0 - l) * l.powi(3) + (1.0 - 3.0 * l) / 4.0;
            (
                w2 / 12.0 * (ca * curv.d2a + cb * curv.d2b),
                BoundBranch::LowFirstOrder,
            )
        }
        Regime::High => (
            w2 * (3.0 * l - 1.0) / 48.0 * (curv.d2a + curv.d2b),
            BoundBranch::HighFirstOrder,
        ),
    };
    Ok(ErrorBound {
        value: value.max(0.0),
        lambda: l,
        q: 1.0,
        width,
        branch,
    })
}

/// Power-mean bound for `q ≥ 1`; reduces to [`bound_first_order`] at `q = 1`.
pub fn bound_power_mean(
    width: f64,
    curv: EndpointCurvature,
    q: PowerExponent,
    rule: LambdaRule,
) -> Result<ErrorBound, RuleError> {
    check_width(width)?;
    let qv = q.get();
    let c = moment_coefficients(rule);
    let (pa, pb) = (curv.d2a.powf(qv), curv.d2b.powf(qv));
    let left = (c.a1 * pa + c.b1 * pb).max(0.0).powf(1.0 / qv);
    let right = (c.a2 * pa + c.b2 * pb).max(0.0).powf(1.0 / qv);
    let mass = abs_kernel_mass(rule).powf(1.0 - 1.0 / qv);
    let value = 0.5 * width * width * mass * (left + right);
    let branch = match rule.regime {
        Regime::Low => BoundBranch::LowPowerMean,
        Regime::High => BoundBranch::HighPowerMean,
    };
    Ok(ErrorBound {
        value,
        lambda: rule.lambda,
        q: qv,
        width,
        branch,
    })
}

const GRID_STEPS: usize = 1024;
const TRISECTION_TOL: f64 = 1e-9;

/// λ in `[0, 1]` minimizing the selected bound: a scan on a 1/1024 grid, then
/// trisection on the cells adjacent to the grid winner. Ties go to the smaller λ.
pub fn best_lambda(
    width: f64,
    curv: EndpointCurvature,
    kind: BoundKind,
) -> Result<LambdaRule, RuleError> {
    check_width(width)?;
    let eval = |l: f64| -> Result<f64, RuleError> {
        Ok(kind.evaluate(width, curv, LambdaRule::new(l)?)?.value)
    };

    let mut best_i = 0;
    let mut best_v = eval(0.0)?;
    for i in 1..=GRID_STEPS {
        let v = eval(i as f64 / GRID_STEPS as f64)?;
        if v < best_v {
            best_i = i;
            best_v = v;
        }
    }
    let best_l = best_i as f64 / GRID_STEPS as f64;

    let mut lo = best_i.saturating_sub(1) as f64 / GRID_STEPS as f64;
    let mut hi = (best_i + 1).min(GRID_STEPS) as f64 / GRID_STEPS as f64;
    while hi - lo > TRISECTION_TOL {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if eval(m1)? <= eval(m2)? {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let refined = 0.5 * (lo + hi);
    let refined_v = eval(refined)?;
    let lambda = if refined_v < best_v || (refined_v == best_v && refined < best_l) {
        refined
    } else {
        best_l
    };
    LambdaRule::new(lambda)
}
