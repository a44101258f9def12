//! User-facing integrands: parsed expressions with jet derivatives and a small
//! catalog of closed-form builtins.

pub mod expr;
pub mod jet;
pub mod probe;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use expr::{eval, eval_jet2, parse, EvalError, EvalErrorKind, ExprNode, ParseError};
pub use jet::Jet2;
pub use probe::{convexity_probe, ProbeError, DEFAULT_PROBE_SAMPLES};

use crate::oracle::IntegrandSpec;
use crate::rule::Interval;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum BuiltinError {
    #[error("unknown builtin {0:?} (expected power, reciprocal, exp, ln or monomial-sum)")]
    UnknownName(String),
    #[error("builtin {name} expects {expected}, got {got} parameter(s)")]
    Arity {
        name: &'static str,
        expected: &'static str,
        got: usize,
    },
    #[error("invalid parameter {0:?}")]
    BadParameter(String),
    #[error("builtin {name} is not defined on [{a}, {b}]")]
    Domain { name: String, a: f64, b: f64 },
}

/// Closed-form catalog entries.
#[derive(Clone, Debug, PartialEq)]
pub enum Builtin {
    /// `x^n`
    Power(f64),
    /// `1/x`
    Reciprocal,
    Exp,
    Ln,
    /// `Σ c_k x^k`, coefficients in increasing degree.
    MonomialSum(Vec<f64>),
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Power(n) => write!(f, "power:{n}"),
            Builtin::Reciprocal => f.write_str("reciprocal"),
            Builtin::Exp => f.write_str("exp"),
            Builtin::Ln => f.write_str("ln"),
            Builtin::MonomialSum(c) => {
                let parts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                write!(f, "monomial-sum:{}", parts.join(","))
            }
        }
    }
}

impl Builtin {
    pub fn new(name: &str, params: &[f64]) -> Result<Self, BuiltinError> {
        let arity = |name: &'static str, expected: &'static str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(BuiltinError::Arity {
                    name,
                    expected,
                    got: params.len(),
                })
            }
        };
        match name {
            "power" => {
                arity("power", "1", params.len() == 1)?;
                if !params[0].is_finite() {
                    return Err(BuiltinError::BadParameter(params[0].to_string()));
                }
                Ok(Builtin::Power(params[0]))
            }
            "reciprocal" => {
                arity("reciprocal", "0", params.is_empty()).map(|_| Builtin::Reciprocal)
            }
            "exp" => arity("exp", "0", params.is_empty()).map(|_| Builtin::Exp),
            "ln" => arity("ln", "0", params.is_empty()).map(|_| Builtin::Ln),
            "monomial-sum" => {
                arity("monomial-sum", "at least 1", !params.is_empty())?;
                if let Some(bad) = params.iter().find(|c| !c.is_finite()) {
                    return Err(BuiltinError::BadParameter(bad.to_string()));
                }
                Ok(Builtin::MonomialSum(params.to_vec()))
            }
            other => Err(BuiltinError::UnknownName(other.to_string())),
        }
    }

    /// Parses `name` or `name:p1,p2,...`, e.g. `power:4` or `monomial-sum:1,0,3`.
    pub fn parse(text: &str) -> Result<Self, BuiltinError> {
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (text.trim(), None),
        };
        let params = match rest {
            None => Vec::new(),
            Some(r) => r
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| BuiltinError::BadParameter(p.to_string()))
                })
                .collect::<Result<_, _>>()?,
        };
        Self::new(name, &params)
    }

    pub fn check_domain(&self, iv: Interval) -> Result<(), BuiltinError> {
        let (a, b) = (iv.a(), iv.b());
        let ok = match self {
            Builtin::Power(n) => {
                if n.fract() == 0.0 {
                    *n >= 0.0 || a > 0.0 || b < 0.0
                } else {
                    a > 0.0 || (a == 0.0 && *n > 2.0)
                }
            }
            Builtin::Reciprocal => a > 0.0 || b < 0.0,
            Builtin::Ln => a > 0.0,
            Builtin::Exp | Builtin::MonomialSum(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(BuiltinError::Domain {
                name: self.to_string(),
                a,
                b,
            })
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Builtin::Power(n) => pow(x, *n),
            Builtin::Reciprocal => 1.0 / x,
            Builtin::Exp => x.exp(),
            Builtin::Ln => x.ln(),
            Builtin::MonomialSum(c) => c.iter().rev().fold(0.0, |acc, ck| acc * x + ck),
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match self {
            Builtin::Power(n) => {
                if *n == 0.0 || *n == 1.0 {
                    0.0
                } else {
                    n * (n - 1.0) * pow(x, n - 2.0)
                }
            }
            Builtin::Reciprocal => 2.0 / (x * x * x),
            Builtin::Exp => x.exp(),
            Builtin::Ln => -1.0 / (x * x),
            Builtin::MonomialSum(c) => c
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, ck)| acc * x + (k * (k - 1)) as f64 * ck),
        }
    }

    /// `∫ₐᵇ f(x) dx` in closed form.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Builtin::Power(n) if *n == -1.0 => log_ratio(a, b),
            Builtin::Power(n) => (pow(b, n + 1.0) - pow(a, n + 1.0)) / (n + 1.0),
            Builtin::Reciprocal => log_ratio(a, b),
            Builtin::Exp => b.exp() - a.exp(),
            Builtin::Ln => (b * b.ln() - b) - (a * a.ln() - a),
            Builtin::MonomialSum(c) => c
                .iter()
                .enumerate()
                .map(|(k, ck)| {
                    let p = (k + 1) as i32;
                    ck * (b.powi(p) - a.powi(p)) / p as f64
                })
                .sum(),
        }
    }

    /// Whether `|f″|` is known to be convex on every interval of the domain.
    /// Monomial sums are left to the probe.
    pub fn known_convex_abs_d2(&self) -> Option<bool> {
        match self {
            Builtin::Reciprocal | Builtin::Exp | Builtin::Ln => Some(true),
            // n(n−1)·x^{n−2} is concave for 2 < n < 3
            Builtin::Power(n) => Some(!(*n > 2.0 && *n < 3.0)),
            Builtin::MonomialSum(_) => None,
        }
    }

    pub fn integrand(&self) -> IntegrandSpec {
        let (f, d2, int) = (self.clone(), self.clone(), self.clone());
        IntegrandSpec::new(self.to_string(), move |x| f.value(x))
            .with_d2(move |x| d2.second_derivative(x))
            .with_exact_integral(move |a, b| int.integral(a, b))
    }
}

fn pow(x: f64, n: f64) -> f64 {
    if n.fract() == 0.0 && n.abs() <= i32::MAX as f64 {
        x.powi(n as i32)
    } else {
        x.powf(n)
    }
}

fn log_ratio(a: f64, b: f64) -> f64 {
    if a * b > 0.0 {
        (b / a).ln()
    } else {
        f64::NAN
    }
}

/// Convenience constructor mirroring [`Builtin::new`].
pub fn builtin(name: &str, params: &[f64]) -> Result<FunctionSpec, BuiltinError> {
    Ok(FunctionSpec::from_builtin(Builtin::new(name, params)?))
}

#[derive(Clone, Debug)]
pub enum FunctionSource {
    Expr(Arc<ExprNode>),
    Builtin(Builtin),
}

/// An integrand ready for the oracle and the composite engine.
#[derive(Clone, Debug)]
pub struct FunctionSpec {
    pub source: FunctionSource,
    pub integrand: IntegrandSpec,
    /// `Some(true)` skips the convexity probe.
    pub declared_convex_abs_d2: Option<bool>,
}

impl FunctionSpec {
    pub fn from_expr(expr: ExprNode) -> Self {
        let expr = Arc::new(expr);
        let label = expr.render();
        let (fe, de) = (Arc::clone(&expr), Arc::clone(&expr));
        let integrand = IntegrandSpec::new(label, move |x| eval(&fe, x).unwrap_or(f64::NAN))
            .with_d2(move |x| eval_jet2(&de, x).map_or(f64::NAN, |j| j.d2));
        FunctionSpec {
            source: FunctionSource::Expr(expr),
            integrand,
            declared_convex_abs_d2: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse(text).map(Self::from_expr)
    }

    pub fn from_builtin(b: Builtin) -> Self {
        let integrand = b.integrand();
        FunctionSpec {
            declared_convex_abs_d2: b.known_convex_abs_d2(),
            source: FunctionSource::Builtin(b),
            integrand,
        }
    }

    pub fn declare_convex(mut self, convex: bool) -> Self {
        self.declared_convex_abs_d2 = Some(convex);
        self
    }

    pub fn label(&self) -> &str {
        self.integrand.label()
    }

    /// `|f″(x)|` with the domain error surfaced.
    pub fn try_abs_d2(&self, x: f64) -> Result<f64, EvalError> {
        let v = match &self.source {
            FunctionSource::Expr(e) => eval_jet2(e, x)?.d2,
            FunctionSource::Builtin(b) => b.second_derivative(x),
        };
        if v.is_finite() {
            Ok(v.abs())
        } else {
            Err(EvalError {
                kind: EvalErrorKind::NonFinite,
                x,
            })
        }
    }

    pub fn try_value(&self, x: f64) -> Result<f64, EvalError> {
        let v = match &self.source {
            FunctionSource::Expr(e) => eval(e, x)?,
            FunctionSource::Builtin(b) => b.value(x),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError {
                kind: EvalErrorKind::NonFinite,
                x,
            })
        }
    }

    /// Probes `|f″|` for convexity on `iv` with `n` subintervals.
    pub fn probe_convexity(&self, iv: Interval, n: usize) -> Result<bool, ProbeError> {
        convexity_probe(|x| self.try_abs_d2(x), iv, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn exact_mean(spec: &FunctionSpec, a: f64, b: f64) -> f64 {
        spec.integrand.exact_integral(a, b).unwrap() / (b - a)
    }

    #[test]
    fn catalog_exact_means() {
        let p4 = builtin("power", &[4.0]).unwrap();
        assert_relative_eq!(exact_mean(&p4, 0.0, 1.0), 0.2, max_relative = 1e-15);

        let (a, b) = (1.5, 4.0);
        let rec = builtin("reciprocal", &[]).unwrap();
        assert_relative_eq!(
            exact_mean(&rec, a, b),
            (b.ln() - a.ln()) / (b - a),
            max_relative = 1e-14
        );

        // ln I(a, b) with I = (1/e)(b^b / a^a)^{1/(b−a)}
        let ln = builtin("ln", &[]).unwrap();
        let identric = (1.0 / std::f64::consts::E) * (b.powf(b) / a.powf(a)).powf(1.0 / (b - a));
        assert_relative_eq!(exact_mean(&ln, a, b), identric.ln(), max_relative = 1e-13);

        let e = builtin("exp", &[]).unwrap();
        assert_relative_eq!(
            exact_mean(&e, 0.0, 1.0),
            std::f64::consts::E - 1.0,
            max_relative = 1e-15
        );

        let m = builtin("monomial-sum", &[1.0, 0.0, 3.0]).unwrap();
        assert_relative_eq!(
            m.integrand.exact_integral(0.0, 2.0).unwrap(),
            2.0 + 8.0,
            max_relative = 1e-15
        );
        assert_eq!(m.integrand.d2(5.0), Some(6.0));
    }

    #[test]
    fn catalog_parsing() {
        assert_eq!(Builtin::parse("power:4").unwrap(), Builtin::Power(4.0));
        assert_eq!(
            Builtin::parse("monomial-sum:1, 0,3").unwrap(),
            Builtin::MonomialSum(vec![1.0, 0.0, 3.0])
        );
        assert_eq!(Builtin::parse("reciprocal").unwrap(), Builtin::Reciprocal);
        assert!(matches!(
            Builtin::parse("gamma"),
            Err(BuiltinError::UnknownName(_))
        ));
        assert!(matches!(
            Builtin::parse("power"),
            Err(BuiltinError::Arity { .. })
        ));
        assert!(matches!(
            Builtin::parse("exp:1"),
            Err(BuiltinError::Arity { .. })
        ));
        assert!(matches!(
            Builtin::parse("power:abc"),
            Err(BuiltinError::BadParameter(_))
        ));
    }

    #[test]
    fn domains() {
        assert!(Builtin::Reciprocal.check_domain(iv(-1.0, 1.0)).is_err());
        assert!(Builtin::Reciprocal.check_domain(iv(-2.0, -1.0)).is_ok());
        assert!(Builtin::Ln.check_domain(iv(0.0, 1.0)).is_err());
        assert!(Builtin::Power(0.5).check_domain(iv(0.0, 1.0)).is_err());
        assert!(Builtin::Power(2.5).check_domain(iv(0.0, 1.0)).is_ok());
        assert!(Builtin::Power(-2.0).check_domain(iv(-1.0, 1.0)).is_err());
        assert!(Builtin::Power(3.0).check_domain(iv(-1.0, 1.0)).is_ok());
    }

    #[test]
    fn expression_specs_surface_errors() {
        let spec = FunctionSpec::parse("ln(x)").unwrap();
        assert!(spec.integrand.f(0.0).is_nan());
        assert_eq!(
            spec.try_abs_d2(0.0).unwrap_err().kind,
            EvalErrorKind::LnOfNonpositive
        );
        assert_eq!(spec.try_abs_d2(2.0).unwrap(), 0.25);
        assert!(spec.probe_convexity(iv(0.0, 1.0), 16).is_err());
        assert!(spec.probe_convexity(iv(1.0, 2.0), 16).unwrap());
        assert!(spec.integrand.exact_integral(1.0, 2.0).is_none());
    }

    #[test]
    fn builtins_agree_with_expressions() {
        let pairs = [
            (Builtin::Power(4.0), "x^4"),
            (Builtin::Power(2.5), "x^2.5"),
            (Builtin::Reciprocal, "1/x"),
            (Builtin::Exp, "exp(x)"),
            (Builtin::Ln, "ln(x)"),
            (
                Builtin::MonomialSum(vec![1.0, -2.0, 0.5, 3.0]),
                "1 - 2*x + 0.5*x^2 + 3*x^3",
            ),
        ];
        for (b, src) in pairs {
            let e = parse(src).unwrap();
            for x in [0.3, 1.0, 2.7] {
                let j = eval_jet2(&e, x).unwrap();
                assert_relative_eq!(b.value(x), j.v, max_relative = 1e-13);
                assert_relative_eq!(b.second_derivative(x), j.d2, max_relative = 1e-12);
            }
        }
    }
}
