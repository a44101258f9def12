//! Special means and the three mean inequalities obtained by applying the rule
//! bounds to `x^n` and `1/x`.

use serde::Serialize;
use thiserror::Error;

use crate::rule::{
    bound_first_order, bound_power_mean, EndpointCurvature, LambdaRule, PowerExponent, RuleError,
};

/// Constant the Simpson specialization actually yields; see [`prop1_gap`].
pub const SIMPSON_CONSTANT: f64 = 162.0;
/// Constant printed in the literature for the same inequality.
pub const PRINTED_SIMPSON_CONSTANT: f64 = 168.0;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MeansError {
    #[error("{kind} mean needs {requirement}, got a = {a}, b = {b}")]
    Domain {
        kind: &'static str,
        requirement: &'static str,
        a: f64,
        b: f64,
    },
    #[error("p-logarithmic mean is undefined at p = {0} (use the logarithmic or identric mean)")]
    ExcludedOrder(f64),
    #[error("power n must be an integer greater than 2, got {0}")]
    InvalidPower(i64),
    #[error("requires 0 < a < b, got a = {a}, b = {b}")]
    Ordering { a: f64, b: f64 },
    #[error(transparent)]
    Rule(#[from] RuleError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "p", rename_all = "snake_case")]
pub enum MeanKind {
    Arithmetic,
    Geometric,
    Harmonic,
    Logarithmic,
    Identric,
    PLogarithmic(f64),
}

impl MeanKind {
    fn name(self) -> &'static str {
        match self {
            MeanKind::Arithmetic => "arithmetic",
            MeanKind::Geometric => "geometric",
            MeanKind::Harmonic => "harmonic",
            MeanKind::Logarithmic => "logarithmic",
            MeanKind::Identric => "identric",
            MeanKind::PLogarithmic(_) => "p-logarithmic",
        }
    }
}

pub fn mean_value(kind: MeanKind, a: f64, b: f64) -> Result<f64, MeansError> {
    let nonneg = a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0;
    let positive = nonneg && a > 0.0 && b > 0.0;
    let domain = |requirement| MeansError::Domain {
        kind: kind.name(),
        requirement,
        a,
        b,
    };
    match kind {
        MeanKind::Arithmetic | MeanKind::Geometric if !nonneg => Err(domain("a, b >= 0")),
        MeanKind::Arithmetic => Ok(0.5 * (a + b)),
        MeanKind::Geometric => Ok((a * b).sqrt()),
        _ if !positive => Err(domain("a, b > 0")),
        MeanKind::Harmonic => Ok(2.0 * a * b / (a + b)),
        _ if a == b => match kind {
            MeanKind::PLogarithmic(p) if p == -1.0 || p == 0.0 || !p.is_finite() => {
                Err(MeansError::ExcludedOrder(p))
            }
            _ => Ok(a),
        },
        MeanKind::Logarithmic => Ok((b - a) / (b.ln() - a.ln())),
        MeanKind::Identric => Ok(((b * b.ln() - a * a.ln()) / (b - a) - 1.0).exp()),
        MeanKind::PLogarithmic(p) => {
            if p == -1.0 || p == 0.0 || !p.is_finite() {
                return Err(MeansError::ExcludedOrder(p));
            }
            // b^s − a^s = a^s · expm1(s·ln(b/a)) keeps p near −1 accurate.
            let s = p + 1.0;
            let ratio = (a.ln() * s).exp() * (s * (b / a).ln()).exp_m1() / (s * (b - a));
            Ok(ratio.powf(1.0 / p))
        }
    }
}

fn ordered(a: f64, b: f64) -> Result<(), MeansError> {
    if a.is_finite() && b.is_finite() && 0.0 < a && a < b {
        Ok(())
    } else {
        Err(MeansError::Ordering { a, b })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Prop1 {
    pub n: i64,
    pub a: f64,
    pub b: f64,
    /// `(1/3)A(aⁿ,bⁿ) + (2/3)Aⁿ(a,b) − Lₙⁿ(a,b)`
    pub gap: f64,
    /// `n(n−1)(b−a)²/162 · (a^{n−2} + b^{n−2})`
    pub bound: f64,
    /// Same with the printed constant 168.
    pub bound_printed: f64,
    pub holds: bool,
    pub holds_printed: bool,
}

/// Simpson's rule applied to `x^n` on `[a, b]`.
pub fn prop1_gap(n: i64, a: f64, b: f64) -> Result<Prop1, MeansError> {
    if n <= 2 || n > i32::MAX as i64 {
        return Err(MeansError::InvalidPower(n));
    }
    ordered(a, b)?;
    let ni = n as i32;
    let nf = n as f64;
    let arith_pow = mean_value(MeanKind::Arithmetic, a.powi(ni), b.powi(ni))?;
    let pow_arith = mean_value(MeanKind::Arithmetic, a, b)?.powi(ni);
    // Lₙⁿ directly, avoiding the 1/n root and its power.
    let lnn = (b.powi(ni + 1) - a.powi(ni + 1)) / ((nf + 1.0) * (b - a));
    let gap = arith_pow / 3.0 + 2.0 * pow_arith / 3.0 - lnn;
    let w = b - a;
    let scale = nf * (nf - 1.0) * w * w * (a.powi(ni - 2) + b.powi(ni - 2));
    let bound = scale / SIMPSON_CONSTANT;
    let bound_printed = scale / PRINTED_SIMPSON_CONSTANT;
    Ok(Prop1 {
        n,
        a,
        b,
        gap,
        bound,
        bound_printed,
        holds: gap.abs() <= bound,
        holds_printed: gap.abs() <= bound_printed,
    })
}

/// Same bound through the general first-order rule bound at λ = 1/3.
pub fn prop1_bound_via_rule(n: i64, a: f64, b: f64) -> Result<f64, MeansError> {
    ordered(a, b)?;
    let nf = n as f64;
    let d2 = |x: f64| nf * (nf - 1.0) * x.powi(n as i32 - 2);
    let curv = EndpointCurvature::new(d2(a), d2(b))?;
    Ok(bound_first_order(b - a, curv, LambdaRule::SIMPSON)?.value)
}

fn reciprocal_curvature(a: f64, b: f64) -> Result<EndpointCurvature, MeansError> {
    Ok(EndpointCurvature::new(
        2.0 / (a * a * a),
        2.0 / (b * b * b),
    )?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Prop2 {
    pub a: f64,
    pub b: f64,
    pub q: f64,
    /// `1/L − 1/A`
    pub mid_gap: f64,
    pub mid_bound: f64,
    /// `1/L − 1/H`
    pub trap_gap: f64,
    pub trap_bound: f64,
    pub holds: bool,
}

/// Midpoint and trapezoid power-mean bounds applied to `1/x`.
pub fn prop2_gaps(a: f64, b: f64, q: PowerExponent) -> Result<Prop2, MeansError> {
    ordered(a, b)?;
    let inv_l = 1.0 / mean_value(MeanKind::Logarithmic, a, b)?;
    let mid_gap = inv_l - 1.0 / mean_value(MeanKind::Arithmetic, a, b)?;
    let trap_gap = inv_l - 1.0 / mean_value(MeanKind::Harmonic, a, b)?;
    let curv = reciprocal_curvature(a, b)?;
    let mid_bound = bound_power_mean(b - a, curv, q, LambdaRule::MIDPOINT)?.value;
    let trap_bound = bound_power_mean(b - a, curv, q, LambdaRule::TRAPEZOID)?.value;
    Ok(Prop2 {
        a,
        b,
        q: q.get(),
        mid_gap,
        mid_bound,
        trap_gap,
        trap_bound,
        holds: mid_gap.abs() <= mid_bound && trap_gap.abs() <= trap_bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Prop3 {
    pub a: f64,
    pub b: f64,
    pub q: f64,
    /// `(1/3)H⁻¹ + (2/3)A⁻¹ − L⁻¹`
    pub gap: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Simpson power-mean bound applied to `1/x`. The bracket is symmetric in the
/// endpoint curvatures, so either pairing of the 59/133 weights gives this value.
pub fn prop3_gap(a: f64, b: f64, q: PowerExponent) -> Result<Prop3, MeansError> {
    ordered(a, b)?;
    let inv_h = 1.0 / mean_value(MeanKind::Harmonic, a, b)?;
    let inv_a = 1.0 / mean_value(MeanKind::Arithmetic, a, b)?;
    let inv_l = 1.0 / mean_value(MeanKind::Logarithmic, a, b)?;
    let gap = inv_h / 3.0 + 2.0 * inv_a / 3.0 - inv_l;
    let bound = bound_power_mean(b - a, reciprocal_curvature(a, b)?, q, LambdaRule::SIMPSON)?.value;
    Ok(Prop3 {
        a,
        b,
        q: q.get(),
        gap,
        bound,
        holds: gap.abs() <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn q(v: f64) -> PowerExponent {
        PowerExponent::new(v).unwrap()
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean_value(MeanKind::Arithmetic, 1.0, 3.0).unwrap(), 2.0);
        assert_eq!(mean_value(MeanKind::Geometric, 4.0, 9.0).unwrap(), 6.0);
        assert_eq!(mean_value(MeanKind::Harmonic, 1.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(
            mean_value(MeanKind::Logarithmic, 1.0, E).unwrap(),
            E - 1.0,
            max_relative = 1e-15
        );
        let identric = (1.0 / E) * E.powf(E).powf(1.0 / (E - 1.0));
        assert_relative_eq!(
            mean_value(MeanKind::Identric, 1.0, E).unwrap(),
            identric,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            mean_value(MeanKind::PLogarithmic(3.0), 1.0, 2.0).unwrap(),
            (15.0_f64 / 4.0).powf(1.0 / 3.0),
            max_relative = 1e-14
        );
        for kind in [
            MeanKind::Logarithmic,
            MeanKind::Identric,
            MeanKind::PLogarithmic(2.0),
        ] {
            assert_eq!(mean_value(kind, 2.5, 2.5).unwrap(), 2.5);
        }
        assert_eq!(mean_value(MeanKind::Geometric, 0.0, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn mean_domain_errors() {
        assert!(mean_value(MeanKind::Arithmetic, -1.0, 2.0).is_err());
        assert!(mean_value(MeanKind::Harmonic, 0.0, 2.0).is_err());
        assert!(mean_value(MeanKind::Logarithmic, 0.0, 2.0).is_err());
        assert!(mean_value(MeanKind::Identric, 1.0, f64::NAN).is_err());
        assert_eq!(
            mean_value(MeanKind::PLogarithmic(-1.0), 1.0, 2.0),
            Err(MeansError::ExcludedOrder(-1.0))
        );
        assert_eq!(
            mean_value(MeanKind::PLogarithmic(0.0), 1.0, 1.0),
            Err(MeansError::ExcludedOrder(0.0))
        );
    }

    #[test]
    fn plog_matches_naive_formula() {
        for p in [-5.0, -2.0, -1.5, -0.5, 0.5, 1.0, 2.0, 5.0] {
            let (a, b) = (0.7_f64, 3.2_f64);
            let naive = ((b.powf(p + 1.0) - a.powf(p + 1.0)) / ((p + 1.0) * (b - a))).powf(1.0 / p);
            assert_relative_eq!(
                mean_value(MeanKind::PLogarithmic(p), a, b).unwrap(),
                naive,
                max_relative = 1e-13
            );
        }
        assert_relative_eq!(
            mean_value(MeanKind::PLogarithmic(1.0), 1.0, 3.0).unwrap(),
            2.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn prop1_examples() {
        let p = prop1_gap(3, 1.0, 2.0).unwrap();
        assert!(p.gap.abs() < 1e-14);
        let p = prop1_gap(4, 1.0, 2.0).unwrap();
        assert_relative_eq!(p.gap, 1.0 / 120.0, max_relative = 1e-12);
        assert_relative_eq!(p.bound, 12.0 / 162.0 * 5.0, max_relative = 1e-14);
        assert_relative_eq!(p.bound_printed, 12.0 / 168.0 * 5.0, max_relative = 1e-14);
        assert!(p.holds && p.holds_printed);
        assert_relative_eq!(
            prop1_bound_via_rule(4, 1.0, 2.0).unwrap(),
            p.bound,
            max_relative = 1e-13
        );
        let near = prop1_gap(4, 1.0, 1.0 + 1e-6).unwrap();
        assert!(near.gap.abs() < 1e-9 && near.bound < 1e-10);
        assert_eq!(prop1_gap(2, 1.0, 2.0), Err(MeansError::InvalidPower(2)));
        assert!(matches!(
            prop1_gap(4, 2.0, 1.0),
            Err(MeansError::Ordering { .. })
        ));
    }

    #[test]
    fn prop2_examples() {
        let p = prop2_gaps(1.0, 2.0, PowerExponent::ONE).unwrap();
        assert_relative_eq!(p.mid_gap, 2.0_f64.ln() - 2.0 / 3.0, max_relative = 1e-13);
        assert_relative_eq!(p.trap_gap, 2.0_f64.ln() - 0.75, max_relative = 1e-13);
        // c2 at q = 1 with |f″(a)| = 2, |f″(b)| = 1/4: (1/48)·(2 + 1/4)
        assert_relative_eq!(p.mid_bound, 2.25 / 48.0, max_relative = 1e-13);
        assert_relative_eq!(p.trap_bound, 2.25 / 24.0, max_relative = 1e-13);
        assert!(p.holds);

        let p = prop2_gaps(1.0, 2.0, q(2.0)).unwrap();
        let (da, db) = (4.0_f64, 1.0 / 16.0);
        let c2 =
            (((3.0 * da + 5.0 * db) / 8.0).sqrt() + ((5.0 * da + 3.0 * db) / 8.0).sqrt()) / 48.0;
        let c3 = (((5.0 * da + 11.0 * db) / 16.0).sqrt() + ((11.0 * da + 5.0 * db) / 16.0).sqrt())
            / 24.0;
        assert_relative_eq!(p.mid_bound, c2, max_relative = 1e-13);
        assert_relative_eq!(p.trap_bound, c3, max_relative = 1e-13);
        assert!(p.holds);

        let near = prop2_gaps(1.0, 1.0 + 1e-6, q(3.0)).unwrap();
        assert!(near.mid_gap.abs() < 1e-9 && near.trap_bound < 1e-10);
    }

    #[test]
    fn prop3_examples() {
        let p = prop3_gap(1.0, 2.0, PowerExponent::ONE).unwrap();
        assert_relative_eq!(p.gap, 0.25 + 4.0 / 9.0 - 2.0_f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(p.bound, (0.25 + 2.0) / 162.0, max_relative = 1e-13);
        assert!(p.holds);
        // Printed pairing: 59 with |2/b³|^q, 133 with |2/a³|^q.
        let (a, b, qq) = (1.0_f64, 4.0_f64, 3.0_f64);
        let (da, db) = ((2.0 / (a * a * a)).powf(qq), (2.0 / (b * b * b)).powf(qq));
        let printed = (b - a).powi(2) / 162.0
            * (((59.0 * db + 133.0 * da) / 192.0).powf(1.0 / qq)
                + ((133.0 * db + 59.0 * da) / 192.0).powf(1.0 / qq));
        let p = prop3_gap(a, b, q(qq)).unwrap();
        assert_relative_eq!(p.bound, printed, max_relative = 1e-12);
        assert!(p.holds);
        let near = prop3_gap(1.0, 1.0 + 1e-6, q(1.5)).unwrap();
        assert!(near.gap.abs() < 1e-9 && near.bound < 1e-10);
    }

    mod props {
        use super::*;
        use crate::functions::Builtin;
        use crate::oracle::rule_gap;
        use crate::rule::Interval;
        use proptest::prelude::*;

        fn oracle_gap(b: &Builtin, lo: f64, hi: f64, rule: LambdaRule) -> f64 {
            rule_gap(&b.integrand(), Interval::new(lo, hi).unwrap(), rule, 1e-14).unwrap()
        }

        fn pair() -> impl Strategy<Value = (f64, f64)> {
            (0.5..2.0f64, 1e-3..1.5f64).prop_map(|(a, w)| (a, a + w))
        }

        proptest! {
            #[test]
            fn mean_ordering((a, b) in (1e-2..1e2f64, 1e-3..1e2f64).prop_map(|(a, w)| (a, a + w))) {
                let chain = [MeanKind::Harmonic, MeanKind::Geometric, MeanKind::Logarithmic, MeanKind::Identric, MeanKind::Arithmetic]
                    .map(|k| mean_value(k, a, b).unwrap());
                for w in chain.windows(2) {
                    prop_assert!(w[0] <= w[1] + 1e-14 * b, "{:?}", chain);
                }
            }

            #[test]
            fn contracts_hold((a, b) in pair(), n in 3i64..=10, qv in 1.0..6.0f64) {
                prop_assert!(prop1_gap(n, a, b).unwrap().holds);
                prop_assert!(prop2_gaps(a, b, q(qv)).unwrap().holds);
                prop_assert!(prop3_gap(a, b, q(qv)).unwrap().holds);
            }

            // The proposition gaps are `Q − mean` for prop 1 and 3 and
            // `mean − Q` for prop 2, so the signs differ from the oracle's.
            #[test]
            fn gaps_match_oracle((a, b) in pair(), n in 3i64..=6) {
                let p1 = prop1_gap(n, a, b).unwrap();
                let g1 = oracle_gap(&Builtin::Power(n as f64), a, b, LambdaRule::SIMPSON);
                prop_assert!((p1.gap + g1).abs() <= 1e-12, "{} vs {}", p1.gap, -g1);

                let p2 = prop2_gaps(a, b, PowerExponent::ONE).unwrap();
                let mid = oracle_gap(&Builtin::Reciprocal, a, b, LambdaRule::MIDPOINT);
                let trap = oracle_gap(&Builtin::Reciprocal, a, b, LambdaRule::TRAPEZOID);
                prop_assert!((p2.mid_gap - mid).abs() <= 1e-12);
                prop_assert!((p2.trap_gap - trap).abs() <= 1e-12);

                let p3 = prop3_gap(a, b, PowerExponent::ONE).unwrap();
                let g3 = oracle_gap(&Builtin::Reciprocal, a, b, LambdaRule::SIMPSON);
                prop_assert!((p3.gap + g3).abs() <= 1e-12);
            }
        }
    }
}
