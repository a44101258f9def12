use thiserror::Error;

use super::expr::{EvalError, EvalErrorKind};
use crate::rule::Interval;

/// Samples used when the caller does not choose.
pub const DEFAULT_PROBE_SAMPLES: usize = 256;
const RELATIVE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ProbeError {
    #[error("convexity probe needs at least 3 subintervals, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Midpoint-convexity test of `g` on `n + 1` equispaced points.
///
/// Returns `false` as soon as some interior sample sits above the chord of its
/// neighbours by more than `1e-12 · max|g|`. A `true` result is evidence of
/// convexity, not a proof: `g` can still bend between samples.
pub fn convexity_probe<F>(mut g: F, iv: Interval, n: usize) -> Result<bool, ProbeError>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    if n < 3 {
        return Err(ProbeError::TooFewSamples(n));
    }
    let h = iv.width() / n as f64;
    let mut samples = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let x = if i == n {
            iv.b()
        } else {
            iv.a() + i as f64 * h
        };
        let v = g(x)?;
        if !v.is_finite() {
            return Err(EvalError {
                kind: EvalErrorKind::NonFinite,
                x,
            }
            .into());
        }
        samples.push(v);
    }
    let scale = samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let slack = RELATIVE_SLACK * scale;
    Ok(samples
        .windows(3)
        .all(|w| w[1] <= 0.5 * (w[0] + w[2]) + slack))
}
