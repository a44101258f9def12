//! Adaptive composite integration with a certified error bound.
//!
//! Convexity of `|f″|` on `[a, b]` carries over to every subinterval, so the
//! per-cell theorem bounds add up to a guaranteed bound on the whole integral.
//! Refinement always bisects the cell with the largest bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::functions::{EvalError, FunctionSpec, ProbeError, DEFAULT_PROBE_SAMPLES};
use crate::rule::{
    best_lambda, rule_value, BoundKind, EndpointCurvature, Interval, LambdaRule, PowerExponent,
    RuleError,
};

pub const DEFAULT_MAX_CELLS: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CompositeError {
    #[error("tolerance must be finite and positive, got {0}")]
    InvalidTolerance(f64),
    #[error("convexity of |f''| not established on [{a}, {b}]")]
    NotConvex { a: f64, b: f64 },
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaPolicy {
    Fixed { lambda: f64 },
    PerCellBest,
}

impl LambdaPolicy {
    pub fn fixed(rule: LambdaRule) -> Self {
        LambdaPolicy::Fixed {
            lambda: rule.lambda(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub a: f64,
    pub b: f64,
    /// `width · Q_λ`, the cell's contribution to the integral.
    pub q_value: f64,
    /// Integral-scale bound, i.e. `width ·` the bound on the cell mean.
    pub bound: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub value: f64,
    pub total_bound: f64,
    pub tol: f64,
    pub converged: bool,
    pub policy: LambdaPolicy,
    pub q: f64,
    pub evaluations: usize,
    pub cells: Vec<Cell>,
}

impl Certificate {
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CompositeOptions {
    pub max_cells: usize,
    pub probe_samples: usize,
    /// Skip the convexity probe regardless of what the function declares.
    pub assume_convex: bool,
}

impl Default for CompositeOptions {
    fn default() -> Self {
        CompositeOptions {
            max_cells: DEFAULT_MAX_CELLS,
            probe_samples: DEFAULT_PROBE_SAMPLES,
            assume_convex: false,
        }
    }
}

/// Function data at a cell's endpoints and midpoint.
#[derive(Clone, Copy)]
struct Samples {
    fa: f64,
    fm: f64,
    fb: f64,
    d2a: f64,
    d2b: f64,
}

#[derive(Clone, Copy)]
struct Work {
    iv: Interval,
    s: Samples,
    cell: Cell,
    seq: usize,
}

impl PartialEq for Work {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Work {}
impl PartialOrd for Work {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Work {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cell
            .bound
            .total_cmp(&other.cell.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Engine<'a> {
    f: &'a FunctionSpec,
    policy: LambdaPolicy,
    kind: BoundKind,
}

impl Engine<'_> {
    fn cell(&self, iv: Interval, s: &Samples) -> Result<Cell, CompositeError> {
        let curv = EndpointCurvature::new(s.d2a, s.d2b)?;
        let width = iv.width();
        let rule = match self.policy {
            LambdaPolicy::Fixed { lambda } => LambdaRule::new(lambda)?,
            LambdaPolicy::PerCellBest => best_lambda(width, curv, self.kind)?,
        };
        let bound = self.kind.evaluate(width, curv, rule)?.value;
        Ok(Cell {
            a: iv.a(),
            b: iv.b(),
            q_value: width * rule_value(s.fa, s.fm, s.fb, rule),
            bound: width * bound,
            lambda: rule.lambda(),
        })
    }

    fn sample(&self, iv: Interval) -> Result<Samples, CompositeError> {
        Ok(Samples {
            fa: self.f.try_value(iv.a())?,
            fm: self.f.try_value(iv.midpoint())?,
            fb: self.f.try_value(iv.b())?,
            d2a: self.f.try_abs_d2(iv.a())?,
            d2b: self.f.try_abs_d2(iv.b())?,
        })
    }
}

fn check_convexity(
    f: &FunctionSpec,
    iv: Interval,
    opts: &CompositeOptions,
) -> Result<(), CompositeError> {
    if opts.assume_convex || f.declared_convex_abs_d2 == Some(true) {
        return Ok(());
    }
    if f.declared_convex_abs_d2 == Some(false) || !f.probe_convexity(iv, opts.probe_samples)? {
        return Err(CompositeError::NotConvex {
            a: iv.a(),
            b: iv.b(),
        });
    }
    Ok(())
}

fn assemble(
    mut cells: Vec<Cell>,
    tol: f64,
    policy: LambdaPolicy,
    q: PowerExponent,
    evaluations: usize,
) -> Certificate {
    cells.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = cells.iter().map(|c| c.q_value).sum();
    let total_bound: f64 = cells.iter().map(|c| c.bound).sum();
    Certificate {
        value,
        total_bound,
        tol,
        converged: total_bound <= tol,
        policy,
        q: q.get(),
        evaluations,
        cells,
    }
}

pub fn integrate_certified(
    f: &FunctionSpec,
    iv: Interval,
    tol: f64,
    policy: LambdaPolicy,
    q: PowerExponent,
) -> Result<Certificate, CompositeError> {
    integrate_certified_with(f, iv, tol, policy, q, &CompositeOptions::default())
}

/// Greedy refinement until the summed cell bounds reach `tol` or the cell
/// budget runs out. An unconverged certificate is still a valid bound.
pub fn integrate_certified_with(
    f: &FunctionSpec,
    iv: Interval,
    tol: f64,
    policy: LambdaPolicy,
    q: PowerExponent,
    opts: &CompositeOptions,
) -> Result<Certificate, CompositeError> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CompositeError::InvalidTolerance(tol));
    }
    if let LambdaPolicy::Fixed { lambda } = policy {
        LambdaRule::new(lambda)?;
    }
    check_convexity(f, iv, opts)?;

    let engine = Engine {
        f,
        policy,
        kind: BoundKind::from_q(q),
    };
    let s = engine.sample(iv)?;
    let mut evaluations = 5;
    let mut seq = 0;
    let root = Work {
        iv,
        s,
        cell: engine.cell(iv, &s)?,
        seq,
    };
    let mut running = root.cell.bound;
    let mut heap = BinaryHeap::from([root]);
    let mut settled: Vec<Cell> = Vec::new();

    while running > tol && heap.len() + settled.len() < opts.max_cells {
        let Some(worst) = heap.pop() else { break };
        let Some((left, right)) = worst.iv.bisect() else {
            settled.push(worst.cell);
            continue;
        };
        let d2m = f.try_abs_d2(worst.iv.midpoint())?;
        let ls = Samples {
            fa: worst.s.fa,
            fm: f.try_value(left.midpoint())?,
            fb: worst.s.fm,
            d2a: worst.s.d2a,
            d2b: d2m,
        };
        let rs = Samples {
            fa: worst.s.fm,
            fm: f.try_value(right.midpoint())?,
            fb: worst.s.fb,
            d2a: d2m,
            d2b: worst.s.d2b,
        };
        evaluations += 3;
        let lc = engine.cell(left, &ls)?;
        let rc = engine.cell(right, &rs)?;
        running += lc.bound + rc.bound - worst.cell.bound;
        heap.push(Work {
            iv: left,
            s: ls,
            cell: lc,
            seq: seq + 1,
        });
        heap.push(Work {
            iv: right,
            s: rs,
            cell: rc,
            seq: seq + 2,
        });
        seq += 2;
        if running <= tol {
            running = heap
                .iter()
                .map(|w| w.cell.bound)
                .chain(settled.iter().map(|c| c.bound))
                .sum();
        }
    }

    let cells = heap.into_iter().map(|w| w.cell).chain(settled).collect();
    Ok(assemble(cells, tol, policy, q, evaluations))
}

/// `2^levels` equal cells, no adaptivity. Used for convergence-rate checks.
pub fn uniform_certificate(
    f: &FunctionSpec,
    iv: Interval,
    levels: u32,
    policy: LambdaPolicy,
    q: PowerExponent,
    exec: Execution,
) -> Result<Certificate, CompositeError> {
    let engine = Engine {
        f,
        policy,
        kind: BoundKind::from_q(q),
    };
    let n = 1usize << levels;
    let h = iv.width() / n as f64;
    let edge = |i: usize| {
        if i == n {
            iv.b()
        } else {
            iv.a() + i as f64 * h
        }
    };
    let cells = exec
        .map_range(n, |i| {
            let sub = Interval::new(edge(i), edge(i + 1))?;
            engine.cell(sub, &engine.sample(sub)?)
        })
        .into_iter()
        .collect::<Result<Vec<_>, CompositeError>>()?;
    Ok(assemble(cells, f64::INFINITY, policy, q, 5 * n))
}
