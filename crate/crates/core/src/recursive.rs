//! Fixed-point iteration of the value map `T(V) = Value(A + B V)` for
//! single-state recursive games, and runtime checks of its convergence
//! guarantees.
//!
//! Each `Value` is taken as the lower end of a fictitious-play bracket
//! (the payoff guaranteed by the row empirical strategy), improved by the
//! previous step's strategy when that guarantees more. The iterates are
//! therefore certified: every `V_n` is a payoff player 1 can actually force.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MixedStrategy, StakedBimatrix};
use crate::zerosum::{col_payoffs, fictitious_play, FpOptions};

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_DIVERGENCE_CEILING: f64 = 1e6;
pub const DEFAULT_MAX_OUTER_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveGameSpec {
    pub matrices: StakedBimatrix,
    /// Fee player 1 pays to quit; the iteration starts from `-t1`.
    pub termination_fee_t1: f64,
    /// Cap on the value player 1 can force.
    pub termination_fee_t2: f64,
}

impl RecursiveGameSpec {
    pub fn new(matrices: StakedBimatrix, t1: f64, t2: f64) -> Self {
        Self { matrices, termination_fee_t1: t1, termination_fee_t2: t2 }
    }

    /// `t1 = 1` and no effective cap.
    pub fn with_unit_fee(matrices: StakedBimatrix) -> Self {
        Self::new(matrices, 1.0, f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StartValue {
    #[default]
    TerminationFee,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueIterationOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Inner fictitious-play gap; defaults to `tolerance / 10`.
    pub inner_gap_tolerance: Option<f64>,
    pub inner_max_iterations: u64,
    pub divergence_ceiling: f64,
    pub start: StartValue,
    pub seed: u64,
}

impl Default for ValueIterationOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_OUTER_ITERATIONS,
            inner_gap_tolerance: None,
            inner_max_iterations: 20_000_000,
            divergence_ceiling: DEFAULT_DIVERGENCE_CEILING,
            start: StartValue::default(),
            seed: 0,
        }
    }
}

impl ValueIterationOptions {
    fn inner_tolerance(&self) -> f64 {
        self.inner_gap_tolerance.unwrap_or(self.tolerance / 10.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursiveSolveResult {
    pub fixed_point: f64,
    /// `V_0, V_1, ...`
    pub trace: Vec<f64>,
    /// Inner duality gap of the solve producing each `V_n` (0 for `V_0`).
    pub gap_trace: Vec<f64>,
    pub row_strategy: MixedStrategy,
    pub col_strategy: MixedStrategy,
    pub converged: bool,
    pub capped_by_t2: bool,
    /// Every inner solve reached its gap tolerance.
    pub inner_converged: bool,
}

/// Iterates `V_{n+1} = Value(A + B V_n)` until successive values differ by
/// at most `tolerance`.
pub fn value_iteration(
    spec: &RecursiveGameSpec,
    opts: &ValueIterationOptions,
) -> Result<RecursiveSolveResult> {
    if !(opts.tolerance > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {} must be positive", opts.tolerance)));
    }
    let compressed = spec.matrices.compress_columns();
    let m = &compressed.matrices;
    let start = match opts.start {
        StartValue::TerminationFee => -spec.termination_fee_t1,
        StartValue::Zero => 0.0,
    };
    let inner_tol = opts.inner_tolerance();
    let mut trace = vec![start];
    let mut gaps = vec![0.0];
    let mut v = start;
    let mut previous: Option<MixedStrategy> = None;
    let mut inner_converged = true;

    for n in 0..opts.max_iterations {
        let a = m.combined(v);
        let fp = fictitious_play(
            a.view(),
            &FpOptions {
                max_iterations: opts.inner_max_iterations,
                gap_tolerance: inner_tol,
                seed: opts.seed.wrapping_add(n as u64),
                record_plays: false,
            },
        )?;
        inner_converged &= fp.converged;
        let mut next = fp.value_lower;
        let mut row = fp.empirical_row.clone();
        if let Some(prev) = &previous {
            let kept = guaranteed(&a, prev);
            if kept > next {
                next = kept;
                row = prev.clone();
            }
        }
        trace.push(next);
        gaps.push(fp.gap());
        let col = expand_columns(&fp.empirical_col, &compressed.representatives, spec.matrices.cols());
        let finish = |fixed_point: f64, converged: bool, capped: bool, trace, gaps| {
            Ok(RecursiveSolveResult {
                fixed_point,
                trace,
                gap_trace: gaps,
                row_strategy: row.clone(),
                col_strategy: col.clone(),
                converged,
                capped_by_t2: capped,
                inner_converged,
            })
        };

        if n == 0 && next <= start && opts.start == StartValue::TerminationFee {
            // entering play cannot beat paying the fee
            return finish(start, true, false, trace, gaps);
        }
        if next > opts.divergence_ceiling || !next.is_finite() {
            return Err(Error::Divergence { ceiling: opts.divergence_ceiling, trace });
        }
        if next >= spec.termination_fee_t2 {
            return finish(spec.termination_fee_t2, true, true, trace, gaps);
        }
        if (next - v).abs() <= opts.tolerance {
            return finish(next, true, false, trace, gaps);
        }
        v = next;
        previous = Some(row.clone());
        if n + 1 == opts.max_iterations {
            return finish(v, false, false, trace, gaps);
        }
    }
    Err(Error::InvalidInput("max_iterations must be at least 1".into()))
}

/// Payoff `strategy` guarantees in `a`: the minimum over columns.
fn guaranteed(a: &ndarray::Array2<f64>, strategy: &MixedStrategy) -> f64 {
    col_payoffs(a.view(), strategy).into_iter().fold(f64::INFINITY, f64::min)
}

fn expand_columns(s: &MixedStrategy, representatives: &[usize], cols: usize) -> MixedStrategy {
    let mut w = vec![0.0; cols];
    for (k, weight) in s.support() {
        w[representatives[k]] = weight;
    }
    MixedStrategy::from_counts(&w).expect("strategy has positive mass")
}

/// `min_j x^T (A + B V)_j` for a fixed player-1 strategy.
pub fn restricted_value(matrices: &StakedBimatrix, strategy: &MixedStrategy, v: f64) -> f64 {
    guaranteed(&matrices.combined(v), strategy)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionCheck {
    pub strategy: MixedStrategy,
    pub v_star: f64,
    pub v_upper: f64,
    pub epsilon: f64,
    pub holds: bool,
}

/// Rounding allowance on the weak inequality at `v_upper`.
const TRANSITION_SLACK: f64 = 1e-12;

/// Checks that `strategy` strictly improves on `v_star` and does not lose
/// ground at `v_upper`; by concavity of the restricted map in `V` this
/// covers the whole interval.
pub fn check_transition(
    spec: &RecursiveGameSpec,
    strategy: &MixedStrategy,
    v_star: f64,
    v_upper: f64,
) -> Result<TransitionCheck> {
    if strategy.len() != spec.matrices.rows() {
        return Err(Error::InvalidInput(format!(
            "strategy over {} rows, matrix has {}",
            strategy.len(),
            spec.matrices.rows()
        )));
    }
    if v_star > v_upper {
        return Err(Error::InvalidInput(format!("v_star {v_star} above v_upper {v_upper}")));
    }
    let at_star = restricted_value(&spec.matrices, strategy, v_star);
    let at_upper = restricted_value(&spec.matrices, strategy, v_upper);
    let epsilon = at_star - v_star;
    let holds = if v_star == v_upper {
        (at_star - v_star).abs() <= TRANSITION_SLACK
    } else {
        epsilon > 0.0 && at_upper >= v_upper - TRANSITION_SLACK
    };
    Ok(TransitionCheck { strategy: strategy.clone(), v_star, v_upper, epsilon, holds })
}

/// `(1 - epsilon)^n (v_upper - v_star)`.
pub fn geometric_bound(epsilon: f64, v_star: f64, v_upper: f64, n: u32) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} outside (0, 1)")));
    }
    if v_star > v_upper {
        return Err(Error::InvalidInput(format!("v_star {v_star} above v_upper {v_upper}")));
    }
    Ok((1.0 - epsilon).powi(n as i32) * (v_upper - v_star))
}

/// `W_0 = v_start`, `W_{n+1} = min_j x^T (A + B W_n)` under a fixed strategy.
pub fn restricted_iteration(
    matrices: &StakedBimatrix,
    strategy: &MixedStrategy,
    v_start: f64,
    steps: usize,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut w = v_start;
    out.push(w);
    for _ in 0..steps {
        w = restricted_value(matrices, strategy, w);
        out.push(w);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractionCheck {
    pub attracting: bool,
    pub probes: Vec<AttractionProbe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractionProbe {
    pub offset: f64,
    /// Upper bound on `T(V + offset) - (V + offset)`.
    pub margin: f64,
    pub ratio: f64,
}

/// Evaluates `T(V + d) - (V + d)` for each offset `d`; the map attracts
/// from above when every margin is negative. `T` is bounded above by the
/// fictitious-play upper bracket, so a negative margin is conclusive.
pub fn check_attraction_above(
    spec: &RecursiveGameSpec,
    fixed_point: f64,
    probe_offsets: &[f64],
    fp: &FpOptions,
) -> Result<AttractionCheck> {
    let compressed = spec.matrices.compress_columns();
    let mut probes = Vec::with_capacity(probe_offsets.len());
    for &d in probe_offsets {
        if !(d > 0.0) {
            return Err(Error::InvalidInput(format!("probe offset {d} must be positive")));
        }
        let v = fixed_point + d;
        let r = fictitious_play(compressed.matrices.combined(v).view(), fp)?;
        let margin = r.value_upper - v;
        probes.push(AttractionProbe { offset: d, margin, ratio: margin / d });
    }
    Ok(AttractionCheck { attracting: probes.iter().all(|p| p.margin < 0.0), probes })
}

/// Fixed points of `T(V) = max_i (alpha_i + beta_i V)` (an `m x 1` game)
/// in `[lo, hi]`, located by sign changes of `T(V) - V` on `samples`
/// points and refined by bisection.
pub fn column_game_fixed_points(
    alpha: &[f64],
    beta: &[f64],
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<Vec<f64>> {
    if alpha.is_empty() || alpha.len() != beta.len() {
        return Err(Error::InvalidInput("alpha and beta must be nonempty and equal length".into()));
    }
    if !(lo < hi) || samples < 2 {
        return Err(Error::InvalidInput("need lo < hi and at least 2 samples".into()));
    }
    let f = |v: f64| {
        alpha.iter().zip(beta).map(|(a, b)| a + b * v).fold(f64::NEG_INFINITY, f64::max) - v
    };
    let mut roots: Vec<f64> = Vec::new();
    let step = (hi - lo) / (samples - 1) as f64;
    let mut x0 = lo;
    let mut f0 = f(x0);
    for k in 1..samples {
        let x1 = if k == samples - 1 { hi } else { lo + step * k as f64 };
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = f(mid);
                if fm == 0.0 || b - a < 1e-15 * (1.0 + mid.abs()) {
                    a = mid;
                    b = mid;
                    break;
                }
                if fa * fm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        roots.push(x0);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= step);
    Ok(roots)
}
