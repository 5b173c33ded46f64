//! Two-player zero-sum matrix games: discrete fictitious play with a
//! duality-gap stopping rule, an exact support-enumeration oracle for small
//! matrices, and the duality gap of a strategy pair.
//!
//! The row player maximizes, the column player minimizes `x^T A y`.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MixedStrategy;

pub const DEFAULT_GAP_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_MAX_ITERATIONS: u64 = 1_000_000;
/// Largest `min(rows, cols)` accepted by [`exact_minimax`].
pub const ORACLE_LIMIT: usize = 8;
const ORACLE_MAX_CANDIDATES: u128 = 20_000_000;
const ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FpOptions {
    pub max_iterations: u64,
    pub gap_tolerance: f64,
    pub seed: u64,
    /// Keep every `(row, column)` play in [`FpResult::plays`].
    #[serde(default)]
    pub record_plays: bool,
}

impl Default for FpOptions {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            gap_tolerance: DEFAULT_GAP_TOLERANCE,
            seed: 0,
            record_plays: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub iteration: u64,
    pub gap: f64,
    pub value_lower: f64,
    pub value_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpResult {
    pub empirical_row: MixedStrategy,
    pub empirical_col: MixedStrategy,
    /// `min_j` of `empirical_row`'s payoff: a guaranteed lower bound on the value.
    pub value_lower: f64,
    /// `max_i` of the payoff against `empirical_col`.
    pub value_upper: f64,
    pub gap_trace: Vec<GapPoint>,
    pub iterations_used: u64,
    pub seed: u64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plays: Option<Vec<(usize, usize)>>,
}

impl FpResult {
    pub fn gap(&self) -> f64 {
        self.value_upper - self.value_lower
    }

    pub fn value_mid(&self) -> f64 {
        0.5 * (self.value_lower + self.value_upper)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxSolution {
    pub value: f64,
    pub row_strategy: MixedStrategy,
    pub col_strategy: MixedStrategy,
}

/// Index of the largest (or smallest) entry, ties broken uniformly at
/// random by reservoir sampling. Returns the index and the best value.
pub(crate) fn select_best<R: Rng>(
    values: impl IntoIterator<Item = f64>,
    maximize: bool,
    rng: &mut R,
) -> (usize, f64) {
    let mut best = 0;
    let mut best_value = if maximize { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut ties = 0u32;
    for (i, v) in values.into_iter().enumerate() {
        let improves = if maximize { v > best_value } else { v < best_value };
        if improves {
            best = i;
            best_value = v;
            ties = 1;
        } else if v == best_value {
            ties += 1;
            if rng.gen_range(0..ties) == 0 {
                best = i;
            }
        }
    }
    (best, best_value)
}

/// Iterations at which [`GapPoint`]s are recorded: 1, 2, ... 16, then
/// roughly 5% apart.
pub(crate) struct Checkpoints {
    next: u64,
}

impl Checkpoints {
    pub(crate) fn new() -> Self {
        Self { next: 1 }
    }

    pub(crate) fn due(&mut self, t: u64) -> bool {
        if t < self.next {
            return false;
        }
        self.next = (t + 1).max(t + t / 20);
        true
    }
}

/// Simultaneous discrete fictitious play.
///
/// Both sides open with a uniformly random pure strategy; afterwards each
/// adds a best response to the other's empirical frequencies. Every
/// iterate's empirical strategies bound the value from either side; the
/// result keeps the tightest bounds seen and the strategies attaining them.
/// Stops once `value_upper - value_lower <= gap_tolerance` or at the
/// iteration cap (then `converged` is false).
pub fn fictitious_play(a: ArrayView2<'_, f64>, opts: &FpOptions) -> Result<FpResult> {
    let (rows, cols) = a.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidInput("empty payoff matrix".into()));
    }
    if opts.max_iterations == 0 {
        return Err(Error::InvalidInput("max_iterations must be at least 1".into()));
    }
    if let Some(x) = a.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite payoff {x}")));
    }
    let row_major = a.as_standard_layout().into_owned();
    let col_major = a.t().as_standard_layout().into_owned();
    let row_major = row_major.as_slice().expect("standard layout");
    let col_major = col_major.as_slice().expect("standard layout");

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut row_play = rng.gen_range(0..rows);
    let mut col_play = rng.gen_range(0..cols);
    let mut row_counts = vec![0u64; rows];
    let mut col_counts = vec![0u64; cols];
    // payoff of each row against the column history, and of each column
    // against the row history
    let mut row_sums = vec![0.0; rows];
    let mut col_sums = vec![0.0; cols];
    let mut trace = Vec::new();
    let mut checkpoints = Checkpoints::new();
    // best bracket so far, with the empirical strategies attaining it
    let mut best_lower = f64::NEG_INFINITY;
    let mut best_upper = f64::INFINITY;
    let mut best_row_counts = row_counts.clone();
    let mut best_col_counts = col_counts.clone();

    let mut plays = opts.record_plays.then(Vec::new);

    let mut t = 0u64;
    loop {
        t += 1;
        if let Some(p) = plays.as_mut() {
            p.push((row_play, col_play));
        }
        row_counts[row_play] += 1;
        col_counts[col_play] += 1;
        let column = &col_major[col_play * rows..(col_play + 1) * rows];
        row_sums.iter_mut().zip(column).for_each(|(s, x)| *s += x);
        let row = &row_major[row_play * cols..(row_play + 1) * cols];
        col_sums.iter_mut().zip(row).for_each(|(s, x)| *s += x);

        let (next_row, upper_sum) = select_best(row_sums.iter().copied(), true, &mut rng);
        let (next_col, lower_sum) = select_best(col_sums.iter().copied(), false, &mut rng);
        let tf = t as f64;
        if lower_sum / tf > best_lower {
            best_lower = lower_sum / tf;
            best_row_counts.copy_from_slice(&row_counts);
        }
        if upper_sum / tf < best_upper {
            best_upper = upper_sum / tf;
            best_col_counts.copy_from_slice(&col_counts);
        }
        let gap = best_upper - best_lower;
        let done = gap <= opts.gap_tolerance || t >= opts.max_iterations;
        if checkpoints.due(t) || done {
            trace.push(GapPoint {
                iteration: t,
                gap,
                value_lower: best_lower,
                value_upper: best_upper,
            });
        }
        if done {
            let to_f = |c: &[u64]| c.iter().map(|&k| k as f64).collect::<Vec<_>>();
            return Ok(FpResult {
                empirical_row: MixedStrategy::from_counts(&to_f(&best_row_counts))?,
                empirical_col: MixedStrategy::from_counts(&to_f(&best_col_counts))?,
                value_lower: best_lower,
                value_upper: best_upper,
                gap_trace: trace,
                iterations_used: t,
                seed: opts.seed,
                converged: gap <= opts.gap_tolerance,
                plays,
            });
        }
        row_play = next_row;
        col_play = next_col;
    }
}

/// Payoff of each row against `col`: `A y`.
pub fn row_payoffs(a: ArrayView2<'_, f64>, col: &MixedStrategy) -> Vec<f64> {
    a.rows().into_iter().map(|r| col.support().map(|(j, w)| w * r[j]).sum()).collect()
}

/// Payoff of each column against `row`: `x^T A`.
pub fn col_payoffs(a: ArrayView2<'_, f64>, row: &MixedStrategy) -> Vec<f64> {
    let mut out = vec![0.0; a.ncols()];
    for (i, w) in row.support() {
        out.iter_mut().zip(a.row(i)).for_each(|(o, x)| *o += w * x);
    }
    out
}

/// `max_i (A y)_i - min_j (x^T A)_j`; zero exactly at a saddle point.
pub fn duality_gap(
    a: ArrayView2<'_, f64>,
    row: &MixedStrategy,
    col: &MixedStrategy,
) -> Result<f64> {
    if row.len() != a.nrows() || col.len() != a.ncols() {
        return Err(Error::InvalidInput(format!(
            "strategy lengths ({}, {}) do not match matrix {:?}",
            row.len(),
            col.len(),
            a.dim()
        )));
    }
    let best_row = row_payoffs(a, col).into_iter().fold(f64::NEG_INFINITY, f64::max);
    let best_col = col_payoffs(a, row).into_iter().fold(f64::INFINITY, f64::min);
    Ok(best_row - best_col)
}

/// Exact value and optimal strategies by enumerating square supports.
///
/// Every matrix game has an optimal pair supported on a square submatrix
/// whose bordered system is nonsingular, so the search over equal-size
/// supports (smallest first) always succeeds.
pub fn exact_minimax(a: ArrayView2<'_, f64>) -> Result<MinimaxSolution> {
    let (rows, cols) = a.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidInput("empty payoff matrix".into()));
    }
    let small = rows.min(cols);
    let candidates: u128 = (1..=small).map(|k| binomial(rows, k) * binomial(cols, k)).sum();
    if small > ORACLE_LIMIT || candidates > ORACLE_MAX_CANDIDATES {
        return Err(Error::OracleScale { rows, cols, limit: ORACLE_LIMIT });
    }
    let scale = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = ORACLE_TOL * scale;
    for k in 1..=small {
        for rs in combinations(rows, k) {
            for cs in combinations(cols, k) {
                let Some((x, y, v)) = solve_square(a, &rs, &cs) else { continue };
                if x.iter().chain(&y).any(|&w| w < -tol) {
                    continue;
                }
                let mut xf = vec![0.0; rows];
                rs.iter().zip(&x).for_each(|(&i, &w)| xf[i] = w.max(0.0));
                let mut yf = vec![0.0; cols];
                cs.iter().zip(&y).for_each(|(&j, &w)| yf[j] = w.max(0.0));
                let (Ok(xs), Ok(ys)) = (MixedStrategy::from_counts(&xf), MixedStrategy::from_counts(&yf))
                else {
                    continue;
                };
                let rp = row_payoffs(a, &ys);
                let cp = col_payoffs(a, &xs);
                if rp.iter().all(|&p| p <= v + tol) && cp.iter().all(|&p| p >= v - tol) {
                    return Ok(MinimaxSolution { value: v, row_strategy: xs, col_strategy: ys });
                }
            }
        }
    }
    Err(Error::InvalidInput("support enumeration found no equilibrium".into()))
}

/// Solves `x^T S = v 1`, `S y = v 1`, `sum x = sum y = 1` on the submatrix `S`.
fn solve_square(
    a: ArrayView2<'_, f64>,
    rs: &[usize],
    cs: &[usize],
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let k = rs.len();
    let sub = Array2::from_shape_fn((k, k), |(i, j)| a[[rs[i], cs[j]]]);
    let x = solve_bordered(&sub.t().to_owned())?;
    let y = solve_bordered(&sub)?;
    let v = x[k];
    if (v - y[k]).abs() > 1e-7 * (1.0 + v.abs()) {
        return None;
    }
    Some((x[..k].to_vec(), y[..k].to_vec(), v))
}

/// Solves `[M -1; 1^T 0] [w; v] = [0; 1]` by Gaussian elimination.
fn solve_bordered(m: &Array2<f64>) -> Option<Vec<f64>> {
    let k = m.nrows();
    let n = k + 1;
    let mut aug = Array2::<f64>::zeros((n, n + 1));
    for i in 0..k {
        for j in 0..k {
            aug[[i, j]] = m[[i, j]];
        }
        aug[[i, k]] = -1.0;
    }
    for j in 0..k {
        aug[[k, j]] = 1.0;
    }
    aug[[k, n]] = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&p, &q| aug[[p, col]].abs().total_cmp(&aug[[q, col]].abs()))?;
        if aug[[pivot, col]].abs() < 1e-12 {
            return None;
        }
        if pivot != col {
            for c in 0..=n {
                aug.swap([pivot, c], [col, c]);
            }
        }
        for r in 0..n {
            if r != col {
                let f = aug[[r, col]] / aug[[col, col]];
                if f != 0.0 {
                    for c in col..=n {
                        aug[[r, c]] -= f * aug[[col, c]];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| aug[[i, n]] / aug[[i, i]]).collect())
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let c = current.as_mut().expect("checked");
        let mut i = k;
        loop {
            if i == 0 {
                current = None;
                break;
            }
            i -= 1;
            if c[i] < n - k + i {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    })
}
