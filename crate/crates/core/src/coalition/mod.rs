//! Player 1 against a coalition of the other `n - 1` players: full and
//! pseudo-bloc solves, the strategy table over coalition sizes, the
//! rational fit of the coalition's value, Nash thresholds, the Weenie
//! optimality scan and the two-against-two split.

mod fit;
mod two_vs_two;
mod weenie;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{make_grid, CoalitionIndex, Grid, MixedStrategy, StakedBimatrix};
use crate::payoff::{build_full_matrices, build_pseudo_bloc_matrices, BuildOptions, RuleVariant};
use crate::recursive::{value_iteration, RecursiveGameSpec, RecursiveSolveResult, ValueIterationOptions};

pub use fit::{fit_rational, RationalFit};
pub use two_vs_two::{solve_two_vs_two, TwoVsTwoSolution};
pub use weenie::{verify_weenie_optimality, WeenieScan};

/// Support weights below this are dropped before decoding.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    Full,
    PseudoBloc,
}

impl fmt::Display for SolveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMode::Full => "full",
            SolveMode::PseudoBloc => "pseudo-bloc",
        })
    }
}

impl FromStr for SolveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "full" => Ok(SolveMode::Full),
            "pseudo-bloc" | "pseudobloc" => Ok(SolveMode::PseudoBloc),
            other => Err(Error::InvalidInput(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveOptions {
    pub iteration: ValueIterationOptions,
    #[serde(skip)]
    pub build: BuildOptions,
}

/// One point of a decoded coalition mixed strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    /// Coalition column in the solved matrix.
    pub column: usize,
    /// Grid index of each coalition member's threshold.
    pub indices: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub weight: f64,
}

/// The strategy columns of one table row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub player1: f64,
    pub bloc: Option<f64>,
    pub pseudo_bloc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalitionSolution {
    /// Total players, including player 1.
    pub n: usize,
    pub mesh: usize,
    pub mode: SolveMode,
    pub rule: RuleVariant,
    /// Value the coalition can force: minus player 1's fixed point.
    pub opponent_value: f64,
    pub player1_strategy: MixedStrategy,
    pub coalition_strategy: MixedStrategy,
    /// Pruned support, heaviest first.
    pub decoded_support: Vec<SupportPoint>,
    pub summary: StrategySummary,
    pub trace: Vec<f64>,
    pub gap_trace: Vec<f64>,
    pub converged: bool,
    pub inner_converged: bool,
}

impl CoalitionSolution {
    /// Coalition size, the `N` of the strategy table.
    pub fn coalition_size(&self) -> usize {
        self.n - 1
    }
}

fn matrices_for(
    n: usize,
    grid: &Grid,
    mode: SolveMode,
    rule: RuleVariant,
    build: &BuildOptions,
) -> Result<StakedBimatrix> {
    match mode {
        SolveMode::Full => build_full_matrices(n, grid, rule, build),
        SolveMode::PseudoBloc => build_pseudo_bloc_matrices(n, grid, rule, build),
    }
}

/// Grid indices of every coalition member for a column.
pub fn decode_coalition_column(n: usize, mesh: usize, mode: SolveMode, column: usize) -> Result<Vec<usize>> {
    match mode {
        SolveMode::Full => CoalitionIndex::new(n - 1, mesh)?.decode_all(column),
        SolveMode::PseudoBloc => {
            if column >= mesh * mesh {
                return Err(Error::Index(format!("pseudo-bloc column {column} out of range")));
            }
            let mut t = vec![column % mesh];
            t.extend(std::iter::repeat(column / mesh).take(n - 2));
            Ok(t)
        }
    }
}

/// Solves the recursive 1-v-(n-1) game with `t1 = 1` and decodes the
/// coalition's support.
pub fn solve_one_vs_n(
    n: usize,
    mesh: usize,
    mode: SolveMode,
    rule: RuleVariant,
    opts: &SolveOptions,
) -> Result<CoalitionSolution> {
    let grid = make_grid(mesh)?;
    if n < 2 {
        return Err(Error::InvalidProfile(format!("need at least 2 players, got {n}")));
    }
    let matrices = matrices_for(n, &grid, mode, rule, &opts.build)?;
    let solved = value_iteration(&RecursiveGameSpec::with_unit_fee(matrices), &opts.iteration)?;
    summarize(n, &grid, mode, rule, solved)
}

fn summarize(
    n: usize,
    grid: &Grid,
    mode: SolveMode,
    rule: RuleVariant,
    solved: RecursiveSolveResult,
) -> Result<CoalitionSolution> {
    let mesh = grid.mesh_points();
    let pruned = solved.col_strategy.pruned(DEFAULT_PRUNE_THRESHOLD);
    let mut decoded_support = pruned
        .support()
        .map(|(column, weight)| {
            let mut indices = decode_coalition_column(n, mesh, mode, column)?;
            if mode == SolveMode::Full {
                indices.sort_unstable();
            }
            let thresholds = indices.iter().map(|&j| grid.value(j)).collect();
            Ok(SupportPoint { column, indices, thresholds, weight })
        })
        .collect::<Result<Vec<_>>>()?;
    decoded_support.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.column.cmp(&b.column)));
    let player1 = grid.value(solved.row_strategy.pruned(DEFAULT_PRUNE_THRESHOLD).mode());
    let summary = StrategySummary {
        player1,
        bloc: bloc_threshold(&decoded_support),
        pseudo_bloc: if n >= 3 { pseudo_bloc_threshold(&decoded_support, mode) } else { None },
    };
    Ok(CoalitionSolution {
        n,
        mesh,
        mode,
        rule,
        opponent_value: -solved.fixed_point,
        player1_strategy: solved.row_strategy,
        coalition_strategy: solved.col_strategy,
        decoded_support,
        summary,
        trace: solved.trace,
        gap_trace: solved.gap_trace,
        converged: solved.converged,
        inner_converged: solved.inner_converged,
    })
}

/// Mean threshold of the heaviest support point whose members' thresholds
/// lie within one grid step of each other.
fn bloc_threshold(support: &[SupportPoint]) -> Option<f64> {
    support
        .iter()
        .find(|p| {
            let lo = p.indices.iter().min().expect("nonempty coalition");
            let hi = p.indices.iter().max().expect("nonempty coalition");
            hi - lo <= 1
        })
        .map(|p| p.thresholds.iter().sum::<f64>() / p.thresholds.len() as f64)
}

/// Bloc component of the heaviest support point in which one member
/// always holds (threshold 0).
fn pseudo_bloc_threshold(support: &[SupportPoint], mode: SolveMode) -> Option<f64> {
    support.iter().find_map(|p| match mode {
        SolveMode::PseudoBloc => (p.indices[0] == 0).then(|| p.thresholds[1]),
        SolveMode::Full => {
            let zero = p.indices.iter().position(|&j| j == 0)?;
            let rest: Vec<f64> =
                p.thresholds.iter().enumerate().filter(|(k, _)| *k != zero).map(|(_, t)| *t).collect();
            Some(rest.iter().sum::<f64>() / rest.len() as f64)
        }
    })
}

/// Solves every coalition size in `coalition_sizes` (the table's `N`):
/// pseudo-bloc mode for `N >= 2`, the plain two-player game for `N = 1`.
pub fn run_table(
    coalition_sizes: &[usize],
    mesh: usize,
    rule: RuleVariant,
    opts: &SolveOptions,
) -> Result<Vec<CoalitionSolution>> {
    coalition_sizes
        .par_iter()
        .map(|&size| {
            if size == 0 {
                return Err(Error::InvalidInput("coalition size must be at least 1".into()));
            }
            let mode = if size == 1 { SolveMode::Full } else { SolveMode::PseudoBloc };
            solve_one_vs_n(size + 1, mesh, mode, rule, opts)
        })
        .collect()
}

/// Symmetric Nash threshold: `2^(-1/(n-1))` for the standard rule and
/// `3^(-1/(n-1))` under the Weenie rule.
pub fn nash_threshold(n: usize, rule: RuleVariant) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidProfile(format!("need at least 2 players, got {n}")));
    }
    let base: f64 = match rule {
        RuleVariant::Standard => 2.0,
        RuleVariant::Weenie => 3.0,
    };
    Ok(base.powf(-1.0 / (n - 1) as f64))
}
