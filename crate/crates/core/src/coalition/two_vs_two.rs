//! Four players split into two coalitions of two.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SolveOptions, SupportPoint, DEFAULT_PRUNE_THRESHOLD};
use crate::error::{Error, Result};
use crate::model::{make_grid, Grid, MixedStrategy, StakedBimatrix};
use crate::payoff::{alpha, beta, RuleVariant, ThresholdProfile};
use crate::recursive::{value_iteration, RecursiveGameSpec};

/// Largest mesh accepted (the matrix is `M^2 x M^2`).
pub const MAX_TWO_VS_TWO_MESH: usize = 31;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoVsTwoSolution {
    pub mesh: usize,
    /// Joint value forced by the first coalition (players 1 and 2).
    pub value: f64,
    pub first_support: Vec<SupportPoint>,
    pub second_support: Vec<SupportPoint>,
    pub trace: Vec<f64>,
    pub converged: bool,
}

impl TwoVsTwoSolution {
    /// Total weight of support points with both thresholds in `[lo, hi]`.
    pub fn bloc_weight(support: &[SupportPoint], lo: f64, hi: f64) -> f64 {
        support
            .iter()
            .filter(|p| p.thresholds.iter().all(|t| (lo - 1e-12..=hi + 1e-12).contains(t)))
            .map(|p| p.weight)
            .sum()
    }
}

/// Pair `(i1, i2)` is strategy `i1 + i2 * M` on either side. The first
/// coalition's payoff is the sum of its members' `alpha`; its termination
/// fee is both members' ante.
pub fn build_two_vs_two_matrices(grid: &Grid, rule: RuleVariant) -> Result<StakedBimatrix> {
    let m = grid.mesh_points();
    let side = m * m;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..side)
        .into_par_iter()
        .map(|r| {
            (0..side)
                .map(|c| {
                    let t = vec![
                        grid.value(r % m),
                        grid.value(r / m),
                        grid.value(c % m),
                        grid.value(c / m),
                    ];
                    let p = ThresholdProfile::new(t).expect("grid thresholds");
                    let a = alpha(&p, rule).expect("four players");
                    (a[0] + a[1], beta(&p, rule, Default::default()).expect("four players"))
                })
                .unzip()
        })
        .collect();
    let (alpha_rows, beta_rows): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    StakedBimatrix::from_rows(&alpha_rows, &beta_rows)
}

pub fn solve_two_vs_two(mesh: usize, rule: RuleVariant, opts: &SolveOptions) -> Result<TwoVsTwoSolution> {
    if mesh > MAX_TWO_VS_TWO_MESH {
        return Err(Error::ResourceBudget {
            required_cells: (mesh as u128).pow(4),
            budget_cells: (MAX_TWO_VS_TWO_MESH as u128).pow(4),
        });
    }
    let grid = make_grid(mesh)?;
    let matrices = build_two_vs_two_matrices(&grid, rule)?;
    let spec = RecursiveGameSpec::new(matrices, 2.0, f64::INFINITY);
    let solved = value_iteration(&spec, &opts.iteration)?;
    Ok(TwoVsTwoSolution {
        mesh,
        value: solved.fixed_point,
        first_support: decode_pairs(&solved.row_strategy, &grid),
        second_support: decode_pairs(&solved.col_strategy, &grid),
        trace: solved.trace,
        converged: solved.converged,
    })
}

fn decode_pairs(s: &MixedStrategy, grid: &Grid) -> Vec<SupportPoint> {
    let m = grid.mesh_points();
    let mut out: Vec<SupportPoint> = s
        .pruned(DEFAULT_PRUNE_THRESHOLD)
        .support()
        .map(|(column, weight)| {
            let mut indices = vec![column % m, column / m];
            indices.sort_unstable();
            SupportPoint {
                column,
                thresholds: indices.iter().map(|&j| grid.value(j)).collect(),
                indices,
                weight,
            }
        })
        .collect();
    out.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.column.cmp(&b.column)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_split_is_near_fair() {
        let s = solve_two_vs_two(5, RuleVariant::Standard, &SolveOptions::default()).unwrap();
        assert!(s.value.is_finite() && s.value.abs() < 0.1, "{}", s.value);
        let w: f64 = s.first_support.iter().map(|p| p.weight).sum();
        assert!((w - 1.0).abs() < 1e-9);
    }

    #[test]
    fn matrix_is_antisymmetric_under_side_swap() {
        let g = make_grid(4).unwrap();
        let m = build_two_vs_two_matrices(&g, RuleVariant::Standard).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                assert!((m.alpha()[[r, c]] + m.alpha()[[c, r]]).abs() < 1e-12);
                assert!((m.beta()[[r, c]] - m.beta()[[c, r]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oversized_mesh_rejected() {
        assert!(solve_two_vs_two(32, RuleVariant::Standard, &SolveOptions::default()).is_err());
    }
}
