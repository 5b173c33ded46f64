//! Player 1 vs. coalition payoff matrices.

use ndarray::Array2;
use rayon::prelude::*;

use super::pseudo_bloc::{alpha_pseudo_bloc, beta_pseudo_bloc, PseudoBlocProfile};
use super::{alpha_first, beta_by_holder_count, RuleVariant, WeenieStakes};
use crate::error::{Error, Result};
use crate::model::{CoalitionIndex, Grid, StakedBimatrix};

pub const DEFAULT_MEMORY_BUDGET_BYTES: u64 = 2 << 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Bytes allowed for the two f64 matrices together.
    pub memory_budget_bytes: u64,
    pub weenie_stakes: WeenieStakes,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET_BYTES,
            weenie_stakes: WeenieStakes::default(),
        }
    }
}

impl BuildOptions {
    fn check_cells(&self, rows: usize, cols: u128) -> Result<()> {
        let required = rows as u128 * cols;
        let budget = self.memory_budget_bytes as u128 / 16;
        if required > budget {
            return Err(Error::ResourceBudget { required_cells: required, budget_cells: budget });
        }
        Ok(())
    }
}

/// `M x M^(n-1)` matrices over every coalition tuple; column `c` holds the
/// tuple decoded by [`CoalitionIndex`] with coalition size `n - 1`.
///
/// Player 1's payoff is symmetric in the coalition members, so entries are
/// computed once per sorted tuple and copied to its permutations.
pub fn build_full_matrices(
    n: usize,
    grid: &Grid,
    rule: RuleVariant,
    opts: &BuildOptions,
) -> Result<StakedBimatrix> {
    if n < 2 {
        return Err(Error::InvalidProfile(format!("need at least 2 players, got {n}")));
    }
    let m = grid.mesh_points();
    let cols = (m as u128).checked_pow((n - 1) as u32).unwrap_or(u128::MAX);
    opts.check_cells(m, cols)?;
    let index = CoalitionIndex::new(n - 1, m)?;
    let cols = cols as usize;

    let canonical_of: Vec<usize> = (0..cols)
        .into_par_iter()
        .map(|c| {
            let mut tuple = index.decode_all(c).expect("column in range");
            tuple.sort_unstable();
            index.encode(&tuple).expect("sorted tuple in range")
        })
        .collect();
    let canonical: Vec<usize> = (0..cols).filter(|&c| canonical_of[c] == c).collect();

    let stakes = opts.weenie_stakes;
    let computed: Vec<(Vec<f64>, Vec<f64>)> = canonical
        .par_iter()
        .map(|&c| {
            let tuple = index.decode_all(c).expect("column in range");
            let mut t: Vec<f64> = Vec::with_capacity(n);
            t.push(0.0);
            t.extend(tuple.iter().map(|&j| grid.value(j)));
            (0..m)
                .map(|i| {
                    t[0] = grid.value(i);
                    (alpha_first(&t, rule), beta_by_holder_count(t.iter().copied(), rule, stakes))
                })
                .unzip()
        })
        .collect();

    let mut slot = vec![usize::MAX; cols];
    for (k, &c) in canonical.iter().enumerate() {
        slot[c] = k;
    }
    let mut alpha = vec![0.0; m * cols];
    let mut beta = vec![0.0; m * cols];
    alpha
        .par_chunks_mut(cols)
        .zip(beta.par_chunks_mut(cols))
        .enumerate()
        .for_each(|(i, (arow, brow))| {
            for c in 0..cols {
                let k = slot[canonical_of[c]];
                arow[c] = computed[k].0[i];
                brow[c] = computed[k].1[i];
            }
        });
    let alpha = Array2::from_shape_vec((m, cols), alpha).expect("shape");
    let beta = Array2::from_shape_vec((m, cols), beta).expect("shape");
    StakedBimatrix::new(alpha, beta)
}

/// `M x M^2` matrices with the coalition restricted to pseudo-bloc profiles;
/// column `j2 + jb * M` is player 2 at `grid[j2]` and the bloc at `grid[jb]`.
pub fn build_pseudo_bloc_matrices(
    n: usize,
    grid: &Grid,
    rule: RuleVariant,
    opts: &BuildOptions,
) -> Result<StakedBimatrix> {
    if n < 3 {
        return Err(Error::InvalidProfile(format!("pseudo-bloc needs n >= 3, got {n}")));
    }
    let m = grid.mesh_points();
    let cols = m * m;
    opts.check_cells(m, cols as u128)?;
    let stakes = opts.weenie_stakes;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..cols)
                .map(|c| {
                    let pb = PseudoBlocProfile {
                        p1: grid.value(i),
                        p2: grid.value(c % m),
                        bloc: grid.value(c / m),
                        n,
                    };
                    let a = alpha_pseudo_bloc(&pb, rule).expect("n >= 3 checked");
                    (a, beta_pseudo_bloc(&pb, rule, stakes))
                })
                .unzip()
        })
        .collect();
    let mut alpha = Vec::with_capacity(m * cols);
    let mut beta = Vec::with_capacity(m * cols);
    for (a, b) in rows {
        alpha.extend(a);
        beta.extend(b);
    }
    StakedBimatrix::new(
        Array2::from_shape_vec((m, cols), alpha).expect("shape"),
        Array2::from_shape_vec((m, cols), beta).expect("shape"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_grid;
    use crate::payoff::{alpha, beta, ThresholdProfile};
    use rand::{Rng, SeedableRng};

    #[test]
    fn two_player_matrix_is_antisymmetric() {
        let g = make_grid(3).unwrap();
        let m = build_full_matrices(2, &g, RuleVariant::Standard, &BuildOptions::default()).unwrap();
        assert_eq!(m.alpha().dim(), (3, 3));
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.alpha()[[i, j]] + m.alpha()[[j, i]]).abs() < 1e-15);
                assert_eq!(m.beta()[[i, j]], m.beta()[[j, i]]);
            }
        }
    }

    #[test]
    fn three_player_indexing() {
        let g = make_grid(2).unwrap();
        let m = build_full_matrices(3, &g, RuleVariant::Standard, &BuildOptions::default()).unwrap();
        assert_eq!(m.alpha().dim(), (2, 4));
        let idx = CoalitionIndex::new(2, 2).unwrap();
        assert_eq!(idx.decode_all(3).unwrap(), vec![1, 1]);
        let g21 = make_grid(21).unwrap();
        let m = build_full_matrices(3, &g21, RuleVariant::Standard, &BuildOptions::default()).unwrap();
        let col = CoalitionIndex::new(2, 21).unwrap().encode(&[14, 14]).unwrap();
        assert!(m.alpha()[[14, col]].abs() < 1e-15);
    }

    #[test]
    fn full_entries_match_general_algorithm() {
        let g = make_grid(6).unwrap();
        for rule in [RuleVariant::Standard, RuleVariant::Weenie] {
            let m = build_full_matrices(4, &g, rule, &BuildOptions::default()).unwrap();
            let idx = CoalitionIndex::new(3, 6).unwrap();
            for i in 0..6 {
                for c in 0..m.cols() {
                    let mut t = vec![g.value(i)];
                    t.extend(idx.decode_all(c).unwrap().iter().map(|&j| g.value(j)));
                    let p = ThresholdProfile::new(t).unwrap();
                    assert!((m.alpha()[[i, c]] - alpha(&p, rule).unwrap()[0]).abs() < 1e-12);
                    let b = beta(&p, rule, WeenieStakes::Doubled).unwrap();
                    assert!((m.beta()[[i, c]] - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn pseudo_bloc_matches_full_for_three_players() {
        let g = make_grid(7).unwrap();
        for rule in [RuleVariant::Standard, RuleVariant::Weenie] {
            let full = build_full_matrices(3, &g, rule, &BuildOptions::default()).unwrap();
            let pb = build_pseudo_bloc_matrices(3, &g, rule, &BuildOptions::default()).unwrap();
            let d = (full.alpha() - pb.alpha()).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
            assert!(d < 1e-12, "max deviation {d}");
            let d = (full.beta() - pb.beta()).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn pseudo_bloc_sampled_cells_match_general() {
        let g = make_grid(21).unwrap();
        let m = build_pseudo_bloc_matrices(5, &g, RuleVariant::Standard, &BuildOptions::default())
            .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let i = rng.gen_range(0..21);
            let c = rng.gen_range(0..441);
            let t = vec![g.value(i), g.value(c % 21), g.value(c / 21), g.value(c / 21), g.value(c / 21)];
            let p = ThresholdProfile::new(t).unwrap();
            let a = alpha(&p, RuleVariant::Standard).unwrap()[0];
            assert!((m.alpha()[[i, c]] - a).abs() < 1e-12);
        }
    }

    #[test]
    fn all_drop_cell_redeals() {
        let g = make_grid(2).unwrap();
        let m = build_pseudo_bloc_matrices(4, &g, RuleVariant::Standard, &BuildOptions::default())
            .unwrap();
        let c = 1 + 1 * 2;
        assert_eq!(m.alpha()[[1, c]], 0.0);
        assert_eq!(m.beta()[[1, c]], 1.0);
    }

    #[test]
    fn budget_is_enforced() {
        let g = make_grid(101).unwrap();
        let opts = BuildOptions { memory_budget_bytes: 1 << 20, ..Default::default() };
        match build_full_matrices(4, &g, RuleVariant::Standard, &opts) {
            Err(Error::ResourceBudget { required_cells, .. }) => {
                assert_eq!(required_cells, 101u128.pow(4))
            }
            other => panic!("expected budget error, got {other:?}"),
        }
        assert!(build_pseudo_bloc_matrices(2, &g, RuleVariant::Standard, &opts).is_err());
    }
}
