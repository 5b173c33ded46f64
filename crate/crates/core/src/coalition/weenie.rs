//! Grid scan of player 1's payoff at the Weenie Nash threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nash_threshold;
use crate::error::{Error, Result};
use crate::model::make_grid;
use crate::payoff::{alpha_first, RuleVariant};

/// Sorted coalition tuples scanned at most.
const MAX_SCANNED_TUPLES: u128 = 200_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeenieScan {
    pub n: usize,
    pub mesh: usize,
    pub player1_threshold: f64,
    pub min_value: f64,
    /// Coalition thresholds attaining the minimum.
    pub argmin: Vec<f64>,
    pub argmin_indices: Vec<usize>,
    pub tuples_scanned: u64,
}

/// Minimum over every coalition threshold tuple on the `mesh` grid of
/// player 1's one-shot payoff when player 1 plays `3^(-1/(n-1))`.
///
/// Player 1's payoff is symmetric in the coalition's thresholds, so only
/// nondecreasing tuples are visited.
pub fn verify_weenie_optimality(n: usize, mesh: usize) -> Result<WeenieScan> {
    let grid = make_grid(mesh)?;
    let p1 = nash_threshold(n, RuleVariant::Weenie)?;
    let k = n - 1;
    let tuples = multiset_count(mesh, k);
    if tuples > MAX_SCANNED_TUPLES {
        return Err(Error::ResourceBudget {
            required_cells: tuples,
            budget_cells: MAX_SCANNED_TUPLES,
        });
    }
    let values = grid.values();
    // fix the first member, scan the rest sequentially
    let best = (0..mesh)
        .into_par_iter()
        .map(|first| {
            let mut tuple = vec![first; k];
            let mut t = vec![p1; n];
            let mut best = (f64::INFINITY, tuple.clone());
            let mut count = 0u64;
            loop {
                for (slot, &j) in t[1..].iter_mut().zip(&tuple) {
                    *slot = values[j];
                }
                let v = alpha_first(&t, RuleVariant::Weenie);
                count += 1;
                if v < best.0 {
                    best = (v, tuple.clone());
                }
                if !advance(&mut tuple[1..], mesh) {
                    break;
                }
            }
            (best, count)
        })
        .reduce(
            || ((f64::INFINITY, Vec::new()), 0),
            |(a, ca), (b, cb)| (if b.0 < a.0 { b } else { a }, ca + cb),
        );
    let ((min_value, argmin_indices), tuples_scanned) = best;
    Ok(WeenieScan {
        n,
        mesh,
        player1_threshold: p1,
        min_value,
        argmin: argmin_indices.iter().map(|&j| grid.value(j)).collect(),
        argmin_indices,
        tuples_scanned,
    })
}

/// Next nondecreasing tuple with entries below `mesh`.
fn advance(tuple: &mut [usize], mesh: usize) -> bool {
    let mut i = tuple.len();
    while i > 0 {
        i -= 1;
        if tuple[i] + 1 < mesh {
            let v = tuple[i] + 1;
            tuple[i..].iter_mut().for_each(|x| *x = v);
            return true;
        }
    }
    false
}

/// Number of nondecreasing `k`-tuples over `m` values.
fn multiset_count(m: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (m + i) as u128 / (i + 1) as u128)
}
