//! Player-1 payoff against a pseudo-bloc coalition `(p2, b, b, ..., b)`.
//!
//! The `n - 2` bloc members share a threshold, so only the number of bloc
//! holders and the number of bloc certain-losers matter. Aggregating them
//! with binomial counts reduces the scenario enumeration to O(n^2).

use serde::{Deserialize, Serialize};

use super::{beta_by_holder_count, fair_return, weenie_share, RuleVariant, WeenieStakes};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoBlocProfile {
    pub p1: f64,
    pub p2: f64,
    pub bloc: f64,
    /// Total player count (player 1, player 2 and `n - 2` bloc members).
    pub n: usize,
}

impl PseudoBlocProfile {
    pub fn new(p1: f64, p2: f64, bloc: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidProfile(format!("pseudo-bloc needs n >= 3, got {n}")));
        }
        for p in [p1, p2, bloc] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProfile(format!("threshold {p} outside [0, 1]")));
            }
        }
        Ok(Self { p1, p2, bloc, n })
    }

    pub fn expanded(&self) -> Vec<f64> {
        let mut t = vec![self.p1, self.p2];
        t.extend(std::iter::repeat(self.bloc).take(self.n - 2));
        t
    }
}

/// Binomial coefficients `C(k, j)` for `j = 0..=k`, as floats.
fn binomial_row(k: usize) -> Vec<f64> {
    let mut row = vec![1.0; k + 1];
    for j in 1..k {
        row[j] = row[j - 1] * (k - j + 1) as f64 / j as f64;
    }
    row
}

/// Player 1's expected immediate return against the pseudo-bloc profile.
pub fn alpha_pseudo_bloc(pb: &PseudoBlocProfile, rule: RuleVariant) -> Result<f64> {
    if pb.n < 3 {
        return Err(Error::InvalidProfile(format!("pseudo-bloc needs n >= 3, got {}", pb.n)));
    }
    let mut v = alpha_pseudo_bloc_standard(pb);
    if rule == RuleVariant::Weenie {
        let k = (pb.n - 2) as u32;
        let all_drop = pb.p1 * pb.p2 * pb.bloc.powi(k as i32);
        v += all_drop - pb.n as f64 * weenie_share(pb.p1, &[(pb.p2, 1), (pb.bloc, k)]);
    }
    Ok(v)
}

fn alpha_pseudo_bloc_standard(pb: &PseudoBlocProfile) -> f64 {
    let n = pb.n;
    let k = n - 2;
    let (p1, p2, b) = (pb.p1, pb.p2, pb.bloc);
    let choose_k = binomial_row(k);
    let mut total = 0.0;
    for hold1 in [false, true] {
        for hold2 in [false, true] {
            for j in 0..=k {
                let h = hold1 as usize + hold2 as usize + j;
                if h == 0 {
                    continue;
                }
                let mut drop_w = choose_k[j] * b.powi((k - j) as i32);
                if !hold1 {
                    drop_w *= p1;
                }
                if !hold2 {
                    drop_w *= p2;
                }
                if drop_w == 0.0 {
                    continue;
                }
                let mut p_high = f64::NEG_INFINITY;
                if hold1 {
                    p_high = p_high.max(p1);
                }
                if hold2 {
                    p_high = p_high.max(p2);
                }
                if j > 0 {
                    p_high = p_high.max(b);
                }
                let choose_j = binomial_row(j);
                // status: Some(true) = certain loser, Some(false) = fair, None = dropped
                for &lose1 in status_options(hold1) {
                    for &lose2 in status_options(hold2) {
                        for l in 0..=j {
                            let losers =
                                lose1.unwrap_or(false) as usize + lose2.unwrap_or(false) as usize + l;
                            let f = h - losers;
                            if f == 0 {
                                continue;
                            }
                            let mut w = drop_w * choose_j[l] * (1.0 - p_high).powi(f as i32);
                            w *= (p_high - b).powi(l as i32);
                            if lose1 == Some(true) {
                                w *= p_high - p1;
                            }
                            if lose2 == Some(true) {
                                w *= p_high - p2;
                            }
                            if w == 0.0 {
                                continue;
                            }
                            let r = match lose1 {
                                None => h as f64 - 2.0,
                                Some(true) => h as f64 - n as f64 - 2.0,
                                Some(false) => fair_return(n, h, f),
                            };
                            total += w * r;
                        }
                    }
                }
            }
        }
    }
    total
}

fn status_options(holds: bool) -> &'static [Option<bool>] {
    if holds {
        &[Some(false), Some(true)]
    } else {
        &[None]
    }
}

/// Stakes multiplier of the expanded pseudo-bloc profile.
pub fn beta_pseudo_bloc(pb: &PseudoBlocProfile, rule: RuleVariant, stakes: WeenieStakes) -> f64 {
    let drops = [pb.p1, pb.p2].into_iter().chain(std::iter::repeat(pb.bloc).take(pb.n - 2));
    beta_by_holder_count(drops, rule, stakes)
}
