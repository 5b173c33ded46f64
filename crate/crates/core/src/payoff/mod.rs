//! Expected one-shot payoff `alpha` and stakes multiplier `beta` for
//! n-player continuous Guts.
//!
//! Hands are independent uniform draws on `[0, 1]`; a pure strategy is a
//! threshold `p*` (hold iff hand > `p*`). Returns use the ante-at-termination
//! accounting: with `h` holders the stakes scale by `h - 1`, every player is
//! credited the virtual ante `h - 2`, the winning holder additionally takes
//! `+n` and each losing holder pays `-n`. A lone holder nets `n - 1` and
//! everyone else `-1`. Under the Weenie rule an all-drop round makes the
//! highest hand match the pot: the weenie nets `1 - n`, everyone else `+1`,
//! and the stakes double.

mod closed;
mod matrix;
mod monte_carlo;
mod pseudo_bloc;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use closed::{alpha_closed, beta_closed};
pub use matrix::{
    build_full_matrices, build_pseudo_bloc_matrices, BuildOptions, DEFAULT_MEMORY_BUDGET_BYTES,
};
pub use monte_carlo::{monte_carlo_alpha, MonteCarloEstimate};
pub use pseudo_bloc::{alpha_pseudo_bloc, beta_pseudo_bloc, PseudoBlocProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RuleVariant {
    #[default]
    Standard,
    Weenie,
}

impl fmt::Display for RuleVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleVariant::Standard => "standard",
            RuleVariant::Weenie => "weenie",
        })
    }
}

impl FromStr for RuleVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(RuleVariant::Standard),
            "weenie" => Ok(RuleVariant::Weenie),
            other => Err(Error::InvalidInput(format!("unknown rule `{other}`"))),
        }
    }
}

/// Stakes multiplier credited to an all-drop round under the Weenie rule.
///
/// `Doubled` follows the game description (the weenie matches the pot, so
/// the stakes double); `AsStandard` reproduces the literal closed-form table
/// that keeps the standard `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WeenieStakes {
    #[default]
    Doubled,
    AsStandard,
}

impl WeenieStakes {
    fn all_drop_multiplier(self, rule: RuleVariant) -> f64 {
        match (rule, self) {
            (RuleVariant::Weenie, WeenieStakes::Doubled) => 2.0,
            _ => 1.0,
        }
    }
}

/// Threshold strategies `p_1*, ..., p_n*` of all players, in seat order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdProfile(Vec<f64>);

impl ThresholdProfile {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.len() < 2 {
            return Err(Error::InvalidProfile(format!(
                "need at least 2 players, got {}",
                thresholds.len()
            )));
        }
        if let Some(p) = thresholds.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidProfile(format!("threshold {p} outside [0, 1]")));
        }
        Ok(Self(thresholds))
    }

    pub fn players(&self) -> usize {
        self.0.len()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.0
    }

    /// Profile with `player` moved to seat 0 and the others kept in order.
    pub fn seated_first(&self, player: usize) -> Self {
        let mut v = Vec::with_capacity(self.0.len());
        v.push(self.0[player]);
        v.extend(self.0.iter().enumerate().filter(|(i, _)| *i != player).map(|(_, p)| *p));
        Self(v)
    }
}

/// Largest profile the subset enumeration accepts (3^n scenarios).
const MAX_ENUMERATED_PLAYERS: usize = 20;

fn check_enumerable(n: usize) -> Result<()> {
    if n > MAX_ENUMERATED_PLAYERS {
        return Err(Error::Unsupported(format!(
            "subset enumeration limited to {MAX_ENUMERATED_PLAYERS} players, got {n}"
        )));
    }
    Ok(())
}

/// Expected immediate return of every player under the standard rule.
///
/// Sorts the thresholds, then enumerates every nonempty holder set `H`,
/// and within it every set `L` of holders whose hand falls below the top
/// holding threshold `p^H` (certain losers). The remaining holders `F` are
/// in fair play for the pot. Each scenario has weight
/// `prod_D p * prod_F (1 - p^H) * prod_L (p^H - p)`.
pub fn alpha_general(profile: &ThresholdProfile) -> Result<Vec<f64>> {
    let n = profile.players();
    check_enumerable(n)?;
    let (order, sorted) = sort_with_index(profile.thresholds());
    let mut value_sorted = vec![0.0; n];
    enumerate_scenarios(&sorted, |weight, hold_mask, loser_mask, h, f| {
        let ret_drop = h as f64 - 2.0;
        let ret_lose = h as f64 - n as f64 - 2.0;
        let ret_fair = fair_return(n, h, f);
        for (i, v) in value_sorted.iter_mut().enumerate() {
            let bit = 1u32 << i;
            let r = if hold_mask & bit == 0 {
                ret_drop
            } else if loser_mask & bit != 0 {
                ret_lose
            } else {
                ret_fair
            };
            *v += weight * r;
        }
    });
    let mut value = vec![0.0; n];
    for (k, &orig) in order.iter().enumerate() {
        value[orig] = value_sorted[k];
    }
    Ok(value)
}

/// Standard `alpha` plus the Weenie all-drop correction.
pub fn alpha_weenie_general(profile: &ThresholdProfile) -> Result<Vec<f64>> {
    let mut value = alpha_general(profile)?;
    let t = profile.thresholds();
    for (i, v) in value.iter_mut().enumerate() {
        *v += weenie_correction(t, i);
    }
    Ok(value)
}

pub fn alpha(profile: &ThresholdProfile, rule: RuleVariant) -> Result<Vec<f64>> {
    match rule {
        RuleVariant::Standard => alpha_general(profile),
        RuleVariant::Weenie => alpha_weenie_general(profile),
    }
}

/// Expected stakes multiplier under the standard rule.
pub fn beta_general(profile: &ThresholdProfile) -> Result<f64> {
    beta(profile, RuleVariant::Standard, WeenieStakes::default())
}

/// Expected stakes multiplier: each hold/drop pattern with `h` holders has
/// weight `prod_D p * prod_H (1 - p)` and contributes `h - 1`, or the
/// redeal/weenie multiplier when nobody holds.
pub fn beta(profile: &ThresholdProfile, rule: RuleVariant, stakes: WeenieStakes) -> Result<f64> {
    let t = profile.thresholds();
    let n = t.len();
    check_enumerable(n)?;
    let mut total = 0.0;
    for hold_mask in 0u32..(1u32 << n) {
        let mut w = 1.0;
        for (i, &p) in t.iter().enumerate() {
            w *= if hold_mask & (1 << i) != 0 { 1.0 - p } else { p };
        }
        let h = hold_mask.count_ones();
        let mult = if h == 0 { stakes.all_drop_multiplier(rule) } else { h as f64 - 1.0 };
        total += w * mult;
    }
    Ok(total)
}

/// Stakes multiplier through the holder-count distribution; O(n^2).
pub(crate) fn beta_by_holder_count(
    drop_probs: impl IntoIterator<Item = f64>,
    rule: RuleVariant,
    stakes: WeenieStakes,
) -> f64 {
    let mut dist = vec![1.0];
    for p in drop_probs {
        let mut next = vec![0.0; dist.len() + 1];
        for (h, &d) in dist.iter().enumerate() {
            next[h] += d * p;
            next[h + 1] += d * (1.0 - p);
        }
        dist = next;
    }
    dist.iter()
        .enumerate()
        .map(|(h, d)| d * if h == 0 { stakes.all_drop_multiplier(rule) } else { h as f64 - 1.0 })
        .sum()
}

/// Expected return of a fair-play holder: win the pot with probability `1/f`.
pub(crate) fn fair_return(n: usize, h: usize, f: usize) -> f64 {
    let (n, h, f) = (n as f64, h as f64, f as f64);
    (n + h - 2.0) / f + (h - n - 2.0) * (f - 1.0) / f
}

/// Calls `visit(weight, hold_mask, loser_mask, h, f)` for every scenario
/// with a nonempty holder set and positive weight. `sorted` must be
/// nondecreasing; bit `i` refers to `sorted[i]`.
fn enumerate_scenarios(sorted: &[f64], mut visit: impl FnMut(f64, u32, u32, usize, usize)) {
    let n = sorted.len();
    for hold_mask in 1u32..(1u32 << n) {
        let mut drop_w = 1.0;
        for (i, &p) in sorted.iter().enumerate() {
            if hold_mask & (1 << i) == 0 {
                drop_w *= p;
            }
        }
        if drop_w == 0.0 {
            continue;
        }
        let top = 31 - hold_mask.leading_zeros();
        let p_high = sorted[top as usize];
        let h = hold_mask.count_ones() as usize;
        // The top holder can never be a certain loser (weight p^H - p^H = 0).
        let candidates = hold_mask & !(1u32 << top);
        let mut loser_mask = candidates;
        loop {
            let l = loser_mask.count_ones() as usize;
            let f = h - l;
            let mut w = drop_w * (1.0 - p_high).powi(f as i32);
            let mut bits = loser_mask;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                w *= p_high - sorted[i];
                bits &= bits - 1;
            }
            if w != 0.0 {
                visit(w, hold_mask, loser_mask, h, f);
            }
            if loser_mask == 0 {
                break;
            }
            loser_mask = (loser_mask - 1) & candidates;
        }
    }
}

fn sort_with_index(t: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut order: Vec<usize> = (0..t.len()).collect();
    // stable: equal thresholds keep seat order
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
    let sorted = order.iter().map(|&i| t[i]).collect();
    (order, sorted)
}

/// Weenie all-drop correction to player `i`'s return: `+1` whenever
/// everybody drops, minus `n` when player `i` also holds the highest hand.
pub(crate) fn weenie_correction(t: &[f64], i: usize) -> f64 {
    let n = t.len() as f64;
    let all_drop: f64 = t.iter().product();
    let others: Vec<(f64, u32)> =
        t.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &p)| (p, 1)).collect();
    all_drop - n * weenie_share(t[i], &others)
}

/// Probability that everybody drops and the player with threshold `own`
/// holds the highest hand: `int_0^own prod_j min(x, t_j)^m_j dx`.
pub(crate) fn weenie_share(own: f64, others: &[(f64, u32)]) -> f64 {
    let mut breaks: Vec<f64> = others.iter().map(|o| o.0).filter(|&t| t < own).collect();
    breaks.push(0.0);
    breaks.push(own);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut coeff = 1.0;
        let mut power = 0i32;
        for &(t, m) in others {
            if t <= a {
                coeff *= t.powi(m as i32);
            } else {
                power += m as i32;
            }
        }
        let e = power + 1;
        total += coeff * (b.powi(e) - a.powi(e)) / e as f64;
    }
    total
}

/// Player-1 `alpha` for the thresholds `t` (seat 0 is player 1).
pub(crate) fn alpha_first(t: &[f64], rule: RuleVariant) -> f64 {
    if t.len() == 3 || t.len() == 2 {
        return closed::alpha_first_closed(t, rule);
    }
    let n = t.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
    let sorted: Vec<f64> = idx.iter().map(|&i| t[i]).collect();
    let me = idx.iter().position(|&i| i == 0).expect("seat 0 present");
    let bit = 1u32 << me;
    let mut v = 0.0;
    enumerate_scenarios(&sorted, |weight, hold_mask, loser_mask, h, f| {
        let r = if hold_mask & bit == 0 {
            h as f64 - 2.0
        } else if loser_mask & bit != 0 {
            h as f64 - n as f64 - 2.0
        } else {
            fair_return(n, h, f)
        };
        v += weight * r;
    });
    if rule == RuleVariant::Weenie {
        v += weenie_correction(t, 0);
    }
    v
}
