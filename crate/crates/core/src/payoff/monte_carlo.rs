//! Sampling estimate of `alpha` and `beta`, used as an independent check on
//! the exact algorithms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{RuleVariant, ThresholdProfile, WeenieStakes};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub rounds: u64,
    pub alpha_mean: Vec<f64>,
    pub alpha_std_error: Vec<f64>,
    pub beta_mean: f64,
    pub beta_std_error: f64,
}

/// Immediate returns and stakes multiplier of one dealt round.
pub(crate) fn round_returns(
    hands: &[f64],
    thresholds: &[f64],
    rule: RuleVariant,
    stakes: WeenieStakes,
    returns: &mut [f64],
) -> f64 {
    let n = hands.len();
    let nf = n as f64;
    let holders: Vec<usize> = (0..n).filter(|&i| hands[i] > thresholds[i]).collect();
    let h = holders.len();
    if h == 0 {
        returns.iter_mut().for_each(|r| *r = 0.0);
        if rule == RuleVariant::Weenie {
            let weenie = argmax(hands);
            returns.iter_mut().for_each(|r| *r = 1.0);
            returns[weenie] = 1.0 - nf;
            return match stakes {
                WeenieStakes::Doubled => 2.0,
                WeenieStakes::AsStandard => 1.0,
            };
        }
        return 1.0;
    }
    let virtual_ante = h as f64 - 2.0;
    returns.iter_mut().for_each(|r| *r = virtual_ante);
    if h == 1 {
        returns[holders[0]] = nf - 1.0;
        return 0.0;
    }
    let winner = *holders
        .iter()
        .max_by(|&&a, &&b| hands[a].total_cmp(&hands[b]))
        .expect("at least two holders");
    for &i in &holders {
        returns[i] = virtual_ante + if i == winner { nf } else { -nf };
    }
    h as f64 - 1.0
}

fn argmax(xs: &[f64]) -> usize {
    (0..xs.len()).max_by(|&a, &b| xs[a].total_cmp(&xs[b])).expect("nonempty")
}

/// Simulates `rounds` independent deals with uniform hands.
pub fn monte_carlo_alpha(
    profile: &ThresholdProfile,
    rule: RuleVariant,
    stakes: WeenieStakes,
    rounds: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if rounds == 0 {
        return Err(Error::InvalidInput("need at least one round".into()));
    }
    let t = profile.thresholds();
    let n = t.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hands = vec![0.0; n];
    let mut ret = vec![0.0; n];
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    let (mut bsum, mut bsum_sq) = (0.0, 0.0);
    for _ in 0..rounds {
        hands.iter_mut().for_each(|x| *x = rng.gen::<f64>());
        let b = round_returns(&hands, t, rule, stakes, &mut ret);
        for i in 0..n {
            sum[i] += ret[i];
            sum_sq[i] += ret[i] * ret[i];
        }
        bsum += b;
        bsum_sq += b * b;
    }
    let r = rounds as f64;
    let std_error = |s: f64, s2: f64| {
        let mean = s / r;
        let var = if rounds > 1 { ((s2 / r - mean * mean) * r / (r - 1.0)).max(0.0) } else { 0.0 };
        (var / r).sqrt()
    };
    Ok(MonteCarloEstimate {
        rounds,
        alpha_mean: sum.iter().map(|s| s / r).collect(),
        alpha_std_error: sum.iter().zip(&sum_sq).map(|(&s, &s2)| std_error(s, s2)).collect(),
        beta_mean: bsum / r,
        beta_std_error: std_error(bsum, bsum_sq),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoff::{alpha, beta};

    fn within(est: &MonteCarloEstimate, exact: &[f64], beta_exact: f64) {
        for i in 0..exact.len() {
            let z = (est.alpha_mean[i] - exact[i]).abs() / est.alpha_std_error[i].max(1e-12);
            assert!(z < 4.0, "player {i}: {} vs {} ({z} se)", est.alpha_mean[i], exact[i]);
        }
        let z = (est.beta_mean - beta_exact).abs() / est.beta_std_error.max(1e-12);
        assert!(z < 4.0, "beta {} vs {beta_exact}", est.beta_mean);
    }

    #[test]
    fn three_player_standard_agrees_with_exact() {
        let p = ThresholdProfile::new(vec![0.5, 0.6, 0.7]).unwrap();
        let est =
            monte_carlo_alpha(&p, RuleVariant::Standard, WeenieStakes::Doubled, 1_000_000, 11).unwrap();
        let b = beta(&p, RuleVariant::Standard, WeenieStakes::Doubled).unwrap();
        within(&est, &alpha(&p, RuleVariant::Standard).unwrap(), b);
    }

    #[test]
    fn symmetric_two_player_is_fair() {
        let p = ThresholdProfile::new(vec![0.5, 0.5]).unwrap();
        let est =
            monte_carlo_alpha(&p, RuleVariant::Standard, WeenieStakes::Doubled, 200_000, 5).unwrap();
        within(&est, &[0.0, 0.0], 0.5);
    }

    #[test]
    fn weenie_agrees_with_exact_including_doubled_stakes() {
        let r = 1.0 / 3f64.sqrt();
        for t in [vec![r, r, r], vec![0.2, 0.9, 0.45, 0.6]] {
            let p = ThresholdProfile::new(t).unwrap();
            let est =
                monte_carlo_alpha(&p, RuleVariant::Weenie, WeenieStakes::Doubled, 1_000_000, 17)
                    .unwrap();
            let b = beta(&p, RuleVariant::Weenie, WeenieStakes::Doubled).unwrap();
            within(&est, &alpha(&p, RuleVariant::Weenie).unwrap(), b);
        }
    }

    #[test]
    fn zero_rounds_rejected() {
        let p = ThresholdProfile::new(vec![0.5, 0.5]).unwrap();
        assert!(monte_carlo_alpha(&p, RuleVariant::Standard, WeenieStakes::Doubled, 0, 1).is_err());
    }
}
