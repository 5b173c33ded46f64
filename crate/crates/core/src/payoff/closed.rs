//! Closed-form `alpha` and `beta` for two and three players, both rules.
//!
//! The formulas give player 1's payoff as a case split on the ordering of
//! the thresholds; other seats are obtained by reseating the profile.
//! `alpha` is continuous, so on ties any adjacent case gives the same value.

use super::{RuleVariant, ThresholdProfile, WeenieStakes};
use crate::error::{Error, Result};

/// Every player's `alpha` from the case-split formulas (n = 2 or 3).
pub fn alpha_closed(profile: &ThresholdProfile, rule: RuleVariant) -> Result<Vec<f64>> {
    let n = profile.players();
    if !(2..=3).contains(&n) {
        return Err(Error::Unsupported(format!("closed-form alpha needs 2 or 3 players, got {n}")));
    }
    Ok((0..n)
        .map(|i| alpha_first_closed(profile.seated_first(i).thresholds(), rule))
        .collect())
}

/// `beta` from the closed forms (n = 2 or 3); the Weenie all-drop term is
/// added on top of the standard polynomial unless `stakes` is `AsStandard`.
pub fn beta_closed(
    profile: &ThresholdProfile,
    rule: RuleVariant,
    stakes: WeenieStakes,
) -> Result<f64> {
    let t = profile.thresholds();
    let standard = match *t {
        [p1, p2] => p1 * p2 + (1.0 - p1) * (1.0 - p2),
        [p1, p2, p3] => 2.0 - p1 - p2 - p3 + 2.0 * p1 * p2 * p3,
        _ => {
            return Err(Error::Unsupported(format!(
                "closed-form beta needs 2 or 3 players, got {}",
                t.len()
            )))
        }
    };
    let extra = match (rule, stakes) {
        (RuleVariant::Weenie, WeenieStakes::Doubled) => t.iter().product::<f64>(),
        _ => 0.0,
    };
    Ok(standard + extra)
}

pub(crate) fn alpha_first_closed(t: &[f64], rule: RuleVariant) -> f64 {
    match (t, rule) {
        (&[p1, p2], RuleVariant::Standard) => {
            if p2 <= p1 {
                (1.0 - 2.0 * p1) * (p1 - p2)
            } else {
                (1.0 - 2.0 * p2) * (p1 - p2)
            }
        }
        (&[p1, p2], RuleVariant::Weenie) => {
            if p2 <= p1 {
                (1.0 - 2.0 * p1 - p2) * (p1 - p2)
            } else {
                (1.0 - 2.0 * p2 - p1) * (p1 - p2)
            }
        }
        (&[p1, p2, p3], RuleVariant::Standard) => three_standard(p1, p2, p3),
        (&[p1, p2, p3], RuleVariant::Weenie) => three_weenie(p1, p2, p3),
        _ => unreachable!("closed forms cover 2 and 3 players"),
    }
}

#[derive(Clone, Copy)]
enum Order {
    /// p1 <= p2 <= p3
    FirstLowMid,
    /// p1 <= p3 < p2
    FirstLowHigh,
    /// p2 < p1 <= p3
    SecondLowThirdHigh,
    /// p3 < p1 <= p2
    ThirdLowSecondHigh,
    /// p2 <= p3 < p1
    FirstTopSecondLow,
    /// p3 < p2 < p1
    FirstTopThirdLow,
}

fn order(p1: f64, p2: f64, p3: f64) -> Order {
    if p1 <= p2.min(p3) {
        if p2 <= p3 {
            Order::FirstLowMid
        } else {
            Order::FirstLowHigh
        }
    } else if p1 <= p2.max(p3) {
        if p2 < p3 {
            Order::SecondLowThirdHigh
        } else {
            Order::ThirdLowSecondHigh
        }
    } else if p2 <= p3 {
        Order::FirstTopSecondLow
    } else {
        Order::FirstTopThirdLow
    }
}

fn three_standard(p1: f64, p2: f64, p3: f64) -> f64 {
    let base = 2.0 * p1 - p2 - p3;
    match order(p1, p2, p3) {
        Order::FirstLowMid => base + p3.powi(3) + 3.0 * p2 * p2 * p3 - 4.0 * p1 * p2 * p3,
        Order::FirstLowHigh => base + p2.powi(3) + 3.0 * p3 * p3 * p2 - 4.0 * p1 * p2 * p3,
        Order::SecondLowThirdHigh => base + p3.powi(3) - 3.0 * p1 * p1 * p3 + 2.0 * p1 * p2 * p3,
        Order::ThirdLowSecondHigh => base + p2.powi(3) - 3.0 * p1 * p1 * p2 + 2.0 * p1 * p2 * p3,
        Order::FirstTopSecondLow | Order::FirstTopThirdLow => {
            base - 2.0 * p1.powi(3) + 2.0 * p1 * p2 * p3
        }
    }
}

fn three_weenie(p1: f64, p2: f64, p3: f64) -> f64 {
    let base = 2.0 * p1 - p2 - p3;
    match order(p1, p2, p3) {
        Order::FirstLowMid => {
            base + p3.powi(3) - p1.powi(3) + 3.0 * p2 * p2 * p3 - 3.0 * p1 * p2 * p3
        }
        Order::FirstLowHigh => {
            base + p2.powi(3) - p1.powi(3) + 3.0 * p3 * p3 * p2 - 3.0 * p1 * p2 * p3
        }
        Order::SecondLowThirdHigh => {
            base + p2.powi(3) / 2.0 + p3.powi(3) - 1.5 * p1 * p1 * p2 - 3.0 * p1 * p1 * p3
                + 3.0 * p1 * p2 * p3
        }
        Order::ThirdLowSecondHigh => {
            base + p3.powi(3) / 2.0 + p2.powi(3) - 1.5 * p1 * p1 * p3 - 3.0 * p1 * p1 * p2
                + 3.0 * p1 * p2 * p3
        }
        Order::FirstTopSecondLow => {
            base - 2.0 * p1.powi(3) + p2.powi(3) / 2.0 + 1.5 * p2 * p3 * p3
        }
        Order::FirstTopThirdLow => {
            base - 2.0 * p1.powi(3) + p3.powi(3) / 2.0 + 1.5 * p3 * p2 * p2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof(t: &[f64]) -> ThresholdProfile {
        ThresholdProfile::new(t.to_vec()).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let a = alpha_closed(&prof(&[0.5, 0.6, 0.7]), RuleVariant::Standard).unwrap();
        assert!((a[0] - (-0.041)).abs() < 1e-14);
        let third = 1.0 / 3.0;
        let a = alpha_closed(&prof(&[third, third]), RuleVariant::Weenie).unwrap();
        assert_eq!(a, vec![0.0, 0.0]);
        let r = 1.0 / 3f64.sqrt();
        let a = alpha_closed(&prof(&[r, r, r]), RuleVariant::Weenie).unwrap();
        assert!(a.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn unsupported_player_count() {
        let p = prof(&[0.1, 0.2, 0.3, 0.4]);
        assert!(matches!(alpha_closed(&p, RuleVariant::Standard), Err(Error::Unsupported(_))));
        assert!(beta_closed(&p, RuleVariant::Standard, WeenieStakes::Doubled).is_err());
    }

    #[test]
    fn beta_closed_examples() {
        let b = beta_closed(&prof(&[0.0, 0.0, 0.0]), RuleVariant::Standard, WeenieStakes::Doubled);
        assert_eq!(b.unwrap(), 2.0);
        let p = prof(&[1.0, 1.0, 1.0]);
        assert_eq!(beta_closed(&p, RuleVariant::Weenie, WeenieStakes::Doubled).unwrap(), 2.0);
        assert_eq!(beta_closed(&p, RuleVariant::Weenie, WeenieStakes::AsStandard).unwrap(), 1.0);
    }
}
