//! Three-strategy, three-player odd-man games played by one player against
//! a two-player coalition that mixes independently.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::SymmetricGame;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OddManVariant {
    /// The odd player collects 1 from each of the matching pair.
    In,
    /// The odd player pays 1 to each of the matching pair.
    Out,
}

impl fmt::Display for OddManVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OddManVariant::In => "in",
            OddManVariant::Out => "out",
        })
    }
}

impl FromStr for OddManVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "in" => Ok(OddManVariant::In),
            "out" => Ok(OddManVariant::Out),
            other => Err(Error::InvalidInput(format!("unknown odd-man variant `{other}`"))),
        }
    }
}

impl OddManVariant {
    fn sign(self) -> f64 {
        match self {
            OddManVariant::In => 1.0,
            OddManVariant::Out => -1.0,
        }
    }
}

/// Pure odd-man game as a symmetric three-player game.
pub fn odd_man_pure_game(variant: OddManVariant) -> SymmetricGame {
    let sign = variant.sign();
    SymmetricGame::from_fn(&format!("odd-man-{variant}"), 3, 3, move |own, o| {
        let (a, b) = (o[0], o[1]);
        let v = if a == b && own == a {
            0.0
        } else if a == b {
            2.0
        } else if own == a || own == b {
            -1.0
        } else {
            0.0
        };
        sign * v
    })
    .expect("valid shape")
    .with_exchangeable_opponents()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddManPayoff {
    /// Player 1's expected payoff for each pure choice.
    pub by_choice: [f64; 3],
    pub best: f64,
    pub best_choice: usize,
}

/// Player 1's payoffs when the coalition members mix `y` and `z`
/// independently: `2 y.z - (y_j + z_j)` for In, negated for Out.
pub fn odd_man_payoff(variant: OddManVariant, y: &[f64; 3], z: &[f64; 3]) -> Result<OddManPayoff> {
    for d in [y, z] {
        if d.iter().any(|&p| !(p >= -1e-12)) || (d.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("{d:?} is not a distribution")));
        }
    }
    let dot: f64 = y.iter().zip(z).map(|(a, b)| a * b).sum();
    let by_choice = std::array::from_fn(|j| variant.sign() * (2.0 * dot - (y[j] + z[j])));
    let (best_choice, best) = best_of(&by_choice);
    Ok(OddManPayoff { by_choice, best, best_choice })
}

fn best_of(v: &[f64; 3]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (j, x)| if x > acc.1 { (j, x) } else { acc })
}

/// Player 1's best-response value when the coalition coordinates: an even
/// blend of the three distinct pairs for In, of the three matching pairs
/// for Out.
pub fn synchronous_benchmark(variant: OddManVariant) -> f64 {
    let game = odd_man_pure_game(variant);
    let pairs: [(usize, usize); 3] = match variant {
        OddManVariant::In => [(0, 1), (0, 2), (1, 2)],
        OddManVariant::Out => [(0, 0), (1, 1), (2, 2)],
    };
    (0..3)
        .map(|j| pairs.iter().map(|&(a, b)| game.payoff(j, &[a, b])).sum::<f64>() / 3.0)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddManSearch {
    pub variant: OddManVariant,
    pub resolution: u32,
    /// Smallest best-response payoff the coalition can hold player 1 to.
    pub min_value: f64,
    pub y: [f64; 3],
    pub z: [f64; 3],
    pub pairs_scanned: u64,
}

/// Minimizes player 1's best-response payoff over all `(y, z)` whose
/// coordinates are multiples of `1 / resolution`. Payoffs are evaluated in
/// integers scaled by `resolution^2`, so the minimum is exact.
pub fn odd_man_search(variant: OddManVariant, resolution: u32) -> Result<OddManSearch> {
    if !(10..=400).contains(&resolution) {
        return Err(Error::InvalidInput(format!("resolution {resolution} outside 10..=400")));
    }
    let r = resolution as i64;
    let points: Vec<[i64; 3]> =
        (0..=r).flat_map(|a| (0..=r - a).map(move |b| [a, b, r - a - b])).collect();
    let sign = match variant {
        OddManVariant::In => 1,
        OddManVariant::Out => -1,
    };
    let (scaled, yi, zi) = points
        .par_iter()
        .enumerate()
        .map(|(yi, y)| {
            let mut best = (i64::MAX, yi, 0);
            for (zi, z) in points.iter().enumerate() {
                let dot: i64 = (0..3).map(|k| y[k] * z[k]).sum();
                let v = (0..3).map(|j| sign * (2 * dot - r * (y[j] + z[j]))).max().expect("3 choices");
                if v < best.0 {
                    best = (v, yi, zi);
                }
            }
            best
        })
        .reduce(|| (i64::MAX, 0, 0), |a, b| if (b.0, b.1, b.2) < (a.0, a.1, a.2) { b } else { a });
    let to_f = |p: [i64; 3]| p.map(|x| x as f64 / r as f64);
    Ok(OddManSearch {
        variant,
        resolution,
        min_value: scaled as f64 / (r * r) as f64,
        y: to_f(points[yi]),
        z: to_f(points[zi]),
        pairs_scanned: (points.len() as u64).pow(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MixedStrategy;
    use proptest::prelude::*;

    #[test]
    fn named_values() {
        assert!((synchronous_benchmark(OddManVariant::In) + 2.0 / 3.0).abs() < 1e-15);
        let p = odd_man_payoff(OddManVariant::In, &[1.0, 0.0, 0.0], &[0.0, 0.5, 0.5]).unwrap();
        assert_eq!(p.best, -0.5);
        let u = [1.0 / 3.0; 3];
        let q = odd_man_payoff(OddManVariant::Out, &u, &u).unwrap();
        assert!(q.best.abs() < 1e-15);
    }

    #[test]
    fn in_search_reaches_asynchronous_optimum() {
        let s = odd_man_search(OddManVariant::In, 10).unwrap();
        assert_eq!(s.min_value, -0.5);
        let p = odd_man_payoff(OddManVariant::In, &s.y, &s.z).unwrap();
        assert!((p.best + 0.5).abs() < 1e-12);
    }

    #[test]
    fn out_search_bottoms_at_zero() {
        for r in [10, 11] {
            let s = odd_man_search(OddManVariant::Out, r).unwrap();
            assert_eq!(s.min_value, 0.0);
            assert_eq!(odd_man_payoff(OddManVariant::Out, &s.y, &s.z).unwrap().best, 0.0);
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(odd_man_search(OddManVariant::In, 9).is_err());
        assert!(odd_man_payoff(OddManVariant::In, &[0.5, 0.0, 0.0], &[1.0, 0.0, 0.0]).is_err());
        assert_eq!("OUT".parse::<OddManVariant>().unwrap(), OddManVariant::Out);
        assert!("sideways".parse::<OddManVariant>().is_err());
    }

    fn simplex() -> impl Strategy<Value = [f64; 3]> {
        (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b, c)| {
            let s = a + b + c + 1e-9;
            [a / s, b / s, 1.0 - a / s - b / s]
        })
    }

    proptest! {
        /// The closed form agrees with brute force over the pure game.
        #[test]
        fn closed_form_matches_pure_game(y in simplex(), z in simplex(), out in any::<bool>()) {
            let variant = if out { OddManVariant::Out } else { OddManVariant::In };
            let game = odd_man_pure_game(variant);
            let d = vec![
                MixedStrategy::uniform(3),
                MixedStrategy::new(y.to_vec()).unwrap(),
                MixedStrategy::new(z.to_vec()).unwrap(),
            ];
            let brute = game.expected_payoffs(0, &d);
            let closed = odd_man_payoff(variant, &y, &z).unwrap();
            for j in 0..3 {
                prop_assert!((brute[j] - closed.by_choice[j]).abs() < 1e-9);
            }
        }

        #[test]
        fn out_is_never_negative(y in simplex(), z in simplex()) {
            prop_assert!(odd_man_payoff(OddManVariant::Out, &y, &z).unwrap().best >= -1e-12);
        }
    }
}
