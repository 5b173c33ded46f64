//! Example symmetric zero-sum games.

use super::SymmetricGame;
use crate::error::Result;
use crate::model::make_grid;
use crate::payoff::{alpha_first, RuleVariant};

/// Three players each name 1 or 2. Unanimity pays nothing; otherwise the
/// odd player out collects the number each of the other two named.
pub fn jacob_game() -> SymmetricGame {
    let number = |s: usize| (s + 1) as f64;
    SymmetricGame::from_fn("jacob", 3, 2, move |own, o| {
        let (a, b) = (o[0], o[1]);
        if a == b && own == a {
            0.0
        } else if a == b {
            2.0 * number(a)
        } else {
            -number(own)
        }
    })
    .expect("valid shape")
    .with_exchangeable_opponents()
}

/// `A[s1][s2][s3]` for player 1; symmetric in the last two indices.
const JACOB_II: [[[f64; 3]; 3]; 3] = [
    [[0., 0., 0.], [0., 0., -2.], [0., -2., 0.]],
    [[0., 0., 1.], [0., 0., -4.], [1., -4., 16.]],
    [[0., 1., 0.], [1., 8., -8.], [0., -8., 0.]],
];

pub fn jacob_game_ii() -> SymmetricGame {
    let table = JACOB_II.iter().flatten().flatten().copied().collect();
    SymmetricGame::from_table("jacob-ii", 3, 3, table).expect("3^3 entries")
}

/// Two copies of a scaled three-strategy game over strategies `0..3` and
/// `3..6`; crossing between the copies is penalized.
pub fn jacob_game_mega() -> SymmetricGame {
    const INNER: [[[f64; 3]; 3]; 3] = [
        [[0., 0., 0.], [0., 0., -2.], [0., -2., 0.]],
        [[0., 0., 1.], [0., 0., -8.], [1., -8., 32.]],
        [[0., 1., 0.], [1., 16., -16.], [0., -16., 0.]],
    ];
    let mut table = Vec::with_capacity(216);
    for own in 0..6 {
        for a in 0..6 {
            for b in 0..6 {
                let block = |s: usize| s / 3;
                let v = match (block(a) == block(own), block(b) == block(own)) {
                    (true, true) => INNER[own % 3][a % 3][b % 3],
                    (false, false) => -4.0,
                    _ => 2.0,
                };
                table.push(v);
            }
        }
    }
    SymmetricGame::from_table("jacob-mega", 3, 6, table).expect("6^3 entries")
}

/// Guts restricted to the `mesh`-point threshold grid.
pub fn guts_game(players: usize, mesh: usize, rule: RuleVariant) -> Result<SymmetricGame> {
    let grid = make_grid(mesh)?;
    let values = grid.values().to_vec();
    SymmetricGame::from_fn(&format!("guts-{players}-{mesh}"), players, mesh, move |own, o| {
        let mut t = Vec::with_capacity(o.len() + 1);
        t.push(values[own]);
        t.extend(o.iter().map(|&j| values[j]));
        alpha_first(&t, rule)
    })
    .map(SymmetricGame::with_exchangeable_opponents)
}
