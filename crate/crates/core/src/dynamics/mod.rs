//! Discrete fictitious play for symmetric n-player games, the n-player
//! duality gap, and the small example games used to study it.

mod games;
mod odd_man;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MixedStrategy;
use crate::zerosum::{select_best, Checkpoints};

pub use games::{guts_game, jacob_game, jacob_game_ii, jacob_game_mega};
pub use odd_man::{
    odd_man_payoff, odd_man_pure_game, odd_man_search, synchronous_benchmark, OddManPayoff,
    OddManSearch, OddManVariant,
};

type PayoffFn = dyn Fn(usize, &[usize]) -> f64 + Send + Sync;

#[derive(Clone)]
enum Payoff {
    /// Indexed by `own, opponent_1, ..., opponent_{n-1}` in base `K`.
    Table(Arc<Vec<f64>>),
    Rule(Arc<PayoffFn>),
}

/// Symmetric game: every player's payoff is the same function of their own
/// pure strategy and the other players' strategies in seat order.
#[derive(Clone)]
pub struct SymmetricGame {
    name: String,
    players: usize,
    strategies: usize,
    payoff: Payoff,
    exchangeable: bool,
}

impl fmt::Debug for SymmetricGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricGame")
            .field("name", &self.name)
            .field("players", &self.players)
            .field("strategies", &self.strategies)
            .finish_non_exhaustive()
    }
}

impl SymmetricGame {
    /// Game given by `table[own][o_1]...[o_{n-1}]`, flattened in row-major order.
    pub fn from_table(name: &str, players: usize, strategies: usize, table: Vec<f64>) -> Result<Self> {
        Self::check_shape(players, strategies)?;
        let expected = (strategies as u128).pow(players as u32);
        if table.len() as u128 != expected {
            return Err(Error::InvalidInput(format!(
                "payoff table has {} entries, expected {expected}",
                table.len()
            )));
        }
        Ok(Self { name: name.into(), players, strategies, payoff: Payoff::Table(Arc::new(table)), exchangeable: false })
    }

    pub fn from_fn<F>(name: &str, players: usize, strategies: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, &[usize]) -> f64 + Send + Sync + 'static,
    {
        Self::check_shape(players, strategies)?;
        Ok(Self { name: name.into(), players, strategies, payoff: Payoff::Rule(Arc::new(f)), exchangeable: false })
    }

    fn check_shape(players: usize, strategies: usize) -> Result<()> {
        if players < 2 || strategies == 0 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 players and 1 strategy, got {players} and {strategies}"
            )));
        }
        Ok(())
    }

    /// Declares the payoff invariant under reordering the opponents, which
    /// lets fictitious play share payoff rows between orderings.
    pub fn with_exchangeable_opponents(mut self) -> Self {
        self.exchangeable = true;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn strategy_count(&self) -> usize {
        self.strategies
    }

    /// Payoff to a player choosing `own` while the others play `opponents`.
    pub fn payoff(&self, own: usize, opponents: &[usize]) -> f64 {
        debug_assert_eq!(opponents.len(), self.players - 1);
        match &self.payoff {
            Payoff::Table(t) => {
                let idx = opponents.iter().fold(own, |acc, &o| acc * self.strategies + o);
                t[idx]
            }
            Payoff::Rule(f) => f(own, opponents),
        }
    }

    /// Payoff of every player under a pure profile.
    pub fn profile_payoffs(&self, profile: &[usize]) -> Vec<f64> {
        let mut others = Vec::with_capacity(self.players - 1);
        (0..self.players)
            .map(|j| {
                others.clear();
                others.extend(profile.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, &s)| s));
                self.payoff(profile[j], &others)
            })
            .collect()
    }

    /// Largest `|sum of payoffs|` over all pure profiles.
    pub fn zero_sum_defect(&self) -> f64 {
        let total = self.strategies.pow(self.players as u32);
        let mut worst = 0.0f64;
        let mut profile = vec![0; self.players];
        for mut x in 0..total {
            for slot in profile.iter_mut().rev() {
                *slot = x % self.strategies;
                x /= self.strategies;
            }
            worst = worst.max(self.profile_payoffs(&profile).iter().sum::<f64>().abs());
        }
        worst
    }

    /// Expected payoff of each own pure strategy for `player` when the
    /// others play the given independent mixed strategies.
    pub fn expected_payoffs(&self, player: usize, distributions: &[MixedStrategy]) -> Vec<f64> {
        let others: Vec<&MixedStrategy> =
            distributions.iter().enumerate().filter(|(k, _)| *k != player).map(|(_, d)| d).collect();
        let supports: Vec<Vec<(usize, f64)>> = others.iter().map(|d| d.support().collect()).collect();
        let mut tuple = vec![0; others.len()];
        (0..self.strategies)
            .map(|z| product_sum(&supports, 0, 1.0, &mut tuple, &|t: &[usize]| self.payoff(z, t)))
            .collect()
    }
}

fn product_sum(
    supports: &[Vec<(usize, f64)>],
    k: usize,
    weight: f64,
    tuple: &mut Vec<usize>,
    f: &dyn Fn(&[usize]) -> f64,
) -> f64 {
    if k == supports.len() {
        return weight * f(tuple);
    }
    let mut acc = 0.0;
    for &(s, w) in &supports[k] {
        tuple[k] = s;
        acc += product_sum(supports, k + 1, weight * w, tuple, f);
    }
    acc
}

/// Sum over players of the best payoff available against the others'
/// independent mixed strategies. For a zero-sum game it is nonnegative and
/// vanishes exactly at Nash equilibria.
pub fn gap_n(game: &SymmetricGame, distributions: &[MixedStrategy]) -> Result<f64> {
    if distributions.len() != game.players() {
        return Err(Error::InvalidInput(format!(
            "{} distributions for {} players",
            distributions.len(),
            game.players()
        )));
    }
    if let Some(d) = distributions.iter().find(|d| d.len() != game.strategy_count()) {
        return Err(Error::InvalidInput(format!(
            "distribution over {} strategies, game has {}",
            d.len(),
            game.strategy_count()
        )));
    }
    Ok((0..game.players())
        .map(|j| game.expected_payoffs(j, distributions).into_iter().fold(f64::NEG_INFINITY, f64::max))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiFpOptions {
    pub iterations: u64,
    pub seed: u64,
    pub record_plays: bool,
    /// Iterations at the start whose plays are drawn uniformly at random
    /// instead of best-responding, forming a random initial ensemble.
    pub random_openings: u64,
}

impl Default for MultiFpOptions {
    fn default() -> Self {
        Self { iterations: 10_000, seed: 0, record_plays: true, random_openings: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NGapPoint {
    pub iteration: u64,
    pub gap: f64,
    /// `iteration * gap`
    pub scaled_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiFpTrace {
    pub game: String,
    pub seed: u64,
    pub iterations: u64,
    /// `plays[t][j]`: player `j`'s pure choice at iteration `t + 1`.
    pub plays: Vec<Vec<usize>>,
    /// Gap after every iteration.
    pub gap_trace: Vec<NGapPoint>,
    /// Empirical distributions at geometrically spaced iterations.
    pub snapshots: Vec<(u64, Vec<MixedStrategy>)>,
    pub distributions: Vec<MixedStrategy>,
}

impl MultiFpTrace {
    /// Plays from the last `fraction` of the run.
    pub fn tail(&self, fraction: f64) -> &[Vec<usize>] {
        let keep = ((self.plays.len() as f64) * fraction).ceil() as usize;
        &self.plays[self.plays.len() - keep.min(self.plays.len())..]
    }

    /// The single profile played throughout the last `fraction`, if any.
    pub fn settled_profile(&self, fraction: f64) -> Option<Vec<usize>> {
        let tail = self.tail(fraction);
        let first = tail.first()?;
        tail.iter().all(|p| p == first).then(|| first.clone())
    }
}

/// Simultaneous discrete fictitious play for `n` players.
///
/// Every player opens with `random_openings` uniformly random pure
/// strategies and then best-responds to the product of the others' empirical distributions,
/// ties broken uniformly at random. Expected payoffs are maintained
/// incrementally: when every opponent adds one play, the product of their
/// count vectors gains only the terms containing at least one new play.
pub fn multiplayer_fp(game: &SymmetricGame, opts: &MultiFpOptions) -> Result<MultiFpTrace> {
    if opts.iterations == 0 {
        return Err(Error::InvalidInput("iterations must be at least 1".into()));
    }
    let n = game.players();
    let k = game.strategy_count();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut plays: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let mut counts = vec![vec![0u64; k]; n];
    let mut supports: Vec<Vec<usize>> = vec![Vec::new(); n];
    // unnormalized expected payoff of each pure strategy, weighted by
    // products of opponents' counts
    let mut sums = vec![vec![0.0; k]; n];
    let mut recorded = Vec::new();
    let mut gap_trace = Vec::with_capacity(opts.iterations as usize);
    let mut snapshots = Vec::new();
    let mut checkpoints = Checkpoints::new();
    let mut cache = RowCache::new(game);
    for t in 1..=opts.iterations {
        if t <= opts.random_openings.max(1) && t > 1 {
            plays.iter_mut().for_each(|p| *p = rng.gen_range(0..k));
        }
        if opts.record_plays {
            recorded.push(plays.clone());
        }
        let terms: Vec<Vec<(f64, Vec<usize>)>> =
            (0..n).map(|j| increment_terms(game, j, &plays, &counts, &supports)).collect();
        let scratch = cache.fill(game, terms.iter().flatten().map(|(_, key)| key));
        sums.par_iter_mut().zip(&terms).for_each(|(player_sums, player_terms)| {
            for (w, key) in player_terms {
                let row = cache.get(key).or_else(|| scratch.get(key)).expect("row filled");
                player_sums.iter_mut().zip(row.iter()).for_each(|(s, x)| *s += w * x);
            }
        });
        for (j, &s) in plays.iter().enumerate() {
            if counts[j][s] == 0 {
                supports[j].push(s);
            }
            counts[j][s] += 1;
        }
        let norm = (t as f64).powi(n as i32 - 1);
        let mut gap = 0.0;
        for j in 0..n {
            let (best, value) = select_best(sums[j].iter().copied(), true, &mut rng);
            plays[j] = best;
            gap += value / norm;
        }
        gap_trace.push(NGapPoint { iteration: t, gap, scaled_gap: t as f64 * gap });
        if checkpoints.due(t) || t == opts.iterations {
            snapshots.push((t, distributions_of(&counts)?));
        }
    }
    Ok(MultiFpTrace {
        game: game.name().to_string(),
        seed: opts.seed,
        iterations: opts.iterations,
        plays: recorded,
        gap_trace,
        distributions: distributions_of(&counts)?,
        snapshots,
    })
}

fn distributions_of(counts: &[Vec<u64>]) -> Result<Vec<MixedStrategy>> {
    counts
        .iter()
        .map(|c| MixedStrategy::from_counts(&c.iter().map(|&x| x as f64).collect::<Vec<_>>()))
        .collect()
}

const ROW_CACHE_BYTES: usize = 256 << 20;

/// Payoff rows `z -> payoff(z, opponents)` keyed by opponent tuple.
struct RowCache {
    rows: HashMap<Vec<usize>, Vec<f64>>,
    capacity: usize,
}

impl RowCache {
    fn new(game: &SymmetricGame) -> Self {
        let row_bytes = 8 * game.strategy_count() + 64;
        Self { rows: HashMap::new(), capacity: (ROW_CACHE_BYTES / row_bytes).max(1) }
    }

    fn get(&self, key: &[usize]) -> Option<&Vec<f64>> {
        self.rows.get(key)
    }

    /// Computes every missing row. Rows beyond capacity come back in the
    /// returned map instead of being kept.
    fn fill<'a>(
        &mut self,
        game: &SymmetricGame,
        keys: impl Iterator<Item = &'a Vec<usize>>,
    ) -> HashMap<Vec<usize>, Vec<f64>> {
        let mut missing: Vec<Vec<usize>> = keys.filter(|key| !self.rows.contains_key(*key)).cloned().collect();
        missing.sort_unstable();
        missing.dedup();
        let fresh: Vec<(Vec<usize>, Vec<f64>)> = missing
            .into_par_iter()
            .map(|key| {
                let row = (0..game.strategy_count()).map(|z| game.payoff(z, &key)).collect();
                (key, row)
            })
            .collect();
        let mut overflow = HashMap::new();
        for (key, row) in fresh {
            if self.rows.len() < self.capacity {
                self.rows.insert(key, row);
            } else {
                overflow.insert(key, row);
            }
        }
        overflow
    }
}

/// Terms of `prod_o (c_o + e_{play_o})` containing at least one new play,
/// as `(weight, opponent tuple)`.
fn increment_terms(
    game: &SymmetricGame,
    player: usize,
    plays: &[usize],
    counts: &[Vec<u64>],
    supports: &[Vec<usize>],
) -> Vec<(f64, Vec<usize>)> {
    let opponents: Vec<usize> = (0..plays.len()).filter(|&o| o != player).collect();
    let mut out = Vec::new();
    let mut tuple = vec![0; opponents.len()];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        game: &SymmetricGame,
        opponents: &[usize],
        pos: usize,
        any_new: bool,
        weight: f64,
        plays: &[usize],
        counts: &[Vec<u64>],
        supports: &[Vec<usize>],
        tuple: &mut Vec<usize>,
        out: &mut Vec<(f64, Vec<usize>)>,
    ) {
        if pos == opponents.len() {
            if any_new {
                let mut key = tuple.clone();
                if game.exchangeable {
                    key.sort_unstable();
                }
                out.push((weight, key));
            }
            return;
        }
        let o = opponents[pos];
        tuple[pos] = plays[o];
        rec(game, opponents, pos + 1, true, weight, plays, counts, supports, tuple, out);
        for &s in &supports[o] {
            tuple[pos] = s;
            let w = weight * counts[o][s] as f64;
            rec(game, opponents, pos + 1, any_new, w, plays, counts, supports, tuple, out);
        }
    }
    rec(game, &opponents, 0, false, 1.0, plays, counts, supports, &mut tuple, &mut out);
    out
}
