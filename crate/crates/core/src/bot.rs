//! Live 1-v-n Guts sessions against a precomputed coalition policy.
//!
//! Money moves when it is incurred: every player antes 1 at the start, a
//! losing holder matches the pot, the winner collects it. Bankrolls plus
//! the pot therefore always sum to zero.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coalition::{decode_coalition_column, solve_one_vs_n, CoalitionSolution, SolveMode, SolveOptions};
use crate::error::{Error, Result};
use crate::model::make_grid;
use crate::payoff::RuleVariant;

/// Rounds after which a simulated session is abandoned.
const MAX_SIMULATED_ROUNDS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Hold,
    Drop,
}

impl std::str::FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hold" => Ok(Decision::Hold),
            "drop" => Ok(Decision::Drop),
            other => Err(Error::InvalidInput(format!("unknown decision `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    AwaitingDecision,
    Terminated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyPoint {
    /// One threshold per coalition member.
    pub thresholds: Vec<f64>,
    pub weight: f64,
}

/// Mixed coalition strategy over joint threshold profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalitionPolicy {
    pub opponents: usize,
    pub mesh: usize,
    pub rule: RuleVariant,
    pub points: Vec<PolicyPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolicyKey {
    pub opponents: usize,
    pub mesh: usize,
    pub rule: RuleVariant,
}

impl CoalitionPolicy {
    pub fn new(opponents: usize, mesh: usize, rule: RuleVariant, points: Vec<PolicyPoint>) -> Result<Self> {
        let p = Self { opponents, mesh, rule, points };
        p.validate()?;
        Ok(p)
    }

    /// Every member always plays the given threshold.
    pub fn pure(mesh: usize, rule: RuleVariant, thresholds: Vec<f64>) -> Result<Self> {
        Self::new(thresholds.len(), mesh, rule, vec![PolicyPoint { thresholds, weight: 1.0 }])
    }

    /// Full coalition support of a solved game, heaviest point first.
    pub fn from_solution(solution: &CoalitionSolution) -> Result<Self> {
        let grid = make_grid(solution.mesh)?;
        let mut points = solution
            .coalition_strategy
            .support()
            .map(|(column, weight)| {
                let idx = decode_coalition_column(solution.n, solution.mesh, solution.mode, column)?;
                Ok(PolicyPoint { thresholds: idx.iter().map(|&i| grid.value(i)).collect(), weight })
            })
            .collect::<Result<Vec<_>>>()?;
        points.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        Self::new(solution.coalition_size(), solution.mesh, solution.rule, points)
    }

    pub fn key(&self) -> PolicyKey {
        PolicyKey { opponents: self.opponents, mesh: self.mesh, rule: self.rule }
    }

    pub fn validate(&self) -> Result<()> {
        if self.opponents == 0 || self.points.is_empty() {
            return Err(Error::InvalidInput("policy needs at least one member and one point".into()));
        }
        for p in &self.points {
            if p.thresholds.len() != self.opponents {
                return Err(Error::InvalidInput(format!(
                    "policy point has {} thresholds for {} members",
                    p.thresholds.len(),
                    self.opponents
                )));
            }
            if p.thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) || !(p.weight > 0.0) {
                return Err(Error::InvalidInput(format!("invalid policy point {p:?}")));
            }
        }
        Ok(())
    }

    /// Points of weight at least `min_weight`, members' thresholds sorted
    /// in decreasing order, heaviest first.
    pub fn summary(&self, min_weight: f64) -> Vec<PolicyPoint> {
        let total: f64 = self.points.iter().map(|p| p.weight).sum();
        let mut out: Vec<PolicyPoint> = self
            .points
            .iter()
            .filter(|p| p.weight / total >= min_weight)
            .map(|p| {
                let mut t = p.thresholds.clone();
                t.sort_by(|a, b| b.total_cmp(a));
                PolicyPoint { thresholds: t, weight: p.weight / total }
            })
            .collect();
        out.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Coalition size; the table has `opponents + 1` players.
    pub opponents: usize,
    pub mesh: usize,
    pub rule: RuleVariant,
    pub seed: u64,
}

impl SessionConfig {
    pub fn key(&self) -> PolicyKey {
        PolicyKey { opponents: self.opponents, mesh: self.mesh, rule: self.rule }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundResolution {
    pub round_index: u64,
    /// Seat 0 is the human player.
    pub decisions: Vec<Decision>,
    pub hands: Vec<f64>,
    pub coalition_thresholds: Vec<f64>,
    pub winner: Option<usize>,
    pub pot_before: f64,
    pub pot_after: f64,
    pub bankroll_deltas: Vec<f64>,
    pub terminated: bool,
    pub weenie: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub opponents: usize,
    pub players: usize,
    pub mesh: usize,
    pub rule: RuleVariant,
    pub seed: u64,
    pub pot: f64,
    pub round_index: u64,
    pub phase: Phase,
    pub player_hand: Option<f64>,
    pub bankrolls: Vec<f64>,
    pub history: Vec<RoundResolution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coach: Option<Vec<PolicyPoint>>,
}

#[derive(Debug, Clone)]
pub struct GameSession {
    id: String,
    config: SessionConfig,
    policy: Arc<CoalitionPolicy>,
    sampler: WeightedIndex<f64>,
    pot: f64,
    round_index: u64,
    player_hand: Option<f64>,
    bankrolls: Vec<f64>,
    history: Vec<RoundResolution>,
    rng: ChaCha8Rng,
    phase: Phase,
}

impl GameSession {
    pub fn new(id: String, config: SessionConfig, policy: Arc<CoalitionPolicy>) -> Result<Self> {
        if policy.key() != config.key() {
            return Err(Error::InvalidInput(format!(
                "policy {:?} does not match session {:?}",
                policy.key(),
                config.key()
            )));
        }
        let sampler = WeightedIndex::new(policy.points.iter().map(|p| p.weight))
            .map_err(|e| Error::InvalidInput(format!("policy weights: {e}")))?;
        let players = config.opponents + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let player_hand = Some(rng.gen::<f64>());
        Ok(Self {
            id,
            config,
            policy,
            sampler,
            pot: players as f64,
            round_index: 0,
            player_hand,
            bankrolls: vec![-1.0; players],
            history: Vec::new(),
            rng,
            phase: Phase::AwaitingDecision,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn player_hand(&self) -> Option<f64> {
        self.player_hand
    }

    pub fn bankrolls(&self) -> &[f64] {
        &self.bankrolls
    }

    pub fn pot(&self) -> f64 {
        self.pot
    }

    pub fn submit(&mut self, decision: Decision) -> Result<RoundResolution> {
        let (Phase::AwaitingDecision, Some(player_hand)) = (self.phase, self.player_hand) else {
            return Err(Error::SessionState(format!("session {} has terminated", self.id)));
        };
        let point = &self.policy.points[self.sampler.sample(&mut self.rng)];
        let thresholds = point.thresholds.clone();
        let mut hands = vec![player_hand];
        hands.extend((0..self.config.opponents).map(|_| self.rng.gen::<f64>()));
        let mut decisions = vec![decision];
        decisions.extend(hands[1..].iter().zip(&thresholds).map(|(h, t)| {
            if h > t {
                Decision::Hold
            } else {
                Decision::Drop
            }
        }));

        let players = hands.len();
        let pot_before = self.pot;
        let mut deltas = vec![0.0; players];
        let holders: Vec<usize> = (0..players).filter(|&i| decisions[i] == Decision::Hold).collect();
        let highest = |seats: &mut dyn Iterator<Item = usize>| {
            seats.max_by(|&a, &b| hands[a].total_cmp(&hands[b]).then(b.cmp(&a)))
        };
        let (winner, weenie, pot_after, terminated) = match holders.len() {
            0 => match self.config.rule {
                RuleVariant::Standard => (None, None, pot_before, false),
                RuleVariant::Weenie => {
                    let low = (0..players)
                        .min_by(|&a, &b| hands[a].total_cmp(&hands[b]).then(a.cmp(&b)))
                        .expect("at least two players");
                    deltas[low] = -pot_before;
                    (None, Some(low), 2.0 * pot_before, false)
                }
            },
            1 => {
                deltas[holders[0]] = pot_before;
                (Some(holders[0]), None, 0.0, true)
            }
            m => {
                let w = highest(&mut holders.iter().copied()).expect("holders");
                for &h in &holders {
                    deltas[h] = if h == w { pot_before } else { -pot_before };
                }
                (Some(w), None, (m - 1) as f64 * pot_before, false)
            }
        };
        for (b, d) in self.bankrolls.iter_mut().zip(&deltas) {
            *b += d;
        }
        let resolution = RoundResolution {
            round_index: self.round_index,
            decisions,
            hands,
            coalition_thresholds: thresholds,
            winner,
            pot_before,
            pot_after,
            bankroll_deltas: deltas,
            terminated,
            weenie,
        };
        self.pot = pot_after;
        self.round_index += 1;
        if terminated {
            self.phase = Phase::Terminated;
            self.player_hand = None;
        } else {
            self.player_hand = Some(self.rng.gen::<f64>());
        }
        self.history.push(resolution.clone());
        Ok(resolution)
    }

    pub fn view(&self, coach: bool) -> SessionView {
        SessionView {
            session_id: self.id.clone(),
            opponents: self.config.opponents,
            players: self.config.opponents + 1,
            mesh: self.config.mesh,
            rule: self.config.rule,
            seed: self.config.seed,
            pot: self.pot,
            round_index: self.round_index,
            phase: self.phase,
            player_hand: self.player_hand,
            bankrolls: self.bankrolls.clone(),
            history: self.history.clone(),
            coach: coach.then(|| self.policy.summary(1e-3)),
        }
    }
}

/// Coalition policies keyed by table shape, optionally solved on demand.
#[derive(Debug, Default)]
pub struct PolicyTable {
    policies: RwLock<HashMap<PolicyKey, Arc<CoalitionPolicy>>>,
    on_demand: Option<SolveOptions>,
}

impl PolicyTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Missing policies are solved with `opts` when first requested.
    pub fn with_on_demand(opts: SolveOptions) -> Self {
        Self { policies: RwLock::default(), on_demand: Some(opts) }
    }

    pub fn insert(&self, policy: CoalitionPolicy) -> Result<()> {
        policy.validate()?;
        self.policies.write().expect("policy lock").insert(policy.key(), Arc::new(policy));
        Ok(())
    }

    /// Loads every `*.json` policy file in `dir`.
    pub fn load_dir(&self, dir: &std::path::Path) -> Result<usize> {
        let mut loaded = 0;
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let policy: CoalitionPolicy = serde_json::from_slice(&fs::read(&path)?)?;
                self.insert(policy)?;
                loaded += 1;
            }
        }
        Ok(loaded)
    }

    pub fn keys(&self) -> Vec<PolicyKey> {
        self.policies.read().expect("policy lock").keys().copied().collect()
    }

    pub fn get(&self, key: PolicyKey) -> Result<Arc<CoalitionPolicy>> {
        if let Some(p) = self.policies.read().expect("policy lock").get(&key) {
            return Ok(p.clone());
        }
        let Some(opts) = &self.on_demand else {
            return Err(Error::PolicyUnavailable {
                opponents: key.opponents,
                mesh: key.mesh,
                rule: key.rule.to_string(),
            });
        };
        let players = key.opponents + 1;
        let mode = if players <= 3 { SolveMode::Full } else { SolveMode::PseudoBloc };
        let solution = solve_one_vs_n(players, key.mesh, mode, key.rule, opts)?;
        let policy = Arc::new(CoalitionPolicy::from_solution(&solution)?);
        self.policies.write().expect("policy lock").insert(key, policy.clone());
        Ok(policy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TranscriptEvent {
    Created { state: SessionView },
    Resolved { decision: Decision, resolution: RoundResolution },
}

/// In-process session store; each session is locked independently.
#[derive(Debug)]
pub struct SessionStore {
    policies: PolicyTable,
    sessions: Mutex<HashMap<String, Arc<Mutex<GameSession>>>>,
    counter: Mutex<u64>,
    salt: u64,
    transcript_dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn new(policies: PolicyTable) -> Self {
        Self {
            policies,
            sessions: Mutex::default(),
            counter: Mutex::new(0),
            salt: rand::random(),
            transcript_dir: None,
        }
    }

    /// Appends every session's events as JSON lines to `dir/<id>.jsonl`.
    pub fn with_transcripts(mut self, dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        self.transcript_dir = Some(dir);
        Ok(self)
    }

    pub fn policies(&self) -> &PolicyTable {
        &self.policies
    }

    pub fn create(&self, config: SessionConfig) -> Result<SessionView> {
        if config.opponents == 0 {
            return Err(Error::InvalidInput("need at least one opponent".into()));
        }
        make_grid(config.mesh)?;
        let policy = self.policies.get(config.key())?;
        let id = {
            let mut c = self.counter.lock().expect("counter lock");
            *c += 1;
            format!("{:016x}{:08x}", self.salt, *c)
        };
        let session = GameSession::new(id.clone(), config, policy)?;
        let view = session.view(false);
        self.record(&id, &TranscriptEvent::Created { state: view.clone() })?;
        self.sessions.lock().expect("store lock").insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<GameSession>>> {
        self.sessions
            .lock()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| Error::SessionNotFound(id.to_string()))
    }

    pub fn decide(&self, id: &str, decision: Decision) -> Result<(RoundResolution, SessionView)> {
        let session = self.session(id)?;
        let mut s = session.lock().expect("session lock");
        let resolution = s.submit(decision)?;
        self.record(id, &TranscriptEvent::Resolved { decision, resolution: resolution.clone() })?;
        Ok((resolution, s.view(false)))
    }

    pub fn state(&self, id: &str, coach: bool) -> Result<SessionView> {
        let session = self.session(id)?;
        let s = session.lock().expect("session lock");
        Ok(s.view(coach))
    }

    pub fn delete(&self, id: &str) -> Result<()> {
        self.sessions
            .lock()
            .expect("store lock")
            .remove(id)
            .map(|_| ())
            .ok_or_else(|| Error::SessionNotFound(id.to_string()))
    }

    fn record(&self, id: &str, event: &TranscriptEvent) -> Result<()> {
        let Some(dir) = &self.transcript_dir else { return Ok(()) };
        let mut f = OpenOptions::new().create(true).append(true).open(dir.join(format!("{id}.jsonl")))?;
        writeln!(f, "{}", serde_json::to_string(event)?)?;
        Ok(())
    }
}

/// Plays `decisions` in order from a fresh session, stopping early if the
/// session terminates.
pub fn play_script(
    policy: Arc<CoalitionPolicy>,
    config: SessionConfig,
    decisions: &[Decision],
) -> Result<Vec<TranscriptEvent>> {
    let mut session = GameSession::new(format!("seed-{}", config.seed), config, policy)?;
    let mut events = vec![TranscriptEvent::Created { state: session.view(false) }];
    for &decision in decisions {
        if session.phase() == Phase::Terminated {
            break;
        }
        let resolution = session.submit(decision)?;
        events.push(TranscriptEvent::Resolved { decision, resolution });
    }
    Ok(events)
}

pub fn transcript_json_lines(events: &[TranscriptEvent]) -> Result<String> {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub sessions: u64,
    pub mean_return: f64,
    pub std_error: f64,
    pub mean_rounds: f64,
}

/// Seat 0 holds iff its hand beats `player_threshold`; session `i` uses
/// seed `seed + i`. Returns seat 0's final bankroll statistics.
pub fn simulate_sessions(
    policy: Arc<CoalitionPolicy>,
    rule: RuleVariant,
    player_threshold: f64,
    sessions: u64,
    seed: u64,
) -> Result<FairnessReport> {
    if sessions < 2 {
        return Err(Error::InvalidInput("need at least 2 sessions".into()));
    }
    let base = SessionConfig { opponents: policy.opponents, mesh: policy.mesh, rule, seed };
    let outcomes = (0..sessions)
        .into_par_iter()
        .map(|i| {
            let config = SessionConfig { seed: seed.wrapping_add(i), ..base };
            let mut s = GameSession::new(String::new(), config, policy.clone())?;
            while let Some(hand) = s.player_hand() {
                if s.round_index >= MAX_SIMULATED_ROUNDS {
                    return Err(Error::SessionState(format!("session {i} did not terminate")));
                }
                s.submit(if hand > player_threshold { Decision::Hold } else { Decision::Drop })?;
            }
            Ok((s.bankrolls()[0], s.round_index))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = outcomes.len() as f64;
    let mean = outcomes.iter().map(|o| o.0).sum::<f64>() / k;
    let var = outcomes.iter().map(|o| (o.0 - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(FairnessReport {
        sessions,
        mean_return: mean,
        std_error: (var / k).sqrt(),
        mean_rounds: outcomes.iter().map(|o| o.1 as f64).sum::<f64>() / k,
    })
}
