//! Tabular Q-learning over an aggregated state grid, for the defender (against
//! a weighted mixture of attacker policies) and for the attacker (best
//! response to a frozen defender).

use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::game::{AttackerObservation, DefenderObservation, Game, GameConfig};
use crate::policy::{AttackerPolicy, DailyBound, DailyBounded, Policy, PolicyManifest};
use crate::seed::{derive_seed, rng_from, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregation {
    pub backlog_bin: u64,
    pub backlog_cap: u64,
    pub budget_bin: u64,
    pub hours_bin: u32,
}

impl Aggregation {
    pub fn paper() -> Self {
        Aggregation {
            backlog_bin: 120,
            backlog_cap: 6000,
            budget_bin: 2400,
            hours_bin: 8,
        }
    }

    pub fn desk() -> Self {
        Aggregation {
            backlog_bin: 10,
            backlog_cap: 300,
            budget_bin: 60,
            hours_bin: 4,
        }
    }

    /// Picks the paper grid for paper-sized games and rescales otherwise.
    pub fn for_config(config: &GameConfig) -> Self {
        if config.cost.anchor_high >= 1000.0 {
            Self::paper()
        } else {
            Self::desk()
        }
    }

    pub fn validate(&self, config: &GameConfig) -> Result<()> {
        if self.backlog_bin == 0 || self.budget_bin == 0 || self.hours_bin == 0 {
            return Err(Error::InvalidConfig("aggregation bins must be at least 1".into()));
        }
        if (self.backlog_cap as f64) < config.cost.anchor_high {
            return Err(Error::InvalidConfig(format!(
                "backlog cap {} below the high cost anchor {}",
                self.backlog_cap, config.cost.anchor_high
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Defender,
    Attacker,
}

/// Maps observations onto a dense index. Layout is row-major over
/// (backlog, hours, defender budget, attacker budget); the defender grid has
/// a single attacker-budget cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateEncoder {
    pub aggregation: Aggregation,
    pub n_backlog: usize,
    pub n_hours: usize,
    pub n_defender: usize,
    pub n_attacker: usize,
}

impl StateEncoder {
    fn sized(agg: Aggregation, config: &GameConfig, with_attacker: bool) -> Self {
        StateEncoder {
            aggregation: agg,
            n_backlog: (agg.backlog_cap / agg.backlog_bin) as usize + 1,
            n_hours: (config.horizon / agg.hours_bin) as usize + 1,
            n_defender: (config.defender_budget / agg.budget_bin) as usize + 1,
            n_attacker: if with_attacker {
                (config.attacker_budget / agg.budget_bin) as usize + 1
            } else {
                1
            },
        }
    }

    pub fn defender(agg: Aggregation, config: &GameConfig) -> Self {
        Self::sized(agg, config, false)
    }

    pub fn attacker(agg: Aggregation, config: &GameConfig) -> Self {
        Self::sized(agg, config, true)
    }

    pub fn n_states(&self) -> usize {
        self.n_backlog * self.n_hours * self.n_defender * self.n_attacker
    }

    pub fn encode_parts(&self, backlog: u64, hours: u32, x: u64, y: u64) -> usize {
        let agg = &self.aggregation;
        let bi = (backlog.min(agg.backlog_cap) / agg.backlog_bin) as usize;
        let ni = ((hours / agg.hours_bin) as usize).min(self.n_hours - 1);
        let xi = ((x / agg.budget_bin) as usize).min(self.n_defender - 1);
        let yi = ((y / agg.budget_bin) as usize).min(self.n_attacker - 1);
        ((bi * self.n_hours + ni) * self.n_defender + xi) * self.n_attacker + yi
    }

    pub fn encode_defender(&self, obs: &DefenderObservation) -> usize {
        self.encode_parts(obs.backlog, obs.remaining_hours, obs.defender_remaining, 0)
    }

    pub fn encode_attacker(&self, obs: &AttackerObservation) -> usize {
        let s = &obs.state;
        self.encode_parts(
            s.backlog,
            s.remaining_hours,
            s.defender_remaining,
            s.attacker_remaining,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LearningRate {
    Constant(f64),
    /// `1 / (1 + visits)^p`.
    VisitPower(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub episodes: u64,
    pub learning_rate: LearningRate,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the episodes over which epsilon anneals linearly.
    pub explore_fraction: f64,
    pub gamma: f64,
    /// Defender only: never consider allocations larger than the backlog
    /// rounded up to a whole chunk.
    #[serde(default)]
    pub prune_dominated: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            episodes: 60_000,
            learning_rate: LearningRate::VisitPower(1.0),
            epsilon_start: 1.0,
            epsilon_end: 0.02,
            explore_fraction: 0.8,
            gamma: 0.99,
            prune_dominated: false,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon must lie in [0, 1]");
        }
        if self.epsilon_end > self.epsilon_start {
            return bad("epsilon schedule must be nonincreasing");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(self.explore_fraction > 0.0 && self.explore_fraction <= 1.0) {
            return bad("explore fraction must lie in (0, 1]");
        }
        match self.learning_rate {
            LearningRate::Constant(a) if !(0.0..=1.0).contains(&a) => bad("learning rate must lie in [0, 1]"),
            LearningRate::VisitPower(p) if !(p > 0.0 && p <= 1.0) => bad("learning-rate exponent must lie in (0, 1]"),
            _ => Ok(()),
        }
    }

    pub fn epsilon(&self, episode: u64) -> f64 {
        let span = (self.episodes as f64 * self.explore_fraction).max(1.0);
        let t = (episode as f64 / span).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
    visits: Vec<u32>,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        QTable {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
            visits: vec![0; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn value(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn set_value(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.n_actions + a] = v;
    }

    pub fn visits(&self, s: usize, a: usize) -> u32 {
        self.visits[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn max_value(&self, s: usize) -> f64 {
        self.max_among(s, self.n_actions)
    }

    /// Max over the first `limit` actions.
    pub fn max_among(&self, s: usize, limit: usize) -> f64 {
        self.row(s)[..limit.clamp(1, self.n_actions)]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Argmax of the row; ties go to the lowest index (least spend).
    pub fn greedy_action(&self, s: usize) -> usize {
        self.greedy_among(s, self.n_actions)
    }

    /// Argmax over the first `limit` actions.
    pub fn greedy_among(&self, s: usize, limit: usize) -> usize {
        let row = &self.row(s)[..limit.clamp(1, self.n_actions)];
        let mut best = 0;
        for (i, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = i;
            }
        }
        best
    }

    /// One-step Q-learning backup. Returns the new value.
    pub fn q_update(
        &mut self,
        s: usize,
        a: usize,
        reward: f64,
        next: usize,
        terminal: bool,
        hyper: &Hyperparams,
    ) -> f64 {
        self.q_update_among(s, a, reward, next, self.n_actions, terminal, hyper)
    }

    /// Backup whose target maximises over the first `next_limit` actions.
    #[allow(clippy::too_many_arguments)]
    pub fn q_update_among(
        &mut self,
        s: usize,
        a: usize,
        reward: f64,
        next: usize,
        next_limit: usize,
        terminal: bool,
        hyper: &Hyperparams,
    ) -> f64 {
        let k = s * self.n_actions + a;
        let alpha = match hyper.learning_rate {
            LearningRate::Constant(alpha) => alpha,
            LearningRate::VisitPower(p) => (1.0 + f64::from(self.visits[k])).powf(-p),
        };
        let bootstrap = if terminal {
            0.0
        } else {
            hyper.gamma * self.max_among(next, next_limit)
        };
        let v = self.values[k] + alpha * (reward + bootstrap - self.values[k]);
        self.values[k] = v;
        self.visits[k] = self.visits[k].saturating_add(1);
        v
    }
}

/// Provenance carried by every persisted table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableHeader {
    pub role: Role,
    pub config_hash: String,
    pub encoder: StateEncoder,
    pub hyper: Hyperparams,
    pub seed: u64,
    pub actions: Vec<u64>,
    /// Daily bound applied while training, if any (attacker only).
    #[serde(default)]
    pub daily_bound: Option<DailyBound>,
    #[serde(default)]
    pub label: String,
    /// Defender only: skip allocations larger than the backlog rounded up
    /// to a whole chunk, which cost budget and clear nothing.
    #[serde(default)]
    pub prune_dominated: bool,
}

const MAGIC: &[u8; 4] = b"AGQT";
const FORMAT_VERSION: u32 = 1;

pub fn expected_hash(role: Role, config: &GameConfig) -> String {
    match role {
        Role::Defender => config.defender_view_hash(),
        Role::Attacker => config.hash(),
    }
}

/// Greedy policy over a frozen table.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    pub table: Arc<QTable>,
    pub header: Arc<TableHeader>,
}

impl GreedyPolicy {
    pub fn new(table: QTable, header: TableHeader) -> Self {
        GreedyPolicy {
            table: Arc::new(table),
            header: Arc::new(header),
        }
    }

    pub fn role(&self) -> Role {
        self.header.role
    }

    fn action_for(&self, s: usize) -> u64 {
        self.header.actions[self.table.greedy_action(s)]
    }

    fn defender_action_for(&self, obs: &DefenderObservation) -> u64 {
        let s = self.header.encoder.encode_defender(obs);
        if self.header.prune_dominated {
            self.header.actions[self.table.greedy_among(s, useful_defender_actions(&self.header.actions, obs.backlog))]
        } else {
            self.action_for(s)
        }
    }

    /// Writes header and table to `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let header = serde_json::to_vec(&*self.header)?;
        let mut buf = Vec::with_capacity(16 + header.len() + self.table.values.len() * 12);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
        buf.extend_from_slice(&header);
        buf.extend_from_slice(&(self.table.n_states as u64).to_le_bytes());
        buf.extend_from_slice(&(self.table.n_actions as u64).to_le_bytes());
        for v in &self.table.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for c in &self.table.visits {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        let mut f = fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    /// Loads a table and refuses it unless it was trained for `role` under a
    /// config with the same hash as `config`.
    pub fn load(path: &Path, role: Role, config: &GameConfig) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut cur = Cursor { bytes: &bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Format("not a Q-table file".into()));
        }
        let version = u32::from_le_bytes(cur.take(4)?.try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported table version {version}")));
        }
        let hlen = u32::from_le_bytes(cur.take(4)?.try_into().expect("4 bytes")) as usize;
        let header: TableHeader = serde_json::from_slice(cur.take(hlen)?)?;
        if header.role != role {
            return Err(Error::Format(format!(
                "table holds a {:?} policy, expected {role:?}",
                header.role
            )));
        }
        let want = expected_hash(role, config);
        if header.config_hash != want {
            return Err(Error::ConfigHashMismatch {
                expected: header.config_hash,
                found: want,
            });
        }
        let n_states = u64::from_le_bytes(cur.take(8)?.try_into().expect("8 bytes")) as usize;
        let n_actions = u64::from_le_bytes(cur.take(8)?.try_into().expect("8 bytes")) as usize;
        if n_states != header.encoder.n_states() || n_actions != header.actions.len() {
            return Err(Error::Format("table dimensions disagree with header".into()));
        }
        let cells = n_states * n_actions;
        let mut table = QTable::new(n_states, n_actions);
        for v in table.values.iter_mut() {
            *v = f64::from_le_bytes(cur.take(8)?.try_into().expect("8 bytes"));
        }
        for c in table.visits.iter_mut() {
            *c = u32::from_le_bytes(cur.take(4)?.try_into().expect("4 bytes"));
        }
        debug_assert_eq!(table.values.len(), cells);
        if cur.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after table".into()));
        }
        Ok(GreedyPolicy::new(table, header))
    }

    fn manifest_inner(&self) -> PolicyManifest {
        PolicyManifest::new(
            "q-greedy",
            json!({
                "role": self.header.role,
                "label": self.header.label,
                "config_hash": self.header.config_hash,
                "seed": self.header.seed,
                "episodes": self.header.hyper.episodes,
                "actions": self.header.actions.len(),
            }),
        )
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Format("truncated table file".into()));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
}

impl Policy<DefenderObservation> for GreedyPolicy {
    fn act(&mut self, obs: &DefenderObservation, _rng: &mut ChaCha8Rng) -> u64 {
        self.defender_action_for(obs)
    }

    fn manifest(&self) -> PolicyManifest {
        self.manifest_inner()
    }

    fn box_clone(&self) -> Box<dyn Policy<DefenderObservation>> {
        Box::new(self.clone())
    }
}

impl Policy<AttackerObservation> for GreedyPolicy {
    fn act(&mut self, obs: &AttackerObservation, _rng: &mut ChaCha8Rng) -> u64 {
        self.action_for(self.header.encoder.encode_attacker(obs))
    }

    fn manifest(&self) -> PolicyManifest {
        self.manifest_inner()
    }

    fn box_clone(&self) -> Box<dyn Policy<AttackerObservation>> {
        Box::new(self.clone())
    }
}

/// Number of leading actions (ascending multiples of a chunk) that clear
/// something: allocations past the backlog rounded up to a chunk are
/// dominated by the rounded-up one.
pub fn useful_defender_actions(actions: &[u64], backlog: u64) -> usize {
    let chunk = actions.get(1).copied().unwrap_or(1).max(1);
    actions.iter().take_while(|&&a| a < backlog.saturating_add(chunk)).count().max(1)
}

fn explore(table: &QTable, s: usize, limit: usize, eps: f64, rng: &mut ChaCha8Rng) -> usize {
    if rng.random::<f64>() < eps {
        rng.random_range(0..limit)
    } else {
        table.greedy_among(s, limit)
    }
}

fn check_finite(v: f64, role: &str, episode: u64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "{role} Q-value became {v} during episode {episode}"
        )))
    }
}

fn pick_weighted(weights: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Trains a defender against a weighted mixture of attacker policies with
/// the shaped reward `-f(b - d) + w q(x', n')`. Each episode samples one
/// opponent. The defender only ever sees its own observation.
pub fn train_defender(
    game: &Game,
    mixture: &[(AttackerPolicy, f64)],
    hyper: &Hyperparams,
    agg: Aggregation,
    seed: u64,
) -> Result<GreedyPolicy> {
    hyper.validate()?;
    agg.validate(game.config())?;
    if mixture.is_empty() {
        return Err(Error::InvalidArgument("empty opponent mixture".into()));
    }
    let weights: Vec<f64> = mixture.iter().map(|(_, w)| *w).collect();
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "mixture weights must be nonnegative and sum to 1, got {total}"
        )));
    }
    let encoder = StateEncoder::defender(agg, game.config());
    let actions = game.legal_defender_actions();
    let mut table = QTable::new(encoder.n_states(), actions.len());
    let mut trainer_rng = rng_from(derive_seed(seed, Stream::Trainer, 0));

    for ep in 0..hyper.episodes {
        let eps = hyper.epsilon(ep);
        let pick = pick_weighted(&weights, total, &mut trainer_rng);
        let mut opponent = mixture[pick].0.box_clone();
        opponent.reset();
        let mut env_rng = rng_from(derive_seed(seed, Stream::Environment, ep));
        let mut opp_rng = rng_from(derive_seed(seed, Stream::Policy, ep));
        let (mut state, dobs, mut aobs) = game.reset();
        let mut s = encoder.encode_defender(&dobs);
        while !state.is_terminal() {
            let limit = if hyper.prune_dominated {
                useful_defender_actions(&actions, state.backlog)
            } else {
                actions.len()
            };
            let ai = explore(&table, s, limit, eps, &mut trainer_rng);
            let d = actions[ai];
            let a = opponent.act(&aobs, &mut opp_rng);
            let reward = game.shaped_reward_defender(&state, d);
            let step = game.step(&state, d, a, &mut env_rng)?;
            let s2 = encoder.encode_defender(&step.defender_obs);
            let limit2 = if hyper.prune_dominated {
                useful_defender_actions(&actions, step.next.backlog)
            } else {
                actions.len()
            };
            let v = table.q_update_among(s, ai, reward, s2, limit2, step.next.is_terminal(), hyper);
            check_finite(v, "defender", ep)?;
            state = step.next;
            aobs = step.attacker_obs;
            s = s2;
        }
    }

    let header = TableHeader {
        role: Role::Defender,
        config_hash: expected_hash(Role::Defender, game.config()),
        encoder,
        hyper: *hyper,
        seed,
        actions,
        daily_bound: None,
        label: String::new(),
        prune_dominated: hyper.prune_dominated,
    };
    Ok(GreedyPolicy::new(table, header))
}

/// Learns an approximate best response to a frozen defender with the shaped
/// reward `f(b - d) + w q(y', n')`. With a daily bound the explored action
/// is clamped by the bound and the clamped action is the one credited.
pub fn train_attacker_best_response(
    game: &Game,
    defender: &dyn Policy<DefenderObservation>,
    hyper: &Hyperparams,
    agg: Aggregation,
    daily_bound: Option<DailyBound>,
    seed: u64,
) -> Result<GreedyPolicy> {
    hyper.validate()?;
    agg.validate(game.config())?;
    let encoder = StateEncoder::attacker(agg, game.config());
    let actions = game.legal_attacker_actions();
    let chunk = game.config().attacker_chunk;
    let mut table = QTable::new(encoder.n_states(), actions.len());
    let mut trainer_rng = rng_from(derive_seed(seed, Stream::Trainer, 1));
    let mut bound = match daily_bound {
        Some(b) => Some(DailyBounded::<AttackerObservation>::new(
            Box::new(crate::policy::Constant::new(0)),
            b,
            chunk,
        )?),
        None => None,
    };

    for ep in 0..hyper.episodes {
        let eps = hyper.epsilon(ep);
        let mut defender = defender.box_clone();
        defender.reset();
        if let Some(b) = bound.as_mut() {
            b.reset();
        }
        let mut env_rng = rng_from(derive_seed(seed, Stream::Environment, ep));
        let mut def_rng = rng_from(derive_seed(seed, Stream::Policy, ep));
        let (mut state, mut dobs, aobs) = game.reset();
        let mut s = encoder.encode_attacker(&aobs);
        while !state.is_terminal() {
            let mut ai = explore(&table, s, actions.len(), eps, &mut trainer_rng);
            if let Some(b) = bound.as_mut() {
                ai = (b.admit(actions[ai]) / chunk) as usize;
            }
            let a = actions[ai];
            let d = defender.act(&dobs, &mut def_rng);
            let reward = game.shaped_reward_attacker(&state, d, a);
            let step = game.step(&state, d, a, &mut env_rng)?;
            let s2 = encoder.encode_attacker(&step.attacker_obs);
            let v = table.q_update(s, ai, reward, s2, step.next.is_terminal(), hyper);
            check_finite(v, "attacker", ep)?;
            state = step.next;
            dobs = step.defender_obs;
            s = s2;
        }
    }

    let header = TableHeader {
        role: Role::Attacker,
        config_hash: expected_hash(Role::Attacker, game.config()),
        encoder,
        hyper: *hyper,
        seed,
        actions,
        daily_bound,
        label: String::new(),
        prune_dominated: false,
    };
    Ok(GreedyPolicy::new(table, header))
}

/// Wraps a learned attacker in the daily bound it was trained under.
pub fn deployable_attacker(policy: GreedyPolicy) -> Result<AttackerPolicy> {
    match policy.header.daily_bound {
        Some(b) => {
            let chunk = policy
                .header
                .actions
                .get(1)
                .copied()
                .unwrap_or(1)
                .max(1);
            Ok(Box::new(DailyBounded::new(Box::new(policy), b, chunk)?))
        }
        None => Ok(Box::new(policy)),
    }
}
