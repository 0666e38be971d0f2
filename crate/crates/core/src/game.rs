//! The two-player hourly game: state `<b, n, x, y>`, chunked actions, budget
//! bookkeeping, the piecewise-linear cost, shaped rewards and the asymmetric
//! observations each player receives.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::queue::{step_backlog, ArrivalSampler, QueueParams};
use crate::seed::{derive_seed, rng_from, Stream};

/// Piecewise-linear backlog cost: 0 up to `anchor_low`, 1 from `anchor_high`,
/// linear in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostFunction {
    pub anchor_low: f64,
    pub anchor_high: f64,
}

impl CostFunction {
    pub fn paper() -> Self {
        CostFunction {
            anchor_low: 1175.0,
            anchor_high: 4350.0,
        }
    }

    pub fn eval(&self, backlog: f64) -> f64 {
        if backlog <= self.anchor_low {
            0.0
        } else if backlog >= self.anchor_high {
            1.0
        } else {
            (backlog - self.anchor_low) / (self.anchor_high - self.anchor_low)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub queue: QueueParams,
    /// Episode length N in hours.
    pub horizon: u32,
    /// X: total extra inspections.
    pub defender_budget: u64,
    /// Y: total extra alerts.
    pub attacker_budget: u64,
    /// E: per-hour cap on extra inspections, and on injected alerts unless
    /// `attacker_uncapped` is set.
    pub hour_cap: u64,
    pub defender_chunk: u64,
    pub attacker_chunk: u64,
    pub cost: CostFunction,
    pub shaping_weight: f64,
    /// Lets the attacker send up to its whole remaining budget in one hour.
    #[serde(default)]
    pub attacker_uncapped: bool,
}

impl GameConfig {
    pub fn paper() -> Self {
        GameConfig {
            queue: QueueParams::paper(),
            horizon: 336,
            defender_budget: 28_800,
            attacker_budget: 28_800,
            hour_cap: 2400,
            defender_chunk: 60,
            attacker_chunk: 60,
            cost: CostFunction::paper(),
            shaping_weight: 0.1,
            attacker_uncapped: false,
        }
    }

    /// Scaled-down game on which tabular learning converges in seconds.
    pub fn desk() -> Self {
        GameConfig {
            queue: QueueParams {
                lambda_nominal: 90.0,
                mu_nominal: 96.0,
                disturbance: crate::queue::DisturbanceModel::mild(),
                initial_backlog: 60,
            },
            horizon: 48,
            defender_budget: 1200,
            attacker_budget: 1200,
            hour_cap: 120,
            defender_chunk: 60,
            attacker_chunk: 60,
            cost: CostFunction {
                anchor_low: 60.0,
                anchor_high: 240.0,
            },
            shaping_weight: 0.1,
            attacker_uncapped: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.queue.validate()?;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.horizon == 0 {
            return bad("horizon must be at least 1 hour".into());
        }
        if self.defender_chunk == 0 || self.attacker_chunk == 0 {
            return bad("chunk sizes must be positive".into());
        }
        if self.hour_cap % self.defender_chunk != 0 {
            return bad(format!(
                "defender chunk {} does not divide hour cap {}",
                self.defender_chunk, self.hour_cap
            ));
        }
        if self.hour_cap % self.attacker_chunk != 0 {
            return bad(format!(
                "attacker chunk {} does not divide hour cap {}",
                self.attacker_chunk, self.hour_cap
            ));
        }
        if !(self.cost.anchor_low >= 0.0 && self.cost.anchor_low < self.cost.anchor_high) {
            return bad(format!(
                "cost anchors must satisfy 0 <= low < high, got ({}, {})",
                self.cost.anchor_low, self.cost.anchor_high
            ));
        }
        if !(self.shaping_weight.is_finite() && self.shaping_weight >= 0.0) {
            return bad(format!("shaping weight {} invalid", self.shaping_weight));
        }
        Ok(())
    }

    /// Largest legal injection in one hour.
    pub fn attacker_cap(&self) -> u64 {
        if self.attacker_uncapped {
            (self.attacker_budget / self.attacker_chunk) * self.attacker_chunk
        } else {
            self.hour_cap
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_json(self)
    }

    /// Hash of the parameters a defender table depends on: its dynamics,
    /// observation ranges and action set. Attacker-side settings are left
    /// out so one defender can be evaluated against several attacker
    /// budgets.
    pub fn defender_view_hash(&self) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            queue: &'a QueueParams,
            horizon: u32,
            defender_budget: u64,
            hour_cap: u64,
            defender_chunk: u64,
            cost: &'a CostFunction,
            shaping_weight: f64,
        }
        sha256_json(&View {
            queue: &self.queue,
            horizon: self.horizon,
            defender_budget: self.defender_budget,
            hour_cap: self.hour_cap,
            defender_chunk: self.defender_chunk,
            cost: &self.cost,
            shaping_weight: self.shaping_weight,
        })
    }
}

fn sha256_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serialises");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameState {
    pub backlog: u64,
    pub remaining_hours: u32,
    pub defender_remaining: u64,
    pub attacker_remaining: u64,
}

impl GameState {
    pub fn is_terminal(&self) -> bool {
        self.remaining_hours == 0
    }
}

/// What the defender sees: no attacker budget, no attacker action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefenderObservation {
    pub backlog: u64,
    pub remaining_hours: u32,
    pub defender_remaining: u64,
    pub last_defender_action: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackerObservation {
    pub state: GameState,
    pub last_defender_action: u64,
    pub last_attacker_action: u64,
}

impl DefenderObservation {
    pub fn project(state: &GameState, last_defender_action: u64) -> Self {
        DefenderObservation {
            backlog: state.backlog,
            remaining_hours: state.remaining_hours,
            defender_remaining: state.defender_remaining,
            last_defender_action,
        }
    }
}

/// `q(r, n)`: spending-pace incentive in `[0, 1]`, 1/2 when the remaining
/// budget per remaining hour equals the initial budget per hour.
pub fn budget_pace(remaining: u64, hours_left: u32, initial: u64, horizon: u32) -> f64 {
    if initial == 0 || horizon == 0 {
        return 0.0;
    }
    let per_hour = remaining as f64 / f64::from(hours_left.max(1));
    let neutral = initial as f64 / f64::from(horizon);
    (0.5 * per_hour / neutral).clamp(0.0, 1.0)
}

/// One simulated hour as recorded in a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourRecord {
    /// 1-based hour index.
    pub hour: u32,
    pub b_pre: u64,
    /// Requested allocation.
    pub d: u64,
    /// Requested injection.
    pub a: u64,
    /// Allocation actually paid for, `min(d, x)`.
    pub spent: u64,
    /// Injection actually sent, `min(a, y)`.
    pub injected: u64,
    /// Backlog after allocation, before the hour's arrivals.
    pub b_alloc: u64,
    pub arrivals: u64,
    pub capacity: u64,
    /// End-of-hour backlog.
    pub b_post: u64,
    /// Defender budget left after the hour.
    pub x: u64,
    /// Attacker budget left after the hour.
    pub y: u64,
    pub stage_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub next: GameState,
    pub record: HourRecord,
    pub defender_obs: DefenderObservation,
    pub attacker_obs: AttackerObservation,
}

/// A validated game with its arrival sampler.
#[derive(Debug, Clone)]
pub struct Game {
    config: GameConfig,
    arrivals: ArrivalSampler,
}

impl Game {
    pub fn new(config: GameConfig) -> Result<Self> {
        config.validate()?;
        let arrivals = ArrivalSampler::new(config.queue.lambda_nominal)?;
        Ok(Game { config, arrivals })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn initial_state(&self) -> GameState {
        GameState {
            backlog: self.config.queue.initial_backlog,
            remaining_hours: self.config.horizon,
            defender_remaining: self.config.defender_budget,
            attacker_remaining: self.config.attacker_budget,
        }
    }

    pub fn reset(&self) -> (GameState, DefenderObservation, AttackerObservation) {
        let s = self.initial_state();
        (
            s,
            DefenderObservation::project(&s, 0),
            AttackerObservation {
                state: s,
                last_defender_action: 0,
                last_attacker_action: 0,
            },
        )
    }

    pub fn legal_defender_actions(&self) -> Vec<u64> {
        chunk_grid(self.config.defender_chunk, self.config.hour_cap)
    }

    pub fn legal_attacker_actions(&self) -> Vec<u64> {
        chunk_grid(self.config.attacker_chunk, self.config.attacker_cap())
    }

    pub fn is_legal_defender(&self, d: u64) -> bool {
        d % self.config.defender_chunk == 0 && d <= self.config.hour_cap
    }

    pub fn is_legal_attacker(&self, a: u64) -> bool {
        a % self.config.attacker_chunk == 0 && a <= self.config.attacker_cap()
    }

    /// Backlog left after the defender's allocation is paid for.
    pub fn post_allocation(&self, state: &GameState, d: u64) -> u64 {
        state.backlog.saturating_sub(d.min(state.defender_remaining))
    }

    /// `C(s, d) = f(b - min(d, x))`.
    pub fn defender_cost(&self, state: &GameState, d: u64) -> f64 {
        self.config.cost.eval(self.post_allocation(state, d) as f64)
    }

    pub fn defender_pace(&self, state: &GameState, d: u64) -> f64 {
        budget_pace(
            state.defender_remaining - d.min(state.defender_remaining),
            state.remaining_hours.saturating_sub(1),
            self.config.defender_budget,
            self.config.horizon,
        )
    }

    pub fn attacker_pace(&self, state: &GameState, a: u64) -> f64 {
        budget_pace(
            state.attacker_remaining - a.min(state.attacker_remaining),
            state.remaining_hours.saturating_sub(1),
            self.config.attacker_budget,
            self.config.horizon,
        )
    }

    /// `-C(s, d) + w * q(x', n')`.
    pub fn shaped_reward_defender(&self, state: &GameState, d: u64) -> f64 {
        -self.defender_cost(state, d) + self.config.shaping_weight * self.defender_pace(state, d)
    }

    /// `C(s, d) + w * q(y', n')`.
    pub fn shaped_reward_attacker(&self, state: &GameState, d: u64, a: u64) -> f64 {
        self.defender_cost(state, d) + self.config.shaping_weight * self.attacker_pace(state, a)
    }

    /// Advances one hour. Actions must come from the legal sets; the budget
    /// clamp `min(d, x)`, `min(a, y)` is applied here.
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: &GameState,
        d: u64,
        a: u64,
        rng: &mut R,
    ) -> Result<Step> {
        if state.is_terminal() {
            return Err(Error::TerminalState);
        }
        let hour = self.config.horizon - state.remaining_hours + 1;
        if !self.is_legal_defender(d) {
            return Err(Error::IllegalAction {
                player: "defender",
                action: d,
                hour,
                reason: format!(
                    "must be a multiple of {} in [0, {}]",
                    self.config.defender_chunk, self.config.hour_cap
                ),
            });
        }
        if !self.is_legal_attacker(a) {
            return Err(Error::IllegalAction {
                player: "attacker",
                action: a,
                hour,
                reason: format!(
                    "must be a multiple of {} in [0, {}]",
                    self.config.attacker_chunk,
                    self.config.attacker_cap()
                ),
            });
        }
        let spent = d.min(state.defender_remaining);
        let injected = a.min(state.attacker_remaining);
        let b_alloc = state.backlog - spent.min(state.backlog);
        let stage_cost = self.config.cost.eval(b_alloc as f64);

        // Capacity before arrivals, same draw order as the natural trace.
        let capacity = self.config.queue.sample_capacity(rng);
        let arrivals = self.arrivals.sample(rng);
        let outcome = step_backlog(b_alloc, arrivals + injected, capacity);

        let next = GameState {
            backlog: outcome.backlog_after,
            remaining_hours: state.remaining_hours - 1,
            defender_remaining: state.defender_remaining - spent,
            attacker_remaining: state.attacker_remaining - injected,
        };
        let record = HourRecord {
            hour,
            b_pre: state.backlog,
            d,
            a,
            spent,
            injected,
            b_alloc,
            arrivals,
            capacity,
            b_post: next.backlog,
            x: next.defender_remaining,
            y: next.attacker_remaining,
            stage_cost,
        };
        Ok(Step {
            next,
            record,
            defender_obs: DefenderObservation::project(&next, d),
            attacker_obs: AttackerObservation {
                state: next,
                last_defender_action: d,
                last_attacker_action: a,
            },
        })
    }

    /// Plays one full episode. The environment and each policy draw from
    /// their own streams derived from `seed`, so the arrival stream does not
    /// depend on which policies are playing.
    pub fn episode(
        &self,
        defender: &mut dyn Policy<DefenderObservation>,
        attacker: &mut dyn Policy<AttackerObservation>,
        seed: u64,
    ) -> Result<RunTrace> {
        let mut env_rng = rng_from(derive_seed(seed, Stream::Environment, 0));
        let mut def_rng = rng_from(derive_seed(seed, Stream::Policy, 0));
        let mut att_rng = rng_from(derive_seed(seed, Stream::Policy, 1));
        defender.reset();
        attacker.reset();
        let (mut state, mut dobs, mut aobs) = self.reset();
        let initial = state;
        let mut records = Vec::with_capacity(self.config.horizon as usize);
        while !state.is_terminal() {
            let d = defender.act(&dobs, &mut def_rng);
            let a = attacker.act(&aobs, &mut att_rng);
            let step = self.step(&state, d, a, &mut env_rng)?;
            records.push(step.record);
            state = step.next;
            dobs = step.defender_obs;
            aobs = step.attacker_obs;
        }
        Ok(RunTrace::new(initial, records))
    }
}

fn chunk_grid(chunk: u64, cap: u64) -> Vec<u64> {
    (0..=cap / chunk).map(|k| k * chunk).collect()
}

/// Full trace of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub initial: GameState,
    pub records: Vec<HourRecord>,
    /// `max_t` stage cost, the sup evaluation of the play.
    pub sup_cost: f64,
}

pub const TRACE_CSV_HEADER: &str = "hour,b_pre,d,a,b_post,x,y,stage_cost";

impl RunTrace {
    pub fn new(initial: GameState, records: Vec<HourRecord>) -> Self {
        let sup_cost = records.iter().map(|r| r.stage_cost).fold(0.0, f64::max);
        RunTrace {
            initial,
            records,
            sup_cost,
        }
    }

    pub fn max_backlog(&self) -> u64 {
        self.records.iter().map(|r| r.b_post).max().unwrap_or(0)
    }

    pub fn defender_spend(&self) -> u64 {
        self.records.iter().map(|r| r.spent).sum()
    }

    pub fn attacker_injected(&self) -> u64 {
        self.records.iter().map(|r| r.injected).sum()
    }

    pub fn write_csv_row<W: Write>(r: &HourRecord, prefix: Option<usize>, w: &mut W) -> std::io::Result<()> {
        if let Some(run) = prefix {
            write!(w, "{run},")?;
        }
        writeln!(
            w,
            "{},{},{},{},{},{},{},{:.6}",
            r.hour, r.b_pre, r.d, r.a, r.b_post, r.x, r.y, r.stage_cost
        )
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{TRACE_CSV_HEADER}")?;
        for r in &self.records {
            Self::write_csv_row(r, None, w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii csv")
    }
}
