//! Non-learned policies: the threshold rules S1/S2, the dump attacker, the
//! calendar-day budget wrapper, the stochastic-rate baseline attacker and a
//! few constant/random adapters.
//!
//! A policy is a boxed, clonable object. Evaluation clones one instance per
//! episode, so per-episode counters (the daily-bound wrapper) never leak
//! between runs.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::game::{AttackerObservation, CostFunction, DefenderObservation, GameConfig};

/// Kind plus parameters, enough to rebuild a non-learned policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyManifest {
    pub kind: String,
    pub params: serde_json::Value,
}

impl PolicyManifest {
    pub fn new(kind: &str, params: serde_json::Value) -> Self {
        PolicyManifest {
            kind: kind.to_string(),
            params,
        }
    }
}

pub trait Policy<O>: Send + Sync {
    fn act(&mut self, obs: &O, rng: &mut ChaCha8Rng) -> u64;

    /// Clears per-episode state.
    fn reset(&mut self) {}

    fn manifest(&self) -> PolicyManifest;

    fn box_clone(&self) -> Box<dyn Policy<O>>;
}

impl<O: 'static> Clone for Box<dyn Policy<O>> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

pub type DefenderPolicy = Box<dyn Policy<DefenderObservation>>;
pub type AttackerPolicy = Box<dyn Policy<AttackerObservation>>;

fn round_up_to_chunk(v: u64, chunk: u64) -> u64 {
    v.div_ceil(chunk) * chunk
}

fn floor_to_chunk(v: u64, chunk: u64) -> u64 {
    (v / chunk) * chunk
}

/// Always plays the same action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constant {
    pub action: u64,
}

impl Constant {
    pub fn new(action: u64) -> Self {
        Constant { action }
    }
}

impl<O: 'static> Policy<O> for Constant {
    fn act(&mut self, _obs: &O, _rng: &mut ChaCha8Rng) -> u64 {
        self.action
    }

    fn manifest(&self) -> PolicyManifest {
        PolicyManifest::new("constant", json!({ "action": self.action }))
    }

    fn box_clone(&self) -> Box<dyn Policy<O>> {
        Box::new(*self)
    }
}

/// Uniform draw from a fixed action list each hour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformRandom {
    pub actions: Vec<u64>,
}

impl<O: 'static> Policy<O> for UniformRandom {
    fn act(&mut self, _obs: &O, rng: &mut ChaCha8Rng) -> u64 {
        self.actions[rng.random_range(0..self.actions.len())]
    }

    fn manifest(&self) -> PolicyManifest {
        PolicyManifest::new("uniform-random", json!({ "actions": self.actions }))
    }

    fn box_clone(&self) -> Box<dyn Policy<O>> {
        Box::new(self.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RulePolicyConfig {
    /// Backlog threshold B.
    pub threshold: u64,
    /// S2 when set: also drain the excess of B over the low cost anchor.
    pub aggressive: bool,
    pub chunk: u64,
    pub hour_cap: u64,
    pub anchor_low: u64,
}

impl RulePolicyConfig {
    pub fn new(threshold: u64, aggressive: bool, config: &GameConfig) -> Result<Self> {
        let cost: CostFunction = config.cost;
        let b = threshold as f64;
        if b < cost.anchor_low || b > cost.anchor_high {
            return Err(Error::InvalidConfig(format!(
                "rule threshold {threshold} outside the cost anchors [{}, {}]",
                cost.anchor_low, cost.anchor_high
            )));
        }
        Ok(RulePolicyConfig {
            threshold,
            aggressive,
            chunk: config.defender_chunk,
            hour_cap: config.hour_cap,
            anchor_low: cost.anchor_low.round() as u64,
        })
    }
}

/// S1: allocate the excess over B, rounded up to a whole chunk, capped at E.
pub fn s1_decide(obs: &DefenderObservation, cfg: &RulePolicyConfig) -> u64 {
    let raw = obs.backlog.saturating_sub(cfg.threshold);
    round_up_to_chunk(raw, cfg.chunk).min(cfg.hour_cap)
}

/// S2: as S1 but, once B is exceeded, also clear `B - anchor_low`.
pub fn s2_decide(obs: &DefenderObservation, cfg: &RulePolicyConfig) -> u64 {
    let mut raw = obs.backlog.saturating_sub(cfg.threshold);
    if raw > 0 {
        raw += cfg.threshold - cfg.anchor_low;
    }
    round_up_to_chunk(raw, cfg.chunk).min(cfg.hour_cap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RulePolicy {
    pub cfg: RulePolicyConfig,
}

impl Policy<DefenderObservation> for RulePolicy {
    fn act(&mut self, obs: &DefenderObservation, _rng: &mut ChaCha8Rng) -> u64 {
        if self.cfg.aggressive {
            s2_decide(obs, &self.cfg)
        } else {
            s1_decide(obs, &self.cfg)
        }
    }

    fn manifest(&self) -> PolicyManifest {
        let kind = if self.cfg.aggressive { "s2" } else { "s1" };
        PolicyManifest::new(kind, serde_json::to_value(self.cfg).expect("plain struct"))
    }

    fn box_clone(&self) -> DefenderPolicy {
        Box::new(*self)
    }
}

/// Injects the per-hour maximum every hour while budget remains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DumpAttacker {
    pub cap: u64,
}

impl DumpAttacker {
    pub fn new(cap: u64) -> Self {
        DumpAttacker { cap }
    }
}

pub fn dump_attacker_decide(obs: &AttackerObservation, cap: u64) -> u64 {
    if obs.state.attacker_remaining > 0 {
        cap
    } else {
        0
    }
}

impl Policy<AttackerObservation> for DumpAttacker {
    fn act(&mut self, obs: &AttackerObservation, _rng: &mut ChaCha8Rng) -> u64 {
        dump_attacker_decide(obs, self.cap)
    }

    fn manifest(&self) -> PolicyManifest {
        PolicyManifest::new("dump", json!({ "cap": self.cap }))
    }

    fn box_clone(&self) -> AttackerPolicy {
        Box::new(*self)
    }
}

/// Idle until a start hour drawn uniformly over the episode on the first
/// decision, then injects the per-hour maximum while budget remains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BurstAttacker {
    pub cap: u64,
    start: Option<u32>,
}

impl BurstAttacker {
    pub fn new(cap: u64) -> Self {
        BurstAttacker { cap, start: None }
    }
}

impl Policy<AttackerObservation> for BurstAttacker {
    fn act(&mut self, obs: &AttackerObservation, rng: &mut ChaCha8Rng) -> u64 {
        let left = obs.state.remaining_hours;
        // counts down: the burst begins once `left` reaches the drawn value
        let start = *self.start.get_or_insert_with(|| rng.random_range(1..=left.max(1)));
        if left <= start && obs.state.attacker_remaining > 0 {
            self.cap
        } else {
            0
        }
    }

    fn reset(&mut self) {
        self.start = None;
    }

    fn manifest(&self) -> PolicyManifest {
        PolicyManifest::new("burst", json!({ "cap": self.cap }))
    }

    fn box_clone(&self) -> AttackerPolicy {
        Box::new(BurstAttacker::new(self.cap))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyBound {
    pub per_day_limit: u64,
    pub day_length: u32,
}

impl DailyBound {
    /// `floor(scale * budget / days)` per 24-hour day.
    pub fn spread(budget: u64, horizon: u32, scale: f64) -> Result<Self> {
        let days = f64::from(horizon) / 24.0;
        if days <= 0.0 || !(scale > 0.0) {
            return Err(Error::InvalidArgument("daily bound needs positive horizon and scale".into()));
        }
        Ok(DailyBound {
            per_day_limit: (scale * budget as f64 / days).floor() as u64,
            day_length: 24,
        })
    }
}

/// Truncates the inner policy so each calendar day (hours 1-24, 25-48, ...)
/// stays within `per_day_limit`, chunk-floored.
pub struct DailyBounded<O> {
    inner: Box<dyn Policy<O>>,
    bound: DailyBound,
    chunk: u64,
    hour: u32,
    spent_today: u64,
}

impl<O: 'static> DailyBounded<O> {
    pub fn new(inner: Box<dyn Policy<O>>, bound: DailyBound, chunk: u64) -> Result<Self> {
        if bound.day_length == 0 || chunk == 0 {
            return Err(Error::InvalidArgument("daily bound needs positive day length and chunk".into()));
        }
        Ok(DailyBounded {
            inner,
            bound,
            chunk,
            hour: 0,
            spent_today: 0,
        })
    }

    /// Largest action the bound still allows this hour.
    pub fn allowance(&self) -> u64 {
        let left = if self.hour % self.bound.day_length == 0 {
            self.bound.per_day_limit
        } else {
            self.bound.per_day_limit - self.spent_today
        };
        floor_to_chunk(left, self.chunk)
    }

    /// Clamps `requested` against the bound and records the result.
    pub fn admit(&mut self, requested: u64) -> u64 {
        if self.hour % self.bound.day_length == 0 {
            self.spent_today = 0;
        }
        let out = requested.min(self.allowance());
        self.spent_today += out;
        self.hour += 1;
        out
    }
}

impl<O: 'static> Policy<O> for DailyBounded<O> {
    fn act(&mut self, obs: &O, rng: &mut ChaCha8Rng) -> u64 {
        let requested = self.inner.act(obs, rng);
        self.admit(requested)
    }

    fn reset(&mut self) {
        self.inner.reset();
        self.hour = 0;
        self.spent_today = 0;
    }

    fn manifest(&self) -> PolicyManifest {
        PolicyManifest::new(
            "daily-bounded",
            json!({
                "bound": self.bound,
                "chunk": self.chunk,
                "inner": self.inner.manifest(),
            }),
        )
    }

    fn box_clone(&self) -> Box<dyn Policy<O>> {
        Box::new(DailyBounded {
            inner: self.inner.box_clone(),
            bound: self.bound,
            chunk: self.chunk,
            hour: self.hour,
            spent_today: self.spent_today,
        })
    }
}

/// Distribution of the hourly extra arrival rate used by
/// [`StochasticRateAttacker`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RateDistribution {
    Constant(f64),
    /// Idle with probability `p_idle`, otherwise uniform on `[0, max_rate]`.
    IdleOrUniform { p_idle: f64, max_rate: f64 },
}

impl RateDistribution {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RateDistribution::Constant(r) => r.is_finite() && r >= 0.0,
            RateDistribution::IdleOrUniform { p_idle, max_rate } => {
                (0.0..=1.0).contains(&p_idle) && max_rate.is_finite() && max_rate >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("bad rate distribution {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RateDistribution::Constant(r) => r,
            RateDistribution::IdleOrUniform { p_idle, max_rate } => {
                if rng.random::<f64>() < p_idle {
                    0.0
                } else {
                    rng.random::<f64>() * max_rate
                }
            }
        }
    }
}

/// Baseline opponent: each hour, a Poisson number of extra alerts at a
/// randomly drawn extra rate, floored to whole chunks and capped.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticRateAttacker {
    pub rates: RateDistribution,
    pub chunk: u64,
    pub cap: u64,
}

impl StochasticRateAttacker {
    pub fn new(rates: RateDistribution, chunk: u64, cap: u64) -> Result<Self> {
        rates.validate()?;
        if chunk == 0 {
            return Err(Error::InvalidArgument("chunk must be positive".into()));
        }
        Ok(StochasticRateAttacker { rates, chunk, cap })
    }

    /// Default training opponent for a config: mean hourly pressure roughly
    /// spends the attacker budget over the horizon.
    pub fn baseline(config: &GameConfig) -> Self {
        StochasticRateAttacker {
            rates: RateDistribution::IdleOrUniform {
                p_idle: 0.6,
                max_rate: 1.5 * config.hour_cap as f64,
            },
            chunk: config.attacker_chunk,
            cap: config.attacker_cap(),
        }
    }
}

impl Policy<AttackerObservation> for StochasticRateAttacker {
    fn act(&mut self, obs: &AttackerObservation, rng: &mut ChaCha8Rng) -> u64 {
        let rate = self.rates.sample(rng);
        if obs.state.attacker_remaining == 0 || rate <= 0.0 {
            return 0;
        }
        let count = match Poisson::new(rate) {
            Ok(p) => p.sample(rng) as u64,
            Err(_) => 0,
        };
        floor_to_chunk(count, self.chunk).min(self.cap)
    }

    fn manifest(&self) -> PolicyManifest {
        PolicyManifest::new(
            "stochastic-rate",
            json!({ "rates": self.rates, "chunk": self.chunk, "cap": self.cap }),
        )
    }

    fn box_clone(&self) -> AttackerPolicy {
        Box::new(self.clone())
    }
}

fn param<T: serde::de::DeserializeOwned>(m: &PolicyManifest, key: &str) -> Result<T> {
    let v = m
        .params
        .get(key)
        .ok_or_else(|| Error::Format(format!("manifest {} lacks '{key}'", m.kind)))?;
    Ok(serde_json::from_value(v.clone())?)
}

/// Rebuilds a non-learned defender from its manifest.
pub fn defender_from_manifest(m: &PolicyManifest) -> Result<DefenderPolicy> {
    Ok(match m.kind.as_str() {
        "constant" => Box::new(Constant::new(param(m, "action")?)),
        "uniform-random" => Box::new(UniformRandom { actions: param(m, "actions")? }),
        "s1" | "s2" => Box::new(RulePolicy {
            cfg: serde_json::from_value(m.params.clone())?,
        }),
        "daily-bounded" => {
            let inner: PolicyManifest = param(m, "inner")?;
            Box::new(DailyBounded::new(
                defender_from_manifest(&inner)?,
                param(m, "bound")?,
                param(m, "chunk")?,
            )?)
        }
        other => return Err(Error::Format(format!("cannot rebuild defender kind '{other}'"))),
    })
}

/// Rebuilds a non-learned attacker from its manifest.
pub fn attacker_from_manifest(m: &PolicyManifest) -> Result<AttackerPolicy> {
    Ok(match m.kind.as_str() {
        "constant" => Box::new(Constant::new(param(m, "action")?)),
        "uniform-random" => Box::new(UniformRandom { actions: param(m, "actions")? }),
        "dump" => Box::new(DumpAttacker::new(param(m, "cap")?)),
        "burst" => Box::new(BurstAttacker::new(param(m, "cap")?)),
        "stochastic-rate" => Box::new(StochasticRateAttacker::new(
            param(m, "rates")?,
            param(m, "chunk")?,
            param(m, "cap")?,
        )?),
        "daily-bounded" => {
            let inner: PolicyManifest = param(m, "inner")?;
            Box::new(DailyBounded::new(
                attacker_from_manifest(&inner)?,
                param(m, "bound")?,
                param(m, "chunk")?,
            )?)
        }
        other => return Err(Error::Format(format!("cannot rebuild attacker kind '{other}'"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Game, GameState};

    #[test]
    fn burst_waits_then_dumps() {
        let g = Game::new(GameConfig::desk()).unwrap();
        let mut starts = std::collections::BTreeSet::new();
        for seed in 0..40 {
            let t = g.episode(&mut Constant::new(0), &mut BurstAttacker::new(120), seed).unwrap();
            let first = t.records.iter().position(|r| r.injected > 0).unwrap();
            assert!(t.records[first..].iter().take(10).all(|r| r.injected == 120));
            assert_eq!(t.attacker_injected(), (120 * (48 - first as u64)).min(1200));
            starts.insert(first);
        }
        assert!(starts.len() > 10);
        let m = Policy::<AttackerObservation>::manifest(&BurstAttacker::new(120));
        assert_eq!(attacker_from_manifest(&m).unwrap().manifest(), m);
    }
    use crate::seed::rng_from;
    use proptest::prelude::*;

    fn dobs(b: u64) -> DefenderObservation {
        DefenderObservation {
            backlog: b,
            remaining_hours: 100,
            defender_remaining: 10_000,
            last_defender_action: 0,
        }
    }

    fn aobs(y: u64) -> AttackerObservation {
        AttackerObservation {
            state: GameState {
                backlog: 1175,
                remaining_hours: 336,
                defender_remaining: 28_800,
                attacker_remaining: y,
            },
            last_defender_action: 0,
            last_attacker_action: 0,
        }
    }

    fn rule(aggressive: bool) -> RulePolicyConfig {
        RulePolicyConfig::new(2233, aggressive, &GameConfig::paper()).unwrap()
    }

    #[test]
    fn s1_examples() {
        let c = rule(false);
        assert_eq!(s1_decide(&dobs(2233), &c), 0);
        assert_eq!(s1_decide(&dobs(2300), &c), 120);
        assert_eq!(s1_decide(&dobs(2233 + 10 * 2400), &c), 2400);
    }

    #[test]
    fn s2_examples() {
        let c = rule(true);
        assert_eq!(s2_decide(&dobs(2000), &c), 0);
        assert_eq!(s2_decide(&dobs(2233), &c), 0);
        assert_eq!(s2_decide(&dobs(2300), &c), 1140);
        // Uncapped: post-allocation backlog lands in (1175 - M, 1175].
        for b in 2234..3200 {
            let d = s2_decide(&dobs(b), &c);
            let post = b - d;
            assert!(post <= 1175 && post + 60 > 1175, "b={b} d={d}");
        }
    }

    #[test]
    fn rule_threshold_must_lie_between_anchors() {
        assert!(RulePolicyConfig::new(1000, false, &GameConfig::paper()).is_err());
        assert!(RulePolicyConfig::new(5000, false, &GameConfig::paper()).is_err());
    }

    #[test]
    fn dump_attacker_examples() {
        assert_eq!(dump_attacker_decide(&aobs(33_600), 2400), 2400);
        assert_eq!(dump_attacker_decide(&aobs(0), 2400), 0);
        assert_eq!(dump_attacker_decide(&aobs(100), 2400), 2400);

        let mut c = GameConfig::paper();
        c.attacker_budget = 33_600;
        c.queue.disturbance = crate::queue::DisturbanceModel::Fixed;
        let g = Game::new(c).unwrap();
        let t = g
            .episode(&mut Constant::new(0), &mut DumpAttacker::new(2400), 1)
            .unwrap();
        let last_injection = t.records.iter().rposition(|r| r.injected > 0).unwrap();
        assert_eq!(last_injection + 1, 14);
        assert_eq!(t.attacker_injected(), 33_600);
    }

    #[test]
    fn daily_bound_examples() {
        let b = DailyBound::spread(28_800, 336, 1.0).unwrap();
        assert_eq!(b.per_day_limit, 2057);
        assert_eq!(DailyBound::spread(28_800, 336, 1.1).unwrap().per_day_limit, 2262);

        let mut w = DailyBounded::new(Box::new(Constant::new(2400)) as AttackerPolicy, b, 60).unwrap();
        let mut rng = rng_from(0);
        assert_eq!(w.act(&aobs(1), &mut rng), 2040);
        assert_eq!(w.act(&aobs(1), &mut rng), 0);

        let mut z = DailyBounded::new(Box::new(Constant::new(0)) as AttackerPolicy, b, 60).unwrap();
        for _ in 0..100 {
            assert_eq!(z.act(&aobs(1), &mut rng), 0);
        }
    }

    #[test]
    fn daily_bound_resets_each_day_and_episode() {
        let bound = DailyBound { per_day_limit: 300, day_length: 24 };
        let mut w = DailyBounded::new(Box::new(Constant::new(120)) as AttackerPolicy, bound, 60).unwrap();
        let mut rng = rng_from(0);
        let day1: Vec<u64> = (0..24).map(|_| w.act(&aobs(1), &mut rng)).collect();
        assert_eq!(&day1[..3], &[120, 120, 60]);
        assert_eq!(day1.iter().sum::<u64>(), 300);
        assert_eq!(w.act(&aobs(1), &mut rng), 120);
        w.reset();
        let again: Vec<u64> = (0..24).map(|_| w.act(&aobs(1), &mut rng)).collect();
        assert_eq!(again, day1);
    }

    #[test]
    fn stochastic_attacker_idle_at_zero_rate() {
        let mut p = StochasticRateAttacker::new(RateDistribution::Constant(0.0), 60, 2400).unwrap();
        let mut rng = rng_from(1);
        for _ in 0..1000 {
            assert_eq!(p.act(&aobs(28_800), &mut rng), 0);
        }
        assert!(StochasticRateAttacker::new(RateDistribution::Constant(-1.0), 60, 2400).is_err());
    }

    #[test]
    fn stochastic_attacker_mean_within_floor_bias() {
        // Chunk flooring loses between 0 and M per hour: E[a] in (r - M, r].
        let r = 500.0;
        let mut p = StochasticRateAttacker::new(RateDistribution::Constant(r), 60, 2400).unwrap();
        let mut rng = rng_from(2);
        let n = 50_000;
        let total: u64 = (0..n).map(|_| p.act(&aobs(28_800), &mut rng)).sum();
        let mean = total as f64 / n as f64;
        let se = (r.sqrt() + 60.0) / (n as f64).sqrt();
        assert!(mean <= r + 3.0 * se && mean >= r - 60.0 - 3.0 * se, "mean {mean}");
    }

    #[test]
    fn manifests_round_trip() {
        let c = GameConfig::paper();
        let defenders: Vec<DefenderPolicy> = vec![
            Box::new(RulePolicy { cfg: rule(false) }),
            Box::new(RulePolicy { cfg: rule(true) }),
            Box::new(Constant::new(120)),
        ];
        for d in defenders {
            let m = d.manifest();
            assert_eq!(defender_from_manifest(&m).unwrap().manifest(), m);
        }
        let bound = DailyBound::spread(28_800, 336, 1.0).unwrap();
        let attackers: Vec<AttackerPolicy> = vec![
            Box::new(DumpAttacker::new(2400)),
            Box::new(StochasticRateAttacker::baseline(&c)),
            Box::new(DailyBounded::new(Box::new(DumpAttacker::new(2400)) as AttackerPolicy, bound, 60).unwrap()),
        ];
        for a in attackers {
            let m = a.manifest();
            assert_eq!(attacker_from_manifest(&m).unwrap().manifest(), m);
        }
        assert!(attacker_from_manifest(&PolicyManifest::new("nope", json!({}))).is_err());
    }

    proptest! {
        #[test]
        fn rule_and_baseline_actions_are_legal(b in 0u64..20_000, y in 0u64..40_000, seed in any::<u64>()) {
            let g = Game::new(GameConfig::paper()).unwrap();
            for aggressive in [false, true] {
                let d = RulePolicy { cfg: rule(aggressive) }.act(&dobs(b), &mut rng_from(seed));
                prop_assert!(g.is_legal_defender(d));
            }
            let mut st = StochasticRateAttacker::baseline(g.config());
            let mut rng = rng_from(seed);
            let a = st.act(&aobs(y), &mut rng);
            prop_assert!(g.is_legal_attacker(a));
            prop_assert!(g.is_legal_attacker(dump_attacker_decide(&aobs(y), 2400)));
        }

        #[test]
        fn daily_wrapper_respects_calendar_days(limit in 0u64..3000, reqs in proptest::collection::vec(0u64..=40, 24 * 4)) {
            let bound = DailyBound { per_day_limit: limit, day_length: 24 };
            let mut w = DailyBounded::<AttackerObservation>::new(Box::new(Constant::new(0)), bound, 60).unwrap();
            let out: Vec<u64> = reqs.iter().map(|&k| w.admit(k * 60)).collect();
            for day in out.chunks(24) {
                prop_assert!(day.iter().sum::<u64>() <= limit);
            }
            for (o, r) in out.iter().zip(&reqs) {
                prop_assert!(*o <= r * 60 && o % 60 == 0);
            }
        }
    }
}
