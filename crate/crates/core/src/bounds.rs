//! Closed-form worst-case bounds for the game and their empirical checks:
//! the threshold-rule lower bound, the Poisson lower-tail bound, the
//! dump-attack chain, busy-cycle tails of the natural queue and a paired
//! spend-dominance check of the S1 rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::map_runs;
use crate::game::{CostFunction, DefenderObservation, Game, GameConfig};
use crate::policy::{AttackerPolicy, Constant, DumpAttacker, Policy, RulePolicy, RulePolicyConfig};
use crate::queue::DisturbanceModel;
use crate::seed::{derive_seed, Stream};
use crate::stats::binomial_lower_bound;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Backlog threshold B.
    pub threshold: f64,
    pub horizon: u32,
    pub mu: f64,
    pub cost: CostFunction,
    pub defender_budget: u64,
    pub attacker_budget: u64,
}

impl BoundInputs {
    pub fn from_config(config: &GameConfig, threshold: f64) -> Self {
        BoundInputs {
            threshold,
            horizon: config.horizon,
            mu: config.queue.mu_nominal,
            cost: config.cost,
            defender_budget: config.defender_budget,
            attacker_budget: config.attacker_budget,
        }
    }
}

/// `(1 + f(B)) * (1 - 1/B)^(N mu / B) - 1`.
pub fn theorem1_lower_bound(inputs: &BoundInputs) -> Result<f64> {
    let b = inputs.threshold;
    if !b.is_finite() || b <= 1.0 {
        return Err(Error::InvalidArgument(format!("threshold must exceed 1, got {b}")));
    }
    if inputs.horizon == 0 || !(inputs.mu > 0.0) {
        return Err(Error::InvalidArgument("horizon and mu must be positive".into()));
    }
    if inputs.attacker_budget > inputs.defender_budget {
        return Err(Error::InvalidArgument(format!(
            "bound needs Y <= X, got Y={} X={}",
            inputs.attacker_budget, inputs.defender_budget
        )));
    }
    let exponent = f64::from(inputs.horizon) * inputs.mu / b;
    let survive = (exponent * (-1.0 / b).ln_1p()).exp();
    Ok((1.0 + inputs.cost.eval(b)) * survive - 1.0)
}

/// `exp(-fraction^2 * lambda / (2 * hours))`: bound on
/// `P(S <= (hours - fraction) * lambda)` for `S ~ Poisson(hours * lambda)`.
pub fn poisson_lower_tail_bound(lambda: f64, hours: u32, fraction: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if hours == 0 || !(0.0..f64::from(hours)).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "fraction must lie in [0, hours), got {fraction} with hours={hours}"
        )));
    }
    Ok((-(fraction * fraction) * lambda / (2.0 * f64::from(hours))).exp())
}

/// Every intermediate of the dump-attack argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpAnalysis {
    pub dump_hours: u32,
    pub injected: u64,
    /// `floor((hours - fraction) * lambda)`, arrivals guaranteed w.h.p.
    pub guaranteed_arrivals: u64,
    /// `hours * mu`, normal service over the dump window.
    pub service: u64,
    /// Injected alerts normal service can absorb.
    pub absorbed: u64,
    /// Most the defender can clear in the window.
    pub defender_clearable: u64,
    pub residual_backlog: u64,
    pub cost: f64,
    pub tail_bound: f64,
    pub confidence: f64,
    /// `-cost * confidence`: the defender's utility is at most this.
    pub utility_bound: f64,
    /// Cost truncated and confidence rounded to three decimals, and the
    /// resulting utility rounded to three decimals.
    pub cost_3dp: f64,
    pub confidence_3dp: f64,
    pub utility_bound_3dp: f64,
    /// False when the residual is zero, so no cost can be guaranteed.
    pub guaranteed: bool,
}

pub const DUMP_FRACTION: f64 = 0.3;

/// The dump-attack chain for an attacker with `Y - X >= 2E`.
pub fn dump_attack_analysis(config: &GameConfig) -> Result<DumpAnalysis> {
    config.validate()?;
    let x = config.defender_budget;
    let y = config.attacker_budget;
    let e = config.hour_cap;
    if y < x + 2 * e {
        return Err(Error::InvalidArgument(format!(
            "dump analysis needs Y - X >= {}, got Y={y} X={x}",
            2 * e
        )));
    }
    let dump_hours = y.div_ceil(e);
    if dump_hours > u64::from(config.horizon) {
        return Err(Error::InvalidArgument(format!(
            "dump window of {dump_hours} h exceeds the horizon"
        )));
    }
    let dump_hours = dump_hours as u32;
    let lambda = config.queue.lambda_nominal;
    let mu = config.queue.mu_nominal;
    let injected = y;
    let guaranteed_arrivals = ((f64::from(dump_hours) - DUMP_FRACTION) * lambda).floor() as u64;
    let service = (f64::from(dump_hours) * mu).round() as u64;
    let absorbed = service.saturating_sub(guaranteed_arrivals);
    let defender_clearable = x.min(u64::from(dump_hours) * e);
    let residual_backlog = injected.saturating_sub(defender_clearable + absorbed);
    let cost = config.cost.eval(residual_backlog as f64);
    let tail_bound = poisson_lower_tail_bound(lambda, dump_hours, DUMP_FRACTION)?;
    let confidence = 1.0 - tail_bound;
    let cost_3dp = (cost * 1000.0).floor() / 1000.0;
    let confidence_3dp = (confidence * 1000.0).round() / 1000.0;
    Ok(DumpAnalysis {
        dump_hours,
        injected,
        guaranteed_arrivals,
        service,
        absorbed,
        defender_clearable,
        residual_backlog,
        cost,
        tail_bound,
        confidence,
        utility_bound: -cost * confidence,
        cost_3dp,
        confidence_3dp,
        utility_bound_3dp: (-cost_3dp * confidence_3dp * 1000.0).round() / 1000.0,
        guaranteed: residual_backlog > 0,
    })
}

/// Monte-Carlo check of the dump chain: the dump attacker against a given
/// defender, counting runs whose backlog at the end of the dump window is at
/// least the residual minus three Poisson standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpBacklogCheck {
    pub defender: String,
    pub dump_hours: u32,
    pub threshold: f64,
    pub runs: usize,
    pub hits: usize,
    pub backlogs: Vec<u64>,
}

impl DumpBacklogCheck {
    pub fn fraction(&self) -> f64 {
        self.hits as f64 / self.runs as f64
    }
}

pub fn dump_backlog_check(
    config: &GameConfig,
    defender: &dyn Policy<DefenderObservation>,
    runs: usize,
    seed: u64,
) -> Result<DumpBacklogCheck> {
    let analysis = dump_attack_analysis(config)?;
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let game = Game::new(config.clone())?;
    let h = analysis.dump_hours;
    let threshold = analysis.residual_backlog as f64
        - 3.0 * (f64::from(h) * config.queue.lambda_nominal).sqrt();
    let attacker = DumpAttacker::new(config.attacker_cap());
    let backlogs = map_runs(runs, |i| {
        let mut d = defender.box_clone();
        let t = game.episode(d.as_mut(), &mut attacker.clone(), derive_seed(seed, Stream::Evaluation, i as u64))?;
        Ok(t.records[h as usize - 1].b_post)
    })
    .into_iter()
    .collect::<Result<Vec<u64>>>()?;
    let hits = backlogs.iter().filter(|&&b| b as f64 >= threshold).count();
    Ok(DumpBacklogCheck {
        defender: defender.manifest().kind,
        dump_hours: h,
        threshold,
        runs,
        hits,
        backlogs,
    })
}

/// Busy cycles of an hourly backlog sequence. A cycle runs from one zero
/// hour boundary to the next, so an idle hour is a cycle of height zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusyCycleStats {
    /// Maximum backlog of each closed cycle.
    pub cycle_maxima: Vec<u64>,
    /// Maximum of the unfinished cycle at the end of the trace, if any.
    pub open_cycle_max: Option<u64>,
    /// The trace started away from zero; the lead-in segment is dropped.
    pub leading_partial: bool,
}

impl BusyCycleStats {
    pub fn cycle_count(&self) -> usize {
        self.cycle_maxima.len()
    }

    pub fn positive_cycles(&self) -> usize {
        self.cycle_maxima.iter().filter(|&&m| m > 0).count()
    }

    /// Closed cycles reaching at least `j`.
    pub fn count_at_least(&self, j: u64) -> u64 {
        self.cycle_maxima.iter().filter(|&&m| m >= j).count() as u64
    }

    /// Empirical `P(max >= j)` over closed cycles.
    pub fn tail(&self, j: u64) -> f64 {
        if self.cycle_maxima.is_empty() {
            return 0.0;
        }
        self.count_at_least(j) as f64 / self.cycle_maxima.len() as f64
    }

    /// Lower confidence bound of `P(max >= j)` with normal quantile `z`.
    pub fn tail_lower_bound(&self, j: u64, z: f64) -> f64 {
        binomial_lower_bound(self.count_at_least(j), self.cycle_maxima.len() as u64, z)
    }
}

/// Splits `backlogs` (hour-boundary values, initial value first) into cycles.
pub fn busy_cycle_stats(backlogs: &[u64]) -> BusyCycleStats {
    let mut maxima = Vec::new();
    let leading_partial = backlogs.first().is_some_and(|&b| b != 0);
    let mut open: Option<u64> = None;
    for &b in backlogs {
        if b == 0 {
            if let Some(m) = open.take() {
                maxima.push(m);
            }
            open = Some(0);
        } else if let Some(m) = open.as_mut() {
            *m = (*m).max(b);
        }
    }
    let open_cycle_max = match open {
        Some(m) if m > 0 => Some(m),
        _ => None,
    };
    let never_zero = !backlogs.contains(&0);
    BusyCycleStats {
        cycle_maxima: maxima,
        open_cycle_max: if never_zero {
            backlogs.iter().copied().max()
        } else {
            open_cycle_max
        },
        leading_partial,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S1Violation {
    pub run: usize,
    pub hour: u32,
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S1CheckReport {
    pub threshold: u64,
    pub runs: usize,
    /// Paired runs whose natural maximum stayed below the threshold.
    pub eligible_runs: usize,
    pub max_post_allocation: u64,
    pub max_spend_excess: i64,
    pub violations: Vec<S1Violation>,
}

/// Pairs each attacked S1-defended run with the attack-free run on the same
/// arrivals. For runs whose natural backlog stays below `threshold`, checks
/// that the post-allocation backlog never exceeds `threshold + M_d` and that
/// cumulative spend never exceeds cumulative injection plus `M_d` per burst
/// (maximal run of hours with a positive injection).
pub fn paired_s1_guarantee_check(
    config: &GameConfig,
    attackers: &[AttackerPolicy],
    runs: usize,
    seed: u64,
    threshold: u64,
) -> Result<Vec<S1CheckReport>> {
    if !matches!(config.queue.disturbance, DisturbanceModel::Fixed) {
        return Err(Error::InvalidConfig("spend-dominance check needs a fixed service rate".into()));
    }
    if config.attacker_budget > config.defender_budget {
        return Err(Error::InvalidConfig("spend-dominance check needs Y <= X".into()));
    }
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let game = Game::new(config.clone())?;
    let s1 = RulePolicy {
        cfg: RulePolicyConfig::new(threshold, false, config)?,
    };
    let md = config.defender_chunk;
    let mut reports = Vec::with_capacity(attackers.len());
    for attacker in attackers {
        let per_run = map_runs(runs, |i| -> Result<(bool, u64, i64, Vec<S1Violation>)> {
            let s = derive_seed(seed, Stream::Evaluation, i as u64);
            let natural = game.episode(&mut Constant::new(0), &mut Constant::new(0), s)?;
            let natural_max = natural.max_backlog().max(natural.initial.backlog);
            if natural_max >= threshold {
                return Ok((false, 0, i64::MIN, Vec::new()));
            }
            let mut a = attacker.box_clone();
            let attacked = game.episode(&mut s1.clone(), a.as_mut(), s)?;
            let mut violations = Vec::new();
            let (mut spend, mut injected, mut bursts) = (0u64, 0u64, 0u64);
            let mut in_burst = false;
            let mut max_alloc = 0;
            let mut max_excess = i64::MIN;
            for r in &attacked.records {
                max_alloc = max_alloc.max(r.b_alloc);
                if r.b_alloc > threshold + md {
                    violations.push(S1Violation {
                        run: i,
                        hour: r.hour,
                        kind: "post-allocation".into(),
                        detail: format!("backlog {} > {}", r.b_alloc, threshold + md),
                    });
                }
                spend += r.spent;
                injected += r.injected;
                if r.injected > 0 && !in_burst {
                    bursts += 1;
                }
                in_burst = r.injected > 0;
                let excess = spend as i64 - injected as i64 - (md * bursts) as i64;
                max_excess = max_excess.max(excess);
                if excess > 0 {
                    violations.push(S1Violation {
                        run: i,
                        hour: r.hour,
                        kind: "spend".into(),
                        detail: format!("spend {spend} > injected {injected} + {md} x {bursts} bursts"),
                    });
                }
            }
            Ok((true, max_alloc, max_excess, violations))
        });
        let mut report = S1CheckReport {
            threshold,
            runs,
            eligible_runs: 0,
            max_post_allocation: 0,
            max_spend_excess: i64::MIN,
            violations: Vec::new(),
        };
        for r in per_run {
            let (eligible, alloc, excess, v) = r?;
            if eligible {
                report.eligible_runs += 1;
                report.max_post_allocation = report.max_post_allocation.max(alloc);
                report.max_spend_excess = report.max_spend_excess.max(excess);
                report.violations.extend(v);
            }
        }
        reports.push(report);
    }
    Ok(reports)
}
