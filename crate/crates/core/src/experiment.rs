//! Named experiment recipes: configuration, training, evaluation and the
//! report bundle written to disk.
//!
//! Settings come from a flat `key = value` text format whose keys carry
//! their units; unknown keys are rejected. A bundle always contains the
//! resolved settings file, so any run can be repeated from its output alone.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use crate::bounds::{
    busy_cycle_stats, dump_attack_analysis, dump_backlog_check, paired_s1_guarantee_check,
    poisson_lower_tail_bound, theorem1_lower_bound, BoundInputs, DUMP_FRACTION,
};
use crate::error::{Error, Result};
use crate::game::{Game, GameConfig, RunTrace, TRACE_CSV_HEADER};
use crate::metrics::{
    band_counts, proportions_from_counts, proportions_svg, trace_svg, write_proportions_csv,
    BandBasis, BandBoundaries,
};
use crate::oracle::{
    best_response, chunk_sweep_attack, run_double_oracle, run_matchup, BestResponseParams,
    DoubleOracleParams, Exec, MatchupStats, RunSummary,
};
use crate::policy::{
    AttackerPolicy, BurstAttacker, Constant, DailyBound, DailyBounded, DefenderPolicy,
    DumpAttacker, PolicyManifest, RulePolicy, RulePolicyConfig, StochasticRateAttacker,
};
use crate::queue::{simulate_natural_trace, DisturbanceModel, QueueParams};
use crate::rl::{deployable_attacker, train_defender, Aggregation, GreedyPolicy, Hyperparams, LearningRate, Role};
use crate::seed::{derive_seed, Stream};
use crate::stats::Z95_ONE_SIDED;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scale {
    Paper,
    Desk,
}

impl FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            _ => Err(Error::InvalidConfig(format!("unknown scale '{s}' (paper|desk)"))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Paper => "paper",
            Scale::Desk => "desk",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum DefenderSpec {
    Zero,
    S1,
    S2,
    /// Learned against the default training mixture.
    Trained,
    /// `Trained`, then hardened by the double-oracle loop.
    Robust,
    File(PathBuf),
}

impl FromStr for DefenderSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "zero" => DefenderSpec::Zero,
            "s1" => DefenderSpec::S1,
            "s2" => DefenderSpec::S2,
            "trained" => DefenderSpec::Trained,
            "robust" => DefenderSpec::Robust,
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => DefenderSpec::File(PathBuf::from(p)),
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown defender '{s}' (zero|s1|s2|trained|robust|file:PATH)"
                    )))
                }
            },
        })
    }
}

impl fmt::Display for DefenderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DefenderSpec::Zero => f.write_str("zero"),
            DefenderSpec::S1 => f.write_str("s1"),
            DefenderSpec::S2 => f.write_str("s2"),
            DefenderSpec::Trained => f.write_str("trained"),
            DefenderSpec::Robust => f.write_str("robust"),
            DefenderSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl DefenderSpec {
    fn label(&self) -> String {
        match self {
            DefenderSpec::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into()),
            other => other.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum AttackerSpec {
    Zero,
    Dump,
    Burst,
    Stochastic,
    /// Learned best response to each defender.
    BestResponse,
    File(PathBuf),
}

impl FromStr for AttackerSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "zero" => AttackerSpec::Zero,
            "dump" => AttackerSpec::Dump,
            "burst" => AttackerSpec::Burst,
            "stochastic" => AttackerSpec::Stochastic,
            "best-response" => AttackerSpec::BestResponse,
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => AttackerSpec::File(PathBuf::from(p)),
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown attacker '{s}' (zero|dump|burst|stochastic|best-response|file:PATH)"
                    )))
                }
            },
        })
    }
}

impl fmt::Display for AttackerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackerSpec::Zero => f.write_str("zero"),
            AttackerSpec::Dump => f.write_str("dump"),
            AttackerSpec::Burst => f.write_str("burst"),
            AttackerSpec::Stochastic => f.write_str("stochastic"),
            AttackerSpec::BestResponse => f.write_str("best-response"),
            AttackerSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RecipeKind {
    /// Each listed defender against the attacker spec.
    Matchups,
    /// Best-response discovery and defender retraining.
    DoubleOracle,
    /// Best responses at several attacker chunk sizes.
    ChunkSweep,
    /// Closed-form bounds and their Monte-Carlo checks.
    BoundChecks,
}

/// Everything a recipe run depends on besides its name and kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub config: GameConfig,
    pub aggregation: Aggregation,
    pub runs: usize,
    pub seed: u64,
    pub defenders: Vec<DefenderSpec>,
    pub attacker: AttackerSpec,
    /// Threshold B of the rule defenders; `None` is the 2-hour backlog.
    pub rule_threshold: Option<u64>,
    /// Sets Y to this multiple of X after all other keys.
    pub attacker_budget_scale: Option<f64>,
    pub daily_bound: bool,
    pub daily_bound_scale: f64,
    pub defender_episodes: u64,
    pub attacker_episodes: u64,
    pub learning_rate_power: f64,
    pub prune_dominated: bool,
    pub restarts: usize,
    pub selection_runs: usize,
    pub do_iterations: usize,
    pub improvement_threshold: f64,
    pub sweep_chunks: Vec<u64>,
    pub band_basis: BandBasis,
    pub busy_cycle_hours: usize,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value '{value}' for key '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("bad boolean '{value}' for key '{key}'"))),
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Known keys, in the order they are rendered.
pub const SETTING_KEYS: &[&str] = &[
    "lambda_per_hour",
    "mu_per_hour",
    "disturbance",
    "initial_backlog_alerts",
    "horizon_hours",
    "defender_budget_alerts",
    "attacker_budget_alerts",
    "hour_cap_alerts",
    "defender_chunk_alerts",
    "attacker_chunk_alerts",
    "attacker_uncapped",
    "cost_low_alerts",
    "cost_high_alerts",
    "shaping_weight",
    "backlog_bin_alerts",
    "backlog_cap_alerts",
    "budget_bin_alerts",
    "hours_bin_hours",
    "runs",
    "seed",
    "defender",
    "attacker",
    "rule_threshold_alerts",
    "attacker_budget_scale",
    "daily_bound",
    "daily_bound_scale",
    "defender_episodes",
    "attacker_episodes",
    "learning_rate_power",
    "prune_dominated_allocations",
    "best_response_restarts",
    "selection_runs",
    "do_iterations",
    "improvement_threshold",
    "sweep_chunks_alerts",
    "band_basis",
    "busy_cycle_hours",
];

impl Settings {
    pub fn for_scale(scale: Scale) -> Self {
        let config = match scale {
            Scale::Paper => GameConfig::paper(),
            Scale::Desk => GameConfig::desk(),
        };
        let (defender_episodes, attacker_episodes) = match scale {
            Scale::Paper => (60_000, 60_000),
            Scale::Desk => (600_000, 1_000_000),
        };
        Settings {
            aggregation: Aggregation::for_config(&config),
            config,
            runs: 500,
            seed: 1,
            defenders: vec![DefenderSpec::Trained],
            attacker: AttackerSpec::BestResponse,
            rule_threshold: None,
            attacker_budget_scale: None,
            daily_bound: false,
            daily_bound_scale: 1.0,
            defender_episodes,
            attacker_episodes,
            learning_rate_power: 1.0,
            prune_dominated: false,
            restarts: 3,
            selection_runs: 200,
            do_iterations: 1,
            improvement_threshold: 0.05,
            sweep_chunks: vec![1, 10, 30],
            band_basis: BandBasis::PostArrival,
            busy_cycle_hours: 1_000_000,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let c = &mut self.config;
        match key {
            "lambda_per_hour" => c.queue.lambda_nominal = parse_value(key, v)?,
            "mu_per_hour" => c.queue.mu_nominal = parse_value(key, v)?,
            "disturbance" => {
                c.queue.disturbance = match v {
                    "fixed" => DisturbanceModel::Fixed,
                    "mild" => DisturbanceModel::mild(),
                    _ => return Err(Error::InvalidConfig(format!("unknown disturbance '{v}' (fixed|mild)"))),
                }
            }
            "initial_backlog_alerts" => c.queue.initial_backlog = parse_value(key, v)?,
            "horizon_hours" => c.horizon = parse_value(key, v)?,
            "defender_budget_alerts" => c.defender_budget = parse_value(key, v)?,
            "attacker_budget_alerts" => c.attacker_budget = parse_value(key, v)?,
            "hour_cap_alerts" => c.hour_cap = parse_value(key, v)?,
            "defender_chunk_alerts" => c.defender_chunk = parse_value(key, v)?,
            "attacker_chunk_alerts" => c.attacker_chunk = parse_value(key, v)?,
            "attacker_uncapped" => c.attacker_uncapped = parse_bool(key, v)?,
            "cost_low_alerts" => c.cost.anchor_low = parse_value(key, v)?,
            "cost_high_alerts" => c.cost.anchor_high = parse_value(key, v)?,
            "shaping_weight" => c.shaping_weight = parse_value(key, v)?,
            "backlog_bin_alerts" => self.aggregation.backlog_bin = parse_value(key, v)?,
            "backlog_cap_alerts" => self.aggregation.backlog_cap = parse_value(key, v)?,
            "budget_bin_alerts" => self.aggregation.budget_bin = parse_value(key, v)?,
            "hours_bin_hours" => self.aggregation.hours_bin = parse_value(key, v)?,
            "runs" => self.runs = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "defender" => {
                self.defenders = v
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<Vec<_>>>()?
            }
            "attacker" => self.attacker = v.parse()?,
            "rule_threshold_alerts" => {
                self.rule_threshold = if v == "auto" { None } else { Some(parse_value(key, v)?) }
            }
            "attacker_budget_scale" => {
                self.attacker_budget_scale = if v == "none" { None } else { Some(parse_value(key, v)?) }
            }
            "daily_bound" => self.daily_bound = parse_bool(key, v)?,
            "daily_bound_scale" => self.daily_bound_scale = parse_value(key, v)?,
            "defender_episodes" => self.defender_episodes = parse_value(key, v)?,
            "attacker_episodes" => self.attacker_episodes = parse_value(key, v)?,
            "learning_rate_power" => self.learning_rate_power = parse_value(key, v)?,
            "prune_dominated_allocations" => self.prune_dominated = parse_bool(key, v)?,
            "best_response_restarts" => self.restarts = parse_value(key, v)?,
            "selection_runs" => self.selection_runs = parse_value(key, v)?,
            "do_iterations" => self.do_iterations = parse_value(key, v)?,
            "improvement_threshold" => self.improvement_threshold = parse_value(key, v)?,
            "sweep_chunks_alerts" => {
                self.sweep_chunks = v
                    .split(',')
                    .map(|s| parse_value(key, s.trim()))
                    .collect::<Result<Vec<u64>>>()?
            }
            "band_basis" => {
                self.band_basis = match v {
                    "post-arrival" => BandBasis::PostArrival,
                    "post-allocation" => BandBasis::PostAllocation,
                    _ => return Err(Error::InvalidConfig(format!("unknown band basis '{v}'"))),
                }
            }
            "busy_cycle_hours" => self.busy_cycle_hours = parse_value(key, v)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` document; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected 'key = value', got '{line}'", n + 1))
            })?;
            self.set(k.trim(), v).map_err(|e| match e {
                Error::InvalidConfig(m) => Error::InvalidConfig(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let c = &self.config;
        Some(match key {
            "lambda_per_hour" => c.queue.lambda_nominal.to_string(),
            "mu_per_hour" => c.queue.mu_nominal.to_string(),
            "disturbance" => match &c.queue.disturbance {
                DisturbanceModel::Fixed => "fixed".into(),
                d if *d == DisturbanceModel::mild() => "mild".into(),
                _ => "custom".into(),
            },
            "initial_backlog_alerts" => c.queue.initial_backlog.to_string(),
            "horizon_hours" => c.horizon.to_string(),
            "defender_budget_alerts" => c.defender_budget.to_string(),
            "attacker_budget_alerts" => c.attacker_budget.to_string(),
            "hour_cap_alerts" => c.hour_cap.to_string(),
            "defender_chunk_alerts" => c.defender_chunk.to_string(),
            "attacker_chunk_alerts" => c.attacker_chunk.to_string(),
            "attacker_uncapped" => c.attacker_uncapped.to_string(),
            "cost_low_alerts" => c.cost.anchor_low.to_string(),
            "cost_high_alerts" => c.cost.anchor_high.to_string(),
            "shaping_weight" => c.shaping_weight.to_string(),
            "backlog_bin_alerts" => self.aggregation.backlog_bin.to_string(),
            "backlog_cap_alerts" => self.aggregation.backlog_cap.to_string(),
            "budget_bin_alerts" => self.aggregation.budget_bin.to_string(),
            "hours_bin_hours" => self.aggregation.hours_bin.to_string(),
            "runs" => self.runs.to_string(),
            "seed" => self.seed.to_string(),
            "defender" => join(&self.defenders),
            "attacker" => self.attacker.to_string(),
            "rule_threshold_alerts" => self.rule_threshold.map_or("auto".into(), |t| t.to_string()),
            "attacker_budget_scale" => self.attacker_budget_scale.map_or("none".into(), |s| s.to_string()),
            "daily_bound" => self.daily_bound.to_string(),
            "daily_bound_scale" => self.daily_bound_scale.to_string(),
            "defender_episodes" => self.defender_episodes.to_string(),
            "attacker_episodes" => self.attacker_episodes.to_string(),
            "learning_rate_power" => self.learning_rate_power.to_string(),
            "prune_dominated_allocations" => self.prune_dominated.to_string(),
            "best_response_restarts" => self.restarts.to_string(),
            "selection_runs" => self.selection_runs.to_string(),
            "do_iterations" => self.do_iterations.to_string(),
            "improvement_threshold" => self.improvement_threshold.to_string(),
            "sweep_chunks_alerts" => join(&self.sweep_chunks),
            "band_basis" => match self.band_basis {
                BandBasis::PostArrival => "post-arrival".into(),
                BandBasis::PostAllocation => "post-allocation".into(),
            },
            "busy_cycle_hours" => self.busy_cycle_hours.to_string(),
            _ => return None,
        })
    }

    /// The settings as a flat document that `apply_text` reads back.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for k in SETTING_KEYS {
            let v = self.get(k).expect("every listed key renders");
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.aggregation.validate(&self.config)?;
        self.hyper(self.defender_episodes).validate()?;
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        if self.defenders.is_empty() {
            return Err(Error::InvalidConfig("at least one defender is required".into()));
        }
        if let Some(s) = self.attacker_budget_scale {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::InvalidConfig(format!("attacker budget scale must be >= 0, got {s}")));
            }
        }
        if !(self.daily_bound_scale > 0.0) {
            return Err(Error::InvalidConfig("daily bound scale must be positive".into()));
        }
        if self.restarts == 0 || self.selection_runs == 0 || self.do_iterations == 0 {
            return Err(Error::InvalidConfig(
                "best_response_restarts, selection_runs and do_iterations must be at least 1".into(),
            ));
        }
        if self.sweep_chunks.iter().any(|&c| c == 0 || c > self.config.hour_cap) {
            return Err(Error::InvalidConfig(format!(
                "sweep chunks must lie in [1, {}]",
                self.config.hour_cap
            )));
        }
        self.rule_config(false).map(|_| ())
    }

    fn hyper(&self, episodes: u64) -> Hyperparams {
        Hyperparams {
            episodes,
            learning_rate: LearningRate::VisitPower(self.learning_rate_power),
            prune_dominated: self.prune_dominated,
            ..Hyperparams::default()
        }
    }

    /// Game the attacker plays in: the configured game with the budget
    /// scale applied.
    pub fn attack_config(&self) -> GameConfig {
        let mut c = self.config.clone();
        if let Some(s) = self.attacker_budget_scale {
            c.attacker_budget = (s * c.defender_budget as f64).round() as u64;
        }
        c
    }

    /// Game the defender is trained in: equal budgets and the defender's
    /// own discretisation for its training opponents.
    pub fn training_config(&self) -> GameConfig {
        let mut c = self.config.clone();
        c.attacker_budget = c.defender_budget;
        c.attacker_chunk = c.defender_chunk;
        c
    }

    pub fn threshold(&self) -> u64 {
        self.rule_threshold
            .unwrap_or_else(|| BandBoundaries::from_cost(&self.config.cost).thresholds()[0].ceil() as u64)
    }

    fn rule_config(&self, aggressive: bool) -> Result<RulePolicyConfig> {
        RulePolicyConfig::new(self.threshold(), aggressive, &self.config)
    }

    pub fn daily_bound_for(&self, config: &GameConfig) -> Result<Option<DailyBound>> {
        if self.daily_bound {
            Ok(Some(DailyBound::spread(config.attacker_budget, config.horizon, self.daily_bound_scale)?))
        } else {
            Ok(None)
        }
    }

    pub fn best_response_params(&self, config: &GameConfig) -> Result<BestResponseParams> {
        Ok(BestResponseParams {
            hyper: self.hyper(self.attacker_episodes),
            aggregation: self.aggregation,
            daily_bound: self.daily_bound_for(config)?,
            restarts: self.restarts,
            selection_runs: self.selection_runs,
        })
    }

    pub fn defender_hyper(&self) -> Hyperparams {
        self.hyper(self.defender_episodes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecipe {
    pub name: String,
    pub description: String,
    pub kind: RecipeKind,
    pub scale: Scale,
    pub settings: Settings,
}

struct Builtin {
    name: &'static str,
    description: &'static str,
    kind: RecipeKind,
    scale: Scale,
    keys: &'static [(&'static str, &'static str)],
}

const BUILTINS: &[Builtin] = &[
    Builtin {
        name: "equal-budget-daily-bound",
        description: "learned defender vs best-response attacker, Y = X, daily bound",
        kind: RecipeKind::Matchups,
        scale: Scale::Desk,
        keys: &[("daily_bound", "true")],
    },
    Builtin {
        name: "equal-budget-unbounded",
        description: "learned defender vs best-response attacker, Y = X, no daily bound",
        kind: RecipeKind::Matchups,
        scale: Scale::Desk,
        keys: &[("defender", "trained,zero")],
    },
    Builtin {
        name: "ten-percent-extra",
        description: "learned defender vs best-response attacker, Y = 1.1 X, daily bound",
        kind: RecipeKind::Matchups,
        scale: Scale::Desk,
        keys: &[("daily_bound", "true"), ("attacker_budget_scale", "1.1")],
    },
    Builtin {
        name: "s1-vs-unbounded",
        description: "rule S1 at the 2-hour threshold vs best-response attacker, no daily bound",
        kind: RecipeKind::Matchups,
        scale: Scale::Desk,
        keys: &[("defender", "s1")],
    },
    Builtin {
        name: "s2-vs-unbounded",
        description: "rule S2 at the 2-hour threshold vs best-response attacker, no daily bound",
        kind: RecipeKind::Matchups,
        scale: Scale::Desk,
        keys: &[("defender", "s2")],
    },
    Builtin {
        name: "chunk30-attack",
        description: "learned defender vs daily-bounded best response sending multiples of 30",
        kind: RecipeKind::Matchups,
        scale: Scale::Desk,
        keys: &[("daily_bound", "true"), ("attacker_chunk_alerts", "30")],
    },
    Builtin {
        name: "double-oracle-defense",
        description: "retrain the learned defender on discovered chunk-30 attacks until none is harmful",
        kind: RecipeKind::DoubleOracle,
        scale: Scale::Desk,
        keys: &[("daily_bound", "true"), ("attacker_chunk_alerts", "30"), ("do_iterations", "3")],
    },
    Builtin {
        name: "chunk-sweep",
        description: "best responses at chunk sizes 1, 10, 30 against the retrained defender",
        kind: RecipeKind::ChunkSweep,
        scale: Scale::Desk,
        keys: &[
            ("daily_bound", "true"),
            ("attacker_chunk_alerts", "30"),
            ("defender", "robust"),
        ],
    },
    Builtin {
        name: "s1-s2-chunk-attack",
        description: "rules S1 and S2 vs daily-bounded best response sending multiples of 30",
        kind: RecipeKind::Matchups,
        scale: Scale::Desk,
        keys: &[
            ("daily_bound", "true"),
            ("attacker_chunk_alerts", "30"),
            ("defender", "s1,s2"),
        ],
    },
    Builtin {
        name: "theorem1-checks",
        description: "closed-form bounds, dump chain, busy-cycle tails and the S1 paired check",
        kind: RecipeKind::BoundChecks,
        scale: Scale::Paper,
        keys: &[("runs", "500")],
    },
];

/// All built-in recipes at their default scale.
pub fn list_recipes() -> Vec<ExperimentRecipe> {
    BUILTINS
        .iter()
        .map(|b| recipe(b.name, None).expect("built-ins resolve"))
        .collect()
}

/// A built-in recipe, optionally at a non-default scale.
pub fn recipe(name: &str, scale: Option<Scale>) -> Result<ExperimentRecipe> {
    let b = BUILTINS
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown recipe '{name}'")))?;
    let scale = scale.unwrap_or(b.scale);
    let mut settings = Settings::for_scale(scale);
    for (k, v) in b.keys {
        settings.set(k, v)?;
    }
    Ok(ExperimentRecipe {
        name: b.name.to_string(),
        description: b.description.to_string(),
        kind: b.kind,
        scale,
        settings,
    })
}

/// Progress sink; the CLI prints to stderr, tests pass a no-op.
pub type Progress<'a> = &'a dyn Fn(&str);

struct Matchup {
    label: String,
    config: GameConfig,
    defender: PolicyManifest,
    attacker: PolicyManifest,
    traces: Vec<RunTrace>,
    stats: MatchupStats,
}

fn default_training_mixture(config: &GameConfig) -> Vec<(AttackerPolicy, f64)> {
    vec![
        (Box::new(StochasticRateAttacker::baseline(config)), 0.3),
        (Box::new(BurstAttacker::new(config.attacker_cap())), 0.5),
        (Box::new(Constant::new(0)), 0.2),
    ]
}

/// The training mixture as a labelled double-oracle starting pool, held to
/// the same daily bound as the best responses it will be compared with.
pub fn initial_pool(config: &GameConfig, daily_bound: Option<DailyBound>) -> Result<Vec<(String, AttackerPolicy)>> {
    ["stochastic", "burst", "zero"]
        .into_iter()
        .zip(default_training_mixture(config))
        .map(|(label, (p, _))| {
            let p: AttackerPolicy = match daily_bound {
                Some(b) => Box::new(DailyBounded::new(p, b, config.attacker_chunk)?),
                None => p,
            };
            Ok((label.to_string(), p))
        })
        .collect()
}

/// Defender learned against the default mixture of stochastic, burst and
/// idle attackers, in the training game of `settings`.
pub fn train_default_defender(settings: &Settings, seed: u64) -> Result<GreedyPolicy> {
    let config = settings.training_config();
    let game = Game::new(config.clone())?;
    train_defender(
        &game,
        &default_training_mixture(&config),
        &settings.defender_hyper(),
        settings.aggregation,
        seed,
    )
}

/// Double-oracle parameters for the attack game of `settings`.
pub fn double_oracle_params(settings: &Settings, seed: u64) -> Result<DoubleOracleParams> {
    Ok(DoubleOracleParams {
        iterations: settings.do_iterations,
        improvement_threshold: settings.improvement_threshold,
        eval_runs: settings.selection_runs,
        defender_hyper: settings.defender_hyper(),
        attacker: settings.best_response_params(&settings.attack_config())?,
        discovered_weight: None,
        seed,
    })
}

struct Built {
    policy: DefenderPolicy,
    table: Option<GreedyPolicy>,
}

struct Runner<'a> {
    settings: &'a Settings,
    out: &'a Path,
    progress: Progress<'a>,
    trained: Option<GreedyPolicy>,
    do_log: Vec<String>,
}

impl Runner<'_> {
    fn seed(&self, stream: Stream, index: u64) -> u64 {
        derive_seed(self.settings.seed, stream, index)
    }

    fn trained(&mut self) -> Result<GreedyPolicy> {
        if let Some(t) = &self.trained {
            return Ok(t.clone());
        }
        (self.progress)("training defender");
        let t = train_default_defender(self.settings, self.seed(Stream::Trainer, 0))?;
        self.trained = Some(t.clone());
        Ok(t)
    }

    fn robust(&mut self) -> Result<(GreedyPolicy, Vec<String>)> {
        let initial = self.trained()?;
        (self.progress)("running double oracle");
        let config = self.settings.attack_config();
        let params = double_oracle_params(self.settings, self.seed(Stream::Oracle, 0))?;
        let outcome = run_double_oracle(&config, Box::new(initial.clone()), initial_pool(&config, params.attacker.daily_bound)?, &params)?;
        let log: Vec<String> = outcome.log.iter().map(|r| r.to_json_line()).collect();
        if outcome.aborted {
            let reason = outcome.log.last().and_then(|r| r.error.clone()).unwrap_or_default();
            return Err(Error::Numerical(format!("double oracle aborted: {reason}")));
        }
        Ok((outcome.defender_table.unwrap_or(initial), log))
    }

    fn defender(&mut self, spec: &DefenderSpec) -> Result<Built> {
        let s = self.settings;
        Ok(match spec {
            DefenderSpec::Zero => Built { policy: Box::new(Constant::new(0)), table: None },
            DefenderSpec::S1 => Built { policy: Box::new(RulePolicy { cfg: s.rule_config(false)? }), table: None },
            DefenderSpec::S2 => Built { policy: Box::new(RulePolicy { cfg: s.rule_config(true)? }), table: None },
            DefenderSpec::Trained => {
                let t = self.trained()?;
                Built { policy: Box::new(t.clone()), table: Some(t) }
            }
            DefenderSpec::Robust => {
                let (t, log) = self.robust()?;
                self.do_log.extend(log);
                Built { policy: Box::new(t.clone()), table: Some(t) }
            }
            DefenderSpec::File(p) => {
                let t = GreedyPolicy::load(p, Role::Defender, &s.config)?;
                Built { policy: Box::new(t.clone()), table: None }
            }
        })
    }

    fn attacker(
        &mut self,
        game: &Game,
        defender: &dyn crate::policy::Policy<crate::DefenderObservation>,
        index: u64,
    ) -> Result<(AttackerPolicy, Option<GreedyPolicy>)> {
        let s = self.settings;
        let config = game.config();
        let cap = config.attacker_cap();
        let bound = s.daily_bound_for(config)?;
        let wrap = |p: AttackerPolicy| -> Result<AttackerPolicy> {
            Ok(match bound {
                Some(b) => Box::new(DailyBounded::new(p, b, config.attacker_chunk)?),
                None => p,
            })
        };
        Ok(match &s.attacker {
            AttackerSpec::Zero => (Box::new(Constant::new(0)), None),
            AttackerSpec::Dump => (wrap(Box::new(DumpAttacker::new(cap)))?, None),
            AttackerSpec::Burst => (wrap(Box::new(BurstAttacker::new(cap)))?, None),
            AttackerSpec::Stochastic => (wrap(Box::new(StochasticRateAttacker::baseline(config)))?, None),
            AttackerSpec::BestResponse => {
                (self.progress)("training best-response attacker");
                let br = best_response(game, defender, &s.best_response_params(config)?, self.seed(Stream::Trainer, 1 + index))?;
                (br.attacker, Some(br.table))
            }
            AttackerSpec::File(p) => (deployable_attacker(GreedyPolicy::load(p, Role::Attacker, config)?)?, None),
        })
    }

    fn evaluate(
        &self,
        label: &str,
        game: &Game,
        defender: &dyn crate::policy::Policy<crate::DefenderObservation>,
        attacker: &dyn crate::policy::Policy<crate::AttackerObservation>,
    ) -> Result<Matchup> {
        (self.progress)(&format!("evaluating {label} over {} runs", self.settings.runs));
        let seed = self.seed(Stream::Evaluation, 0);
        let traces = run_matchup(game, defender, attacker, self.settings.runs, seed, Exec::Default)?;
        let bounds = BandBoundaries::from_cost(&game.config().cost);
        let summaries = traces
            .iter()
            .map(|t| RunSummary::of(t, &bounds, self.settings.band_basis))
            .collect();
        Ok(Matchup {
            label: label.to_string(),
            config: game.config().clone(),
            defender: defender.manifest(),
            attacker: attacker.manifest(),
            stats: MatchupStats::from_summaries(summaries, seed)?,
            traces,
        })
    }

    fn save(&self, dir: &str, file: &str, table: &Option<GreedyPolicy>) -> Result<()> {
        if let Some(t) = table {
            let d = self.out.join(dir);
            fs::create_dir_all(&d)?;
            t.save(&d.join(file))?;
        }
        Ok(())
    }
}

fn write_matchup(out: &Path, m: &Matchup) -> Result<()> {
    let dir = out.join(&m.label);
    fs::create_dir_all(&dir)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("traces.csv"))?);
    writeln!(w, "run,{TRACE_CSV_HEADER}")?;
    for (i, t) in m.traces.iter().enumerate() {
        for r in &t.records {
            RunTrace::write_csv_row(r, Some(i), &mut w)?;
        }
    }
    w.flush()?;
    let worst = &m.traces[m.stats.worst_run];
    let mut w = BufWriter::new(fs::File::create(dir.join("worst_run.csv"))?);
    worst.write_csv(&mut w)?;
    w.flush()?;
    let bounds = BandBoundaries::from_cost(&m.config.cost);
    fs::write(
        dir.join("worst_run.svg"),
        trace_svg(worst, &bounds, &format!("{}: worst run {}", m.label, m.stats.worst_run)),
    )?;
    fs::write(
        dir.join("proportions.svg"),
        proportions_svg(&m.stats.proportions, &format!("{}: hours by band", m.label)),
    )?;
    Ok(())
}

fn write_stats(out: &Path, matchups: &[Matchup]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(out.join("stats.csv"))?);
    writeln!(
        w,
        "label,runs,mean_sup_cost,sup_cost_half_width,green,yellow,orange,red,worst_run,worst_run_max_backlog"
    )?;
    for m in matchups {
        let s = &m.stats;
        writeln!(
            w,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
            m.label,
            s.runs,
            s.mean_sup_cost,
            s.sup_cost_half_width(),
            s.proportions[0],
            s.proportions[1],
            s.proportions[2],
            s.proportions[3],
            s.worst_run,
            s.worst_run_max_backlog
        )?;
    }
    w.flush()?;
    let rows: Vec<(String, [f64; 4])> = matchups.iter().map(|m| (m.label.clone(), m.stats.proportions)).collect();
    let mut w = BufWriter::new(fs::File::create(out.join("proportions.csv"))?);
    write_proportions_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Bound values for the recipe's own game, reported next to every run.
fn bound_report(settings: &Settings) -> serde_json::Value {
    let config = settings.attack_config();
    let b = settings.threshold();
    let inputs = BoundInputs::from_config(&config, b as f64);
    let lower = match theorem1_lower_bound(&inputs) {
        Ok(v) => json!({ "threshold": b, "value": v }),
        Err(e) => json!({ "threshold": b, "skipped": e.to_string() }),
    };
    let dump = match dump_attack_analysis(&config) {
        Ok(d) => serde_json::to_value(d).expect("plain struct"),
        Err(e) => json!({ "skipped": e.to_string() }),
    };
    json!({ "lower_bound": lower, "dump_analysis": dump })
}

/// Extended checks of the bound machinery.
fn bound_checks(settings: &Settings, progress: Progress<'_>) -> Result<serde_json::Value> {
    let config = settings.config.clone();
    let mut report = serde_json::Map::new();
    let b = settings.threshold();

    let mut lower = Vec::new();
    for threshold in [1500.0, b as f64, config.cost.anchor_high] {
        let mut inputs = BoundInputs::from_config(&config, threshold);
        inputs.attacker_budget = inputs.attacker_budget.min(inputs.defender_budget);
        lower.push(json!({ "threshold": threshold, "value": theorem1_lower_bound(&inputs)? }));
    }
    report.insert("lower_bound".into(), json!(lower));

    let mut dump_config = config.clone();
    dump_config.attacker_budget = config.defender_budget + 2 * config.hour_cap;
    let analysis = dump_attack_analysis(&dump_config)?;
    report.insert(
        "poisson_tail".into(),
        json!({
            "lambda": config.queue.lambda_nominal,
            "hours": analysis.dump_hours,
            "fraction": DUMP_FRACTION,
            "bound": poisson_lower_tail_bound(config.queue.lambda_nominal, analysis.dump_hours, DUMP_FRACTION)?,
        }),
    );
    report.insert("dump_analysis".into(), serde_json::to_value(&analysis).expect("plain struct"));

    progress("dump attack Monte-Carlo");
    let e = config.hour_cap;
    let rule = |aggressive| RulePolicyConfig::new(b, aggressive, &config).map(|cfg| RulePolicy { cfg });
    let defenders: Vec<(&str, DefenderPolicy)> = vec![
        ("zero", Box::new(Constant::new(0))),
        ("s1", Box::new(rule(false)?)),
        ("s2", Box::new(rule(true)?)),
        ("full-spend", Box::new(Constant::new(e))),
    ];
    let mut dump_mc = Vec::new();
    for (i, (label, d)) in defenders.iter().enumerate() {
        let r = dump_backlog_check(&dump_config, d.as_ref(), settings.runs, derive_seed(settings.seed, Stream::Evaluation, i as u64))?;
        dump_mc.push(json!({
            "defender": label,
            "hour": r.dump_hours,
            "threshold": r.threshold,
            "runs": r.runs,
            "hits": r.hits,
            "fraction": r.fraction(),
        }));
    }
    report.insert("dump_monte_carlo".into(), json!(dump_mc));

    progress("busy-cycle tails");
    let scaled = QueueParams::fixed(9.0, 10.0, 0);
    let trace = simulate_natural_trace(&scaled, settings.busy_cycle_hours, derive_seed(settings.seed, Stream::Environment, 0))?;
    let mut backlogs = vec![scaled.initial_backlog];
    backlogs.extend(trace.iter().map(|h| h.backlog_after));
    let cycles = busy_cycle_stats(&backlogs);
    let tails: Vec<_> = (2..=50u64)
        .map(|j| {
            json!({
                "j": j,
                "tail": cycles.tail(j),
                "lower_95": cycles.tail_lower_bound(j, Z95_ONE_SIDED),
                "bound": 1.0 / j as f64,
            })
        })
        .collect();
    report.insert(
        "busy_cycles".into(),
        json!({
            "lambda": 9.0, "mu": 10.0, "hours": settings.busy_cycle_hours,
            "cycles": cycles.cycle_count(), "positive_cycles": cycles.positive_cycles(),
            "open_cycle_max": cycles.open_cycle_max, "tails": tails,
        }),
    );

    progress("paired S1 spend-dominance check");
    let mut s1_config = GameConfig::desk();
    s1_config.queue = QueueParams::fixed(90.0, 100.0, 0);
    let s1_threshold = BandBoundaries::from_cost(&s1_config.cost).thresholds()[0].ceil() as u64;
    let cap = s1_config.hour_cap;
    let attackers: Vec<AttackerPolicy> = vec![
        Box::new(Constant::new(0)),
        Box::new(DumpAttacker::new(cap)),
        Box::new(BurstAttacker::new(cap)),
        Box::new(StochasticRateAttacker::baseline(&s1_config)),
    ];
    let reports = paired_s1_guarantee_check(&s1_config, &attackers, settings.runs, settings.seed, s1_threshold)?;
    let s1: Vec<_> = attackers
        .iter()
        .zip(&reports)
        .map(|(a, r)| {
            json!({
                "attacker": a.manifest().kind,
                "threshold": r.threshold,
                "runs": r.runs,
                "eligible_runs": r.eligible_runs,
                "max_post_allocation": r.max_post_allocation,
                "max_spend_excess": r.max_spend_excess,
                "violations": r.violations.len(),
            })
        })
        .collect();
    report.insert("s1_spend_dominance".into(), json!(s1));
    Ok(serde_json::Value::Object(report))
}

/// What a recipe run produced.
#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub stats: BTreeMap<String, MatchupStats>,
}

fn write_manifest(
    out: &Path,
    recipe: &ExperimentRecipe,
    matchups: &[Matchup],
    extra: serde_json::Value,
) -> Result<()> {
    let s = &recipe.settings;
    let policies: Vec<_> = matchups
        .iter()
        .map(|m| json!({ "label": m.label, "defender": m.defender, "attacker": m.attacker, "config_hash": m.config.hash() }))
        .collect();
    let manifest = json!({
        "recipe": recipe.name,
        "kind": recipe.kind,
        "scale": recipe.scale,
        "version": env!("CARGO_PKG_VERSION"),
        "settings": s.render(),
        "config": s.config,
        "config_hash": s.config.hash(),
        "attack_config_hash": s.attack_config().hash(),
        "seeds": {
            "master": s.seed,
            "defender_training": derive_seed(s.seed, Stream::Trainer, 0),
            "evaluation": derive_seed(s.seed, Stream::Evaluation, 0),
            "double_oracle": derive_seed(s.seed, Stream::Oracle, 0),
            "rule": "run i uses derive_seed(seed, stream, i)",
        },
        "policies": policies,
        "extra": extra,
    });
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    fs::write(out.join("resolved.conf"), s.render())?;
    Ok(())
}

/// Runs a recipe and writes its report bundle under `out`.
pub fn run_recipe(recipe: &ExperimentRecipe, out: &Path, progress: Progress<'_>) -> Result<ReportBundle> {
    let s = &recipe.settings;
    s.validate()?;
    fs::create_dir_all(out)?;
    let mut runner = Runner {
        settings: s,
        out,
        progress,
        trained: None,
        do_log: Vec::new(),
    };
    let mut matchups = Vec::new();
    let mut extra = serde_json::Value::Null;
    let attack_game = Game::new(s.attack_config())?;

    match recipe.kind {
        RecipeKind::Matchups => {
            for (i, spec) in s.defenders.iter().enumerate() {
                let built = runner.defender(spec)?;
                let label = spec.label();
                runner.save(&label, "defender.qt", &built.table)?;
                let (attacker, table) = runner.attacker(&attack_game, built.policy.as_ref(), i as u64)?;
                runner.save(&label, "attacker.qt", &table)?;
                matchups.push(runner.evaluate(&label, &attack_game, built.policy.as_ref(), attacker.as_ref())?);
            }
        }
        RecipeKind::DoubleOracle => {
            let initial = runner.trained()?;
            runner.save("initial", "defender.qt", &Some(initial.clone()))?;
            progress("running double oracle");
            let params = double_oracle_params(s, runner.seed(Stream::Oracle, 0))?;
            let pool = initial_pool(attack_game.config(), params.attacker.daily_bound)?;
            let seeded = pool.len();
            let outcome = run_double_oracle(attack_game.config(), Box::new(initial.clone()), pool, &params)?;
            runner.do_log = outcome.log.iter().map(|r| r.to_json_line()).collect();
            runner.save("retrained", "defender.qt", &outcome.defender_table)?;
            // the first discovered attack, before and after retraining
            if let Some(first) = outcome.pool.attackers.get(seeded) {
                matchups.push(runner.evaluate("initial", &attack_game, &initial, first.policy.as_ref())?);
                matchups.push(runner.evaluate("retrained", &attack_game, outcome.defender.as_ref(), first.policy.as_ref())?);
            } else {
                let first = &outcome.pool.attackers[0];
                matchups.push(runner.evaluate("initial", &attack_game, &initial, first.policy.as_ref())?);
            }
            extra = json!({ "iterations": outcome.log.len(), "aborted": outcome.aborted });
            if outcome.aborted {
                write_do_log(out, &runner.do_log)?;
                return Err(Error::Numerical("double oracle aborted on non-finite values".into()));
            }
        }
        RecipeKind::ChunkSweep => {
            let spec = s.defenders.first().expect("validated nonempty");
            let built = runner.defender(spec)?;
            runner.save("defender", "defender.qt", &built.table)?;
            progress("training chunk sweep");
            let sweep = chunk_sweep_attack(
                attack_game.config(),
                built.policy.as_ref(),
                &s.sweep_chunks,
                &s.best_response_params(attack_game.config())?,
                s.selection_runs,
                runner.seed(Stream::Trainer, 100),
            )?;
            let mut rows = Vec::new();
            for ca in &sweep {
                let mut c = attack_game.config().clone();
                c.attacker_chunk = ca.chunk;
                let g = Game::new(c)?;
                let m = runner.evaluate(&format!("chunk-{}", ca.chunk), &g, built.policy.as_ref(), ca.attacker.as_ref())?;
                rows.push(json!({ "chunk": ca.chunk, "mean_sup_cost": m.stats.mean_sup_cost }));
                matchups.push(m);
            }
            extra = json!({ "sweep": rows });
        }
        RecipeKind::BoundChecks => {
            let report = bound_checks(s, progress)?;
            fs::write(out.join("bounds.json"), serde_json::to_string_pretty(&report)? + "\n")?;
            let d = &mut runner;
            let dump_game = {
                let mut c = s.config.clone();
                c.attacker_budget = c.defender_budget + 2 * c.hour_cap;
                Game::new(c)?
            };
            let zero = Constant::new(0);
            let dump = DumpAttacker::new(dump_game.config().attacker_cap());
            matchups.push(d.evaluate("dump-vs-zero", &dump_game, &zero, &dump)?);
            let s1 = RulePolicy { cfg: s.rule_config(false)? };
            matchups.push(d.evaluate("dump-vs-s1", &dump_game, &s1, &dump)?);
        }
    }

    for m in &matchups {
        write_matchup(out, m)?;
    }
    write_stats(out, &matchups)?;
    if recipe.kind != RecipeKind::BoundChecks {
        fs::write(out.join("bounds.json"), serde_json::to_string_pretty(&bound_report(s))? + "\n")?;
    }
    if !runner.do_log.is_empty() {
        write_do_log(out, &runner.do_log)?;
    }
    write_manifest(out, recipe, &matchups, extra)?;

    let mut files = Vec::new();
    collect_files(out, out, &mut files)?;
    files.sort();
    Ok(ReportBundle {
        out_dir: out.to_path_buf(),
        files,
        stats: matchups.into_iter().map(|m| (m.label, m.stats)).collect(),
    })
}

fn write_do_log(out: &Path, lines: &[String]) -> Result<()> {
    let mut text = lines.join("\n");
    text.push('\n');
    fs::write(out.join("double_oracle.jsonl"), text)?;
    Ok(())
}

fn collect_files(root: &Path, dir: &Path, acc: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            collect_files(root, &p, acc)?;
        } else if let Ok(rel) = p.strip_prefix(root) {
            acc.push(rel.to_string_lossy().into_owned());
        }
    }
    Ok(())
}

/// Band proportions of one trace set, for callers that hold traces.
pub fn proportions_of(traces: &[RunTrace], bounds: &BandBoundaries, basis: BandBasis) -> [f64; 4] {
    let mut counts = [0u64; 4];
    for t in traces {
        for (acc, c) in counts.iter_mut().zip(band_counts(t, bounds, basis)) {
            *acc += c;
        }
    }
    proportions_from_counts(&counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_complete_and_unique() {
        let all = list_recipes();
        assert_eq!(all.len(), 10);
        let mut names: Vec<_> = all.iter().map(|r| r.name.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 10);
        for r in &all {
            r.settings.validate().unwrap();
        }
        for n in [
            "equal-budget-daily-bound",
            "equal-budget-unbounded",
            "ten-percent-extra",
            "s1-vs-unbounded",
            "s2-vs-unbounded",
            "chunk30-attack",
            "double-oracle-defense",
            "chunk-sweep",
            "s1-s2-chunk-attack",
            "theorem1-checks",
        ] {
            assert!(names.iter().any(|m| m == n), "{n}");
        }
        assert!(recipe("nope", None).is_err());
    }

    #[test]
    fn settings_round_trip_through_text() {
        let mut s = recipe("ten-percent-extra", None).unwrap().settings;
        s.set("sweep_chunks_alerts", "1, 5").unwrap();
        s.set("lambda_per_hour", "88.5").unwrap();
        let text = s.render();
        let mut back = Settings::for_scale(Scale::Paper);
        back.apply_text(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.attack_config().attacker_budget, 1320);
        assert_eq!(back.daily_bound_for(&back.attack_config()).unwrap().unwrap().per_day_limit, 660);
    }

    #[test]
    fn unknown_and_malformed_keys_are_rejected() {
        let mut s = Settings::for_scale(Scale::Desk);
        assert!(matches!(s.apply_text("lamda_per_hour = 3"), Err(Error::InvalidConfig(_))));
        assert!(matches!(s.apply_text("runs = many"), Err(Error::InvalidConfig(_))));
        assert!(matches!(s.apply_text("runs 5"), Err(Error::InvalidConfig(_))));
        assert!(s.apply_text("# comment\n\nruns = 7 # trailing\n").is_ok());
        assert_eq!(s.runs, 7);
        s.set("runs", "0").unwrap();
        assert!(s.validate().is_err());
    }

    #[test]
    fn thresholds_follow_the_two_hour_backlog() {
        assert_eq!(Settings::for_scale(Scale::Desk).threshold(), 120);
        assert_eq!(Settings::for_scale(Scale::Paper).threshold(), 2234);
    }

    #[test]
    fn specs_parse() {
        assert_eq!("file:/tmp/x.qt".parse::<DefenderSpec>().unwrap(), DefenderSpec::File("/tmp/x.qt".into()));
        assert!("file:".parse::<DefenderSpec>().is_err());
        assert_eq!("best-response".parse::<AttackerSpec>().unwrap(), AttackerSpec::BestResponse);
        assert!("paper".parse::<Scale>().is_ok());
        assert!("huge".parse::<Scale>().is_err());
    }
}
