//! Matchup evaluation and the double-oracle style robustification loop:
//! alternate attacker best-response training with defender retraining on an
//! episode mixture over the growing attacker pool.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_runs, map_runs_sequential};
use crate::game::{AttackerObservation, DefenderObservation, Game, GameConfig, RunTrace};
use crate::metrics::{band_counts, proportions_from_counts, worst_run_by_max, BandBasis, BandBoundaries};
use crate::policy::{AttackerPolicy, DailyBound, DefenderPolicy, Policy, PolicyManifest};
use crate::rl::{deployable_attacker, train_attacker_best_response, train_defender, Aggregation, GreedyPolicy, Hyperparams};
use crate::seed::{derive_seed, Stream};
use crate::stats::{mean_var, Z95_TWO_SIDED};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub sup_cost: f64,
    pub max_backlog: u64,
    pub band_counts: [u64; 4],
    pub defender_spend: u64,
    pub attacker_injected: u64,
}

impl RunSummary {
    pub fn of(trace: &RunTrace, bounds: &BandBoundaries, basis: BandBasis) -> Self {
        RunSummary {
            sup_cost: trace.sup_cost,
            max_backlog: trace.max_backlog(),
            band_counts: band_counts(trace, bounds, basis),
            defender_spend: trace.defender_spend(),
            attacker_injected: trace.attacker_injected(),
        }
    }

    pub fn band_fraction(&self, band: usize) -> f64 {
        let total: u64 = self.band_counts.iter().sum();
        if total == 0 {
            0.0
        } else {
            self.band_counts[band] as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchupStats {
    pub runs: usize,
    pub seed: u64,
    pub mean_sup_cost: f64,
    pub proportions: [f64; 4],
    pub worst_run: usize,
    pub worst_run_max_backlog: u64,
    pub per_run: Vec<RunSummary>,
}

impl MatchupStats {
    pub fn from_summaries(per_run: Vec<RunSummary>, seed: u64) -> Result<Self> {
        if per_run.is_empty() {
            return Err(Error::InvalidArgument("matchup needs at least one run".into()));
        }
        let mut counts = [0u64; 4];
        for r in &per_run {
            for (acc, c) in counts.iter_mut().zip(r.band_counts) {
                *acc += c;
            }
        }
        let maxima: Vec<u64> = per_run.iter().map(|r| r.max_backlog).collect();
        let worst_run = worst_run_by_max(&maxima)?;
        Ok(MatchupStats {
            runs: per_run.len(),
            seed,
            mean_sup_cost: per_run.iter().map(|r| r.sup_cost).sum::<f64>() / per_run.len() as f64,
            proportions: proportions_from_counts(&counts),
            worst_run,
            worst_run_max_backlog: maxima[worst_run],
            per_run,
        })
    }

    pub fn sup_costs(&self) -> Vec<f64> {
        self.per_run.iter().map(|r| r.sup_cost).collect()
    }

    /// Per-run fraction of hours in `band` (0 green .. 3 red).
    pub fn band_fractions(&self, band: usize) -> Vec<f64> {
        self.per_run.iter().map(|r| r.band_fraction(band)).collect()
    }

    /// Two-sided 95% half-width of the mean sup cost.
    pub fn sup_cost_half_width(&self) -> f64 {
        let (_, var) = mean_var(&self.sup_costs());
        Z95_TWO_SIDED * (var / self.runs as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    /// Parallel when the `parallel` feature is on.
    #[default]
    Default,
    Sequential,
}

/// Plays `runs` independent episodes; run `i` uses
/// `derive_seed(seed, Evaluation, i)`.
pub fn run_matchup(
    game: &Game,
    defender: &dyn Policy<DefenderObservation>,
    attacker: &dyn Policy<AttackerObservation>,
    runs: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<RunTrace>> {
    let one = |i: usize| {
        let mut d = defender.box_clone();
        let mut a = attacker.box_clone();
        game.episode(d.as_mut(), a.as_mut(), derive_seed(seed, Stream::Evaluation, i as u64))
    };
    let out = match exec {
        Exec::Default => map_runs(runs, one),
        Exec::Sequential => map_runs_sequential(runs, one),
    };
    out.into_iter().collect()
}

pub fn evaluate_matchup_with(
    game: &Game,
    defender: &dyn Policy<DefenderObservation>,
    attacker: &dyn Policy<AttackerObservation>,
    runs: usize,
    seed: u64,
    exec: Exec,
) -> Result<MatchupStats> {
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let bounds = BandBoundaries::from_cost(&game.config().cost);
    let one = |i: usize| {
        let mut d = defender.box_clone();
        let mut a = attacker.box_clone();
        game.episode(d.as_mut(), a.as_mut(), derive_seed(seed, Stream::Evaluation, i as u64))
            .map(|t| RunSummary::of(&t, &bounds, BandBasis::PostArrival))
    };
    let out = match exec {
        Exec::Default => map_runs(runs, one),
        Exec::Sequential => map_runs_sequential(runs, one),
    };
    MatchupStats::from_summaries(out.into_iter().collect::<Result<_>>()?, seed)
}

pub fn evaluate_matchup(
    game: &Game,
    defender: &dyn Policy<DefenderObservation>,
    attacker: &dyn Policy<AttackerObservation>,
    runs: usize,
    seed: u64,
) -> Result<MatchupStats> {
    evaluate_matchup_with(game, defender, attacker, runs, seed, Exec::Default)
}

/// How a best response is approximated: `restarts` independently seeded
/// trainings, kept is the one with the highest mean sup cost over
/// `selection_runs` held-out episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponseParams {
    pub hyper: Hyperparams,
    pub aggregation: Aggregation,
    pub daily_bound: Option<DailyBound>,
    pub restarts: usize,
    pub selection_runs: usize,
}

pub struct BestResponse {
    pub attacker: AttackerPolicy,
    pub table: GreedyPolicy,
    /// Selection-run mean sup cost of each candidate.
    pub candidate_scores: Vec<f64>,
    pub chosen: usize,
}

pub fn best_response(
    game: &Game,
    defender: &dyn Policy<DefenderObservation>,
    params: &BestResponseParams,
    seed: u64,
) -> Result<BestResponse> {
    if params.restarts == 0 || params.selection_runs == 0 {
        return Err(Error::InvalidArgument("best response needs restarts and selection runs".into()));
    }
    let select_seed = derive_seed(seed, Stream::Oracle, u64::MAX);
    let mut best: Option<(AttackerPolicy, GreedyPolicy, f64, usize)> = None;
    let mut scores = Vec::with_capacity(params.restarts);
    for k in 0..params.restarts {
        let trained = train_attacker_best_response(
            game,
            defender,
            &params.hyper,
            params.aggregation,
            params.daily_bound,
            derive_seed(seed, Stream::Trainer, k as u64),
        )?;
        let attacker = deployable_attacker(trained.clone())?;
        let score = evaluate_matchup(game, defender, attacker.as_ref(), params.selection_runs, select_seed)?.mean_sup_cost;
        scores.push(score);
        if best.as_ref().is_none_or(|b| score > b.2) {
            best = Some((attacker, trained, score, k));
        }
    }
    let (attacker, table, _, chosen) = best.expect("at least one restart");
    Ok(BestResponse {
        attacker,
        table,
        candidate_scores: scores,
        chosen,
    })
}

#[derive(Clone)]
pub struct PoolMember<P> {
    pub label: String,
    pub policy: P,
}

impl<P: std::ops::Deref> PoolMember<P>
where
    P::Target: HasManifest,
{
    pub fn manifest(&self) -> PolicyManifest {
        self.policy.manifest_of()
    }
}

/// Object-safe access to a manifest regardless of observation type.
pub trait HasManifest {
    fn manifest_of(&self) -> PolicyManifest;
}

impl HasManifest for dyn Policy<DefenderObservation> {
    fn manifest_of(&self) -> PolicyManifest {
        self.manifest()
    }
}

impl HasManifest for dyn Policy<AttackerObservation> {
    fn manifest_of(&self) -> PolicyManifest {
        self.manifest()
    }
}

/// Attackers and defenders seen so far plus their evaluated matchups
/// (`matrix[defender][attacker]`).
#[derive(Clone, Default)]
pub struct PolicyPool {
    pub attackers: Vec<PoolMember<AttackerPolicy>>,
    pub defenders: Vec<PoolMember<DefenderPolicy>>,
    pub matrix: Vec<Vec<Option<MatchupStats>>>,
}

impl PolicyPool {
    pub fn add_attacker(&mut self, label: impl Into<String>, policy: AttackerPolicy) {
        self.attackers.push(PoolMember { label: label.into(), policy });
        for row in &mut self.matrix {
            row.push(None);
        }
    }

    pub fn add_defender(&mut self, label: impl Into<String>, policy: DefenderPolicy) {
        self.defenders.push(PoolMember { label: label.into(), policy });
        self.matrix.push(vec![None; self.attackers.len()]);
    }

    /// Evaluates every missing cell; cell `(i, j)` uses seed
    /// `derive_seed(seed, Oracle, i * 1000 + j)`.
    pub fn fill_matrix(&mut self, game: &Game, runs: usize, seed: u64) -> Result<()> {
        for i in 0..self.defenders.len() {
            for j in 0..self.attackers.len() {
                if self.matrix[i][j].is_none() {
                    let s = derive_seed(seed, Stream::Oracle, (i * 1000 + j) as u64);
                    let st = evaluate_matchup(
                        game,
                        self.defenders[i].policy.as_ref(),
                        self.attackers[j].policy.as_ref(),
                        runs,
                        s,
                    )?;
                    self.matrix[i][j] = Some(st);
                }
            }
        }
        Ok(())
    }

    /// Largest mean sup cost any pool attacker achieves against defender `i`.
    pub fn worst_case(&self, i: usize) -> Option<f64> {
        self.matrix
            .get(i)?
            .iter()
            .map(|c| c.as_ref().map(|s| s.mean_sup_cost))
            .try_fold(f64::NEG_INFINITY, |m, v| v.map(|v| m.max(v)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleOracleParams {
    pub iterations: usize,
    /// Minimum gain in mean sup cost over the best pool attacker for a new
    /// best response to count as harmful.
    pub improvement_threshold: f64,
    pub eval_runs: usize,
    pub defender_hyper: Hyperparams,
    /// Best-response training; its daily bound also applies in play.
    pub attacker: BestResponseParams,
    /// Total mixture weight given to discovered attackers; `None` is a
    /// uniform mixture over the whole pool.
    pub discovered_weight: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub attacker_label: String,
    pub attacker_manifest: Option<PolicyManifest>,
    /// Best pool attacker against the current defender.
    pub best_pool_sup_cost: f64,
    /// New best response against the defender it was trained on.
    pub pre_sup_cost: f64,
    pub pre_proportions: [f64; 4],
    /// New best response against the retrained defender.
    pub post_sup_cost: Option<f64>,
    pub post_proportions: Option<[f64; 4]>,
    pub accepted: bool,
    pub train_seed: u64,
    pub eval_seed: u64,
    pub error: Option<String>,
}

impl IterationRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain record")
    }
}

pub struct DoubleOracleOutcome {
    pub defender: DefenderPolicy,
    /// Table of the last retrained defender, if any round retrained.
    pub defender_table: Option<GreedyPolicy>,
    pub pool: PolicyPool,
    pub log: Vec<IterationRecord>,
    /// Set when training produced non-finite values.
    pub aborted: bool,
}

fn mixture_of(pool: &PolicyPool, initial: usize, discovered_weight: Option<f64>) -> Vec<(AttackerPolicy, f64)> {
    let n = pool.attackers.len();
    let found = n - initial;
    pool.attackers
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let w = match discovered_weight {
                Some(w) if found > 0 && initial > 0 => {
                    if i < initial {
                        (1.0 - w) / initial as f64
                    } else {
                        w / found as f64
                    }
                }
                _ => 1.0 / n as f64,
            };
            (m.policy.clone(), w)
        })
        .collect()
}

/// Runs up to `params.iterations` rounds. Each round trains a best response
/// to the current defender; if it beats the best pool attacker by less than
/// the improvement threshold the loop stops, otherwise it joins the pool and
/// the defender is retrained on the pool mixture.
pub fn run_double_oracle(
    config: &GameConfig,
    initial_defender: DefenderPolicy,
    initial_attackers: Vec<(String, AttackerPolicy)>,
    params: &DoubleOracleParams,
) -> Result<DoubleOracleOutcome> {
    if params.iterations == 0 {
        return Err(Error::InvalidArgument("double oracle needs at least one iteration".into()));
    }
    if initial_attackers.is_empty() {
        return Err(Error::InvalidArgument("double oracle needs an initial attacker pool".into()));
    }
    let game = Game::new(config.clone())?;
    let mut pool = PolicyPool::default();
    let initial = initial_attackers.len();
    for (label, a) in initial_attackers {
        pool.add_attacker(label, a);
    }
    pool.add_defender("defender-0", initial_defender.clone());
    let mut defender = initial_defender;
    let mut defender_table = None;
    let mut log = Vec::new();
    let mut aborted = false;

    for it in 1..=params.iterations {
        let train_seed = derive_seed(params.seed, Stream::Trainer, it as u64);
        let eval_seed = derive_seed(params.seed, Stream::Evaluation, it as u64);
        let label = format!("best-response-{it}");

        let mut best_pool = f64::NEG_INFINITY;
        for m in &pool.attackers {
            let st = evaluate_matchup(&game, defender.as_ref(), m.policy.as_ref(), params.eval_runs, eval_seed)?;
            best_pool = best_pool.max(st.mean_sup_cost);
        }

        let attacker = match best_response(&game, defender.as_ref(), &params.attacker, train_seed) {
            Ok(b) => b.attacker,
            Err(e @ Error::Numerical(_)) => {
                log.push(IterationRecord {
                    iteration: it,
                    attacker_label: label,
                    attacker_manifest: None,
                    best_pool_sup_cost: best_pool,
                    pre_sup_cost: f64::NAN,
                    pre_proportions: [f64::NAN; 4],
                    post_sup_cost: None,
                    post_proportions: None,
                    accepted: false,
                    train_seed,
                    eval_seed,
                    error: Some(e.to_string()),
                });
                aborted = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let pre = evaluate_matchup(&game, defender.as_ref(), attacker.as_ref(), params.eval_runs, eval_seed)?;
        let mut record = IterationRecord {
            iteration: it,
            attacker_label: label.clone(),
            attacker_manifest: Some(attacker.manifest()),
            best_pool_sup_cost: best_pool,
            pre_sup_cost: pre.mean_sup_cost,
            pre_proportions: pre.proportions,
            post_sup_cost: None,
            post_proportions: None,
            accepted: false,
            train_seed,
            eval_seed,
            error: None,
        };
        if !(pre.mean_sup_cost - best_pool >= params.improvement_threshold) {
            log.push(record);
            break;
        }

        pool.add_attacker(label, attacker.clone());
        let mixture = mixture_of(&pool, initial, params.discovered_weight);
        let retrained = train_defender(
            &game,
            &mixture,
            &params.defender_hyper,
            params.attacker.aggregation,
            derive_seed(params.seed, Stream::Trainer, 10_000 + it as u64),
        );
        match retrained {
            Ok(d) => {
                defender = Box::new(d.clone());
                defender_table = Some(d);
                pool.add_defender(format!("defender-{it}"), defender.clone());
                let post = evaluate_matchup(&game, defender.as_ref(), attacker.as_ref(), params.eval_runs, eval_seed)?;
                record.post_sup_cost = Some(post.mean_sup_cost);
                record.post_proportions = Some(post.proportions);
                record.accepted = true;
                log.push(record);
            }
            Err(e @ Error::Numerical(_)) => {
                record.error = Some(e.to_string());
                log.push(record);
                aborted = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(DoubleOracleOutcome {
        defender,
        defender_table,
        pool,
        log,
        aborted,
    })
}

#[derive(Clone)]
pub struct ChunkAttack {
    pub chunk: u64,
    pub attacker: AttackerPolicy,
    pub stats: MatchupStats,
}

/// Trains and evaluates one best-response attacker per chunk size against a
/// frozen defender.
pub fn chunk_sweep_attack(
    config: &GameConfig,
    defender: &dyn Policy<DefenderObservation>,
    chunk_sizes: &[u64],
    params: &BestResponseParams,
    runs: usize,
    seed: u64,
) -> Result<Vec<ChunkAttack>> {
    let mut out = Vec::with_capacity(chunk_sizes.len());
    for (i, &chunk) in chunk_sizes.iter().enumerate() {
        if chunk == 0 || chunk > config.hour_cap {
            return Err(Error::InvalidArgument(format!(
                "chunk {chunk} must lie in [1, {}]",
                config.hour_cap
            )));
        }
        let mut c = config.clone();
        c.attacker_chunk = chunk;
        let game = Game::new(c)?;
        let attacker = best_response(&game, defender, params, derive_seed(seed, Stream::Trainer, i as u64))?.attacker;
        let stats = evaluate_matchup(&game, defender, attacker.as_ref(), runs, seed)?;
        out.push(ChunkAttack { chunk, attacker, stats });
    }
    Ok(out)
}
