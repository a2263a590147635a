//! Seeded end-to-end runs: generate, learn, plan, and compare against the full-information optimum.

use std::time::Instant;

use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{PairKind, SecondPairPath};
use crate::error::{Error, Result};
use crate::exact::rational::{bit_size, frac, serde_q, Q};
use crate::game::{compute_sse, payoff, Game, Matrix, StrategyProfile};
use crate::oracle::{OracleMode, OracleSession, QueryLedgerReport};
use crate::planner::{plan_manipulation, ManipulationPlan, PlannerConfig};

use super::baseline::full_info_baseline;
use super::gen::{generate_family, rng_for, Family};

/// Bits added on top of the input size when no budget is configured.
pub const DEFAULT_EXTRA_BITS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Inclusive range of leader action counts.
    pub m: (usize, usize),
    pub n: (usize, usize),
    pub denom: i64,
    pub count: usize,
    pub mode: OracleMode,
    /// Fixed bit budget; by default the input size plus [`DEFAULT_EXTRA_BITS`].
    #[serde(default)]
    pub bits: Option<u64>,
    /// Families cycled across instances; empty means plain random games.
    #[serde(default)]
    pub families: Vec<Family>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::MalformedInput(format!("invalid config: {what}")));
        if self.m.0 == 0 || self.m.0 > self.m.1 {
            return bad("m range");
        }
        if self.n.0 == 0 || self.n.0 > self.n.1 {
            return bad("n range");
        }
        if self.denom < 1 {
            return bad("denominator bound");
        }
        if self.bits == Some(0) {
            return bad("bit budget");
        }
        Ok(())
    }

    fn family(&self, id: usize) -> Family {
        if self.families.is_empty() {
            Family::Random
        } else {
            self.families[id % self.families.len()]
        }
    }

    /// The `id`-th game of the run, independent of every other instance.
    pub fn instance(&self, id: usize) -> (u64, Family, Game) {
        let seed = self.seed.wrapping_add(id as u64);
        let mut rng = rng_for(seed ^ 0x5eed_5a1e);
        let m = rng.gen_range(self.m.0..=self.m.1);
        let n = rng.gen_range(self.n.0..=self.n.1);
        let family = self.family(id);
        (seed, family, generate_family(seed, m, n, self.denom, family))
    }
}

/// Largest entry size of either matrix plus the default slack.
pub fn default_bits(game: &Game) -> u64 {
    let input = game
        .leader
        .iter()
        .chain(&game.follower)
        .flatten()
        .map(bit_size)
        .max()
        .unwrap_or(1);
    input + DEFAULT_EXTRA_BITS
}

fn path_for(mode: OracleMode) -> SecondPairPath {
    match mode {
        OracleMode::PayoffOnly => SecondPairPath::Payoff,
        OracleMode::BrCorrespondence => SecondPairPath::BrCorrespondence,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedRecord {
    #[serde(with = "serde_q")]
    pub value: Q,
    pub chosen: usize,
    pub profile: StrategyProfile,
    #[serde(with = "serde_q::mat")]
    pub fake: Matrix,
    pub confirmed: bool,
    pub exact_match: bool,
    /// In correspondence mode: whether the payoff-only path reaches the same plan value and the
    /// same second-pair common values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_equivalent: Option<bool>,
    pub queries: QueryLedgerReport,
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Outcome {
    Planned(PlannedRecord),
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: usize,
    pub seed: u64,
    pub family: Family,
    pub bits: u64,
    pub game: Game,
    #[serde(with = "serde_q")]
    pub truthful_value: Q,
    #[serde(with = "serde_q")]
    pub baseline_value: Q,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryStats {
    pub min: u64,
    pub median: u64,
    pub max: u64,
    #[serde(with = "serde_q")]
    pub mean: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub instances: usize,
    pub planned: usize,
    pub failed: usize,
    pub matches: usize,
    pub confirmed: usize,
    /// Matches over planned instances.
    #[serde(with = "serde_q")]
    pub match_rate: Q,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queries: Option<QueryStats>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub instances: Vec<InstanceRecord>,
    pub summary: ReportSummary,
}

/// Follower payoff at the SSE of the truthful game.
pub fn truthful_value(game: &Game) -> Result<Q> {
    let (sse, _) = compute_sse(game)?;
    Ok(payoff(&game.follower, sse.x(), sse.response))
}

/// Learns and plans against a fresh session for `game`.
pub fn plan_game(game: &Game, mode: OracleMode, bits: u64) -> Result<ManipulationPlan> {
    let mut session = OracleSession::new(game.clone(), mode)?;
    let config = PlannerConfig {
        bits,
        path: path_for(mode),
    };
    plan_manipulation(&mut session, &game.follower, &config)
}

fn second_pair_values(game: &Game, plan: &ManipulationPlan) -> Vec<Q> {
    plan.selection
        .pairs
        .iter()
        .filter(|p| p.kind == PairKind::BelowMaximin)
        .map(|p| payoff(&game.leader, p.x.weights(), p.reference))
        .collect()
}

fn planned_record(game: &Game, mode: OracleMode, bits: u64, baseline: &Q) -> Result<PlannedRecord> {
    let started = Instant::now();
    let plan = plan_game(game, mode, bits)?;
    let path_equivalent = match mode {
        OracleMode::PayoffOnly => None,
        OracleMode::BrCorrespondence => {
            let other = plan_game(game, OracleMode::PayoffOnly, bits)?;
            Some(other.value == plan.value && second_pair_values(game, &other) == second_pair_values(game, &plan))
        }
    };
    Ok(PlannedRecord {
        exact_match: plan.value == *baseline,
        value: plan.value,
        chosen: plan.chosen,
        profile: plan.profile,
        fake: plan.fake,
        confirmed: plan.confirmed,
        path_equivalent,
        queries: plan.ledger,
        runtime_ms: started.elapsed().as_millis() as u64,
    })
}

/// One instance; learner failures are recorded rather than propagated.
pub fn run_instance(config: &ExperimentConfig, id: usize) -> Result<InstanceRecord> {
    let (seed, family, game) = config.instance(id);
    let bits = config.bits.unwrap_or_else(|| default_bits(&game));
    let baseline = full_info_baseline(&game)?;
    let outcome = match planned_record(&game, config.mode, bits, &baseline.value) {
        Ok(rec) => Outcome::Planned(rec),
        Err(e) => {
            log::warn!("instance {id} (seed {seed}) failed: {e}");
            Outcome::Failed { error: e.to_string() }
        }
    };
    Ok(InstanceRecord {
        id,
        seed,
        family,
        bits,
        truthful_value: truthful_value(&game)?,
        baseline_value: baseline.value,
        game,
        outcome,
    })
}

fn median(sorted: &[u64]) -> u64 {
    sorted[sorted.len() / 2]
}

pub fn summarize(instances: &[InstanceRecord]) -> ReportSummary {
    let planned: Vec<&PlannedRecord> = instances
        .iter()
        .filter_map(|r| match &r.outcome {
            Outcome::Planned(p) => Some(p),
            Outcome::Failed { .. } => None,
        })
        .collect();
    let matches = planned.iter().filter(|p| p.exact_match).count();
    let mut totals: Vec<u64> = planned.iter().map(|p| p.queries.total).collect();
    totals.sort_unstable();
    let queries = (!totals.is_empty()).then(|| QueryStats {
        min: totals[0],
        median: median(&totals),
        max: *totals.last().expect("nonempty"),
        mean: frac(totals.iter().sum::<u64>() as i64, totals.len() as i64),
    });
    ReportSummary {
        instances: instances.len(),
        planned: planned.len(),
        failed: instances.len() - planned.len(),
        matches,
        confirmed: planned.iter().filter(|p| p.confirmed).count(),
        match_rate: if planned.is_empty() {
            Q::zero()
        } else {
            frac(matches as i64, planned.len() as i64)
        },
        queries,
    }
}

/// Runs every instance in a work pool; results keep instance order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let instances = (0..config.count)
        .into_par_iter()
        .map(|id| run_instance(config, id))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        config: config.clone(),
        summary: summarize(&instances),
        instances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(count: usize, mode: OracleMode) -> ExperimentConfig {
        ExperimentConfig {
            seed: 7,
            m: (1, 3),
            n: (1, 3),
            denom: 4,
            count,
            mode,
            bits: None,
            families: Family::ALL.to_vec(),
        }
    }

    fn without_timing(mut r: ExperimentReport) -> ExperimentReport {
        for i in &mut r.instances {
            if let Outcome::Planned(p) = &mut i.outcome {
                p.runtime_ms = 0;
                p.queries.wall_time_ms = 0;
            }
        }
        r
    }

    #[test]
    fn empty_run_gives_empty_report() {
        let r = run_experiment(&config(0, OracleMode::PayoffOnly)).unwrap();
        assert!(r.instances.is_empty());
        assert_eq!(r.summary.planned, 0);
        assert!(r.summary.queries.is_none());
    }

    #[test]
    fn small_run_matches_baseline_and_reproduces() {
        let c = config(12, OracleMode::PayoffOnly);
        let a = run_experiment(&c).unwrap();
        assert_eq!(a.summary.failed, 0, "{:?}", a.instances.iter().map(|i| &i.outcome).collect::<Vec<_>>());
        assert_eq!(a.summary.matches, 12);
        let b = run_experiment(&c).unwrap();
        assert_eq!(
            serde_json::to_string(&without_timing(a)).unwrap(),
            serde_json::to_string(&without_timing(b)).unwrap()
        );
    }

    #[test]
    fn correspondence_mode_records_path_equivalence() {
        let r = run_experiment(&config(6, OracleMode::BrCorrespondence)).unwrap();
        for i in &r.instances {
            match &i.outcome {
                Outcome::Planned(p) => assert_eq!(p.path_equivalent, Some(true), "instance {}", i.id),
                Outcome::Failed { error } => panic!("instance {}: {error}", i.id),
            }
        }
    }

    #[test]
    fn report_round_trips_exactly() {
        let r = run_experiment(&config(4, OracleMode::PayoffOnly)).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: ExperimentReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn invalid_ranges_are_rejected() {
        let mut c = config(1, OracleMode::PayoffOnly);
        c.m = (3, 2);
        assert!(run_experiment(&c).is_err());
        let mut c = config(1, OracleMode::PayoffOnly);
        c.denom = 0;
        assert!(c.validate().is_err());
    }
}
