//! Turns the learned model into an optimal misreport: an inducibility test through a surrogate
//! leader matrix, per-column thresholds, the follower's per-column LP, and the final matrix.

use std::cmp::Ordering;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::calibration::{learn_j_xstar, JSelection, SecondPairPath};
use crate::error::{assert_fail, Error, Result};
use crate::exact::lp::{on_simplex, Constraint, Sense};
use crate::exact::rational::{dot, int, serde_q, Q};
use crate::exact::stern_brocot_threshold;
use crate::game::{column, construct_witness, Matrix, MixedStrategy, StrategyProfile, WitnessOutcome};
use crate::gradient::{learn_gradients, support_constraints, GradientModel};
use crate::oracle::{Oracle, QueryLedgerReport};
use crate::warmup::RelationTable;

pub const PHASE_THRESHOLD: &str = "planner-threshold";
pub const PHASE_FINAL: &str = "planner-final";

/// What the inducibility test needs: directions, `J`, `x*`, and best rows for the columns whose
/// direction is unknown.
pub struct InducibilityInputs<'a> {
    pub model: &'a GradientModel,
    pub best_rows: &'a [Vec<usize>],
    pub j_set: &'a [usize],
    pub x_star: &'a [Q],
}

impl InducibilityInputs<'_> {
    /// The learned direction, or the indicator of the best rows when the column's maximin
    /// coincides with the global one.
    pub fn direction(&self, j: usize) -> Vec<Q> {
        match self.model.direction(j) {
            Some(a) => a.to_vec(),
            None => {
                let m = self.x_star.len();
                (0..m)
                    .map(|i| if self.best_rows[j].contains(&i) { int(1) } else { int(0) })
                    .collect()
            }
        }
    }

    /// Zero exactly where `(y, k)` and `x*` sit on their columns, 1 off `J ∪ {k}`.
    pub fn surrogate(&self, y: &[Q], k: usize) -> Matrix {
        let m = self.x_star.len();
        let n = self.best_rows.len();
        let mut out = vec![vec![int(1); n]; m];
        for j in 0..n {
            let anchor = if j == k {
                y
            } else if self.j_set.contains(&j) {
                self.x_star
            } else {
                continue;
            };
            let a = self.direction(j);
            let base = dot(&a, anchor);
            for (i, row) in out.iter_mut().enumerate() {
                row[j] = &a[i] - &base;
            }
        }
        out
    }

    /// A fake follower matrix that makes `(y, k)` an SSE against the true leader exactly when
    /// `(y, k)` is inducible. Any matrix works when the surrogate rules it out.
    pub fn witness(&self, profile: &StrategyProfile) -> Result<Matrix> {
        let surrogate = self.surrogate(profile.x(), profile.response);
        match construct_witness(&surrogate, profile)? {
            WitnessOutcome::Witness(u) => Ok(u),
            WitnessOutcome::NotInducible => {
                let n = self.best_rows.len();
                Ok(vec![vec![int(0); n]; self.x_star.len()])
            }
        }
    }
}

/// Decides inducibility of `(y, k)` with one SSE query on the witness built from the surrogate.
pub fn inducibility_query<O: Oracle + ?Sized>(
    oracle: &mut O,
    phase: &str,
    inputs: &InducibilityInputs<'_>,
    profile: &StrategyProfile,
) -> Result<bool> {
    let fake = inputs.witness(profile)?;
    oracle.query_sse(phase, &fake, profile)
}

/// Smallest `d` such that `(x, j)` is inducible for every `x` with `a_j·x = d`.
///
/// Levels outside the range of `a_j` on the simplex are answered without a query. If even the
/// lowest level is inducible, that level is returned; `None` means a flat direction whose single
/// level is not inducible.
pub fn learn_threshold<O: Oracle + ?Sized>(
    oracle: &mut O,
    inputs: &InducibilityInputs<'_>,
    j: usize,
    a_j: &[Q],
    bits: u64,
) -> Result<Option<Q>> {
    let m = a_j.len();
    let lo = a_j.iter().min().expect("m >= 1").clone();
    let hi = a_j.iter().max().expect("m >= 1").clone();
    let mut highest_no: Option<Q> = None;
    let mut lowest_yes: Option<Q> = None;
    let mut probe = |d: &Q| -> Result<bool> {
        if *d < lo {
            return Ok(false);
        }
        if *d > hi {
            return Ok(true);
        }
        let x = on_simplex::lex_min_point(m, &[Constraint::eq(a_j.to_vec(), d.clone())])?
            .ok_or_else(|| assert_fail(PHASE_THRESHOLD, format!("level {d} of column {j} is empty")))?;
        let yes = inducibility_query(oracle, PHASE_THRESHOLD, inputs, &StrategyProfile::new(MixedStrategy(x.clone()), j))?;
        let (below, above) = if yes {
            (highest_no.as_ref(), Some(d))
        } else {
            (Some(d), lowest_yes.as_ref())
        };
        if let (Some(no), Some(y)) = (below, above) {
            if no >= y {
                return Err(assert_fail(
                    PHASE_THRESHOLD,
                    format!("column {j}: inducible at {y} but not at {no}"),
                ));
            }
        }
        if yes {
            lowest_yes = Some(d.clone());
        } else {
            highest_no = Some(d.clone());
        }
        Ok(yes)
    };
    if probe(&lo)? {
        return Ok(Some(lo));
    }
    if lo == hi {
        return Ok(None);
    }
    stern_brocot_threshold(probe, &lo, bits).map(Some)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnStatus {
    Solved,
    /// The column's own maximin is the global one; inducible strategies are its best-row hull.
    DegenerateMaximinCase,
    /// No strategy induces this column.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnPlan {
    pub column: usize,
    pub status: ColumnStatus,
    #[serde(with = "serde_q::opt", default)]
    pub threshold: Option<Q>,
    pub strategy: Option<MixedStrategy>,
    #[serde(with = "serde_q::opt", default)]
    pub value: Option<Q>,
}

/// The follower's best strategy among those inducing column `j`, with its value.
pub fn optimize_column(follower: &Matrix, j: usize, region: &[Constraint]) -> Result<Option<(MixedStrategy, Q)>> {
    Ok(on_simplex::lex_optimum(&column(follower, j), Sense::Max, region)?.map(|(v, x)| (MixedStrategy(x), v)))
}

/// Inducible region of column `j`: `a_j·x ≥ d_j*`, or the best-row face for degenerate columns.
pub fn plan_column<O: Oracle + ?Sized>(
    oracle: &mut O,
    inputs: &InducibilityInputs<'_>,
    follower: &Matrix,
    j: usize,
    bits: u64,
) -> Result<ColumnPlan> {
    let (status, threshold, region) = match inputs.model.direction(j) {
        None => {
            let m = inputs.x_star.len();
            (
                ColumnStatus::DegenerateMaximinCase,
                None,
                support_constraints(m, &inputs.best_rows[j]),
            )
        }
        Some(a) => match learn_threshold(oracle, inputs, j, a, bits)? {
            Some(d) => {
                let region = vec![Constraint::ge(a.to_vec(), d.clone())];
                (ColumnStatus::Solved, Some(d), region)
            }
            None => {
                return Ok(ColumnPlan {
                    column: j,
                    status: ColumnStatus::Infeasible,
                    threshold: None,
                    strategy: None,
                    value: None,
                })
            }
        },
    };
    let solved = optimize_column(follower, j, &region)?;
    debug!("column {j}: {status:?}, threshold {threshold:?}, value {:?}", solved.as_ref().map(|s| &s.1));
    Ok(match solved {
        Some((x, v)) => ColumnPlan {
            column: j,
            status,
            threshold,
            strategy: Some(x),
            value: Some(v),
        },
        None => ColumnPlan {
            column: j,
            status: ColumnStatus::Infeasible,
            threshold,
            strategy: None,
            value: None,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub bits: u64,
    pub path: SecondPairPath,
}

/// Everything learned on the way to the misreport, plus the misreport itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManipulationPlan {
    pub columns: Vec<ColumnPlan>,
    pub chosen: usize,
    pub profile: StrategyProfile,
    #[serde(with = "serde_q")]
    pub value: Q,
    #[serde(with = "serde_q::mat")]
    pub fake: Matrix,
    pub confirmed: bool,
    pub relations: RelationTable,
    pub gradients: GradientModel,
    pub selection: JSelection,
    pub ledger: QueryLedgerReport,
}

/// Index of the largest value, lowest index on ties.
fn argmax_lowest(columns: &[ColumnPlan]) -> Option<usize> {
    let mut best: Option<(usize, &Q)> = None;
    for c in columns {
        if let Some(v) = &c.value {
            if best.is_none_or(|(_, b)| v.cmp(b) == Ordering::Greater) {
                best = Some((c.column, v));
            }
        }
    }
    best.map(|(j, _)| j)
}

/// The full pipeline against the oracle; `follower` is the follower's own true matrix.
pub fn plan_manipulation<O: Oracle + ?Sized>(
    oracle: &mut O,
    follower: &Matrix,
    config: &PlannerConfig,
) -> Result<ManipulationPlan> {
    let (_, n) = oracle.shape();
    let relations = RelationTable::learn(oracle)?;
    let gradients = learn_gradients(oracle, &relations, config.bits)?;
    let selection = learn_j_xstar(oracle, &relations, &gradients, config.bits, config.path)?;
    let inputs = InducibilityInputs {
        model: &gradients,
        best_rows: &relations.best_rows,
        j_set: &selection.j_set,
        x_star: selection.x_star.weights(),
    };
    let columns = (0..n)
        .map(|j| plan_column(oracle, &inputs, follower, j, config.bits))
        .collect::<Result<Vec<_>>>()?;
    let chosen = argmax_lowest(&columns).ok_or_else(|| assert_fail(PHASE_FINAL, "no column is inducible"))?;
    let c = &columns[chosen];
    let profile = StrategyProfile::new(c.strategy.clone().expect("solved"), chosen);
    let value = c.value.clone().expect("solved");
    let fake = inputs.witness(&profile)?;
    let confirmed = oracle.query_sse(PHASE_FINAL, &fake, &profile)?;
    if !confirmed {
        return Err(Error::InternalVerification(format!(
            "final matrix does not induce column {chosen}"
        )));
    }
    info!("planned column {chosen} with follower value {value}");
    Ok(ManipulationPlan {
        columns,
        chosen,
        profile,
        value,
        fake,
        confirmed,
        relations,
        gradients,
        selection,
        ledger: oracle.ledger_report(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{frac, ints, int_matrix};
    use crate::game::fixtures::{g1, g3};
    use crate::game::{compute_sse, inducible_fullinfo, payoff, Game};
    use crate::harness::gen::{generate_family, random_strategy, rng_for, Family};
    use crate::oracle::{OracleMode, OracleSession};

    const BITS: u64 = 128;

    fn config() -> PlannerConfig {
        PlannerConfig {
            bits: BITS,
            path: SecondPairPath::Payoff,
        }
    }

    fn session(g: &Game) -> OracleSession {
        OracleSession::new(g.clone(), OracleMode::PayoffOnly).unwrap()
    }

    struct Learned {
        table: RelationTable,
        model: GradientModel,
        sel: JSelection,
    }

    fn learn(s: &mut OracleSession) -> Learned {
        let table = RelationTable::learn(s).unwrap();
        let model = learn_gradients(s, &table, BITS).unwrap();
        let sel = learn_j_xstar(s, &table, &model, BITS, SecondPairPath::Payoff).unwrap();
        Learned { table, model, sel }
    }

    fn inputs(l: &Learned) -> InducibilityInputs<'_> {
        InducibilityInputs {
            model: &l.model,
            best_rows: &l.table.best_rows,
            j_set: &l.sel.j_set,
            x_star: l.sel.x_star.weights(),
        }
    }

    #[test]
    fn fixture_inducibility_examples() {
        let g = g1();
        let mut s = session(&g);
        let l = learn(&mut s);
        let inp = inputs(&l);
        let ask = |s: &mut OracleSession, x: Vec<Q>, k: usize| {
            let before = s.ledger_report().total;
            let r = inducibility_query(s, "test", &inp, &StrategyProfile::new(MixedStrategy(x), k)).unwrap();
            assert_eq!(s.ledger_report().total, before + 1);
            r
        };
        assert!(!ask(&mut s, ints(&[0, 1]), 0));
        assert!(ask(&mut s, vec![frac(1, 4), frac(3, 4)], 0));
        let (sse, _) = compute_sse(&g).unwrap();
        assert!(ask(&mut s, sse.strategy.0.clone(), sse.response));
    }

    #[test]
    fn inducibility_matches_engine_on_random_profiles() {
        let mut checked = 0;
        for seed in 0..40u64 {
            let fam = Family::ALL[seed as usize % 4];
            let g = generate_family(seed, 1 + seed as usize % 4, 1 + (seed as usize / 4) % 4, 5, fam);
            let mut s = session(&g);
            let l = learn(&mut s);
            let inp = inputs(&l);
            let mut rng = rng_for(seed);
            for k in 0..g.n {
                for _ in 0..3 {
                    let p = StrategyProfile::new(random_strategy(&mut rng, g.m, 4), k);
                    let got = inducibility_query(&mut s, "test", &inp, &p).unwrap();
                    assert_eq!(got, inducible_fullinfo(&g.leader, &p).unwrap(), "seed {seed} {p:?}");
                    checked += 1;
                }
            }
        }
        assert!(checked >= 200);
    }

    #[test]
    fn fixture_threshold_sits_at_global_maximin() {
        let g = g1();
        let mut s = session(&g);
        let l = learn(&mut s);
        let inp = inputs(&l);
        let a = l.model.direction(0).unwrap().to_vec();
        let d = learn_threshold(&mut s, &inp, 0, &a, BITS).unwrap().unwrap();
        let x = on_simplex::lex_min_point(2, &[Constraint::eq(a.clone(), d)]).unwrap().unwrap();
        assert_eq!(payoff(&g.leader, &x, 0), frac(5, 2));
    }

    #[test]
    fn flat_direction_settles_with_one_query() {
        let g = g1();
        let mut s = session(&g);
        let l = learn(&mut s);
        let inp = inputs(&l);
        let before = s.ledger_report().total;
        // Every strategy sits on the single level, so one probe decides.
        let d = learn_threshold(&mut s, &inp, 0, &ints(&[0, 0]), BITS).unwrap();
        assert_eq!(s.ledger_report().total - before, 1);
        assert!(d.is_none() || d == Some(int(0)));
    }

    #[test]
    fn fixture_plan_end_to_end() {
        let g = g1();
        let mut s = session(&g);
        let plan = plan_manipulation(&mut s, &g.follower, &config()).unwrap();
        assert_eq!(plan.chosen, 0);
        assert_eq!(plan.profile.strategy.0, vec![frac(1, 4), frac(3, 4)]);
        assert_eq!(plan.value, frac(3, 4));
        assert!(plan.confirmed);
        assert_eq!(plan.columns[1].value, Some(frac(1, 4)));
        let g3 = g3();
        let plan = plan_manipulation(&mut session(&g3), &g3.follower, &config()).unwrap();
        assert!(plan.confirmed);
    }

    #[test]
    fn single_column_game_needs_only_warmup() {
        let g = Game::new(int_matrix(&[&[1], &[3], &[2]]), int_matrix(&[&[5], &[0], &[2]])).unwrap();
        let mut s = session(&g);
        let plan = plan_manipulation(&mut s, &g.follower, &config()).unwrap();
        assert_eq!(plan.columns[0].status, ColumnStatus::DegenerateMaximinCase);
        assert_eq!(plan.value, int(0));
        let per_phase = &plan.ledger.per_phase;
        let learning: u64 = per_phase
            .iter()
            .filter(|(p, _)| !p.starts_with("warmup") && !p.starts_with("planner-final"))
            .map(|(_, c)| c)
            .sum();
        assert_eq!(learning, 0, "{per_phase:?}");
    }

    #[test]
    fn degenerate_column_with_single_best_row_is_pure() {
        let g = Game::new(int_matrix(&[&[3, 1], &[0, -2]]), int_matrix(&[&[1, 0], &[4, 0]])).unwrap();
        let plan = plan_manipulation(&mut session(&g), &g.follower, &config()).unwrap();
        let c = &plan.columns[1];
        assert_eq!(c.status, ColumnStatus::DegenerateMaximinCase);
        assert_eq!(c.strategy, Some(MixedStrategy::pure(2, 0)));
        assert_eq!(c.value, Some(int(0)));
    }

    #[test]
    fn plan_never_loses_to_truthful_report() {
        for seed in 0..16u64 {
            let g = generate_family(seed, 2 + seed as usize % 2, 2 + (seed as usize / 2) % 2, 5, Family::ALL[seed as usize % 4]);
            let plan = plan_manipulation(&mut session(&g), &g.follower, &config()).unwrap();
            let (sse, _) = compute_sse(&g).unwrap();
            let truthful = payoff(&g.follower, sse.x(), sse.response);
            assert!(plan.value >= truthful, "seed {seed}");
        }
    }
}
