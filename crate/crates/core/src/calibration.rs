//! Cross-column calibration and the choice of a tight column set.
//!
//! Directions fix each leader column only up to a positive scale and a shift. For the columns
//! whose minimum dips below the reference column's maximum, the ratio `γ_j/γ_1` and the offset
//! `(β_j − β_1)/γ_1` are recovered from two pairs of strategies with equal leader payoffs; a
//! fully known surrogate built from them yields a set `J` and a strategy `x*` with
//! `u(x*, j) = M_J = M_[n]` for every `j ∈ J`.

use std::cmp::Ordering;

use log::debug;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{assert_fail, Error, Result};
use crate::exact::lp::{on_simplex, optimize, Constraint, LpResult, Sense};
use crate::exact::rational::{bit_size, dot, int, serde_q, Q};
use crate::exact::{solve_linear_system_2x2, stern_brocot_find, Solve2};
use crate::game::{br_region, column, maximin, Matrix, MixedStrategy, StrategyProfile};
use crate::gradient::{compute_cover, CoverContext, GradientModel};
use crate::oracle::{BrPiece, Oracle};
use crate::warmup::RelationTable;

pub const PHASE_FIRST: &str = "calibration-first";
pub const PHASE_COVER: &str = "calibration-cover";
pub const PHASE_SECOND: &str = "calibration-second";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    /// Both strategies pay the pair's joint maximin value.
    AtMaximin,
    /// Both pay a common value strictly below it.
    BelowMaximin,
}

/// Strategies `x`, `y` with `u(x, reference) = u(y, target)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReferencePair {
    pub reference: usize,
    pub target: usize,
    pub x: MixedStrategy,
    pub y: MixedStrategy,
    pub kind: PairKind,
}

/// `ratio = γ_j/γ_ref` and `offset = (β_j − β_ref)/γ_ref`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColumnCalibration {
    pub column: usize,
    #[serde(with = "serde_q")]
    pub ratio: Q,
    #[serde(with = "serde_q")]
    pub offset: Q,
}

/// How the second pair's queries are phrased.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecondPairPath {
    Payoff,
    BrCorrespondence,
}

/// How a target column is tied back to the reference column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Reference,
    Direct,
    /// Calibrate the reference against the target, then invert.
    Swap,
    /// Calibrate both against a third column and compose.
    Via(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CalibrationPlan {
    pub reference: usize,
    /// Constant columns, dropped from the game for this stage.
    pub excluded: Vec<usize>,
    pub jhat: Vec<usize>,
    pub routes: Vec<(usize, Route)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CalibrationResult {
    pub jhat: Vec<usize>,
    #[serde(with = "serde_q::mat")]
    pub surrogate: Matrix,
    #[serde(with = "serde_q")]
    pub value: Q,
    pub j_set: Vec<usize>,
    pub x_star: MixedStrategy,
}

/// Levels `d1 = a_ref·x` and `d2 = a_target·y` of a pair at the joint maximin value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairLevels {
    pub d1: Q,
    pub d2: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SecondPair {
    Pair(ReferencePair),
    /// The two columns admit no cover, so their joint maximin is already the global one.
    ShortCircuit { columns: [usize; 2], x_star: Vec<Q> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnOutcome {
    Calibrated {
        calibration: ColumnCalibration,
        pairs: Vec<ReferencePair>,
    },
    ShortCircuit {
        columns: [usize; 2],
        x_star: Vec<Q>,
        pairs: Vec<ReferencePair>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "columns")]
pub enum JSource {
    /// A column whose singleton maximin equals the global one.
    Coinciding(usize),
    ShortCircuit([usize; 2]),
    Surrogate,
}

/// The stage output: `J`, `x*`, and what was learned on the way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JSelection {
    pub j_set: Vec<usize>,
    pub x_star: MixedStrategy,
    pub source: JSource,
    pub plan: Option<CalibrationPlan>,
    pub calibrations: Vec<ColumnCalibration>,
    pub pairs: Vec<ReferencePair>,
    pub surrogate: Option<CalibrationResult>,
}

/// Shared inputs of the pair constructions.
pub struct CalibrationContext<'a> {
    pub table: &'a RelationTable,
    pub directions: &'a [Option<Vec<Q>>],
    pub excluded: &'a [usize],
    pub bits: u64,
    pub path: SecondPairPath,
}

impl CalibrationContext<'_> {
    fn dir(&self, j: usize, phase: &str) -> Result<&[Q]> {
        self.directions[j]
            .as_deref()
            .ok_or_else(|| assert_fail(phase, format!("column {j} has no direction")))
    }
}

/// `u(i, t) > u(i, r)` for some best row `i` of `t`.
fn beats_on_best_row(table: &RelationTable, t: usize, r: usize) -> bool {
    table
        .best_rows(t)
        .iter()
        .any(|&i| table.entry(t, i, r) == Ordering::Greater)
}

/// Columns whose minimum entry lies strictly below the reference column's maximum.
pub fn compute_jhat(table: &RelationTable, reference: usize, excluded: &[usize]) -> Result<Vec<usize>> {
    let jhat: Vec<usize> = (0..table.n)
        .filter(|j| !excluded.contains(j))
        .filter(|&j| (0..table.m).any(|i| table.entry(reference, i, j) == Ordering::Greater))
        .collect();
    if jhat.is_empty() {
        return Err(assert_fail(PHASE_FIRST, "no column dips below the reference maximum"));
    }
    Ok(jhat)
}

/// Drops constant columns, picks the reference column, and routes every target to it.
pub fn normalize_labels(model: &GradientModel, table: &RelationTable) -> Result<CalibrationPlan> {
    let n = table.n;
    let mut excluded = Vec::new();
    for j in 0..n {
        let a = model.direction(j).ok_or_else(|| {
            assert_fail(PHASE_FIRST, format!("column {j} coincides; calibration is not needed"))
        })?;
        if a.iter().all(Zero::is_zero) {
            excluded.push(j);
        }
    }
    let residue: Vec<usize> = (0..n).filter(|j| !excluded.contains(j)).collect();
    let reference = residue
        .iter()
        .copied()
        .reduce(|best, k| if table.cmp_maximin(k, best) == Ordering::Less { k } else { best })
        .ok_or_else(|| assert_fail(PHASE_FIRST, "every column is constant"))?;
    let jhat = compute_jhat(table, reference, &excluded)?;
    let mut routes = Vec::with_capacity(jhat.len());
    for &t in &jhat {
        let route = if t == reference {
            Route::Reference
        } else if beats_on_best_row(table, t, reference) {
            Route::Direct
        } else if beats_on_best_row(table, reference, t) {
            Route::Swap
        } else {
            let ref_rows = table.best_rows(reference);
            let via = jhat
                .iter()
                .copied()
                .find(|&j| table.best_rows(j) != ref_rows)
                .ok_or_else(|| {
                    assert_fail(PHASE_FIRST, "every candidate column shares the reference best rows")
                })?;
            Route::Via(via)
        };
        routes.push((t, route));
    }
    Ok(CalibrationPlan {
        reference,
        excluded,
        jhat,
        routes,
    })
}

/// Reference column pays 0, target pays `d − a_t·x`, everything else −1.
pub fn first_pair_fake(m: usize, n: usize, r: usize, t: usize, a_t: &[Q], d: &Q) -> Matrix {
    (0..m)
        .map(|i| {
            (0..n)
                .map(|k| {
                    if k == r {
                        Q::zero()
                    } else if k == t {
                        d - &a_t[i]
                    } else {
                        int(-1)
                    }
                })
                .collect()
        })
        .collect()
}

fn level_ge(a: &[Q], d: &Q) -> Constraint {
    Constraint::ge(a.to_vec(), d.clone())
}

fn level_le(a: &[Q], d: &Q) -> Constraint {
    Constraint::le(a.to_vec(), d.clone())
}

fn level_eq(a: &[Q], d: &Q) -> Constraint {
    Constraint::eq(a.to_vec(), d.clone())
}

fn argmax_on(a: &[Q], cons: &[Constraint], phase: &str, what: &str) -> Result<Vec<Q>> {
    on_simplex::lex_optimum(a, Sense::Max, cons)?
        .map(|(_, x)| x)
        .ok_or_else(|| assert_fail(phase, format!("{what} is empty")))
}

/// Finds the level `d*` at which both columns are SSE responses of the first-pair matrix, and the
/// pair at the joint maximin value.
pub fn first_reference_pair<O: Oracle + ?Sized>(
    oracle: &mut O,
    ctx: &CalibrationContext<'_>,
    r: usize,
    t: usize,
) -> Result<(ReferencePair, PairLevels)> {
    let (m, n) = oracle.shape();
    let a_r = ctx.dir(r, PHASE_FIRST)?.to_vec();
    let a_t = ctx.dir(t, PHASE_FIRST)?.to_vec();
    let lo = a_t.iter().min().expect("m >= 1").clone();
    let hi = a_t.iter().max().expect("m >= 1").clone();
    let d_star = stern_brocot_find(
        |p| {
            if *p <= lo {
                return Ok(Ordering::Greater);
            }
            if *p > hi {
                return Ok(Ordering::Less);
            }
            let fake = first_pair_fake(m, n, r, t, &a_t, p);
            let er_r = oracle.query_er(PHASE_FIRST, &fake, r, &a_r)?;
            let er_t = oracle.query_er(PHASE_FIRST, &fake, t, &a_t)?;
            match (er_r, er_t) {
                (true, true) => Ok(Ordering::Equal),
                (true, false) => Ok(Ordering::Greater),
                (false, true) => Ok(Ordering::Less),
                (false, false) => Err(assert_fail(
                    PHASE_FIRST,
                    format!("neither {r} nor {t} is an SSE response at level {p}"),
                )),
            }
        },
        ctx.bits,
    )?;
    let x = argmax_on(&a_r, &[level_ge(&a_t, &d_star)], PHASE_FIRST, "upper side")?;
    let y = argmax_on(&a_t, &[level_le(&a_t, &d_star)], PHASE_FIRST, "lower side")?;
    let levels = PairLevels {
        d1: dot(&a_r, &x),
        d2: d_star,
    };
    debug!("pair ({r}, {t}): levels {} / {}", levels.d1, levels.d2);
    let pair = ReferencePair {
        reference: r,
        target: t,
        x: MixedStrategy(x),
        y: MixedStrategy(y),
        kind: PairKind::AtMaximin,
    };
    Ok((pair, levels))
}

/// A proper cover of `{r, t}` built on the first-pair matrix at `d*`, or `None` if none exists.
pub fn pair_cover<O: Oracle + ?Sized>(
    oracle: &mut O,
    ctx: &CalibrationContext<'_>,
    r: usize,
    t: usize,
    levels: &PairLevels,
) -> Result<Option<Matrix>> {
    let (m, n) = oracle.shape();
    let a_r = ctx.dir(r, PHASE_COVER)?;
    let a_t = ctx.dir(t, PHASE_COVER)?;
    let base = first_pair_fake(m, n, r, t, a_t, &levels.d2);
    let region = vec![level_ge(a_r, &levels.d1), level_ge(a_t, &levels.d2)];
    let cover_ctx = CoverContext {
        covered: &[r, t],
        q: &[],
        excluded: ctx.excluded,
        directions: ctx.directions,
        best_rows: &ctx.table.best_rows,
        base: &base,
        region: &region,
        bits: ctx.bits,
        phase: PHASE_COVER,
    };
    Ok(compute_cover(oracle, &cover_ctx)?.map(|c| c.mu))
}

/// Largest `ε` with `a_r·x ≤ d1 − ε` somewhere on `a_t·x ≥ d2`, and `a_t·x ≤ d2 − ε` somewhere.
pub fn eps_prime(a_r: &[Q], a_t: &[Q], levels: &PairLevels) -> Result<Q> {
    let m = a_r.len();
    let nv = 1 + 2 * m;
    let embed = |block: usize, v: &[Q], eps: Q| -> Vec<Q> {
        let mut c = vec![Q::zero(); nv];
        c[0] = eps;
        c[1 + block * m..1 + (block + 1) * m].clone_from_slice(v);
        c
    };
    let ones = vec![Q::one(); m];
    let cons = vec![
        Constraint::eq(embed(0, &ones, Q::zero()), Q::one()),
        Constraint::eq(embed(1, &ones, Q::zero()), Q::one()),
        Constraint::ge(embed(0, a_t, Q::zero()), levels.d2.clone()),
        Constraint::le(embed(0, a_r, Q::one()), levels.d1.clone()),
        Constraint::le(embed(1, a_t, Q::one()), levels.d2.clone()),
    ];
    let mut nonneg = vec![true; nv];
    nonneg[0] = false;
    let mut obj = vec![Q::zero(); nv];
    obj[0] = Q::one();
    match optimize(&obj, Sense::Max, &cons, &nonneg)? {
        LpResult::Optimal { value, .. } if value.is_positive() => Ok(value),
        other => Err(assert_fail(
            PHASE_SECOND,
            format!("slack LP has no positive optimum: {other:?}"),
        )),
    }
}

/// Largest `max_k fake(x, k)` over `x` in the region and `k` in `ks`; lowest `k` on ties.
fn best_pivot(fake: &Matrix, ks: &[usize], region: &[Constraint]) -> Result<Option<(Q, Vec<Q>, usize)>> {
    let mut best: Option<(Q, Vec<Q>, usize)> = None;
    for &k in ks {
        if let Some((v, x)) = on_simplex::lex_optimum(&column(fake, k), Sense::Max, region)? {
            if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
                best = Some((v, x, k));
            }
        }
    }
    Ok(best)
}

fn spread(fake: &Matrix, ks: &[usize]) -> Q {
    let vals = fake.iter().flat_map(|row| ks.iter().map(move |&k| &row[k]));
    let (lo, hi) = vals.fold((None::<&Q>, None::<&Q>), |(lo, hi), v| {
        (Some(lo.map_or(v, |l| l.min(v))), Some(hi.map_or(v, |h| h.max(v))))
    });
    Q::one() + hi.expect("nonempty") - lo.expect("nonempty")
}

/// Rewrites column `j` as its best competitor over `region` minus a steep tilt along `a`.
/// `levels` is `(d*, δ, midpoint)`. Returns the anchor point.
fn tilt_column(
    fake: &mut Matrix,
    j: usize,
    a: &[Q],
    (d_star, delta, bar): (&Q, &Q, &Q),
    ks: &[usize],
    region: &[Constraint],
) -> Result<Vec<Q>> {
    let (_, z, k) = best_pivot(fake, ks, region)?.ok_or_else(|| {
        assert_fail(PHASE_SECOND, format!("anchor set of column {j} is empty at {delta}"))
    })?;
    let slope = int(6) * spread(fake, ks) / (d_star - delta);
    for (i, row) in fake.iter_mut().enumerate() {
        row[j] = &row[k] - &slope * (&a[i] - bar);
    }
    Ok(z)
}

/// The payoff-only second-pair matrix at `(δ1, δ2)` together with its anchor points `z1`, `z2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TiltedFake {
    pub matrix: Matrix,
    pub z1: Vec<Q>,
    pub z2: Vec<Q>,
}

/// Columns `r` and `t` copy their best competing column at the anchor and tilt steeply down
/// past the midway levels; the cover fills every other column.
#[allow(clippy::too_many_arguments)]
pub fn tilted_fake(
    mu: &Matrix,
    r: usize,
    t: usize,
    a_r: &[Q],
    a_t: &[Q],
    levels: &PairLevels,
    delta1: &Q,
    delta2: &Q,
) -> Result<TiltedFake> {
    let n = mu[0].len();
    let bar1 = midpoint(delta1, &levels.d1);
    let bar2 = midpoint(delta2, &levels.d2);
    let mut fake = mu.clone();
    let k1: Vec<usize> = (0..n).filter(|&k| k != r && k != t).collect();
    let z1 = tilt_column(
        &mut fake,
        r,
        a_r,
        (&levels.d1, delta1, &bar1),
        &k1,
        &[level_eq(a_r, &bar1), level_ge(a_t, &bar2)],
    )?;
    let k2: Vec<usize> = (0..n).filter(|&k| k != t).collect();
    let z2 = tilt_column(&mut fake, t, a_t, (&levels.d2, delta2, &bar2), &k2, &[level_eq(a_t, &bar2)])?;
    Ok(TiltedFake {
        matrix: fake,
        z1,
        z2,
    })
}

/// Raises the lagging column's parameter in `(lo, hi)` until both columns answer.
/// `probe(p)` returns `(lagging answers, leading answers)`.
fn balance<F>(lo: &Q, hi: &Q, bits: u64, mut probe: F) -> Result<Q>
where
    F: FnMut(&Q) -> Result<(bool, bool)>,
{
    stern_brocot_find(
        |p| {
            if p <= lo {
                return Ok(Ordering::Greater);
            }
            if p >= hi {
                return Ok(Ordering::Less);
            }
            match probe(p)? {
                (true, true) => Ok(Ordering::Equal),
                (false, true) => Ok(Ordering::Greater),
                (true, false) => Ok(Ordering::Less),
                (false, false) => Err(assert_fail(
                    PHASE_SECOND,
                    format!("neither column is an SSE response at {p}"),
                )),
            }
        },
        bits,
    )
}

fn halve(eps: &mut Q, bits: u64) -> Result<()> {
    *eps /= int(2);
    if bit_size(eps) > bits {
        return Err(Error::BoundExceeded(format!(
            "slack halving passed {bits} bits without an SSE response"
        )));
    }
    Ok(())
}

/// Offsets `(δ1, δ2)` below the maximin levels at which both columns answer.
///
/// Starts at `ε′`, halves until one column answers, jumps halfway toward the levels, then raises
/// the lagging offset with the other fixed. `ask(δ1, δ2)` reports whether each column answers.
fn balanced_offsets<F>(levels: &PairLevels, eps_start: Q, bits: u64, mut ask: F) -> Result<(Q, Q)>
where
    F: FnMut(&Q, &Q) -> Result<(bool, bool)>,
{
    let mut eps = eps_start;
    while ask(&(&levels.d1 - &eps), &(&levels.d2 - &eps)).map(|(a, b)| !(a || b))? {
        halve(&mut eps, bits)?;
    }
    let half_eps = &eps / int(2);
    let delta1 = &levels.d1 - &half_eps;
    let delta2 = &levels.d2 - &half_eps;
    match ask(&delta1, &delta2)? {
        (true, true) => Ok((delta1, delta2)),
        (true, false) => {
            let delta2 = balance(&delta2, &levels.d2, bits, |p| {
                let (a, b) = ask(&delta1, p)?;
                Ok((b, a))
            })?;
            Ok((delta1, delta2))
        }
        (false, true) => {
            let delta1 = balance(&delta1, &levels.d1, bits, |p| ask(p, &delta2))?;
            Ok((delta1, delta2))
        }
        (false, false) => Err(assert_fail(PHASE_SECOND, "no SSE response after the midway jump")),
    }
}

fn midpoint(delta: &Q, level: &Q) -> Q {
    (delta + level) / int(2)
}

/// Second pair through payoff-matrix queries only.
pub fn second_reference_pair<O: Oracle + ?Sized>(
    oracle: &mut O,
    ctx: &CalibrationContext<'_>,
    r: usize,
    t: usize,
    levels: &PairLevels,
) -> Result<SecondPair> {
    let Some(mu) = pair_cover(oracle, ctx, r, t, levels)? else {
        return short_circuit(ctx, r, t, levels);
    };
    let a_r = ctx.dir(r, PHASE_SECOND)?.to_vec();
    let a_t = ctx.dir(t, PHASE_SECOND)?.to_vec();
    let build = |d1: &Q, d2: &Q| tilted_fake(&mu, r, t, &a_r, &a_t, levels, d1, d2);
    let (delta1, delta2) = balanced_offsets(levels, eps_prime(&a_r, &a_t, levels)?, ctx.bits, |d1, d2| {
        let f = build(d1, d2)?;
        Ok((
            oracle.query_er(PHASE_SECOND, &f.matrix, r, &a_r)?,
            oracle.query_er(PHASE_SECOND, &f.matrix, t, &a_t)?,
        ))
    })?;
    let f = build(&delta1, &delta2)?;
    Ok(SecondPair::Pair(ReferencePair {
        reference: r,
        target: t,
        x: MixedStrategy(f.z1),
        y: MixedStrategy(f.z2),
        kind: PairKind::BelowMaximin,
    }))
}

/// The pieces `P1 → r`, `P2 → t`, and `P0` split by the cover's best responses.
pub fn partition_pieces(
    mu: &Matrix,
    r: usize,
    t: usize,
    a_r: &[Q],
    a_t: &[Q],
    d1: &Q,
    d2: &Q,
) -> Vec<BrPiece> {
    let n = mu[0].len();
    let mut pieces = vec![
        BrPiece::new(r, vec![level_ge(a_t, d2), level_le(a_r, d1)]),
        BrPiece::new(t, vec![level_le(a_t, d2)]),
    ];
    for k in (0..n).filter(|&k| k != r && k != t) {
        let mut cons = vec![level_ge(a_t, d2), level_ge(a_r, d1)];
        cons.extend(br_region(mu, k));
        pieces.push(BrPiece::new(k, cons));
    }
    pieces
}

fn brc_responds<O: Oracle + ?Sized>(oracle: &mut O, pieces: &[BrPiece], j: usize, a_j: &[Q]) -> Result<bool> {
    let piece = pieces.iter().find(|p| p.column == j).expect("piece per column");
    match on_simplex::lex_optimum(a_j, Sense::Max, &piece.constraints)? {
        None => Ok(false),
        Some((_, x)) => {
            oracle.query_br_correspondence(PHASE_SECOND, pieces, &StrategyProfile::new(MixedStrategy(x), j))
        }
    }
}

/// Second pair through best-response-correspondence queries.
///
/// Runs the same offset schedule as the payoff path and places the piece boundaries at the
/// midpoint levels, so both paths settle on the same common value.
pub fn second_reference_pair_brc<O: Oracle + ?Sized>(
    oracle: &mut O,
    ctx: &CalibrationContext<'_>,
    r: usize,
    t: usize,
    levels: &PairLevels,
) -> Result<SecondPair> {
    let Some(mu) = pair_cover(oracle, ctx, r, t, levels)? else {
        return short_circuit(ctx, r, t, levels);
    };
    let a_r = ctx.dir(r, PHASE_SECOND)?.to_vec();
    let a_t = ctx.dir(t, PHASE_SECOND)?.to_vec();
    let pieces = |delta1: &Q, delta2: &Q| {
        let d1 = midpoint(delta1, &levels.d1);
        let d2 = midpoint(delta2, &levels.d2);
        partition_pieces(&mu, r, t, &a_r, &a_t, &d1, &d2)
    };
    let (delta1, delta2) = balanced_offsets(levels, eps_prime(&a_r, &a_t, levels)?, ctx.bits, |d1, d2| {
        let ps = pieces(d1, d2);
        Ok((brc_responds(oracle, &ps, r, &a_r)?, brc_responds(oracle, &ps, t, &a_t)?))
    })?;
    let ps = pieces(&delta1, &delta2);
    let x = argmax_on(&a_r, &ps[0].constraints, PHASE_SECOND, "reference piece")?;
    let y = argmax_on(&a_t, &ps[1].constraints, PHASE_SECOND, "target piece")?;
    Ok(SecondPair::Pair(ReferencePair {
        reference: r,
        target: t,
        x: MixedStrategy(x),
        y: MixedStrategy(y),
        kind: PairKind::BelowMaximin,
    }))
}

fn short_circuit(ctx: &CalibrationContext<'_>, r: usize, t: usize, levels: &PairLevels) -> Result<SecondPair> {
    let a_r = ctx.dir(r, PHASE_COVER)?;
    let a_t = ctx.dir(t, PHASE_COVER)?;
    let x_star = on_simplex::lex_min_point(
        a_r.len(),
        &[level_eq(a_r, &levels.d1), level_eq(a_t, &levels.d2)],
    )?
    .ok_or_else(|| assert_fail(PHASE_COVER, format!("no point is tight for both {r} and {t}")))?;
    debug!("pair ({r}, {t}) admits no cover");
    Ok(SecondPair::ShortCircuit {
        columns: [r, t],
        x_star,
    })
}

/// Solves `a_r·x_k = ratio·a_t·y_k + offset` for the two pairs.
pub fn solve_ratios(first: &ReferencePair, second: &ReferencePair, a_r: &[Q], a_t: &[Q]) -> Result<ColumnCalibration> {
    let lhs = |p: &ReferencePair| dot(a_t, p.y.weights());
    let rhs = |p: &ReferencePair| dot(a_r, p.x.weights());
    match solve_linear_system_2x2(
        [[lhs(first), Q::one()], [lhs(second), Q::one()]],
        [rhs(first), rhs(second)],
    ) {
        Solve2::Unique(ratio, offset) if ratio.is_positive() => Ok(ColumnCalibration {
            column: first.target,
            ratio,
            offset,
        }),
        Solve2::Unique(ratio, _) => Err(assert_fail(
            PHASE_SECOND,
            format!("nonpositive ratio {ratio} for column {}", first.target),
        )),
        Solve2::Degenerate => Err(assert_fail(
            PHASE_SECOND,
            format!("reference pairs for column {} are degenerate", first.target),
        )),
    }
}

/// Both pairs for `(r, t)` and the resulting calibration of `t` against `r`.
pub fn calibrate_direct<O: Oracle + ?Sized>(
    oracle: &mut O,
    ctx: &CalibrationContext<'_>,
    r: usize,
    t: usize,
) -> Result<ColumnOutcome> {
    let (first, levels) = first_reference_pair(oracle, ctx, r, t)?;
    let second = match ctx.path {
        SecondPairPath::Payoff => second_reference_pair(oracle, ctx, r, t, &levels)?,
        SecondPairPath::BrCorrespondence => second_reference_pair_brc(oracle, ctx, r, t, &levels)?,
    };
    match second {
        SecondPair::ShortCircuit { columns, x_star } => Ok(ColumnOutcome::ShortCircuit {
            columns,
            x_star,
            pairs: vec![first],
        }),
        SecondPair::Pair(second) => {
            let calibration = solve_ratios(&first, &second, ctx.dir(r, PHASE_SECOND)?, ctx.dir(t, PHASE_SECOND)?)?;
            Ok(ColumnOutcome::Calibrated {
                calibration,
                pairs: vec![first, second],
            })
        }
    }
}

fn invert(c: ColumnCalibration, column: usize) -> ColumnCalibration {
    let ratio = c.ratio.recip();
    let offset = -(&c.offset * &ratio);
    ColumnCalibration {
        column,
        ratio,
        offset,
    }
}

/// Direct when `t` beats `r` on one of its best rows, otherwise calibrates `r` against `t`.
fn calibrate_direct_or_swap<O: Oracle + ?Sized>(
    oracle: &mut O,
    ctx: &CalibrationContext<'_>,
    r: usize,
    t: usize,
) -> Result<ColumnOutcome> {
    if beats_on_best_row(ctx.table, t, r) {
        return calibrate_direct(oracle, ctx, r, t);
    }
    if !beats_on_best_row(ctx.table, r, t) {
        return Err(assert_fail(PHASE_FIRST, format!("columns {r} and {t} share their best rows")));
    }
    Ok(match calibrate_direct(oracle, ctx, t, r)? {
        ColumnOutcome::Calibrated { calibration, pairs } => ColumnOutcome::Calibrated {
            calibration: invert(calibration, t),
            pairs,
        },
        sc => sc,
    })
}

/// Calibration of `t` against the plan's reference, following its route.
pub fn calibrate_column<O: Oracle + ?Sized>(
    oracle: &mut O,
    ctx: &CalibrationContext<'_>,
    reference: usize,
    t: usize,
    route: Route,
) -> Result<ColumnOutcome> {
    match route {
        Route::Reference => Ok(ColumnOutcome::Calibrated {
            calibration: ColumnCalibration {
                column: t,
                ratio: Q::one(),
                offset: Q::zero(),
            },
            pairs: vec![],
        }),
        Route::Direct | Route::Swap => calibrate_direct_or_swap(oracle, ctx, reference, t),
        Route::Via(j) => {
            let (via_ref, mut pairs) = match calibrate_direct_or_swap(oracle, ctx, reference, j)? {
                ColumnOutcome::Calibrated { calibration, pairs } => (calibration, pairs),
                sc => return Ok(sc),
            };
            let via_t = match calibrate_direct_or_swap(oracle, ctx, t, j)? {
                ColumnOutcome::Calibrated { calibration, pairs: more } => {
                    pairs.extend(more);
                    calibration
                }
                ColumnOutcome::ShortCircuit { columns, x_star, pairs: more } => {
                    pairs.extend(more);
                    return Ok(ColumnOutcome::ShortCircuit { columns, x_star, pairs });
                }
            };
            let ratio = &via_ref.ratio / &via_t.ratio;
            let offset = &via_ref.offset - &via_t.offset * &ratio;
            Ok(ColumnOutcome::Calibrated {
                calibration: ColumnCalibration {
                    column: t,
                    ratio,
                    offset,
                },
                pairs,
            })
        }
    }
}

/// Surrogate `ratio·a_j·x + offset` on `Ĵ` and a large constant elsewhere; `J` is the set of
/// `Ĵ` columns tight at the lexicographically smallest maximin strategy.
pub fn build_surrogate_and_j_xstar(
    calibrations: &[ColumnCalibration],
    jhat: &[usize],
    directions: &[Option<Vec<Q>>],
    m: usize,
    n: usize,
) -> Result<CalibrationResult> {
    let mut surrogate = vec![vec![Q::zero(); n]; m];
    for c in calibrations {
        let a = directions[c.column]
            .as_deref()
            .ok_or_else(|| assert_fail(PHASE_SECOND, format!("column {} has no direction", c.column)))?;
        for (i, row) in surrogate.iter_mut().enumerate() {
            row[c.column] = &c.ratio * &a[i] + &c.offset;
        }
    }
    let w = surrogate
        .iter()
        .flat_map(|row| jhat.iter().map(move |&j| &row[j]))
        .max()
        .ok_or_else(|| assert_fail(PHASE_SECOND, "empty candidate set"))?
        + Q::one();
    for row in surrogate.iter_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            if !jhat.contains(&j) {
                *v = w.clone();
            }
        }
    }
    let all: Vec<usize> = (0..n).collect();
    let mm = maximin(&surrogate, &all)?;
    let j_set: Vec<usize> = jhat
        .iter()
        .copied()
        .filter(|&j| dot(mm.witness.weights(), &column(&surrogate, j)) == mm.value)
        .collect();
    Ok(CalibrationResult {
        jhat: jhat.to_vec(),
        surrogate,
        value: mm.value,
        j_set,
        x_star: mm.witness,
    })
}

/// Runs the whole stage: a coinciding column settles it at once; otherwise each candidate
/// column is calibrated until a pair without a cover short-circuits or the surrogate decides.
pub fn learn_j_xstar<O: Oracle + ?Sized>(
    oracle: &mut O,
    table: &RelationTable,
    model: &GradientModel,
    bits: u64,
    path: SecondPairPath,
) -> Result<JSelection> {
    let (m, n) = oracle.shape();
    if let Some(c) = model.coinciding_column() {
        return Ok(JSelection {
            j_set: vec![c],
            x_star: MixedStrategy::pure(m, table.best_rows(c)[0]),
            source: JSource::Coinciding(c),
            plan: None,
            calibrations: vec![],
            pairs: vec![],
            surrogate: None,
        });
    }
    let plan = normalize_labels(model, table)?;
    let directions: Vec<Option<Vec<Q>>> = (0..n).map(|j| model.direction(j).map(<[Q]>::to_vec)).collect();
    let ctx = CalibrationContext {
        table,
        directions: &directions,
        excluded: &plan.excluded,
        bits,
        path,
    };
    let mut calibrations = Vec::new();
    let mut pairs = Vec::new();
    for &(t, route) in &plan.routes {
        match calibrate_column(oracle, &ctx, plan.reference, t, route)? {
            ColumnOutcome::Calibrated { calibration, pairs: p } => {
                debug!("column {t}: ratio {} offset {}", calibration.ratio, calibration.offset);
                calibrations.push(calibration);
                pairs.extend(p);
            }
            ColumnOutcome::ShortCircuit { columns, x_star, pairs: p } => {
                pairs.extend(p);
                let mut j_set = columns.to_vec();
                j_set.sort_unstable();
                return Ok(JSelection {
                    j_set,
                    x_star: MixedStrategy(x_star),
                    source: JSource::ShortCircuit(columns),
                    plan: Some(plan),
                    calibrations,
                    pairs,
                    surrogate: None,
                });
            }
        }
    }
    let result = build_surrogate_and_j_xstar(&calibrations, &plan.jhat, &directions, m, n)?;
    Ok(JSelection {
        j_set: result.j_set.clone(),
        x_star: result.x_star.clone(),
        source: JSource::Surrogate,
        plan: Some(plan),
        calibrations,
        pairs,
        surrogate: Some(result),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::int_matrix;
    use crate::game::fixtures::{g1, g3};
    use crate::game::{full_maximin_value, maximin_value, payoff, Game};
    use crate::gradient::{affine_fit, learn_gradients};
    use crate::harness::gen::{generate_family, Family};
    use crate::oracle::{OracleMode, OracleSession};

    const BITS: u64 = 128;

    fn run(g: &Game, path: SecondPairPath) -> (JSelection, GradientModel, u64) {
        let mode = match path {
            SecondPairPath::Payoff => OracleMode::PayoffOnly,
            SecondPairPath::BrCorrespondence => OracleMode::BrCorrespondence,
        };
        let mut s = OracleSession::new(g.clone(), mode).unwrap();
        let t = RelationTable::learn(&mut s).unwrap();
        let model = learn_gradients(&mut s, &t, BITS).unwrap();
        let sel = learn_j_xstar(&mut s, &t, &model, BITS, path).unwrap();
        (sel, model, s.ledger_report().total)
    }

    fn truth(g: &Game, model: &GradientModel, j: usize) -> (Q, Q) {
        affine_fit(model.direction(j).unwrap(), &column(&g.leader, j)).unwrap()
    }

    fn check(g: &Game, path: SecondPairPath, label: &str) -> JSource {
        let (sel, model, _) = run(g, path);
        let global = full_maximin_value(&g.leader).unwrap();
        assert!(!sel.j_set.is_empty(), "{label}");
        for &j in &sel.j_set {
            assert_eq!(payoff(&g.leader, sel.x_star.weights(), j), global, "{label}: column {j}");
        }
        for p in &sel.pairs {
            let ux = payoff(&g.leader, p.x.weights(), p.reference);
            let uy = payoff(&g.leader, p.y.weights(), p.target);
            assert_eq!(ux, uy, "{label}: pair {p:?}");
            let joint = maximin_value(&g.leader, &[p.reference, p.target]).unwrap();
            match p.kind {
                PairKind::AtMaximin => assert_eq!(ux, joint, "{label}"),
                PairKind::BelowMaximin => assert!(ux < joint, "{label}"),
            }
        }
        if let Some(plan) = &sel.plan {
            let (gr, br) = truth(g, &model, plan.reference);
            for c in &sel.calibrations {
                let (gt, bt) = truth(g, &model, c.column);
                assert_eq!(c.ratio, &gt / &gr, "{label}: ratio of {}", c.column);
                assert_eq!(c.offset, (bt - &br) / &gr, "{label}: offset of {}", c.column);
            }
        }
        sel.source
    }

    #[test]
    fn fixture_outputs_satisfy_the_tightness_law() {
        for path in [SecondPairPath::Payoff, SecondPairPath::BrCorrespondence] {
            check(&g1(), path, "g1");
            check(&g3(), path, "g3");
        }
    }

    #[test]
    fn first_pair_on_fixture_sits_at_joint_maximin() {
        let g = g1();
        let mut s = OracleSession::new(g.clone(), OracleMode::PayoffOnly).unwrap();
        let t = RelationTable::learn(&mut s).unwrap();
        let model = learn_gradients(&mut s, &t, BITS).unwrap();
        let dirs: Vec<_> = (0..2).map(|j| model.direction(j).map(<[Q]>::to_vec)).collect();
        let ctx = CalibrationContext {
            table: &t,
            directions: &dirs,
            excluded: &[],
            bits: BITS,
            path: SecondPairPath::Payoff,
        };
        let (pair, _) = first_reference_pair(&mut s, &ctx, 1, 0).unwrap();
        let v = payoff(&g.leader, pair.x.weights(), 1);
        assert_eq!(v, payoff(&g.leader, pair.y.weights(), 0));
        assert_eq!(v, maximin_value(&g.leader, &[0, 1]).unwrap());
    }

    #[test]
    fn plan_excludes_constant_columns() {
        let g = Game::new(
            int_matrix(&[&[9, 4, 0], &[9, 1, 3]]),
            int_matrix(&[&[0, 1, 0], &[1, 0, 0]]),
        )
        .unwrap();
        let mut s = OracleSession::new(g.clone(), OracleMode::PayoffOnly).unwrap();
        let t = RelationTable::learn(&mut s).unwrap();
        let model = learn_gradients(&mut s, &t, BITS).unwrap();
        let plan = normalize_labels(&model, &t).unwrap();
        assert_eq!(plan.excluded, vec![0]);
        assert!(!plan.jhat.contains(&0));
        check(&g, SecondPairPath::Payoff, "constant");
    }

    #[test]
    fn swap_inverts_calibration() {
        let c = invert(
            ColumnCalibration {
                column: 0,
                ratio: int(2),
                offset: int(3),
            },
            5,
        );
        assert_eq!(c.column, 5);
        assert_eq!(c.ratio, crate::exact::rational::frac(1, 2));
        assert_eq!(c.offset, crate::exact::rational::frac(-3, 2));
    }

    #[test]
    fn generated_games_calibrate_exactly_on_both_paths() {
        let mut sources = std::collections::HashMap::new();
        for seed in 0..48u64 {
            let fam = Family::ALL[seed as usize % 4];
            let g = generate_family(seed, 2 + seed as usize % 3, 2 + (seed as usize / 3) % 3, 5, fam);
            for path in [SecondPairPath::Payoff, SecondPairPath::BrCorrespondence] {
                let src = check(&g, path, &format!("seed {seed} {path:?}"));
                *sources.entry(format!("{src:?}").split('(').next().unwrap().to_string()).or_insert(0) += 1;
            }
        }
        assert!(sources.contains_key("Surrogate"), "{sources:?}");
    }
}
