//! Recovers, for each leader column `j`, a direction `a_j` with `u(x, j) = γ·a_j·x + β` for some
//! `γ > 0`, or certifies that the column's singleton maximin equals the unrestricted one.
//!
//! Each column is handled by building a cover of it, then tuning a parameter vector `g` until the
//! critical points on the facets `Γ_r` all form SSEs with `j`; the direction is read off their
//! coordinates.

use std::cmp::Ordering;

use log::debug;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{assert_fail, Error, Result};
use crate::exact::lp::{on_simplex, Constraint, Sense};
use crate::exact::rational::{bit_size, dot, int, serde_q, unit, Q};
use crate::exact::stern_brocot_find;
use crate::game::{br_region, Matrix, MixedStrategy, StrategyProfile};
use crate::oracle::Oracle;
use crate::warmup::RelationTable;

pub const PHASE_COVER: &str = "gradient-cover";
pub const PHASE_CRITICAL: &str = "gradient-critical";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnGradient {
    Direction(#[serde(with = "serde_q::vec")] Vec<Q>),
    MaximinCoincides,
}

impl ColumnGradient {
    pub fn direction(&self) -> Option<&[Q]> {
        match self {
            ColumnGradient::Direction(a) => Some(a),
            ColumnGradient::MaximinCoincides => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GradientModel {
    pub columns: Vec<ColumnGradient>,
}

impl GradientModel {
    pub fn direction(&self, j: usize) -> Option<&[Q]> {
        self.columns[j].direction()
    }

    /// Lowest column whose singleton maximin equals the unrestricted maximin, if any was certified.
    pub fn coinciding_column(&self) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| *c == ColumnGradient::MaximinCoincides)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverMatrix {
    pub mu: Matrix,
    pub covered: Vec<usize>,
    pub proper: bool,
}

/// Replaces the covered columns by a constant strictly below every other entry.
pub fn make_proper_cover(cover: CoverMatrix) -> CoverMatrix {
    let CoverMatrix { mut mu, covered, .. } = cover;
    let low = mu
        .iter()
        .flat_map(|r| r.iter().enumerate())
        .filter(|(j, _)| !covered.contains(j))
        .map(|(_, v)| v.clone())
        .min();
    if let Some(low) = low {
        let w = low - Q::one();
        for row in mu.iter_mut() {
            for &j in &covered {
                row[j] = w.clone();
            }
        }
    }
    CoverMatrix {
        mu,
        covered,
        proper: true,
    }
}

/// Follower matrix in which `j` strictly dominates (0 against −1).
pub fn dominant_matrix(m: usize, n: usize, j: usize) -> Matrix {
    (0..m)
        .map(|_| (0..n).map(|c| if c == j { int(0) } else { int(-1) }).collect())
        .collect()
}

/// `x_i = 0` for every row outside `rows`.
pub fn support_constraints(m: usize, rows: &[usize]) -> Vec<Constraint> {
    (0..m)
        .filter(|i| !rows.contains(i))
        .map(|i| Constraint::eq(unit(m, i), Q::zero()))
        .collect()
}

/// Inputs for deciding whether a column set admits a cover.
pub struct CoverContext<'a> {
    pub covered: &'a [usize],
    /// Columns outside `covered` whose singleton maximin equals `M_S`.
    pub q: &'a [usize],
    /// Columns left out of the game entirely; the cover buries them with the covered ones.
    pub excluded: &'a [usize],
    pub directions: &'a [Option<Vec<Q>>],
    pub best_rows: &'a [Vec<usize>],
    /// Follower matrix whose best responses stay in `covered` and whose SSE pays the leader `M_S`.
    pub base: &'a Matrix,
    /// The maximin set of `covered`, as constraints beyond the simplex.
    pub region: &'a [Constraint],
    pub bits: u64,
    pub phase: &'a str,
}

/// Follower column `t − a·x` (or the off-best-rows indicator for `Q` columns) that is
/// nonpositive on the maximin region exactly where the leader's column reaches `M_S`.
pub fn learn_separating_hyperplane<O: Oracle + ?Sized>(
    oracle: &mut O,
    ctx: &CoverContext<'_>,
    j: usize,
) -> Result<Vec<Q>> {
    let (m, _) = oracle.shape();
    if ctx.q.contains(&j) {
        return Ok((0..m)
            .map(|i| {
                if ctx.best_rows[j].contains(&i) {
                    Q::zero()
                } else {
                    Q::one()
                }
            })
            .collect());
    }
    let a = ctx.directions[j].as_deref().ok_or_else(|| {
        assert_fail(ctx.phase, format!("direction of column {j} is needed for the cover"))
    })?;
    let lo = on_simplex::value(a, Sense::Min, ctx.region)?
        .ok_or_else(|| assert_fail(ctx.phase, "maximin region is empty"))?;
    let hi = on_simplex::value(a, Sense::Max, ctx.region)?.expect("region is nonempty");
    let level = |t: Q| a.iter().map(|ai| &t - ai).collect::<Vec<_>>();

    let er_at = |d: &Q, oracle: &mut O| -> Result<bool> {
        let (fake, _, _) = threshold_fake(ctx, j, a, d)?;
        oracle.query_er(ctx.phase, &fake, j, a)
    };
    if er_at(&lo, oracle)? {
        return Ok(level(lo - Q::one()));
    }
    if !er_at(&hi, oracle)? {
        return Ok(level(hi + Q::one()));
    }
    let d_star = stern_brocot_find(
        |p| {
            if *p <= lo {
                return Ok(Ordering::Greater);
            }
            if *p > hi {
                return Ok(Ordering::Less);
            }
            match probe_threshold(oracle, ctx, j, a, p)? {
                (true, true) => Ok(Ordering::Equal),
                (true, false) => Ok(Ordering::Less),
                (false, true) => Ok(Ordering::Greater),
                (false, false) => Err(assert_fail(
                    ctx.phase,
                    format!("neither side of the threshold answered for column {j} at {p}"),
                )),
            }
        },
        ctx.bits,
    )?;
    debug!("column {j}: maximin threshold {d_star}");
    Ok(level(d_star))
}

/// The base matrix with column `j` lifted to `base(·, k) + d − a·x`, pivoting at the
/// lexicographically smallest point `z` of the region on `a·x = d`. Returns the matrix, `z`, `k`.
fn threshold_fake(ctx: &CoverContext<'_>, j: usize, a: &[Q], d: &Q) -> Result<(Matrix, Vec<Q>, usize)> {
    let m = a.len();
    let mut cons = ctx.region.to_vec();
    cons.push(Constraint::eq(a.to_vec(), d.clone()));
    let z = on_simplex::lex_min_point(m, &cons)?.ok_or_else(|| {
        assert_fail(ctx.phase, format!("no maximin point at level {d} for column {j}"))
    })?;
    let n = ctx.base[0].len();
    let vals: Vec<Q> = (0..n)
        .map(|l| dot(&z, &ctx.base.iter().map(|r| r[l].clone()).collect::<Vec<_>>()))
        .collect();
    let k = (0..n)
        .filter(|&l| l != j)
        .max_by(|&x, &y| vals[x].cmp(&vals[y]).then(y.cmp(&x)))
        .ok_or_else(|| assert_fail(ctx.phase, "no pivot column"))?;
    let mut fake = ctx.base.clone();
    for (i, row) in fake.iter_mut().enumerate() {
        row[j] = &row[k] + d - &a[i];
    }
    Ok((fake, z, k))
}

/// `(j is an SSE response, (z, k) is an SSE)` under the lifted matrix at level `d`.
fn probe_threshold<O: Oracle + ?Sized>(
    oracle: &mut O,
    ctx: &CoverContext<'_>,
    j: usize,
    a: &[Q],
    d: &Q,
) -> Result<(bool, bool)> {
    let (fake, z, k) = threshold_fake(ctx, j, a, d)?;
    let er = oracle.query_er(ctx.phase, &fake, j, a)?;
    let at_pivot = oracle.query_sse(ctx.phase, &fake, &StrategyProfile::new(MixedStrategy(z), k))?;
    Ok((er, at_pivot))
}

/// A proper cover of `ctx.covered`, or `None` when the column set admits no cover.
pub fn compute_cover<O: Oracle + ?Sized>(
    oracle: &mut O,
    ctx: &CoverContext<'_>,
) -> Result<Option<CoverMatrix>> {
    let (m, n) = oracle.shape();
    let mut mu = vec![vec![Q::zero(); n]; m];
    let mut cons = ctx.region.to_vec();
    for j in (0..n).filter(|j| !ctx.covered.contains(j) && !ctx.excluded.contains(j)) {
        let col = learn_separating_hyperplane(oracle, ctx, j)?;
        for (i, v) in col.iter().enumerate() {
            mu[i][j] = v.clone();
        }
        cons.push(Constraint::le(col, Q::zero()));
    }
    if on_simplex::is_feasible(m, &cons)? {
        return Ok(None);
    }
    let buried: Vec<usize> = ctx.covered.iter().chain(ctx.excluded).copied().collect();
    let proper = make_proper_cover(CoverMatrix {
        mu,
        covered: buried,
        proper: false,
    });
    Ok(Some(CoverMatrix {
        covered: ctx.covered.to_vec(),
        ..proper
    }))
}

/// Target column `t` split into rows below its maximum (`low`) and its best rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSplit {
    pub column: usize,
    pub low: Vec<usize>,
    pub best: Vec<usize>,
}

impl ColumnSplit {
    pub fn new(m: usize, column: usize, best: &[usize]) -> Self {
        ColumnSplit {
            column,
            low: (0..m).filter(|i| !best.contains(i)).collect(),
            best: best.to_vec(),
        }
    }
}

/// The parameterized follower matrix: other columns copy `mu` on the best rows and are zero
/// elsewhere; the target column pays `g` on low rows and a floor below `mu` on best rows.
pub fn fake_g(g: &[Q], mu: &Matrix, split: &ColumnSplit) -> Matrix {
    let floor = mu.iter().flatten().min().expect("nonempty cover") - Q::one();
    let n = mu[0].len();
    let m = mu.len();
    let mut out = vec![vec![Q::zero(); n]; m];
    for &i in &split.best {
        for j in 0..n {
            out[i][j] = if j == split.column {
                floor.clone()
            } else {
                mu[i][j].clone()
            };
        }
    }
    for (pos, &i) in split.low.iter().enumerate() {
        out[i][split.column] = g[pos].clone();
    }
    out
}

/// For each low row `r`, the lexicographically smallest minimizer of `x_r` over `Γ_r` within the
/// target's best-response region.
pub fn critical_points(g: &[Q], mu: &Matrix, split: &ColumnSplit) -> Result<Vec<Vec<Q>>> {
    let m = mu.len();
    let fake = fake_g(g, mu, split);
    let region = br_region(&fake, split.column);
    split
        .low
        .iter()
        .map(|&r| {
            let mut cons = region.clone();
            cons.extend(
                split
                    .low
                    .iter()
                    .filter(|&&k| k != r)
                    .map(|&k| Constraint::eq(unit(m, k), Q::zero())),
            );
            let (_, x) = on_simplex::lex_optimum(&unit(m, r), Sense::Min, &cons)?
                .ok_or_else(|| assert_fail(PHASE_CRITICAL, format!("facet {r} misses the region")))?;
            if !x[r].is_positive() {
                return Err(assert_fail(PHASE_CRITICAL, format!("critical point {r} has x_r = 0")));
            }
            Ok(x)
        })
        .collect()
}

/// Positions (into `split.low`) whose critical point forms an SSE with the target.
fn sse_members<O: Oracle + ?Sized>(
    oracle: &mut O,
    g: &[Q],
    mu: &Matrix,
    split: &ColumnSplit,
) -> Result<(Vec<usize>, Vec<Vec<Q>>)> {
    let xs = critical_points(g, mu, split)?;
    let fake = fake_g(g, mu, split);
    let mut members = Vec::new();
    for (pos, x) in xs.iter().enumerate() {
        let p = StrategyProfile::new(MixedStrategy(x.clone()), split.column);
        if oracle.query_sse(PHASE_CRITICAL, &fake, &p)? {
            members.push(pos);
        }
    }
    Ok((members, xs))
}

/// Tunes `g` until every critical point is an SSE with the target, then reads off the direction.
pub fn direction_from_cover<O: Oracle + ?Sized>(
    oracle: &mut O,
    mu: &Matrix,
    split: &ColumnSplit,
    bits: u64,
) -> Result<Vec<Q>> {
    let m = mu.len();
    let k = split.low.len();
    let mut g = vec![Q::one(); k];
    let mut advances = 0usize;
    loop {
        let (members, xs) = sse_members(oracle, &g, mu, split)?;
        if members.len() == k {
            let mut a = vec![Q::zero(); m];
            for (pos, &r) in split.low.iter().enumerate() {
                a[r] = -xs[pos][r].recip();
            }
            return Ok(a);
        }
        if members.is_empty() {
            for v in g.iter_mut() {
                *v *= int(2);
            }
            if g.iter().any(|v| bit_size(v) > bits) {
                return Err(Error::BoundExceeded(format!(
                    "doubling for column {} passed {bits} bits",
                    split.column
                )));
            }
            continue;
        }
        advances += 1;
        if advances > k {
            return Err(assert_fail(PHASE_CRITICAL, "more advances than low rows"));
        }
        let pos = (0..k).find(|p| !members.contains(p)).expect("some row is missing");
        let anchor = members[0];
        let current = g[pos].clone();
        let g_star = stern_brocot_find(
            |p| {
                if *p <= current {
                    return Ok(Ordering::Greater);
                }
                let mut trial = g.clone();
                trial[pos] = p.clone();
                let xs = critical_points(&trial, mu, split)?;
                let fake = fake_g(&trial, mu, split);
                let mut ask = |x: &Vec<Q>| {
                    let prof = StrategyProfile::new(MixedStrategy(x.clone()), split.column);
                    oracle.query_sse(PHASE_CRITICAL, &fake, &prof)
                };
                let new = ask(&xs[pos])?;
                let old = ask(&xs[anchor])?;
                match (old, new) {
                    (true, true) => Ok(Ordering::Equal),
                    (true, false) => Ok(Ordering::Greater),
                    (false, true) => Ok(Ordering::Less),
                    (false, false) => Err(assert_fail(
                        PHASE_CRITICAL,
                        format!("no critical point is an SSE at g = {p}"),
                    )),
                }
            },
            bits,
        )?;
        g[pos] = g_star;
    }
}

/// Learns every column, non-minimal-maximin columns first (their covers need no directions).
pub fn learn_gradients<O: Oracle + ?Sized>(
    oracle: &mut O,
    table: &RelationTable,
    bits: u64,
) -> Result<GradientModel> {
    let (m, n) = oracle.shape();
    let s_star = table.argmin_maximin();
    let mut directions: Vec<Option<Vec<Q>>> = vec![None; n];
    let mut out: Vec<Option<ColumnGradient>> = vec![None; n];
    let order: Vec<usize> = (0..n)
        .filter(|j| !s_star.contains(j))
        .chain(s_star.iter().copied())
        .collect();
    for t in order {
        let split = ColumnSplit::new(m, t, table.best_rows(t));
        let result = if !s_star.contains(&t) {
            if split.low.is_empty() {
                ColumnGradient::Direction(vec![Q::zero(); m])
            } else {
                let ell = s_star[0];
                let cover = make_proper_cover(CoverMatrix {
                    mu: dominant_matrix(m, n, ell),
                    covered: vec![t],
                    proper: false,
                });
                ColumnGradient::Direction(direction_from_cover(oracle, &cover.mu, &split, bits)?)
            }
        } else if out.iter().flatten().any(|c| *c == ColumnGradient::MaximinCoincides) {
            // All minimal columns share one maximin value, already certified to be the global one.
            ColumnGradient::MaximinCoincides
        } else {
            for j in (0..n).filter(|j| !s_star.contains(j)) {
                if directions[j].is_none() {
                    return Err(assert_fail(PHASE_COVER, format!("column {j} not learned yet")));
                }
            }
            let base = dominant_matrix(m, n, t);
            let region = support_constraints(m, table.best_rows(t));
            let q: Vec<usize> = s_star.iter().copied().filter(|&j| j != t).collect();
            let ctx = CoverContext {
                covered: &[t],
                q: &q,
                excluded: &[],
                directions: &directions,
                best_rows: &table.best_rows,
                base: &base,
                region: &region,
                bits,
                phase: PHASE_COVER,
            };
            match compute_cover(oracle, &ctx)? {
                None => ColumnGradient::MaximinCoincides,
                Some(_) if split.low.is_empty() => ColumnGradient::Direction(vec![Q::zero(); m]),
                Some(cover) => {
                    ColumnGradient::Direction(direction_from_cover(oracle, &cover.mu, &split, bits)?)
                }
            }
        };
        debug!("column {t}: {result:?}");
        if let ColumnGradient::Direction(a) = &result {
            directions[t] = Some(a.clone());
        }
        out[t] = Some(result);
    }
    Ok(GradientModel {
        columns: out.into_iter().map(|c| c.expect("every column visited")).collect(),
    })
}

/// The `(γ, β)` with `γ·a_i + β = column_i` for all rows, if one exists with `γ > 0`.
/// A zero direction matches exactly the constant columns (with `γ = 1`).
pub fn affine_fit(a: &[Q], column: &[Q]) -> Option<(Q, Q)> {
    let rows: Vec<usize> = (0..a.len()).collect();
    let pair = rows
        .iter()
        .flat_map(|&p| rows.iter().map(move |&q| (p, q)))
        .find(|&(p, q)| a[p] != a[q]);
    let (gamma, beta) = match pair {
        None => (Q::one(), column[0].clone() - &a[0]),
        Some((p, q)) => {
            let gamma = (&column[p] - &column[q]) / (&a[p] - &a[q]);
            let beta = &column[p] - &gamma * &a[p];
            (gamma, beta)
        }
    };
    let fits = a
        .iter()
        .zip(column)
        .all(|(ai, ci)| &gamma * ai + &beta == *ci);
    (fits && gamma.is_positive()).then_some((gamma, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{frac, int_matrix, ints};
    use crate::game::fixtures::{g1, g3};
    use crate::game::{column, full_maximin_value, is_cover, is_proper_cover, maximin_value, Game};
    use crate::harness::gen::{generate_family, Family};
    use crate::oracle::{OracleMode, OracleSession};

    fn session(g: &Game) -> OracleSession {
        OracleSession::new(g.clone(), OracleMode::PayoffOnly).unwrap()
    }

    fn learn(g: &Game) -> GradientModel {
        let mut s = session(g);
        let t = RelationTable::learn(&mut s).unwrap();
        learn_gradients(&mut s, &t, 64 + 64).unwrap()
    }

    #[test]
    fn proper_cover_of_zero_sum_fixture() {
        let neg = int_matrix(&[&[-4, -1], &[-2, -3]]);
        let c = make_proper_cover(CoverMatrix {
            mu: neg.clone(),
            covered: vec![0],
            proper: false,
        });
        assert!(c.proper);
        assert_eq!(c.mu, int_matrix(&[&[-4, -1], &[-4, -3]]));
        let again = make_proper_cover(c.clone());
        assert_eq!(again.mu, c.mu);
        assert!(is_proper_cover(&g1().leader, &c.mu, &[0]).unwrap());
    }

    #[test]
    fn fixture_column_directions_are_affine() {
        let g = g1();
        let model = learn(&g);
        for j in 0..2 {
            let a = model.direction(j).expect("fixture columns have directions");
            assert!(affine_fit(a, &column(&g.leader, j)).is_some(), "column {j}: {a:?}");
        }
    }

    #[test]
    fn constant_column_gets_zero_direction() {
        let g = Game::new(
            int_matrix(&[&[5, 0], &[5, 2]]),
            int_matrix(&[&[0, 1], &[1, 0]]),
        )
        .unwrap();
        let model = learn(&g);
        assert_eq!(model.direction(0), Some(&ints(&[0, 0])[..]));
    }

    #[test]
    fn coinciding_maximin_is_certified() {
        // Row 0 guarantees 1 against both columns; column 1 tops out at 1.
        let g = Game::new(
            int_matrix(&[&[3, 1], &[0, -2]]),
            int_matrix(&[&[0, 0], &[0, 0]]),
        )
        .unwrap();
        assert_eq!(
            maximin_value(&g.leader, &[1]).unwrap(),
            full_maximin_value(&g.leader).unwrap()
        );
        let model = learn(&g);
        assert_eq!(model.columns[1], ColumnGradient::MaximinCoincides);
        assert!(model.direction(0).is_some());
    }

    #[test]
    fn single_column_game_coincides() {
        let g = Game::new(int_matrix(&[&[1], &[2]]), int_matrix(&[&[0], &[0]])).unwrap();
        assert_eq!(learn(&g).columns, vec![ColumnGradient::MaximinCoincides]);
    }

    #[test]
    fn critical_points_on_single_low_row() {
        // Column 0 of the first fixture: row 1 is low. Dominant cover via column 1.
        let mu = make_proper_cover(CoverMatrix {
            mu: dominant_matrix(2, 2, 1),
            covered: vec![0],
            proper: false,
        })
        .mu;
        let split = ColumnSplit::new(2, 0, &[0]);
        let xs = critical_points(&[Q::one()], &mu, &split).unwrap();
        // Region for column 0: -2·x_0 + x_1 ≥ 0, so x_1 ≥ 2·x_0.
        assert_eq!(xs, vec![vec![frac(1, 3), frac(2, 3)]]);
        let doubled = critical_points(&[int(2)], &mu, &split).unwrap();
        assert_eq!(doubled, vec![vec![frac(1, 2), frac(1, 2)]]);
    }

    #[test]
    fn boundary_point_law_on_generated_games() {
        use crate::game::payoff;
        for seed in 0..30u64 {
            let g = generate_family(seed, 3, 3, 5, Family::Random);
            let t = RelationTable::from_leader(&g.leader);
            let s_star = t.argmin_maximin();
            for col in (0..g.n).filter(|c| !s_star.contains(c)) {
                let split = ColumnSplit::new(g.m, col, t.best_rows(col));
                if split.low.is_empty() {
                    continue;
                }
                let mu = make_proper_cover(CoverMatrix {
                    mu: dominant_matrix(g.m, g.n, s_star[0]),
                    covered: vec![col],
                    proper: false,
                })
                .mu;
                let gv: Vec<Q> = (0..split.low.len()).map(|i| frac(i as i64 + 1, 2)).collect();
                let xs = critical_points(&gv, &mu, &split).unwrap();
                let fake = fake_g(&gv, &mu, &split);
                let region_max = on_simplex::value(
                    &column(&g.leader, col),
                    Sense::Max,
                    &br_region(&fake, col),
                )
                .unwrap()
                .unwrap();
                let crit_max = xs.iter().map(|x| payoff(&g.leader, x, col)).max().unwrap();
                assert_eq!(region_max, crit_max, "seed {seed} column {col}");
            }
        }
    }

    #[test]
    fn learned_directions_match_on_generated_games() {
        for seed in 0..24u64 {
            let fam = Family::ALL[seed as usize % 4];
            let g = generate_family(seed, 2 + seed as usize % 3, 1 + seed as usize % 4, 5, fam);
            let model = learn(&g);
            let full = full_maximin_value(&g.leader).unwrap();
            for j in 0..g.n {
                let single = maximin_value(&g.leader, &[j]).unwrap();
                match &model.columns[j] {
                    ColumnGradient::Direction(a) => {
                        assert!(single > full, "seed {seed} column {j} should coincide");
                        assert!(affine_fit(a, &column(&g.leader, j)).is_some(), "seed {seed} col {j}");
                    }
                    ColumnGradient::MaximinCoincides => assert_eq!(single, full, "seed {seed}"),
                }
            }
        }
    }

    #[test]
    fn covers_of_singletons_are_sound_and_complete() {
        for seed in 0..20u64 {
            let g = generate_family(seed + 100, 3, 3, 5, Family::ALL[seed as usize % 4]);
            let mut s = session(&g);
            let table = RelationTable::learn(&mut s).unwrap();
            let model = learn_gradients(&mut s, &table, 128).unwrap();
            let s_star = table.argmin_maximin();
            let directions: Vec<Option<Vec<Q>>> =
                model.columns.iter().map(|c| c.direction().map(<[Q]>::to_vec)).collect();
            for &t in &s_star {
                let base = dominant_matrix(g.m, g.n, t);
                let region = support_constraints(g.m, table.best_rows(t));
                let q: Vec<usize> = s_star.iter().copied().filter(|&j| j != t).collect();
                let ctx = CoverContext {
                    covered: &[t],
                    q: &q,
                    excluded: &[],
                    directions: &directions,
                    best_rows: &table.best_rows,
                    base: &base,
                    region: &region,
                    bits: 128,
                    phase: "test",
                };
                let gap = maximin_value(&g.leader, &[t]).unwrap() > full_maximin_value(&g.leader).unwrap();
                match compute_cover(&mut s, &ctx).unwrap() {
                    Some(c) => {
                        assert!(gap, "seed {seed}");
                        assert!(is_proper_cover(&g.leader, &c.mu, &[t]).unwrap());
                        assert!(is_cover(&g.leader, &c.mu, &[t]).unwrap());
                    }
                    None => assert!(!gap, "seed {seed}"),
                }
            }
        }
    }

    #[test]
    fn three_action_fixture() {
        let g = g3();
        let model = learn(&g);
        let full = full_maximin_value(&g.leader).unwrap();
        for j in 0..3 {
            if let Some(a) = model.direction(j) {
                assert!(affine_fit(a, &column(&g.leader, j)).is_some());
            } else {
                assert_eq!(maximin_value(&g.leader, &[j]).unwrap(), full);
            }
        }
    }

    #[test]
    fn affine_fit_rejects_reversed_direction() {
        assert!(affine_fit(&ints(&[1, 0]), &ints(&[4, 2])).is_some());
        assert!(affine_fit(&ints(&[-1, 0]), &ints(&[4, 2])).is_none());
        assert!(affine_fit(&ints(&[0, 0]), &ints(&[3, 3])).is_some());
        assert!(affine_fit(&ints(&[0, 0]), &ints(&[3, 4])).is_none());
    }
}
