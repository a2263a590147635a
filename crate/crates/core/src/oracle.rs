//! The query boundary between learners and the hidden game.
//!
//! Learners only ever see the [`Oracle`] trait. [`OracleSession`] owns the true game, answers
//! queries against it and keeps an append-only ledger.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exact::lp::{on_simplex, Constraint, LpResult, Rel, Sense};
use crate::exact::rational::{format_q, Q};
use crate::game::types::check_matrix;
use crate::game::{br_region, column, is_sse, Game, Matrix, MixedStrategy, StrategyProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    PayoffOnly,
    BrCorrespondence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum QueryKind {
    Sse,
    Er,
    Brc,
}

/// One polyhedral piece of a best-response correspondence: on these points (within the simplex)
/// `column` is a best response. A column's region is the union of its pieces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrPiece {
    pub column: usize,
    pub constraints: Vec<Constraint>,
}

impl BrPiece {
    pub fn new(column: usize, constraints: Vec<Constraint>) -> Self {
        BrPiece { column, constraints }
    }
}

/// Pieces induced by an ordinary follower matrix, one per column.
pub fn pieces_from_matrix(follower: &Matrix) -> Vec<BrPiece> {
    let n = follower.first().map_or(0, |r| r.len());
    (0..n).map(|j| BrPiece::new(j, br_region(follower, j))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub seq: u64,
    pub kind: QueryKind,
    pub phase: String,
    pub digest: String,
    pub answer: bool,
    /// Underlying SSE evaluations behind this entry.
    pub sse_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedgerReport {
    pub total: u64,
    pub per_phase: BTreeMap<String, u64>,
    pub per_kind: BTreeMap<String, u64>,
    pub sse_total: u64,
    /// Entries whose payload digest repeats an earlier one of the same kind.
    pub repeated: u64,
    pub wall_time_ms: u64,
}

/// What a learner may ask. `shape` exposes only the public action counts.
pub trait Oracle {
    fn shape(&self) -> (usize, usize);

    fn query_sse(&mut self, phase: &str, fake: &Matrix, profile: &StrategyProfile) -> Result<bool>;

    /// Whether `j` is an SSE response under `fake`, given the direction `a_j` of the leader's
    /// column `j`. An empty best-response region answers `false` without a ledger entry.
    fn query_er(&mut self, phase: &str, fake: &Matrix, j: usize, a_j: &[Q]) -> Result<bool>;

    fn query_br_correspondence(
        &mut self,
        phase: &str,
        pieces: &[BrPiece],
        profile: &StrategyProfile,
    ) -> Result<bool>;

    fn ledger_report(&self) -> QueryLedgerReport;
}

pub struct OracleSession {
    game: Game,
    mode: OracleMode,
    ledger: Vec<LedgerEntry>,
    keep_payloads: bool,
    started: Instant,
}

const COVER_NODE_CAP: usize = 200_000;

impl OracleSession {
    pub fn new(game: Game, mode: OracleMode) -> Result<Self> {
        game.validate()?;
        Ok(OracleSession {
            game,
            mode,
            ledger: Vec::new(),
            keep_payloads: false,
            started: Instant::now(),
        })
    }

    /// Store full query payloads in the ledger, not just digests.
    pub fn with_payloads(mut self, keep: bool) -> Self {
        self.keep_payloads = keep;
        self
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    pub fn transcript_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.ledger {
            out.push_str(&serde_json::to_string(e).expect("ledger entries serialize"));
            out.push('\n');
        }
        out
    }

    fn record(&mut self, kind: QueryKind, phase: &str, payload: serde_json::Value, answer: bool, sse: u64) {
        let digest = hex::encode(Sha256::digest(payload.to_string().as_bytes()));
        self.ledger.push(LedgerEntry {
            seq: self.ledger.len() as u64,
            kind,
            phase: phase.to_string(),
            digest,
            answer,
            sse_count: sse,
            payload: self.keep_payloads.then_some(payload),
        });
    }

    fn check_fake(&self, fake: &Matrix) -> Result<()> {
        check_matrix(fake, self.game.m, self.game.n, "fake follower matrix")
            .map_err(|e| Error::MalformedQuery(e.to_string()))
    }

    fn sse_under(&self, fake: &Matrix, profile: &StrategyProfile) -> Result<bool> {
        is_sse(&self.game.with_follower(fake.clone())?, profile)
    }

    fn brc_answer(&self, pieces: &[BrPiece], profile: &StrategyProfile) -> Result<bool> {
        let x = profile.x();
        let j = profile.response;
        if !pieces
            .iter()
            .any(|p| p.column == j && p.constraints.iter().all(|c| c.holds(x)))
        {
            return Ok(false);
        }
        let v = crate::game::payoff(&self.game.leader, x, j);
        for p in pieces {
            if let Some(best) =
                on_simplex::value(&column(&self.game.leader, p.column), Sense::Max, &p.constraints)?
            {
                if best > v {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn mat_json(m: &Matrix) -> serde_json::Value {
    m.iter()
        .map(|r| r.iter().map(format_q).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .into()
}

fn vec_json(v: &[Q]) -> serde_json::Value {
    v.iter().map(format_q).collect::<Vec<_>>().into()
}

fn constraint_json(c: &Constraint) -> serde_json::Value {
    let rel = match c.rel {
        Rel::Le => "<=",
        Rel::Eq => "=",
        Rel::Ge => ">=",
    };
    serde_json::json!({"coeffs": vec_json(&c.coeffs), "rel": rel, "rhs": format_q(&c.rhs)})
}

/// Whether some point of the simplex lies outside every piece.
fn leaves_gap(m: usize, pieces: &[BrPiece]) -> Result<bool> {
    // Each strict row `a·x < b` is stored as `(a, b)`.
    fn violations(c: &Constraint) -> Vec<(Vec<Q>, Q)> {
        let neg = || (c.coeffs.iter().map(|a| -a).collect::<Vec<_>>(), -&c.rhs);
        match c.rel {
            Rel::Ge => vec![(c.coeffs.clone(), c.rhs.clone())],
            Rel::Le => vec![neg()],
            Rel::Eq => vec![(c.coeffs.clone(), c.rhs.clone()), neg()],
        }
    }
    fn strictly_feasible(m: usize, rows: &[(Vec<Q>, Q)]) -> Result<bool> {
        if rows.is_empty() {
            return Ok(true);
        }
        // max s subject to a·x + s ≤ b, s ≤ 1, over the simplex with s free.
        let mut cons = vec![Constraint::eq(
            (0..=m).map(|i| if i < m { Q::one() } else { Q::zero() }).collect(),
            Q::one(),
        )];
        for (a, b) in rows {
            let mut c = a.clone();
            c.push(Q::one());
            cons.push(Constraint::le(c, b.clone()));
        }
        let mut obj = vec![Q::zero(); m + 1];
        obj[m] = Q::one();
        cons.push(Constraint::le(obj.clone(), Q::one()));
        let mut nonneg = vec![true; m + 1];
        nonneg[m] = false;
        Ok(match crate::exact::lp::optimize(&obj, Sense::Max, &cons, &nonneg)? {
            LpResult::Optimal { value, .. } => value.is_positive(),
            _ => false,
        })
    }
    fn dfs(
        m: usize,
        pieces: &[BrPiece],
        idx: usize,
        rows: &mut Vec<(Vec<Q>, Q)>,
        nodes: &mut usize,
    ) -> Result<bool> {
        *nodes += 1;
        if *nodes > COVER_NODE_CAP {
            return Err(Error::MalformedQuery("covering check exceeded its search cap".into()));
        }
        if !strictly_feasible(m, rows)? {
            return Ok(false);
        }
        if idx == pieces.len() {
            return Ok(true);
        }
        for c in &pieces[idx].constraints {
            for v in violations(c) {
                rows.push(v);
                let found = dfs(m, pieces, idx + 1, rows, nodes)?;
                rows.pop();
                if found {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
    dfs(m, pieces, 0, &mut Vec::new(), &mut 0)
}

impl Oracle for OracleSession {
    fn shape(&self) -> (usize, usize) {
        (self.game.m, self.game.n)
    }

    fn query_sse(&mut self, phase: &str, fake: &Matrix, profile: &StrategyProfile) -> Result<bool> {
        self.check_fake(fake)?;
        profile
            .check(self.game.m, self.game.n)
            .map_err(|e| Error::MalformedQuery(e.to_string()))?;
        let answer = self.sse_under(fake, profile)?;
        let payload = serde_json::json!({
            "fake": mat_json(fake),
            "x": vec_json(profile.x()),
            "j": profile.response,
        });
        self.record(QueryKind::Sse, phase, payload, answer, 1);
        Ok(answer)
    }

    fn query_er(&mut self, phase: &str, fake: &Matrix, j: usize, a_j: &[Q]) -> Result<bool> {
        self.check_fake(fake)?;
        if j >= self.game.n || a_j.len() != self.game.m {
            return Err(Error::MalformedQuery(format!(
                "response {j} or direction of length {} does not fit a {}x{} game",
                a_j.len(),
                self.game.m,
                self.game.n
            )));
        }
        let Some((_, x)) = on_simplex::lex_optimum(a_j, Sense::Max, &br_region(fake, j))? else {
            return Ok(false);
        };
        let profile = StrategyProfile::new(MixedStrategy(x), j);
        let answer = self.sse_under(fake, &profile)?;
        let payload = serde_json::json!({"fake": mat_json(fake), "j": j, "a": vec_json(a_j)});
        self.record(QueryKind::Er, phase, payload, answer, 1);
        Ok(answer)
    }

    fn query_br_correspondence(
        &mut self,
        phase: &str,
        pieces: &[BrPiece],
        profile: &StrategyProfile,
    ) -> Result<bool> {
        if self.mode != OracleMode::BrCorrespondence {
            return Err(Error::Rejected(
                "best-response correspondence queries are disabled in payoff-only mode".into(),
            ));
        }
        let (m, n) = (self.game.m, self.game.n);
        profile
            .check(m, n)
            .map_err(|e| Error::MalformedQuery(e.to_string()))?;
        for p in pieces {
            if p.column >= n || p.constraints.iter().any(|c| c.coeffs.len() != m) {
                return Err(Error::MalformedQuery("piece does not fit the game".into()));
            }
        }
        if leaves_gap(m, pieces)? {
            return Err(Error::MalformedQuery(
                "regions do not cover the strategy simplex".into(),
            ));
        }
        let answer = self.brc_answer(pieces, profile)?;
        let payload = serde_json::json!({
            "pieces": pieces.iter().map(|p| serde_json::json!({
                "column": p.column,
                "constraints": p.constraints.iter().map(constraint_json).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "x": vec_json(profile.x()),
            "j": profile.response,
        });
        self.record(QueryKind::Brc, phase, payload, answer, 1);
        Ok(answer)
    }

    fn ledger_report(&self) -> QueryLedgerReport {
        let mut per_phase = BTreeMap::new();
        let mut per_kind = BTreeMap::new();
        let mut seen: HashSet<(QueryKind, &str)> = HashSet::new();
        let mut repeated = 0;
        for e in &self.ledger {
            *per_phase.entry(e.phase.clone()).or_insert(0) += 1;
            let kind = serde_json::to_value(e.kind).expect("kind serializes");
            *per_kind
                .entry(kind.as_str().unwrap_or_default().to_string())
                .or_insert(0) += 1;
            if !seen.insert((e.kind, e.digest.as_str())) {
                repeated += 1;
            }
        }
        QueryLedgerReport {
            total: self.ledger.len() as u64,
            per_phase,
            per_kind,
            sse_total: self.ledger.iter().map(|e| e.sse_count).sum(),
            repeated,
            wall_time_ms: self.started.elapsed().as_millis() as u64,
        }
    }
}

impl QueryLedgerReport {
    pub fn empty() -> Self {
        QueryLedgerReport {
            total: 0,
            per_phase: BTreeMap::new(),
            per_kind: BTreeMap::new(),
            sse_total: 0,
            repeated: 0,
            wall_time_ms: 0,
        }
    }

    pub fn phase(&self, name: &str) -> u64 {
        self.per_phase.get(name).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{int_matrix, ints};
    use crate::game::fixtures::g1;
    use crate::game::{compute_sse, MixedStrategy};

    fn session(mode: OracleMode) -> OracleSession {
        OracleSession::new(g1(), mode).unwrap()
    }

    fn prof(x: &[i64], j: usize) -> StrategyProfile {
        StrategyProfile::new(MixedStrategy(ints(x)), j)
    }

    #[test]
    fn fresh_session_is_empty() {
        let s = session(OracleMode::PayoffOnly);
        let r = s.ledger_report();
        assert_eq!(r.total, 0);
        assert!(r.per_phase.is_empty());
        assert!(s.transcript_jsonl().is_empty());
    }

    #[test]
    fn dominant_fake_on_fixture() {
        let mut s = session(OracleMode::PayoffOnly);
        let fake = int_matrix(&[&[0, -1], &[0, -1]]);
        assert!(s.query_sse("t", &fake, &prof(&[1, 0], 0)).unwrap());
        assert!(!s.query_sse("t", &fake, &prof(&[0, 1], 0)).unwrap());
        let r = s.ledger_report();
        assert_eq!((r.total, r.phase("t"), r.sse_total), (2, 2, 2));
    }

    #[test]
    fn truthful_round_trip() {
        let g = g1();
        let (p, _) = compute_sse(&g).unwrap();
        let mut s = session(OracleMode::PayoffOnly);
        assert!(s.query_sse("t", &g.follower, &p).unwrap());
    }

    #[test]
    fn malformed_queries_are_not_counted() {
        let mut s = session(OracleMode::PayoffOnly);
        let bad = int_matrix(&[&[0, -1, 2]]);
        assert!(matches!(
            s.query_sse("t", &bad, &prof(&[1, 0], 0)),
            Err(Error::MalformedQuery(_))
        ));
        assert_eq!(s.ledger_report().total, 0);
    }

    #[test]
    fn er_on_dominant_column_and_empty_region() {
        let mut s = session(OracleMode::PayoffOnly);
        let fake = int_matrix(&[&[0, -1], &[0, -1]]);
        assert!(s.query_er("er", &fake, 0, &ints(&[4, 2])).unwrap());
        // Column 1 is never a best response: no query consumed.
        assert!(!s.query_er("er", &fake, 1, &ints(&[1, 3])).unwrap());
        let r = s.ledger_report();
        assert_eq!(r.total, 1);
        assert_eq!(r.per_kind.get("ER"), Some(&1));
    }

    #[test]
    fn brc_rejected_in_payoff_mode() {
        let mut s = session(OracleMode::PayoffOnly);
        let pieces = pieces_from_matrix(&g1().follower);
        assert!(matches!(
            s.query_br_correspondence("b", &pieces, &prof(&[1, 0], 0)),
            Err(Error::Rejected(_))
        ));
    }

    #[test]
    fn brc_matches_matrix_queries() {
        let g = g1();
        let mut s = session(OracleMode::BrCorrespondence);
        let fakes = [
            g.follower.clone(),
            int_matrix(&[&[0, -1], &[0, -1]]),
            int_matrix(&[&[2, 0], &[-1, 1]]),
        ];
        let xs = [ints(&[1, 0]), ints(&[0, 1]), vec![crate::exact::rational::frac(1, 2); 2]];
        for f in &fakes {
            let pieces = pieces_from_matrix(f);
            for x in &xs {
                for j in 0..2 {
                    let p = StrategyProfile::new(MixedStrategy(x.clone()), j);
                    let a = s.query_br_correspondence("b", &pieces, &p).unwrap();
                    let b = s.query_sse("s", f, &p).unwrap();
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn brc_non_covering_is_malformed() {
        let mut s = session(OracleMode::BrCorrespondence);
        let half = |j: usize, rel: Rel| {
            BrPiece::new(j, vec![Constraint::new(ints(&[1, 0]), rel, crate::exact::rational::frac(1, 2))])
        };
        let gap = vec![
            BrPiece::new(0, vec![Constraint::ge(ints(&[1, 0]), crate::exact::rational::frac(2, 3))]),
            half(1, Rel::Le),
        ];
        assert!(matches!(
            s.query_br_correspondence("b", &gap, &prof(&[1, 0], 0)),
            Err(Error::MalformedQuery(_))
        ));
        let tight = vec![half(0, Rel::Ge), half(1, Rel::Le)];
        assert!(s.query_br_correspondence("b", &tight, &prof(&[1, 0], 0)).is_ok());
        assert_eq!(s.ledger_report().total, 1);
    }

    #[test]
    fn determinism_and_digests() {
        let run = || {
            let mut s = session(OracleMode::PayoffOnly);
            let fake = int_matrix(&[&[0, -1], &[1, 2]]);
            for j in 0..2 {
                s.query_sse("p", &fake, &prof(&[0, 1], j)).unwrap();
            }
            s.query_sse("p", &fake, &prof(&[0, 1], 0)).unwrap();
            (s.ledger().to_vec(), s.ledger_report().repeated)
        };
        let (a, ra) = run();
        let (b, _) = run();
        assert_eq!(a, b);
        assert_eq!(ra, 1);
        assert_eq!(a[0].digest.len(), 64);
    }

    #[test]
    fn transcript_lines_have_expected_keys() {
        let mut s = session(OracleMode::PayoffOnly);
        s.query_sse("warmup", &g1().follower, &prof(&[1, 0], 0)).unwrap();
        let line = s.transcript_jsonl();
        let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        for k in ["seq", "kind", "phase", "digest", "answer"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert_eq!(v["kind"], "SSE");
    }
}
