//! Order facts recoverable with dominant-column probes: each column's best rows, and how every
//! singleton maximin value compares with every leader entry.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::rational::{int, Q};
use crate::game::{Matrix, MixedStrategy, StrategyProfile};
use crate::oracle::Oracle;

pub const PHASE: &str = "warmup";

/// Cached outcome of the warm-up probes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationTable {
    pub m: usize,
    pub n: usize,
    /// `best_rows[j]`: rows maximizing the leader's payoff in column `j`, ascending.
    pub best_rows: Vec<Vec<usize>>,
    /// `entry[j][i][k]`: `M_j` compared with `u(i, k)`.
    #[serde(skip)]
    entry: Vec<Vec<Vec<Ordering>>>,
}

fn dominant_fake(m: usize, n: usize, j: usize) -> Matrix {
    (0..m)
        .map(|_| (0..n).map(|c| if c == j { int(0) } else { int(-1) }).collect())
        .collect()
}

/// Rows in `argmax_i u(i, j)`, using one query per row.
pub fn learn_ij<O: Oracle + ?Sized>(oracle: &mut O, j: usize) -> Result<Vec<usize>> {
    let (m, n) = oracle.shape();
    let fake = dominant_fake(m, n, j);
    let mut rows = Vec::new();
    for i in 0..m {
        let p = StrategyProfile::new(MixedStrategy::pure(m, i), j);
        if oracle.query_sse(PHASE, &fake, &p)? {
            rows.push(i);
        }
    }
    if rows.is_empty() {
        return Err(Error::InternalVerification(format!("column {j} has no best row")));
    }
    Ok(rows)
}

/// `M_j` compared with `u(i, k)`, given the best rows of `j`. At most two queries.
pub fn relation_mj_entry<O: Oracle + ?Sized>(
    oracle: &mut O,
    best_rows_j: &[usize],
    j: usize,
    i: usize,
    k: usize,
) -> Result<Ordering> {
    if j == k {
        return Ok(if best_rows_j.contains(&i) {
            Ordering::Equal
        } else {
            Ordering::Greater
        });
    }
    let (m, n) = oracle.shape();
    let mut fake = dominant_fake(m, n, j);
    fake[i][k] = int(0);
    let at_best = StrategyProfile::new(MixedStrategy::pure(m, best_rows_j[0]), j);
    if !oracle.query_sse(PHASE, &fake, &at_best)? {
        return Ok(Ordering::Less);
    }
    let at_entry = StrategyProfile::new(MixedStrategy::pure(m, i), k);
    Ok(if oracle.query_sse(PHASE, &fake, &at_entry)? {
        Ordering::Equal
    } else {
        Ordering::Greater
    })
}

impl RelationTable {
    /// Runs every probe once: `m` queries per column, then at most two per off-column entry.
    pub fn learn<O: Oracle + ?Sized>(oracle: &mut O) -> Result<Self> {
        let (m, n) = oracle.shape();
        let best_rows = (0..n)
            .map(|j| learn_ij(oracle, j))
            .collect::<Result<Vec<_>>>()?;
        let mut entry = vec![vec![vec![Ordering::Equal; n]; m]; n];
        for j in 0..n {
            for i in 0..m {
                for k in 0..n {
                    entry[j][i][k] = relation_mj_entry(oracle, &best_rows[j], j, i, k)?;
                }
            }
        }
        let t = RelationTable { m, n, best_rows, entry };
        t.check_consistency()?;
        Ok(t)
    }

    /// Table implied by a known leader matrix; used to cross-check learned tables.
    pub fn from_leader(leader: &Matrix) -> Self {
        let (m, n) = crate::game::types::dims(leader);
        let maxes: Vec<Q> = (0..n)
            .map(|j| leader.iter().map(|r| r[j].clone()).max().expect("m >= 1"))
            .collect();
        let best_rows = (0..n)
            .map(|j| (0..m).filter(|&i| leader[i][j] == maxes[j]).collect())
            .collect();
        let entry = (0..n)
            .map(|j| {
                (0..m)
                    .map(|i| (0..n).map(|k| maxes[j].cmp(&leader[i][k])).collect())
                    .collect()
            })
            .collect();
        RelationTable { m, n, best_rows, entry }
    }

    pub fn best_rows(&self, j: usize) -> &[usize] {
        &self.best_rows[j]
    }

    pub fn is_best_row(&self, j: usize, i: usize) -> bool {
        self.best_rows[j].contains(&i)
    }

    /// `M_j` compared with `u(i, k)`.
    pub fn entry(&self, j: usize, i: usize, k: usize) -> Ordering {
        self.entry[j][i][k]
    }

    /// `M_j` compared with `M_k`.
    pub fn cmp_maximin(&self, j: usize, k: usize) -> Ordering {
        self.entry[j][self.best_rows[k][0]][k]
    }

    /// Columns with the smallest singleton maximin value, ascending.
    pub fn argmin_maximin(&self) -> Vec<usize> {
        let mut best = 0;
        for k in 1..self.n {
            if self.cmp_maximin(k, best) == Ordering::Less {
                best = k;
            }
        }
        (0..self.n)
            .filter(|&k| self.cmp_maximin(k, best) == Ordering::Equal)
            .collect()
    }

    /// Whether every entry of column `j` equals its maximum.
    pub fn is_constant_column(&self, j: usize) -> bool {
        self.best_rows[j].len() == self.m
    }

    fn check_consistency(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InternalVerification(what));
        for j in 0..self.n {
            for k in 0..self.n {
                if self.cmp_maximin(j, k) != self.cmp_maximin(k, j).reverse() {
                    return bad(format!("maximin comparison of {j} and {k} is not antisymmetric"));
                }
                for i in 0..self.m {
                    // M_j vs u(i,k) must be consistent with M_j vs M_k when i is a best row of k,
                    // and u(i,k) ≤ M_k always.
                    let via = self.cmp_maximin(j, k);
                    let direct = self.entry(j, i, k);
                    if via == Ordering::Greater && direct != Ordering::Greater {
                        return bad(format!("entry ({i},{k}) exceeds M_{k} < M_{j}"));
                    }
                    if self.is_best_row(k, i) && direct != via {
                        return bad(format!("best row {i} of {k} disagrees with M_{k}"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::int_matrix;
    use crate::game::fixtures::{g1, g3};
    use crate::game::Game;
    use crate::harness::gen::{generate_family, Family};
    use crate::oracle::{OracleMode, OracleSession};

    fn session(g: Game) -> OracleSession {
        OracleSession::new(g, OracleMode::PayoffOnly).unwrap()
    }

    #[test]
    fn best_rows_on_fixture_use_m_queries_each() {
        let mut s = session(g1());
        assert_eq!(learn_ij(&mut s, 0).unwrap(), vec![0]);
        assert_eq!(learn_ij(&mut s, 1).unwrap(), vec![1]);
        assert_eq!(s.ledger_report().total, 4);
    }

    #[test]
    fn constant_column_has_all_rows_best() {
        let g = Game::new(int_matrix(&[&[2, 5], &[2, 1], &[2, 0]]), int_matrix(&[&[0, 0], &[0, 0], &[0, 0]]))
            .unwrap();
        let mut s = session(g);
        assert_eq!(learn_ij(&mut s, 0).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn fixture_relations() {
        let mut s = session(g1());
        let before = s.ledger_report().total;
        assert_eq!(relation_mj_entry(&mut s, &[0], 0, 0, 0).unwrap(), Ordering::Equal);
        assert_eq!(s.ledger_report().total, before);
        assert_eq!(relation_mj_entry(&mut s, &[0], 0, 1, 1).unwrap(), Ordering::Greater);
        assert_eq!(relation_mj_entry(&mut s, &[1], 1, 0, 0).unwrap(), Ordering::Less);
        assert!(s.ledger_report().total - before <= 4);
        let t = RelationTable::learn(&mut session(g1())).unwrap();
        assert_eq!(t.cmp_maximin(0, 1), Ordering::Greater);
        assert_eq!(t.argmin_maximin(), vec![1]);
    }

    #[test]
    fn uniform_payoffs_relate_equal() {
        let g = Game::new(int_matrix(&[&[1, 1], &[1, 1]]), int_matrix(&[&[0, 0], &[0, 0]])).unwrap();
        let t = RelationTable::learn(&mut session(g)).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                assert_eq!(t.cmp_maximin(j, k), Ordering::Equal);
            }
        }
        assert_eq!(t.argmin_maximin(), vec![0, 1]);
    }

    #[test]
    fn learned_table_matches_engine() {
        for seed in 0..40 {
            let fam = Family::ALL[seed as usize % 4];
            let g = generate_family(seed, 1 + seed as usize % 4, 1 + (seed as usize / 4) % 4, 6, fam);
            let mut s = session(g.clone());
            let t = RelationTable::learn(&mut s).unwrap();
            assert_eq!(t, RelationTable::from_leader(&g.leader), "seed {seed}");
            assert_eq!(t.entry, RelationTable::from_leader(&g.leader).entry);
            let (m, n) = (g.m as u64, g.n as u64);
            assert!(s.ledger_report().total <= m * n + 2 * m * n * n);
        }
        let t = RelationTable::learn(&mut session(g3())).unwrap();
        assert_eq!(t, RelationTable::from_leader(&g3().leader));
    }
}
