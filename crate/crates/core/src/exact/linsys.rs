//! Small exact linear systems.

use num_traits::Zero;

use super::rational::Q;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solve2 {
    Unique(Q, Q),
    Degenerate,
}

/// Solves `a · (u, v) = b` for a 2×2 matrix `a`.
pub fn solve_linear_system_2x2(a: [[Q; 2]; 2], b: [Q; 2]) -> Solve2 {
    let det = &a[0][0] * &a[1][1] - &a[0][1] * &a[1][0];
    if det.is_zero() {
        return Solve2::Degenerate;
    }
    let u = (&b[0] * &a[1][1] - &a[0][1] * &b[1]) / &det;
    let v = (&a[0][0] * &b[1] - &b[0] * &a[1][0]) / &det;
    Solve2::Unique(u, v)
}

/// Row-reduces `[a | b]` in place; returns the pivot column of each pivot row.
fn reduce(rows: &mut [Vec<Q>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&k| !rows[k][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            *v *= &inv;
        }
        let prow = rows[r].clone();
        for (k, row) in rows.iter_mut().enumerate() {
            if k != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (v, pv) in row.iter_mut().zip(&prow) {
                    if !pv.is_zero() {
                        *v -= &f * pv;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

/// Unique solution of a (possibly overdetermined) system, or `None` when it is
/// inconsistent or underdetermined.
pub fn solve_unique(a: &[Vec<Q>], b: &[Q], n: usize) -> Option<Vec<Q>> {
    let mut rows: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .map(|(r, v)| {
            let mut row = r.clone();
            row.push(v.clone());
            row
        })
        .collect();
    let pivots = reduce(&mut rows, n);
    if pivots.len() < n {
        return None;
    }
    if rows[n..].iter().any(|r| !r[n].is_zero()) {
        return None;
    }
    Some((0..n).map(|i| rows[i][n].clone()).collect())
}

pub fn rank(a: &[Vec<Q>], n: usize) -> usize {
    let mut rows = a.to_vec();
    reduce(&mut rows, n).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{int, ints};

    #[test]
    fn two_by_two_unique() {
        // u - v = 0, 2u - v = 1
        let s = solve_linear_system_2x2([[int(1), int(-1)], [int(2), int(-1)]], [int(0), int(1)]);
        assert_eq!(s, Solve2::Unique(int(1), int(1)));
    }

    #[test]
    fn two_by_two_parallel_is_degenerate() {
        let s = solve_linear_system_2x2([[int(1), int(2)], [int(2), int(4)]], [int(1), int(3)]);
        assert_eq!(s, Solve2::Degenerate);
    }

    #[test]
    fn overdetermined_consistent_and_not() {
        let a = vec![ints(&[1, 0]), ints(&[0, 1]), ints(&[1, 1])];
        assert_eq!(solve_unique(&a, &ints(&[2, 3, 5]), 2), Some(ints(&[2, 3])));
        assert_eq!(solve_unique(&a, &ints(&[2, 3, 6]), 2), None);
        assert_eq!(rank(&a, 2), 2);
    }
}
