//! Brute-force vertex enumeration for small polytopes inside the simplex.

use num_traits::One;

use super::linsys::{rank, solve_unique};
use super::lp::{Constraint, Rel};
use super::rational::Q;

fn subsets(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            visit(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, visit);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), &mut visit);
}

/// Vertices of `{x ∈ Δ_m : constraints}`, deduplicated and sorted lexicographically.
pub fn enumerate_polytope_vertices(m: usize, constraints: &[Constraint]) -> Vec<Vec<Q>> {
    let mut eqs: Vec<Vec<Q>> = vec![vec![Q::one(); m]];
    let mut eq_rhs: Vec<Q> = vec![Q::one()];
    let mut ineqs: Vec<(Vec<Q>, Q)> = Vec::new();
    for i in 0..m {
        ineqs.push((super::rational::unit(m, i), Q::from_integer(0.into())));
    }
    for c in constraints {
        match c.rel {
            Rel::Eq => {
                eqs.push(c.coeffs.clone());
                eq_rhs.push(c.rhs.clone());
            }
            _ => ineqs.push((c.coeffs.clone(), c.rhs.clone())),
        }
    }
    let r = rank(&eqs, m);
    let need = m.saturating_sub(r);
    let mut out: Vec<Vec<Q>> = Vec::new();
    subsets(ineqs.len(), need, |pick| {
        let mut a = eqs.clone();
        let mut b = eq_rhs.clone();
        for &k in pick {
            a.push(ineqs[k].0.clone());
            b.push(ineqs[k].1.clone());
        }
        if let Some(x) = solve_unique(&a, &b, m) {
            if x.iter().all(|v| v >= &Q::from_integer(0.into()))
                && constraints.iter().all(|c| c.holds(&x))
            {
                out.push(x);
            }
        }
    });
    out.sort();
    out.dedup();
    out
}
