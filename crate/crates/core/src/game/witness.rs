//! Synthesis of a follower matrix that makes a given inducible profile an SSE.
//!
//! Candidates are tried from cheapest to most general, each checked with `is_sse`:
//! a strictly dominant target column, the boosted zero-sum report, a linear program over
//! target-column and scaling coefficients, and finally an iterative cut loop.

use log::debug;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::lp::{optimize, Constraint, LpResult, Sense};
use crate::exact::rational::{int, Q};
use crate::exact::vertices::enumerate_polytope_vertices;

use super::maximin::full_maximin_value;
use super::sse::{best_response_set, compute_sse, is_sse};
use super::types::{column, payoff, Game, Matrix, StrategyProfile};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessOutcome {
    Witness(Matrix),
    NotInducible,
}

const CUT_BUDGET: usize = 64;

pub fn construct_witness(leader: &Matrix, profile: &StrategyProfile) -> Result<WitnessOutcome> {
    let (m, n) = super::types::dims(leader);
    profile.check(m, n)?;
    let x = profile.x();
    let js = profile.response;
    let target = payoff(leader, x, js);
    if target < full_maximin_value(leader)? {
        return Ok(WitnessOutcome::NotInducible);
    }
    let verify = |u: &Matrix| -> Result<bool> {
        is_sse(&Game::new(leader.clone(), u.clone())?, profile)
    };

    let col = column(leader, js);
    if col.iter().all(|v| v <= &target) {
        let u = dominant(m, n, js);
        if verify(&u)? {
            return Ok(WitnessOutcome::Witness(u));
        }
    }
    let boosted = boosted_zero_sum(leader, x, js);
    if verify(&boosted)? {
        return Ok(WitnessOutcome::Witness(boosted));
    }
    let zero_sum = negated(leader);
    if verify(&zero_sum)? {
        return Ok(WitnessOutcome::Witness(zero_sum));
    }
    let others: Vec<usize> = (0..n).filter(|&l| l != js).collect();
    for t in subsets_by_size(&others) {
        if let Some(u) = scaled_punishment(leader, x, js, &target, &t)? {
            if verify(&u)? {
                return Ok(WitnessOutcome::Witness(u));
            }
            debug!("scaled punishment with {t:?} solved but failed verification");
        }
    }
    if let Some(u) = cut_loop(leader, profile, &target, boosted)? {
        return Ok(WitnessOutcome::Witness(u));
    }
    Err(Error::InternalVerification(format!(
        "no witness found for response {js} at {:?}",
        x.iter().map(crate::exact::rational::format_q).collect::<Vec<_>>()
    )))
}

fn dominant(m: usize, n: usize, j: usize) -> Matrix {
    (0..m)
        .map(|_| (0..n).map(|k| if k == j { int(0) } else { int(-1) }).collect())
        .collect()
}

fn negated(leader: &Matrix) -> Matrix {
    leader.iter().map(|r| r.iter().map(|v| -v).collect()).collect()
}

fn boosted_zero_sum(leader: &Matrix, x: &[Q], js: usize) -> Matrix {
    let pay: Vec<Q> = (0..leader[0].len()).map(|k| payoff(leader, x, k)).collect();
    let boost = &pay[js] - pay.iter().min().expect("n >= 1");
    let mut u = negated(leader);
    for row in &mut u {
        row[js] += &boost;
    }
    u
}

/// Nonempty subsets, largest first, then lexicographic.
fn subsets_by_size(items: &[usize]) -> Vec<Vec<usize>> {
    let k = items.len();
    let mut out: Vec<Vec<usize>> = (1u32..(1u32 << k))
        .map(|mask| {
            (0..k)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| items[b])
                .collect()
        })
        .collect();
    out.sort_by(|a: &Vec<usize>, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    out
}

/// Columns in `t` report `λ_l (V − u_l)`, the target column reports a free linear `h`, and the
/// remaining columns are pushed below everything. An LP maximizes a strictness margin over
/// `(h, λ)`, enforcing on polytope vertices that:
/// the target is a best response at `x`; wherever every column of `t` pays the leader more than
/// `V` the target is the strict best response; and wherever the target pays more than `V`
/// the cheapest column of `t` strictly beats it.
fn scaled_punishment(
    leader: &Matrix,
    x: &[Q],
    js: usize,
    target: &Q,
    t: &[usize],
) -> Result<Option<Matrix>> {
    let m = leader.len();
    let n = leader[0].len();
    let nt = t.len();
    let nv = m + nt + 1;
    let tvar = m + nt;
    let u = |l: usize, v: &[Q]| payoff(leader, v, l);
    let mut cons: Vec<Constraint> = Vec::new();
    let row = |h: &[Q], lam: Option<(usize, Q)>, tc: Q| -> Vec<Q> {
        let mut c = vec![Q::zero(); nv];
        c[..m].clone_from_slice(h);
        if let Some((k, a)) = lam {
            c[m + k] = a;
        }
        c[tvar] = tc;
        c
    };
    let neg = |v: &[Q]| v.iter().map(|a| -a).collect::<Vec<_>>();

    // Target is a best response at x.
    for (k, &l) in t.iter().enumerate() {
        let c = row(x, Some((k, -(target - u(l, x)))), Q::zero());
        cons.push(Constraint::ge(c, Q::zero()));
    }
    // Strict preference for the target where all columns of t exceed V. The closed region only
    // matters when the open one is nonempty; otherwise its vertices would over-constrain.
    let above: Vec<Constraint> = t
        .iter()
        .map(|&l| Constraint::ge(column(leader, l), target.clone()))
        .collect();
    let above_open = strictly_feasible(m, &[], &above)?;
    for v in enumerate_polytope_vertices(m, &above).into_iter().filter(|_| above_open) {
        for (k, &l) in t.iter().enumerate() {
            let ul = u(l, &v);
            let c = row(&v, Some((k, -(target - &ul))), -(ul - target));
            cons.push(Constraint::ge(c, Q::zero()));
        }
    }
    // Where the target exceeds V, the cheapest column of t strictly beats it.
    let cj = column(leader, js);
    for (k, &l) in t.iter().enumerate() {
        let cl = column(leader, l);
        let mut cell = vec![Constraint::ge(cj.clone(), target.clone())];
        for &l2 in t {
            if l2 != l {
                let diff: Vec<Q> = column(leader, l2).iter().zip(&cl).map(|(a, b)| a - b).collect();
                cell.push(Constraint::ge(diff, Q::zero()));
            }
        }
        let strict = [Constraint::ge(cj.clone(), target.clone())];
        if !strictly_feasible(m, &cell[1..], &strict)? {
            continue;
        }
        for v in enumerate_polytope_vertices(m, &cell) {
            let c = row(&neg(&v), Some((k, target - u(l, &v))), -(u(js, &v) - target));
            cons.push(Constraint::ge(c, Q::zero()));
        }
    }
    for k in 0..nt {
        let mut c = vec![Q::zero(); nv];
        c[m + k] = Q::one();
        c[tvar] = -Q::one();
        cons.push(Constraint::ge(c, Q::zero()));
    }
    let mut tc = vec![Q::zero(); nv];
    tc[tvar] = Q::one();
    cons.push(Constraint::le(tc.clone(), Q::one()));
    let mut nonneg = vec![false; nv];
    for k in 0..nt {
        nonneg[m + k] = true;
    }
    let (value, sol) = match optimize(&tc, Sense::Max, &cons, &nonneg)? {
        LpResult::Optimal { value, point } => (value, point),
        _ => return Ok(None),
    };
    if !value.is_positive() {
        return Ok(None);
    }
    let mut out = vec![vec![Q::zero(); n]; m];
    for i in 0..m {
        out[i][js] = sol[i].clone();
        for (k, &l) in t.iter().enumerate() {
            out[i][l] = &sol[m + k] * (target - &leader[i][l]);
        }
    }
    let low = out
        .iter()
        .flat_map(|r| {
            r.iter()
                .enumerate()
                .filter(|(c, _)| *c == js || t.contains(c))
                .map(|(_, v)| v.clone())
        })
        .min()
        .expect("nonempty")
        - Q::one();
    for r in out.iter_mut() {
        for (c, v) in r.iter_mut().enumerate() {
            if c != js && !t.contains(&c) {
                *v = low.clone();
            }
        }
    }
    Ok(Some(out))
}

/// Whether some mixed strategy satisfies `closed` and every constraint of `strict` with slack.
fn strictly_feasible(m: usize, closed: &[Constraint], strict: &[Constraint]) -> Result<bool> {
    let widen = |c: &Constraint, slack: Q| {
        let mut coef = c.coeffs.clone();
        coef.push(slack);
        Constraint::new(coef, c.rel, c.rhs.clone())
    };
    let mut cons: Vec<Constraint> = closed.iter().map(|c| widen(c, Q::zero())).collect();
    // `a·x ≥ b` becomes `a·x − s ≥ b`.
    cons.extend(strict.iter().map(|c| widen(c, -Q::one())));
    let mut simplex = vec![Q::one(); m];
    simplex.push(Q::zero());
    cons.push(Constraint::eq(simplex, Q::one()));
    let mut obj = vec![Q::zero(); m + 1];
    obj[m] = Q::one();
    cons.push(Constraint::le(obj.clone(), Q::one()));
    let mut nonneg = vec![true; m + 1];
    nonneg[m] = false;
    Ok(match optimize(&obj, Sense::Max, &cons, &nonneg)? {
        LpResult::Optimal { value, .. } => value.is_positive(),
        _ => false,
    })
}

/// Repeatedly lowers the column of an offending SSE profile by `u_j − V`, which leaves its value
/// at points where the column pays exactly `V` unchanged.
fn cut_loop(
    leader: &Matrix,
    profile: &StrategyProfile,
    target: &Q,
    mut u: Matrix,
) -> Result<Option<Matrix>> {
    let x = profile.x();
    let js = profile.response;
    let mut kappa = Q::one();
    for _ in 0..CUT_BUDGET {
        let g = Game::new(leader.clone(), u.clone())?;
        if is_sse(&g, profile)? {
            return Ok(Some(u));
        }
        if !best_response_set(&u, x).contains(&js) {
            return Ok(None);
        }
        let (bad, _) = compute_sse(&g)?;
        let jb = bad.response;
        let mut next = u.clone();
        for (i, row) in next.iter_mut().enumerate() {
            row[jb] -= &kappa * (&leader[i][jb] - target);
        }
        if best_response_set(&next, x).contains(&js) {
            u = next;
        } else {
            kappa /= int(2);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{frac, ints};
    use crate::game::fixtures::g1;
    use crate::game::types::MixedStrategy;

    fn profile(x: Vec<Q>, j: usize) -> StrategyProfile {
        StrategyProfile::new(MixedStrategy(x), j)
    }

    #[test]
    fn boundary_profile_of_fixture() {
        let l = g1().leader;
        let p = profile(vec![frac(1, 4), frac(3, 4)], 0);
        match construct_witness(&l, &p).unwrap() {
            WitnessOutcome::Witness(u) => {
                assert!(is_sse(&Game::new(l, u).unwrap(), &p).unwrap())
            }
            WitnessOutcome::NotInducible => panic!("boundary profile is inducible"),
        }
    }

    #[test]
    fn below_maximin_is_not_inducible() {
        let p = profile(ints(&[0, 1]), 0);
        assert_eq!(construct_witness(&g1().leader, &p).unwrap(), WitnessOutcome::NotInducible);
    }

    #[test]
    fn zero_sum_sse_profile_accepted() {
        let l = g1().leader;
        let g = Game::new(l.clone(), negated(&l)).unwrap();
        let (p, _) = compute_sse(&g).unwrap();
        assert!(matches!(construct_witness(&l, &p).unwrap(), WitnessOutcome::Witness(_)));
    }

    #[test]
    fn subsets_order() {
        assert_eq!(
            subsets_by_size(&[1, 3]),
            vec![vec![1, 3], vec![1], vec![3]]
        );
    }
}
