//! Best responses and strong Stackelberg equilibria via one LP per follower column.

use crate::error::Result;
use crate::exact::lp::{on_simplex, Constraint, Sense};
use crate::exact::rational::Q;

use super::types::{column, payoffs, Game, Matrix, MixedStrategy, StrategyProfile};

pub fn best_response_set(follower: &Matrix, x: &[Q]) -> Vec<usize> {
    let p = payoffs(follower, x);
    let best = p.iter().max().cloned();
    p.iter()
        .enumerate()
        .filter(|(_, v)| Some(*v) == best.as_ref())
        .map(|(j, _)| j)
        .collect()
}

/// Constraints (beyond the simplex) describing the leader strategies to which `j` is a best response.
pub fn br_region(follower: &Matrix, j: usize) -> Vec<Constraint> {
    let n = follower.first().map_or(0, |r| r.len());
    (0..n)
        .filter(|&k| k != j)
        .map(|k| {
            let coeffs = follower.iter().map(|r| &r[j] - &r[k]).collect();
            Constraint::ge(coeffs, Q::from_integer(0.into()))
        })
        .collect()
}

/// Leader's best payoff when the follower is held to column `j`; `None` if `j` is never a best response.
pub fn column_value(game: &Game, j: usize) -> Result<Option<Q>> {
    on_simplex::value(
        &column(&game.leader, j),
        Sense::Max,
        &br_region(&game.follower, j),
    )
}

pub fn column_values(game: &Game) -> Result<Vec<Option<Q>>> {
    (0..game.n).map(|j| column_value(game, j)).collect()
}

pub fn sse_value(game: &Game) -> Result<Q> {
    Ok(column_values(game)?
        .into_iter()
        .flatten()
        .max()
        .expect("some column is always a best response"))
}

/// An SSE profile and its leader value; ties go to the lowest column, then the lexicographically
/// smallest optimal strategy.
pub fn compute_sse(game: &Game) -> Result<(StrategyProfile, Q)> {
    let values = column_values(game)?;
    let best = values.iter().flatten().max().cloned().expect("nonempty");
    let j = values
        .iter()
        .position(|v| v.as_ref() == Some(&best))
        .expect("attained");
    let (_, x) = on_simplex::lex_optimum(
        &column(&game.leader, j),
        Sense::Max,
        &br_region(&game.follower, j),
    )?
    .expect("column region is nonempty");
    Ok((StrategyProfile::new(MixedStrategy(x), j), best))
}

pub fn is_sse(game: &Game, profile: &StrategyProfile) -> Result<bool> {
    profile.check(game.m, game.n)?;
    let x = profile.x();
    let j = profile.response;
    if !best_response_set(&game.follower, x).contains(&j) {
        return Ok(false);
    }
    let v = super::types::payoff(&game.leader, x, j);
    for k in 0..game.n {
        if let Some(vk) = column_value(game, k)? {
            if vk > v {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn is_sse_response(game: &Game, j: usize) -> Result<bool> {
    let values = column_values(game)?;
    let best = values.iter().flatten().max();
    Ok(values[j].is_some() && values[j].as_ref() == best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{frac, int, int_matrix, ints};
    use crate::game::fixtures::g1;

    #[test]
    fn best_responses_on_fixture() {
        let g = g1();
        assert_eq!(best_response_set(&g.follower, &[frac(1, 2), frac(1, 2)]), vec![0, 1]);
        assert_eq!(best_response_set(&g.follower, &[frac(1, 4), frac(3, 4)]), vec![0]);
        let dom = int_matrix(&[&[0, 1], &[0, 1]]);
        assert_eq!(best_response_set(&dom, &[frac(1, 3), frac(2, 3)]), vec![1]);
    }

    #[test]
    fn fixture_sse() {
        let (p, v) = compute_sse(&g1()).unwrap();
        assert_eq!(v, int(3));
        assert_eq!(p.response, 0);
        assert_eq!(p.strategy.0, vec![frac(1, 2), frac(1, 2)]);
        assert!(is_sse(&g1(), &p).unwrap());
    }

    #[test]
    fn one_by_one_game() {
        let g = Game::new(int_matrix(&[&[7]]), int_matrix(&[&[-2]])).unwrap();
        let (p, v) = compute_sse(&g).unwrap();
        assert_eq!(v, int(7));
        assert_eq!(p.strategy.0, ints(&[1]));
    }

    #[test]
    fn zero_sum_report_yields_maximin() {
        let g = g1();
        let neg: Matrix = g.leader.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        let z = g.with_follower(neg).unwrap();
        assert_eq!(sse_value(&z).unwrap(), frac(5, 2));
    }

    #[test]
    fn is_sse_rejections() {
        let g = g1();
        let p = StrategyProfile::new(MixedStrategy(ints(&[1, 0])), 0);
        assert!(!is_sse(&g, &p).unwrap());
        let p = StrategyProfile::new(MixedStrategy(vec![frac(1, 2), frac(1, 2)]), 1);
        assert!(!is_sse(&g, &p).unwrap());
    }

    #[test]
    fn sse_responses() {
        let g = g1();
        assert!(is_sse_response(&g, 0).unwrap());
        assert!(!is_sse_response(&g, 1).unwrap());
        let dom = g.with_follower(int_matrix(&[&[-1, 0], &[-1, 0]])).unwrap();
        assert!(is_sse_response(&dom, 1).unwrap());
    }
}
