//! The full-information optimum the learner has to match.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exact::lp::{on_simplex, Constraint, Sense};
use crate::exact::rational::{serde_q, Q};
use crate::game::{column, full_maximin_value, Game, MixedStrategy, StrategyProfile};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Baseline {
    #[serde(with = "serde_q")]
    pub value: Q,
    pub profile: StrategyProfile,
}

/// Best follower payoff over profiles `(x, j)` with `u^L(x, j) ≥ M_[n]`; lowest `j` on ties,
/// lexicographically smallest optimal `x`.
pub fn full_info_baseline(game: &Game) -> Result<Baseline> {
    let floor = full_maximin_value(&game.leader)?;
    let mut best: Option<Baseline> = None;
    for j in 0..game.n {
        let cons = [Constraint::ge(column(&game.leader, j), floor.clone())];
        if let Some((value, x)) = on_simplex::lex_optimum(&column(&game.follower, j), Sense::Max, &cons)? {
            if best.as_ref().is_none_or(|b| value > b.value) {
                best = Some(Baseline {
                    value,
                    profile: StrategyProfile::new(MixedStrategy(x), j),
                });
            }
        }
    }
    Ok(best.expect("a maximin strategy makes some column inducible"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{frac, int_matrix};
    use crate::game::fixtures::g1;
    use crate::game::{compute_sse, payoff};

    #[test]
    fn fixture_optimum() {
        let b = full_info_baseline(&g1()).unwrap();
        assert_eq!(b.value, frac(3, 4));
        assert_eq!(b.profile.response, 0);
        assert_eq!(b.profile.strategy.0, vec![frac(1, 4), frac(3, 4)]);
    }

    #[test]
    fn zero_sum_truthful_report_is_already_optimal() {
        let leader = int_matrix(&[&[4, 1], &[2, 3]]);
        let follower: Vec<Vec<Q>> = leader.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        let g = Game::new(leader, follower).unwrap();
        let (sse, _) = compute_sse(&g).unwrap();
        let truthful = payoff(&g.follower, sse.x(), sse.response);
        assert_eq!(full_info_baseline(&g).unwrap().value, truthful);
    }

    #[test]
    fn single_column_maximizes_over_the_best_rows() {
        let g = Game::new(int_matrix(&[&[1], &[3], &[3]]), int_matrix(&[&[9], &[2], &[5]])).unwrap();
        let b = full_info_baseline(&g).unwrap();
        assert_eq!(b.value, Q::from_integer(5.into()));
    }
}
