use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::lp::{lex_min_point, on_simplex, optimize, Constraint, LpResult, Sense};
use crate::exact::rational::{serde_q, Q};

use super::sse::br_region;
use super::types::{column, payoff, Matrix, MixedStrategy, StrategyProfile};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaximinResult {
    pub subset: Vec<usize>,
    #[serde(with = "serde_q")]
    pub value: Q,
    pub witness: MixedStrategy,
    /// Constraints beyond the simplex carving out the maximin strategy set.
    #[serde(skip)]
    pub region: Vec<Constraint>,
}

pub fn maximin_value(leader: &Matrix, subset: &[usize]) -> Result<Q> {
    if subset.is_empty() {
        return Err(Error::MalformedInput("maximin over an empty column set".into()));
    }
    let m = leader.len();
    // Variables: x_1..x_m ≥ 0 and a free level v.
    let mut obj = vec![Q::from_integer(0.into()); m + 1];
    obj[m] = Q::one();
    let mut cons = Vec::with_capacity(subset.len() + 1);
    let mut sum = vec![Q::one(); m + 1];
    sum[m] = Q::from_integer(0.into());
    cons.push(Constraint::eq(sum, Q::one()));
    for &j in subset {
        let mut c = column(leader, j);
        c.push(-Q::one());
        cons.push(Constraint::ge(c, Q::from_integer(0.into())));
    }
    let mut nonneg = vec![true; m + 1];
    nonneg[m] = false;
    match optimize(&obj, Sense::Max, &cons, &nonneg)? {
        LpResult::Optimal { value, .. } => Ok(value),
        _ => Err(Error::InternalVerification("maximin LP not optimal".into())),
    }
}

pub fn maximin_region(leader: &Matrix, subset: &[usize], value: &Q) -> Vec<Constraint> {
    subset
        .iter()
        .map(|&j| Constraint::ge(column(leader, j), value.clone()))
        .collect()
}

pub fn maximin(leader: &Matrix, subset: &[usize]) -> Result<MaximinResult> {
    let value = maximin_value(leader, subset)?;
    let region = maximin_region(leader, subset, &value);
    let m = leader.len();
    let mut cons = vec![Constraint::eq(vec![Q::one(); m], Q::one())];
    cons.extend(region.iter().cloned());
    let witness = lex_min_point(m, &cons, &vec![true; m])?
        .ok_or_else(|| Error::InternalVerification("maximin set is empty".into()))?;
    let mut subset = subset.to_vec();
    subset.sort_unstable();
    Ok(MaximinResult {
        subset,
        value,
        witness: MixedStrategy(witness),
        region,
    })
}

pub fn full_maximin_value(leader: &Matrix) -> Result<Q> {
    let n = leader.first().map_or(0, |r| r.len());
    maximin_value(leader, &(0..n).collect::<Vec<_>>())
}

/// A profile is inducible exactly when its leader payoff reaches the unrestricted maximin value.
pub fn inducible_fullinfo(leader: &Matrix, profile: &StrategyProfile) -> Result<bool> {
    Ok(payoff(leader, profile.x(), profile.response) >= full_maximin_value(leader)?)
}

/// Whether the follower matrix `mu` keeps the leader strictly below `M_S` everywhere on the
/// maximin set of `subset`, whichever best response the follower picks.
pub fn is_cover(leader: &Matrix, mu: &Matrix, subset: &[usize]) -> Result<bool> {
    let r = maximin(leader, subset)?;
    let n = leader.first().map_or(0, |row| row.len());
    for j in 0..n {
        let mut cons = r.region.clone();
        cons.extend(br_region(mu, j));
        if let Some(v) = on_simplex::value(&column(leader, j), Sense::Max, &cons)? {
            if v >= r.value {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A cover under which no column of `subset` is ever a best response.
pub fn is_proper_cover(leader: &Matrix, mu: &Matrix, subset: &[usize]) -> Result<bool> {
    let m = leader.len();
    for &j in subset {
        if on_simplex::is_feasible(m, &br_region(mu, j))? {
            return Ok(false);
        }
    }
    is_cover(leader, mu, subset)
}
