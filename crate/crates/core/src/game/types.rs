use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::rational::{dot, serde_q, Q};

pub type Matrix = Vec<Vec<Q>>;

pub fn column(mat: &Matrix, j: usize) -> Vec<Q> {
    mat.iter().map(|r| r[j].clone()).collect()
}

/// Payoff of column `j` against the mixed strategy `x`.
pub fn payoff(mat: &Matrix, x: &[Q], j: usize) -> Q {
    let mut acc = Q::zero();
    for (xi, row) in x.iter().zip(mat) {
        if !xi.is_zero() {
            acc += xi * &row[j];
        }
    }
    acc
}

pub fn payoffs(mat: &Matrix, x: &[Q]) -> Vec<Q> {
    let n = mat.first().map_or(0, |r| r.len());
    (0..n).map(|j| payoff(mat, x, j)).collect()
}

pub fn dims(mat: &Matrix) -> (usize, usize) {
    (mat.len(), mat.first().map_or(0, |r| r.len()))
}

pub fn check_matrix(mat: &Matrix, m: usize, n: usize, what: &str) -> Result<()> {
    if mat.len() != m || mat.iter().any(|r| r.len() != n) {
        return Err(Error::MalformedInput(format!(
            "{what} matrix must be {m}x{n}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Game {
    pub m: usize,
    pub n: usize,
    #[serde(with = "serde_q::mat")]
    pub leader: Matrix,
    #[serde(with = "serde_q::mat")]
    pub follower: Matrix,
}

impl Game {
    pub fn new(leader: Matrix, follower: Matrix) -> Result<Self> {
        let (m, n) = dims(&leader);
        if m == 0 || n == 0 {
            return Err(Error::MalformedInput("game needs m, n >= 1".into()));
        }
        check_matrix(&leader, m, n, "leader")?;
        check_matrix(&follower, m, n, "follower")?;
        Ok(Game {
            m,
            n,
            leader,
            follower,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::MalformedInput("game needs m, n >= 1".into()));
        }
        check_matrix(&self.leader, self.m, self.n, "leader")?;
        check_matrix(&self.follower, self.m, self.n, "follower")
    }

    pub fn with_follower(&self, follower: Matrix) -> Result<Self> {
        Game::new(self.leader.clone(), follower)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("game serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: Game =
            serde_json::from_str(s).map_err(|e| Error::MalformedInput(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MixedStrategy(#[serde(with = "serde_q::vec")] pub Vec<Q>);

impl MixedStrategy {
    pub fn new(weights: Vec<Q>) -> Result<Self> {
        if weights.is_empty()
            || weights.iter().any(|w| w.is_negative())
            || weights.iter().sum::<Q>() != Q::from_integer(1.into())
        {
            return Err(Error::MalformedInput(
                "mixed strategy must be a nonnegative vector summing to one".into(),
            ));
        }
        Ok(MixedStrategy(weights))
    }

    pub fn pure(m: usize, i: usize) -> Self {
        MixedStrategy(crate::exact::rational::unit(m, i))
    }

    pub fn weights(&self) -> &[Q] {
        &self.0
    }

    pub fn dot(&self, v: &[Q]) -> Q {
        dot(&self.0, v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub strategy: MixedStrategy,
    pub response: usize,
}

impl StrategyProfile {
    pub fn new(strategy: MixedStrategy, response: usize) -> Self {
        StrategyProfile { strategy, response }
    }

    pub fn x(&self) -> &[Q] {
        &self.strategy.0
    }

    pub fn check(&self, m: usize, n: usize) -> Result<()> {
        if self.strategy.0.len() != m || self.response >= n {
            return Err(Error::MalformedInput(format!(
                "profile does not fit an {m}x{n} game"
            )));
        }
        Ok(())
    }
}
