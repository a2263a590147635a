//! Seeded game generation, including structured families that exercise degenerate paths.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exact::rational::{frac, Q};
use crate::game::{Game, Matrix, MixedStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Random,
    /// Some column's singleton maximin equals the unrestricted maximin.
    MaximinTight,
    /// Columns whose maximum is attained on several rows.
    DuplicateMaxRows,
    /// A leader column with identical entries.
    ConstantColumn,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Random,
        Family::MaximinTight,
        Family::DuplicateMaxRows,
        Family::ConstantColumn,
    ];
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_entry(rng: &mut impl Rng, denom: i64) -> Q {
    let d2 = denom * denom;
    frac(rng.gen_range(-d2..=d2), rng.gen_range(1..=denom))
}

fn random_matrix(rng: &mut impl Rng, m: usize, n: usize, denom: i64) -> Matrix {
    (0..m)
        .map(|_| (0..n).map(|_| random_entry(rng, denom)).collect())
        .collect()
}

/// Entries uniform over `{p/q : |p| ≤ denom², 1 ≤ q ≤ denom}`; deterministic in the seed.
pub fn generate_game(seed: u64, m: usize, n: usize, denom: i64) -> Game {
    generate_family(seed, m, n, denom, Family::Random)
}

pub fn generate_family(seed: u64, m: usize, n: usize, denom: i64, family: Family) -> Game {
    let mut rng = rng_for(seed);
    let mut leader = random_matrix(&mut rng, m, n, denom);
    let follower = random_matrix(&mut rng, m, n, denom);
    match family {
        Family::Random => {}
        Family::MaximinTight => {
            let j = rng.gen_range(0..n);
            let r = rng.gen_range(0..m);
            let c = leader[r][j].clone();
            for row in leader.iter_mut() {
                if row[j] > c {
                    row[j] = c.clone();
                }
            }
            for k in (0..n).filter(|&k| k != j) {
                if leader[r][k] < c {
                    leader[r][k] = c.clone();
                }
            }
        }
        Family::DuplicateMaxRows => {
            if m >= 2 {
                for j in 0..n {
                    let mut rows: Vec<usize> = (0..m).collect();
                    rows.shuffle(&mut rng);
                    let copies = rng.gen_range(1..m);
                    let top = leader.iter().map(|r| r[j].clone()).max().expect("m >= 1");
                    for &i in rows.iter().take(copies + 1) {
                        leader[i][j] = top.clone();
                    }
                    if copies + 1 == m && m > 1 {
                        // keep the column non-constant
                        let i = rows[0];
                        leader[i][j] = &top - Q::from_integer(1.into());
                    }
                }
            }
        }
        Family::ConstantColumn => {
            let j = rng.gen_range(0..n);
            let c = random_entry(&mut rng, denom);
            for row in leader.iter_mut() {
                row[j] = c.clone();
            }
        }
    }
    Game::new(leader, follower).expect("generated dimensions are consistent")
}

/// A random point of the simplex with denominators bounded by `denom`.
pub fn random_strategy(rng: &mut impl Rng, m: usize, denom: i64) -> MixedStrategy {
    let weights: Vec<i64> = (0..m).map(|_| rng.gen_range(0..=denom)).collect();
    let total: i64 = weights.iter().sum();
    if total == 0 {
        return MixedStrategy::pure(m, rng.gen_range(0..m));
    }
    MixedStrategy(weights.iter().map(|&w| frac(w, total)).collect())
}
