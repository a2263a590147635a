//! Exact search for a hidden rational by walking the Stern-Brocot tree.
//!
//! Runs of equal-direction moves are taken with galloping (doubling, then bisection), so the
//! number of probes is linear in the bit size of the target rather than in its magnitude.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::rational::Q;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
struct Frac {
    p: BigInt,
    q: BigInt,
}

impl Frac {
    fn new(p: BigInt, q: BigInt) -> Self {
        Frac { p, q }
    }

    fn to_q(&self) -> Q {
        Q::new(self.p.clone(), self.q.clone())
    }

    fn within(&self, bits: u64) -> bool {
        self.p.bits() <= bits && self.q.bits() <= bits
    }

    /// `(a + k·b)` componentwise.
    fn step(a: &Frac, b: &Frac, k: &BigInt) -> Frac {
        Frac::new(&a.p + k * &b.p, &a.q + k * &b.q)
    }
}

enum Descent {
    Found(Q),
    /// No admissible rational lies strictly inside the final bracket, whose upper end is `hi`
    /// (possibly infinite).
    Exhausted { hi: Frac },
}

/// Probes the run `f(k) = a + k·b` whose values move monotonically from `a` toward `b`; `f(1)`
/// is already known to lie before the target. `toward` is the comparator answer meaning "the
/// target lies further along the run".
///
/// Returns the exact hit, or the last `k` before the target together with the first `k` past it.
/// `None` for the latter means every later run element exceeds the bit bound, so the target can
/// only be the end `b` itself.
fn gallop<F>(
    cmp: &mut F,
    a: &Frac,
    b: &Frac,
    toward: Ordering,
    bits: u64,
) -> Result<std::result::Result<(BigInt, Option<BigInt>), Q>>
where
    F: FnMut(&Q) -> Result<Ordering>,
{
    // `None` marks an over-bound probe; rationals between it and `b` are no smaller in either
    // numerator or denominator, so it is treated as lying past the target.
    let ask = |k: &BigInt, cmp: &mut F| -> Result<Option<Ordering>> {
        let f = Frac::step(a, b, k);
        if !f.within(bits) {
            return Ok(None);
        }
        cmp(&f.to_q()).map(Some)
    };
    let one = BigInt::one();
    let mut lo = one.clone();
    let mut hi;
    let mut hi_over;
    let mut k = BigInt::from(2);
    loop {
        match ask(&k, cmp)? {
            Some(Ordering::Equal) => return Ok(Err(Frac::step(a, b, &k).to_q())),
            Some(o) if o == toward => {
                k = &k * 2;
                lo = &k / 2;
            }
            other => {
                hi = k;
                hi_over = other.is_none();
                break;
            }
        }
    }
    while &hi - &lo > one {
        let mid: BigInt = &lo + (&hi - &lo) / 2;
        match ask(&mid, cmp)? {
            Some(Ordering::Equal) => return Ok(Err(Frac::step(a, b, &mid).to_q())),
            Some(o) if o == toward => lo = mid,
            other => {
                hi = mid;
                hi_over = other.is_none();
            }
        }
    }
    Ok(Ok((lo, if hi_over { None } else { Some(hi) })))
}

/// Descends from the interval (0, ∞) toward a positive target.
fn descend_positive<F>(cmp: &mut F, bits: u64) -> Result<Descent>
where
    F: FnMut(&Q) -> Result<Ordering>,
{
    let mut lo = Frac::new(BigInt::zero(), BigInt::one());
    let mut hi = Frac::new(BigInt::one(), BigInt::zero());
    loop {
        let med = Frac::new(&lo.p + &hi.p, &lo.q + &hi.q);
        if !med.within(bits) {
            return Ok(Descent::Exhausted { hi });
        }
        match cmp(&med.to_q())? {
            Ordering::Equal => return Ok(Descent::Found(med.to_q())),
            Ordering::Greater => {
                // Run toward hi: f(k) = lo + k·hi.
                match gallop(cmp, &lo, &hi, Ordering::Greater, bits)? {
                    Err(q) => return Ok(Descent::Found(q)),
                    Ok((near, far)) => {
                        let new_lo = Frac::step(&lo, &hi, &near);
                        if let Some(far) = far {
                            hi = Frac::step(&lo, &hi, &far);
                        }
                        lo = new_lo;
                    }
                }
            }
            Ordering::Less => {
                // Run toward lo: f(k) = hi + k·lo.
                match gallop(cmp, &hi, &lo, Ordering::Less, bits)? {
                    Err(q) => return Ok(Descent::Found(q)),
                    Ok((near, far)) => {
                        let new_hi = Frac::step(&hi, &lo, &near);
                        if let Some(far) = far {
                            lo = Frac::step(&hi, &lo, &far);
                        }
                        hi = new_hi;
                    }
                }
            }
        }
    }
}

/// Finds the hidden rational `t` given `cmp(probe) = t.cmp(probe)`.
///
/// The target's numerator and denominator must each fit in `bit_bound` bits; an inconsistent
/// comparator, or a target outside the bound, yields `BoundExceeded`.
pub fn stern_brocot_find<F>(mut cmp: F, bit_bound: u64) -> Result<Q>
where
    F: FnMut(&Q) -> Result<Ordering>,
{
    let exhausted = || {
        Error::BoundExceeded(format!(
            "no rational within {bit_bound} bits is consistent with the comparator"
        ))
    };
    match cmp(&Q::zero())? {
        Ordering::Equal => Ok(Q::zero()),
        Ordering::Greater => match descend_positive(&mut cmp, bit_bound)? {
            Descent::Found(q) => Ok(q),
            Descent::Exhausted { .. } => Err(exhausted()),
        },
        Ordering::Less => {
            let mut neg = |p: &Q| cmp(&-p).map(Ordering::reverse);
            match descend_positive(&mut neg, bit_bound)? {
                Descent::Found(q) => Ok(-q),
                Descent::Exhausted { .. } => Err(exhausted()),
            }
        }
    }
}

/// Finds the smallest `t > lower` with `at_or_above(p) ⇔ p ≥ t`, given only that one-sided test.
///
/// `t - lower` must fit in `bit_bound` bits. Equality cannot be observed directly, so the walk
/// continues until the bracketing interval holds no admissible rational and reports its upper end.
pub fn stern_brocot_threshold<F>(mut at_or_above: F, lower: &Q, bit_bound: u64) -> Result<Q>
where
    F: FnMut(&Q) -> Result<bool>,
{
    let mut cmp = |p: &Q| -> Result<Ordering> {
        Ok(if at_or_above(&(p + lower))? {
            Ordering::Less
        } else {
            Ordering::Greater
        })
    };
    match descend_positive(&mut cmp, bit_bound)? {
        Descent::Found(_) => unreachable!("one-sided comparator never reports equality"),
        Descent::Exhausted { hi, .. } => {
            if hi.q.is_zero() || !hi.within(bit_bound) || !hi.p.is_positive() {
                Err(Error::BoundExceeded(format!(
                    "threshold not representable within {bit_bound} bits"
                )))
            } else {
                Ok(hi.to_q() + lower)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{bit_size, frac, int};

    fn counted_find(target: &Q, bits: u64) -> (Result<Q>, usize) {
        let mut probes = 0;
        let r = stern_brocot_find(
            |p| {
                probes += 1;
                Ok(target.cmp(p))
            },
            bits,
        );
        (r, probes)
    }

    #[test]
    fn zero_found_on_first_probe() {
        let (r, n) = counted_find(&int(0), 8);
        assert_eq!(r.unwrap(), int(0));
        assert_eq!(n, 1);
    }

    #[test]
    fn recovers_classic_approximation_of_pi() {
        let t = frac(355, 113);
        let (r, n) = counted_find(&t, 16);
        assert_eq!(r.unwrap(), t);
        assert!(n <= 4 * 16 + 8);
    }

    #[test]
    fn recovers_fixture_maximin_and_negatives() {
        for t in [frac(5, 2), frac(-5, 2), int(1000), frac(-1, 1024), frac(1, 3)] {
            let (r, n) = counted_find(&t, 32);
            assert_eq!(r.unwrap(), t.clone());
            let b = t.numer().bits() + t.denom().bits();
            assert!(n as u64 <= 4 * b + 8, "{t}: {n} probes");
        }
    }

    #[test]
    fn bound_exceeded_when_target_too_large() {
        let (r, _) = counted_find(&frac(1, 1 << 20), 8);
        assert!(matches!(r, Err(Error::BoundExceeded(_))));
    }

    #[test]
    fn inconsistent_comparator_is_reported() {
        let r = stern_brocot_find(|_| Ok(Ordering::Greater), 12);
        assert!(matches!(r, Err(Error::BoundExceeded(_))));
    }

    #[test]
    fn threshold_search_finds_closed_boundary() {
        for (t, lower) in [
            (frac(7, 3), int(0)),
            (frac(-5, 4), int(-2)),
            (int(3), int(2)),
            (frac(1, 1000), int(0)),
        ] {
            let got =
                stern_brocot_threshold(|p| Ok(*p >= t), &lower, 24).unwrap();
            assert_eq!(got, t);
            assert!(bit_size(&got) <= 24);
        }
    }
}
