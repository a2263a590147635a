//! Rational helpers on top of `num_rational::BigRational`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn frac(p: i64, q: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(q))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Q::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

pub fn unit(m: usize, i: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); m];
    v[i] = Q::one();
    v
}

pub fn ints(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&x| int(x)).collect()
}

pub fn int_matrix(rows: &[&[i64]]) -> Vec<Vec<Q>> {
    rows.iter().map(|r| ints(r)).collect()
}

/// Bit length of a rational: the larger of numerator and denominator bit counts.
pub fn bit_size(x: &Q) -> u64 {
    x.numer().bits().max(x.denom().bits())
}

pub fn format_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::MalformedInput(format!("not a rational: {s:?}"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(bad());
    }
    Ok(Q::new(p, q))
}

pub fn min_of<'a>(it: impl IntoIterator<Item = &'a Q>) -> Option<Q> {
    it.into_iter().min().cloned()
}

pub fn max_of<'a>(it: impl IntoIterator<Item = &'a Q>) -> Option<Q> {
    it.into_iter().max().cloned()
}

pub fn abs(x: &Q) -> Q {
    x.abs()
}

/// Serde adapters writing rationals as `"p/q"` strings.
pub mod serde_q {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(D::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&format_q(x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Q>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter()
                .map(|s| parse_q(s).map_err(D::Error::custom))
                .collect()
        }
    }

    pub mod mat {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(
            m: &[Vec<Q>],
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(m.len()))?;
            for row in m {
                let r: Vec<String> = row.iter().map(format_q).collect();
                seq.serialize_element(&r)?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Vec<Vec<Q>>, D::Error> {
            let m = Vec::<Vec<String>>::deserialize(d)?;
            m.iter()
                .map(|row| {
                    row.iter()
                        .map(|s| parse_q(s).map_err(D::Error::custom))
                        .collect()
                })
                .collect()
        }
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(
            x: &Option<Q>,
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            match x {
                Some(v) => s.serialize_some(&format_q(v)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Option<Q>, D::Error> {
            let v = Option::<String>::deserialize(d)?;
            v.map(|s| parse_q(&s).map_err(D::Error::custom)).transpose()
        }
    }
}
