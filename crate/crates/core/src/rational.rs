//! Exact rational scalars and their `"p/q"` text form.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::{BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

pub fn half() -> Q {
    q(1, 2)
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact binary value of a finite float.
pub fn from_f64(x: f64) -> Q {
    Q::from_float(x).unwrap_or_else(Q::zero)
}

/// Nearest rational with denominator `den`.
pub fn round_to_den(x: f64, den: i64) -> Q {
    q((x * den as f64).round() as i64, den)
}

/// Simplest fraction within `tol` of `x`, from the continued-fraction convergents.
pub fn approx_q(x: f64, tol: f64) -> Q {
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i128;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > 1 << 40 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= tol || r == a {
            break;
        }
        r = 1.0 / (r - a);
    }
    if k1 == 0 {
        return from_f64(x);
    }
    Q::new(h1.into(), k1.into())
}

pub fn parse_q(s: &str) -> Result<Q> {
    let t = s.trim();
    let bad = || Error::BadRational(s.to_string());
    match t.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(n, d))
        }
        None => Ok(Q::from_integer(BigInt::from_str(t).map_err(|_| bad())?)),
    }
}

pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn abs(x: &Q) -> Q {
    x.abs()
}

pub fn min_q<'a>(a: &'a Q, b: &'a Q) -> &'a Q {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn max_q<'a>(a: &'a Q, b: &'a Q) -> &'a Q {
    if a >= b {
        a
    } else {
        b
    }
}

thread_local! {
    static FLOAT_RENDERING: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with every [`Rat`] serialized as a JSON float instead of a `"p/q"` string.
pub fn with_float_rendering<R>(f: impl FnOnce() -> R) -> R {
    let prev = FLOAT_RENDERING.with(|c| c.replace(true));
    let out = f();
    FLOAT_RENDERING.with(|c| c.set(prev));
    out
}

/// Serde wrapper: a rational carried as a `"p/q"` string.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rat(pub Q);

impl From<Q> for Rat {
    fn from(x: Q) -> Self {
        Rat(x)
    }
}

impl From<&Q> for Rat {
    fn from(x: &Q) -> Self {
        Rat(x.clone())
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_q(&self.0))
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if FLOAT_RENDERING.with(|c| c.get()) {
            s.serialize_f64(to_f64(&self.0))
        } else {
            s.serialize_str(&fmt_q(&self.0))
        }
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Lit {
            S(String),
            I(i64),
        }
        match Lit::deserialize(d)? {
            Lit::S(s) => parse_q(&s).map(Rat).map_err(serde::de::Error::custom),
            Lit::I(i) => Ok(Rat(qi(i))),
        }
    }
}

pub fn rats(v: &[Q]) -> Vec<Rat> {
    v.iter().map(Rat::from).collect()
}

pub fn unrats(v: &[Rat]) -> Vec<Q> {
    v.iter().map(|r| r.0.clone()).collect()
}

/// Componentwise helpers on rational vectors.
pub mod vec {
    use super::*;

    pub fn zeros(n: usize) -> Vec<Q> {
        vec![Q::zero(); n]
    }

    pub fn add(a: &[Q], b: &[Q]) -> Vec<Q> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    pub fn sub(a: &[Q], b: &[Q]) -> Vec<Q> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    pub fn scale(a: &[Q], s: &Q) -> Vec<Q> {
        a.iter().map(|x| x * s).collect()
    }

    pub fn add_scaled(acc: &mut [Q], a: &[Q], s: &Q) {
        for (x, y) in acc.iter_mut().zip(a) {
            *x += y * s;
        }
    }

    pub fn dot(a: &[Q], b: &[Q]) -> Q {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn l1(a: &[Q]) -> Q {
        a.iter().map(|x| x.abs()).sum()
    }

    pub fn is_zero(a: &[Q]) -> bool {
        a.iter().all(Zero::is_zero)
    }
}
