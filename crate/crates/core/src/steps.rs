//! Piecewise-constant data on the unit interval.
//!
//! A [`Steps`] stores right endpoints: piece `k` covers `[upto[k-1], upto[k])`
//! with `upto[-1] = 0` and the last endpoint equal to `1`.

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Q;

#[derive(Clone, Debug, PartialEq)]
pub struct Steps<T> {
    pieces: Vec<(Q, T)>,
}

/// One piece with both endpoints materialized.
#[derive(Clone, Debug)]
pub struct Piece<'a, T> {
    pub lo: Q,
    pub hi: Q,
    pub value: &'a T,
}

impl<T> Piece<'_, T> {
    pub fn len(&self) -> Q {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> Q {
        (&self.lo + &self.hi) / Q::from_integer(2.into())
    }
}

impl<T> Steps<T> {
    pub fn new(pieces: Vec<(Q, T)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidBreakpoints("no pieces".into()));
        }
        let mut prev = Q::zero();
        for (upto, _) in &pieces {
            if *upto <= prev {
                return Err(Error::InvalidBreakpoints(format!(
                    "breakpoints must be strictly increasing in (0, 1], got {upto} after {prev}"
                )));
            }
            prev = upto.clone();
        }
        if !prev.is_one() {
            return Err(Error::InvalidBreakpoints(format!("last breakpoint must be 1, got {prev}")));
        }
        Ok(Steps { pieces })
    }

    pub fn constant(value: T) -> Self {
        Steps { pieces: vec![(Q::one(), value)] }
    }

    pub fn raw(&self) -> &[(Q, T)] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.pieces.iter().map(|(_, v)| v)
    }

    pub fn pieces(&self) -> impl Iterator<Item = Piece<'_, T>> {
        let mut lo = Q::zero();
        self.pieces.iter().map(move |(hi, value)| {
            let p = Piece { lo: lo.clone(), hi: hi.clone(), value };
            lo = hi.clone();
            p
        })
    }

    /// Interior breakpoints.
    pub fn cuts(&self) -> Vec<Q> {
        self.pieces[..self.pieces.len() - 1].iter().map(|(u, _)| u.clone()).collect()
    }

    /// Value on the piece containing `x` (pieces are right-open; `x = 1` maps to the last).
    pub fn at(&self, x: &Q) -> &T {
        let idx = self.pieces.partition_point(|(u, _)| u <= x);
        &self.pieces[idx.min(self.pieces.len() - 1)].1
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Steps<U> {
        Steps { pieces: self.pieces.iter().map(|(u, v)| (u.clone(), f(v))).collect() }
    }

    pub fn try_map<U, E>(&self, mut f: impl FnMut(&T) -> Result<U, E>) -> Result<Steps<U>, E> {
        let mut out = Vec::with_capacity(self.pieces.len());
        for (u, v) in &self.pieces {
            out.push((u.clone(), f(v)?));
        }
        Ok(Steps { pieces: out })
    }

    /// Combines two step data on their common refinement.
    pub fn zip<U, V>(&self, other: &Steps<U>, mut f: impl FnMut(&T, &U) -> V) -> Steps<V> {
        let mut out = Vec::with_capacity(self.pieces.len() + other.pieces.len());
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < other.pieces.len() {
            let (a, va) = &self.pieces[i];
            let (b, vb) = &other.pieces[j];
            let upto = if a <= b { a.clone() } else { b.clone() };
            out.push((upto.clone(), f(va, vb)));
            if *a == upto {
                i += 1;
            }
            if *b == upto {
                j += 1;
            }
        }
        Steps { pieces: out }
    }

    /// Same data with extra breakpoints inserted (values duplicated).
    pub fn refine(&self, cuts: &[Q]) -> Steps<T>
    where
        T: Clone,
    {
        let mut all: Vec<Q> = cuts.iter().filter(|c| !c.is_zero() && **c < Q::one()).cloned().collect();
        all.extend(self.cuts());
        all.sort();
        all.dedup();
        all.push(Q::one());
        Steps { pieces: all.into_iter().map(|u| (u.clone(), self.at_left_of(&u).clone())).collect() }
    }

    /// Value just left of `x`.
    fn at_left_of(&self, x: &Q) -> &T {
        let idx = self.pieces.partition_point(|(u, _)| u < x);
        &self.pieces[idx.min(self.pieces.len() - 1)].1
    }

    /// Merges adjacent equal pieces.
    pub fn merged(self) -> Steps<T>
    where
        T: PartialEq,
    {
        let mut out: Vec<(Q, T)> = Vec::with_capacity(self.pieces.len());
        for (u, v) in self.pieces {
            match out.last_mut() {
                Some((lu, lv)) if *lv == v => *lu = u,
                _ => out.push((u, v)),
            }
        }
        Steps { pieces: out }
    }

    /// Builds steps from consecutive `(length, value)` segments covering `[0, 1]`; zero-length
    /// segments are dropped.
    pub fn from_segments(segments: impl IntoIterator<Item = (Q, T)>) -> Result<Self> {
        let mut pos = Q::zero();
        let mut out = Vec::new();
        for (len, v) in segments {
            if len.is_zero() {
                continue;
            }
            pos += len;
            out.push((pos.clone(), v));
        }
        Steps::new(out)
    }
}

/// Union of the interior breakpoints of several step data.
pub fn common_cuts<'a, T: 'a>(all: impl IntoIterator<Item = &'a Steps<T>>) -> Vec<Q> {
    let mut cuts: Vec<Q> = all.into_iter().flat_map(|s| s.cuts()).collect();
    cuts.sort();
    cuts.dedup();
    cuts
}

/// Pieces `[lo, hi)` of the partition generated by `cuts`.
pub fn intervals(cuts: &[Q]) -> Vec<(Q, Q)> {
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut lo = Q::zero();
    for c in cuts.iter().chain(std::iter::once(&Q::one())) {
        out.push((lo.clone(), c.clone()));
        lo = c.clone();
    }
    out
}
