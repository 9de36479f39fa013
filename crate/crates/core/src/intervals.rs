//! Canonical finite unions of half-open subintervals of `[0,1)`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// A half-open interval `[lo, hi)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        Interval { lo, hi }
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x < &self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        (lo < hi).then_some(Interval { lo, hi })
    }

    pub fn translate(&self, by: &Rational) -> Interval {
        Interval::new(&self.lo + by, &self.hi + by)
    }

    /// Image under `x ↦ about - x`, reoriented as a half-open interval.
    pub fn reflect(&self, about: &Rational) -> Interval {
        Interval::new(about - &self.hi, about - &self.lo)
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?},{:?})", self.lo, self.hi)
    }
}

/// Which set operation [`IntervalSet::set_algebra`] performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOp {
    Union,
    Intersect,
    Subtract,
    Complement,
}

/// Sorted, pairwise disjoint, non-adjacent half-open intervals inside `[0,1)`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    pub fn full() -> Self {
        IntervalSet::interval(Rational::zero(), Rational::one())
    }

    /// `[lo, hi)`, or the empty set when `hi <= lo`.
    pub fn interval(lo: Rational, hi: Rational) -> Self {
        IntervalSet::from_intervals(vec![Interval::new(lo, hi)])
    }

    /// Canonicalizes an arbitrary list: sorts, drops empty pieces, merges
    /// overlapping and adjacent ones.
    pub fn from_intervals(mut pieces: Vec<Interval>) -> Self {
        pieces.retain(|iv| !iv.is_empty());
        pieces.sort_by(|a, b| a.lo.cmp(&b.lo));
        let mut out: Vec<Interval> = Vec::with_capacity(pieces.len());
        for iv in pieces {
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => out.push(iv),
            }
        }
        IntervalSet { intervals: out }
    }

    /// Like [`from_intervals`](Self::from_intervals) but rejects endpoints
    /// outside `[0,1]` or reversed pairs.
    pub fn checked(pieces: Vec<Interval>) -> Result<Self> {
        for iv in &pieces {
            if iv.lo.is_negative() || iv.hi > Rational::one() || iv.hi < iv.lo {
                return Err(Error::Parse(format!("interval {iv:?} not inside [0,1)")));
            }
        }
        Ok(IntervalSet::from_intervals(pieces))
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn measure(&self) -> Rational {
        self.intervals.iter().map(|iv| iv.length()).sum()
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let idx = self.intervals.partition_point(|iv| &iv.hi <= x);
        self.intervals.get(idx).is_some_and(|iv| iv.contains(x))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        if other.is_empty() {
            return self.clone();
        }
        if self.is_empty() {
            return other.clone();
        }
        let mut all = Vec::with_capacity(self.len() + other.len());
        all.extend_from_slice(&self.intervals);
        all.extend_from_slice(&other.intervals);
        IntervalSet::from_intervals(all)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            if let Some(iv) = a[i].intersect(&b[j]) {
                out.push(iv);
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        // Pieces of two canonical sets never touch, so `out` is canonical.
        IntervalSet { intervals: out }
    }

    /// Complement relative to `[0,1)`.
    pub fn complement(&self) -> IntervalSet {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut cursor = Rational::zero();
        for iv in &self.intervals {
            if iv.lo > cursor {
                out.push(Interval::new(cursor, iv.lo.clone()));
            }
            cursor = iv.hi.clone();
        }
        if cursor < Rational::one() {
            out.push(Interval::new(cursor, Rational::one()));
        }
        IntervalSet { intervals: out }
    }

    pub fn subtract(&self, other: &IntervalSet) -> IntervalSet {
        if other.is_empty() || self.is_empty() {
            return self.clone();
        }
        let mut out = Vec::new();
        let b = &other.intervals;
        let mut j = 0;
        for iv in &self.intervals {
            let mut lo = iv.lo.clone();
            while j < b.len() && b[j].hi <= lo {
                j += 1;
            }
            let mut k = j;
            while k < b.len() && b[k].lo < iv.hi {
                if b[k].lo > lo {
                    out.push(Interval::new(lo.clone(), b[k].lo.clone()));
                }
                if b[k].hi > lo {
                    lo = b[k].hi.clone();
                }
                k += 1;
            }
            if lo < iv.hi {
                out.push(Interval::new(lo, iv.hi.clone()));
            }
        }
        IntervalSet { intervals: out }
    }

    pub fn set_algebra(&self, other: &IntervalSet, op: SetOp) -> IntervalSet {
        match op {
            SetOp::Union => self.union(other),
            SetOp::Intersect => self.intersect(other),
            SetOp::Subtract => self.subtract(other),
            SetOp::Complement => self.complement(),
        }
    }

    pub fn is_subset(&self, other: &IntervalSet) -> bool {
        self.subtract(other).is_empty()
    }

    pub fn is_disjoint(&self, other: &IntervalSet) -> bool {
        self.intersect(other).is_empty()
    }

    pub fn translate(&self, by: &Rational) -> IntervalSet {
        IntervalSet {
            intervals: self.intervals.iter().map(|iv| iv.translate(by)).collect(),
        }
    }

    /// Image under `x ↦ about - x`.
    pub fn reflect(&self, about: &Rational) -> IntervalSet {
        IntervalSet {
            intervals: self
                .intervals
                .iter()
                .rev()
                .map(|iv| iv.reflect(about))
                .collect(),
        }
    }

    /// Whether no two stored intervals overlap or touch and all are non-empty.
    pub fn is_canonical(&self) -> bool {
        self.intervals.iter().all(|iv| !iv.is_empty())
            && self.intervals.windows(2).all(|w| w[0].hi < w[1].lo)
    }
}

impl fmt::Debug for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "∅");
        }
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{iv:?}")?;
        }
        Ok(())
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [&self.lo, &self.hi].serialize(serializer)
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[&Rational; 2]> = self.intervals.iter().map(|iv| [&iv.lo, &iv.hi]).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[Rational; 2]> = Vec::deserialize(deserializer)?;
        let pieces = pairs
            .into_iter()
            .map(|[lo, hi]| Interval::new(lo, hi))
            .collect();
        IntervalSet::checked(pieces).map_err(serde::de::Error::custom)
    }
}
