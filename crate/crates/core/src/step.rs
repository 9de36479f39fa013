//! Integer-valued step functions on `[0,1)` with finitely many rational
//! breakpoints. Used for multiplicities and coverage counts.

use std::fmt;

use crate::intervals::{Interval, IntervalSet};
use crate::rational::Rational;

/// Sorted, disjoint, non-empty cells carrying non-zero values; adjacent cells
/// always differ in value. Off the cells the function is zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct StepFn {
    cells: Vec<(Interval, i64)>,
}

impl StepFn {
    pub fn zero() -> Self {
        StepFn::default()
    }

    pub fn indicator(set: &IntervalSet) -> Self {
        StepFn::constant_on(set, 1)
    }

    pub fn constant_on(set: &IntervalSet, value: i64) -> Self {
        StepFn::from_pieces(set.intervals().iter().map(|iv| (iv.clone(), value)))
    }

    /// Sum of the weighted indicators of the given (possibly overlapping)
    /// intervals.
    pub fn from_pieces(pieces: impl IntoIterator<Item = (Interval, i64)>) -> Self {
        let mut events: Vec<(Rational, i64)> = Vec::new();
        for (iv, v) in pieces {
            if !iv.is_empty() && v != 0 {
                events.push((iv.lo, v));
                events.push((iv.hi, -v));
            }
        }
        events.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out = Vec::new();
        let mut value = 0i64;
        let mut i = 0;
        while i < events.len() {
            let x = events[i].0.clone();
            while i < events.len() && events[i].0 == x {
                value += events[i].1;
                i += 1;
            }
            if value != 0 {
                if let Some((next, _)) = events.get(i) {
                    out.push((Interval::new(x, next.clone()), value));
                }
            }
        }
        StepFn::normalized(out)
    }

    fn normalized(cells: Vec<(Interval, i64)>) -> Self {
        let mut out: Vec<(Interval, i64)> = Vec::with_capacity(cells.len());
        for (iv, v) in cells {
            if v == 0 || iv.is_empty() {
                continue;
            }
            match out.last_mut() {
                Some((last, lv)) if *lv == v && last.hi == iv.lo => last.hi = iv.hi,
                _ => out.push((iv, v)),
            }
        }
        StepFn { cells: out }
    }

    pub fn cells(&self) -> &[(Interval, i64)] {
        &self.cells
    }

    pub fn is_zero(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn value_at(&self, x: &Rational) -> i64 {
        let idx = self.cells.partition_point(|(iv, _)| &iv.hi <= x);
        match self.cells.get(idx) {
            Some((iv, v)) if iv.contains(x) => *v,
            _ => 0,
        }
    }

    /// Pointwise `f(self, other)`; `f(0, 0)` must be `0`.
    pub fn combine(&self, other: &StepFn, f: impl Fn(i64, i64) -> i64) -> StepFn {
        let mut points: Vec<&Rational> = self
            .cells
            .iter()
            .chain(&other.cells)
            .flat_map(|(iv, _)| [&iv.lo, &iv.hi])
            .collect();
        points.sort();
        points.dedup();
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        for w in points.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            while i < self.cells.len() && &self.cells[i].0.hi <= lo {
                i += 1;
            }
            while j < other.cells.len() && &other.cells[j].0.hi <= lo {
                j += 1;
            }
            let a = self
                .cells
                .get(i)
                .filter(|(iv, _)| &iv.lo <= lo)
                .map_or(0, |c| c.1);
            let b = other
                .cells
                .get(j)
                .filter(|(iv, _)| &iv.lo <= lo)
                .map_or(0, |c| c.1);
            let v = f(a, b);
            if v != 0 {
                out.push((Interval::new(lo.clone(), hi.clone()), v));
            }
        }
        StepFn::normalized(out)
    }

    pub fn add(&self, other: &StepFn) -> StepFn {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &StepFn) -> StepFn {
        self.combine(other, |a, b| a - b)
    }

    pub fn map_values(&self, f: impl Fn(i64) -> i64) -> StepFn {
        StepFn::normalized(
            self.cells
                .iter()
                .map(|(iv, v)| (iv.clone(), f(*v)))
                .collect(),
        )
    }

    pub fn integral(&self) -> Rational {
        self.cells
            .iter()
            .map(|(iv, v)| iv.length() * Rational::from_integer(*v))
            .sum()
    }

    pub fn abs_integral(&self) -> Rational {
        self.cells
            .iter()
            .map(|(iv, v)| iv.length() * Rational::from_integer(v.abs()))
            .sum()
    }

    pub fn support(&self) -> IntervalSet {
        IntervalSet::from_intervals(self.cells.iter().map(|(iv, _)| iv.clone()).collect())
    }

    /// `{x ∈ [0,1) : pred(value(x))}`, zero regions included when `pred(0)`.
    pub fn level_set(&self, pred: impl Fn(i64) -> bool) -> IntervalSet {
        let pieces = self
            .full_cells()
            .into_iter()
            .filter(|(_, v)| pred(*v))
            .map(|(iv, _)| iv)
            .collect();
        IntervalSet::from_intervals(pieces)
    }

    /// Super-level sets `{x : value(x) ≥ j}` for `j = 1, 2, …, max`; the
    /// indicators of the layers sum to the positive part.
    pub fn layers(&self) -> Vec<IntervalSet> {
        (1..=self.max_value())
            .map(|j| self.level_set(|v| v >= j))
            .collect()
    }

    pub fn restrict(&self, set: &IntervalSet) -> StepFn {
        self.combine(&StepFn::indicator(set), |a, b| if b != 0 { a } else { 0 })
    }

    /// Cells partitioning `[0,1)`, zero-valued gaps included.
    pub fn full_cells(&self) -> Vec<(Interval, i64)> {
        let mut out = Vec::new();
        let mut at = Rational::zero();
        for (iv, v) in &self.cells {
            if at < iv.lo {
                out.push((Interval::new(at.clone(), iv.lo.clone()), 0));
            }
            out.push((iv.clone(), *v));
            at = iv.hi.clone();
        }
        if at < Rational::one() {
            out.push((Interval::new(at, Rational::one()), 0));
        }
        out
    }

    pub fn min_value(&self) -> i64 {
        self.full_cells().iter().map(|c| c.1).min().unwrap_or(0)
    }

    pub fn max_value(&self) -> i64 {
        self.full_cells().iter().map(|c| c.1).max().unwrap_or(0)
    }

    pub fn translate(&self, by: &Rational) -> StepFn {
        StepFn::normalized(
            self.cells
                .iter()
                .map(|(iv, v)| (iv.translate(by), *v))
                .collect(),
        )
    }

    /// `x ↦ value(about - x)`.
    pub fn reflect(&self, about: &Rational) -> StepFn {
        StepFn::normalized(
            self.cells
                .iter()
                .rev()
                .map(|(iv, v)| (iv.reflect(about), *v))
                .collect(),
        )
    }
}

impl fmt::Debug for StepFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.cells.iter().map(|(iv, v)| format!("{iv:?}={v}")))
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(a: i64, b: i64, q: i64) -> Interval {
        Interval::new(Rational::new(a, q), Rational::new(b, q))
    }

    #[test]
    fn overlapping_pieces_sum() {
        let f = StepFn::from_pieces([(iv(0, 2, 4), 1), (iv(1, 3, 4), 2)]);
        assert_eq!(
            f.cells(),
            &[(iv(0, 1, 4), 1), (iv(1, 2, 4), 3), (iv(2, 3, 4), 2)]
        );
        assert_eq!(f.integral(), Rational::new(6, 4));
        assert_eq!(f.value_at(&Rational::new(3, 8)), 3);
        assert_eq!(f.value_at(&Rational::new(7, 8)), 0);
    }

    #[test]
    fn cancellation_and_merging() {
        let f = StepFn::from_pieces([(iv(0, 1, 2), 1), (iv(1, 2, 2), 1)]);
        assert_eq!(f.cells(), &[(iv(0, 2, 2), 1)]);
        let g = f.sub(&f);
        assert!(g.is_zero());
    }

    #[test]
    fn level_sets_include_zero_gaps() {
        let f = StepFn::constant_on(
            &IntervalSet::interval(Rational::new(1, 4), Rational::new(1, 2)),
            2,
        );
        assert_eq!(
            f.level_set(|v| v == 0),
            IntervalSet::from_intervals(vec![iv(0, 1, 4), iv(2, 4, 4)])
        );
        assert_eq!(f.min_value(), 0);
        let layered = StepFn::from_pieces([(iv(0, 2, 4), 2), (iv(1, 3, 4), 1)]).layers();
        assert_eq!(layered.len(), 3);
        assert_eq!(layered[2], IntervalSet::from_intervals(vec![iv(1, 2, 4)]));
        assert_eq!(f.max_value(), 2);
    }

    fn arb_step() -> impl Strategy<Value = StepFn> {
        prop::collection::vec((0i64..16, 0i64..16, -3i64..4), 0..6).prop_map(|v| {
            StepFn::from_pieces(
                v.into_iter()
                    .map(|(a, b, w)| (iv(a.min(b), a.max(b), 16), w)),
            )
        })
    }

    proptest! {
        #[test]
        fn add_is_pointwise(f in arb_step(), g in arb_step(), k in 0i64..32) {
            let x = Rational::new(2 * k + 1, 64);
            prop_assert_eq!(f.add(&g).value_at(&x), f.value_at(&x) + g.value_at(&x));
        }

        #[test]
        fn integral_is_linear(f in arb_step(), g in arb_step()) {
            prop_assert_eq!(f.add(&g).integral(), f.integral() + g.integral());
            prop_assert_eq!(f.sub(&f), StepFn::zero());
        }

        #[test]
        fn reflect_is_involution(f in arb_step()) {
            prop_assert_eq!(f.reflect(&Rational::one()).reflect(&Rational::one()), f.clone());
            prop_assert_eq!(f.reflect(&Rational::one()).integral(), f.integral());
        }
    }
}
