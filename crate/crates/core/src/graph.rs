//! Multisets of graph atoms: the associated matrix of a DSE, its counting
//! measure and the distance between two of them.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::intervals::{Interval, IntervalSet};
use crate::partial_map::{overlapping, Atom, Family, PartialMap, Slope};
use crate::rational::Rational;
use crate::step::StepFn;

/// For each affine family, the multiplicity as a step function of the source
/// coordinate. Families with zero multiplicity are never stored, and every
/// stored value is positive.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GraphMultiset {
    families: BTreeMap<Family, StepFn>,
}

impl GraphMultiset {
    pub fn new() -> Self {
        GraphMultiset::default()
    }

    pub fn from_map(map: &PartialMap, multiplicity: i64) -> Self {
        let mut g = GraphMultiset::new();
        g.add_map(map, multiplicity);
        g
    }

    pub fn from_maps<'a>(maps: impl IntoIterator<Item = &'a PartialMap>) -> Self {
        let mut g = GraphMultiset::new();
        for m in maps {
            g.add_map(m, 1);
        }
        g
    }

    /// Adds `multiplicity` copies of each atom, one family at a time.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (Atom, i64)>) -> Self {
        let mut grouped: BTreeMap<Family, Vec<(Interval, i64)>> = BTreeMap::new();
        for (atom, mult) in atoms {
            grouped
                .entry(atom.family)
                .or_default()
                .push((atom.src, mult));
        }
        let families = grouped
            .into_iter()
            .map(|(fam, pieces)| (fam, StepFn::from_pieces(pieces)))
            .filter(|(_, f)| !f.is_zero())
            .collect();
        GraphMultiset { families }
    }

    pub fn add_map(&mut self, map: &PartialMap, multiplicity: i64) {
        let atoms = map.atoms().iter().map(|a| (a.clone(), multiplicity));
        let addition = GraphMultiset::from_atoms(atoms);
        *self = self.add(&addition);
    }

    pub fn families(&self) -> impl Iterator<Item = (&Family, &StepFn)> {
        self.families.iter()
    }

    pub fn family(&self, family: &Family) -> Option<&StepFn> {
        self.families.get(family)
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    /// Canonical entries: one per maximal cell of constant multiplicity.
    pub fn entries(&self) -> Vec<(Atom, i64)> {
        self.families
            .iter()
            .flat_map(|(fam, f)| {
                f.cells()
                    .iter()
                    .map(move |(iv, v)| (Atom::from_family(iv.clone(), fam.clone()), *v))
            })
            .collect()
    }

    fn combine(
        &self,
        other: &GraphMultiset,
        op: impl Fn(i64, i64) -> i64,
    ) -> BTreeMap<Family, StepFn> {
        let zero = StepFn::zero();
        let keys: std::collections::BTreeSet<&Family> =
            self.families.keys().chain(other.families.keys()).collect();
        keys.into_iter()
            .map(|k| {
                let a = self.families.get(k).unwrap_or(&zero);
                let b = other.families.get(k).unwrap_or(&zero);
                (k.clone(), a.combine(b, &op))
            })
            .filter(|(_, f)| !f.is_zero())
            .collect()
    }

    pub fn add(&self, other: &GraphMultiset) -> GraphMultiset {
        GraphMultiset {
            families: self.combine(other, |a, b| a + b),
        }
    }

    /// `self - other`; fails when `other` is not a sub-multiset of `self`.
    pub fn checked_sub(&self, other: &GraphMultiset) -> Result<GraphMultiset> {
        let families = self.combine(other, |a, b| a - b);
        if families.values().any(|f| f.min_value() < 0) {
            return Err(Error::PreconditionViolated(
                "subtracting a multiset that is not contained in the minuend".into(),
            ));
        }
        Ok(GraphMultiset { families })
    }

    pub fn contains(&self, other: &GraphMultiset) -> bool {
        self.checked_sub(other).is_ok()
    }

    /// Total counting-measure mass: `Σ multiplicity × length`.
    pub fn mass(&self) -> Rational {
        self.families.values().map(StepFn::integral).sum()
    }

    /// `ν|self − other|`.
    pub fn distance(&self, other: &GraphMultiset) -> Rational {
        self.combine(other, |a, b| a - b)
            .values()
            .map(StepFn::abs_integral)
            .sum()
    }

    /// Number of edges leaving each source point.
    pub fn row_mass(&self) -> StepFn {
        let pieces = self
            .families
            .values()
            .flat_map(|f| f.cells().iter().cloned());
        StepFn::from_pieces(pieces)
    }

    /// Number of edges arriving at each target point.
    pub fn col_mass(&self) -> StepFn {
        let pieces = self
            .families
            .iter()
            .flat_map(|(fam, f)| f.cells().iter().map(move |(iv, v)| (fam.image(iv), *v)));
        StepFn::from_pieces(pieces)
    }

    /// The multiset of reversed edges `(y, x)`.
    pub fn flip(&self) -> GraphMultiset {
        let families = self
            .families
            .iter()
            .map(|(fam, f)| {
                let g = match fam.slope {
                    Slope::Pos => f.translate(&fam.offset),
                    Slope::Neg => f.reflect(&fam.offset),
                };
                (fam.inverse(), g)
            })
            .collect();
        GraphMultiset { families }
    }

    pub fn is_symmetric(&self) -> bool {
        *self == self.flip()
    }

    /// Edges whose source lies in `rows`.
    pub fn restrict_rows(&self, rows: &IntervalSet) -> GraphMultiset {
        let families = self
            .families
            .iter()
            .map(|(fam, f)| (fam.clone(), f.restrict(rows)))
            .filter(|(_, f)| !f.is_zero())
            .collect();
        GraphMultiset { families }
    }

    /// Edges whose target lies in `cols`.
    pub fn restrict_cols(&self, cols: &IntervalSet) -> GraphMultiset {
        let families = self
            .families
            .iter()
            .map(|(fam, f)| {
                let rows = IntervalSet::from_intervals(
                    cols.intervals().iter().map(|iv| fam.preimage(iv)).collect(),
                );
                (fam.clone(), f.restrict(&rows))
            })
            .filter(|(_, f)| !f.is_zero())
            .collect();
        GraphMultiset { families }
    }

    /// One partial map per family, defined on that family's support.
    pub fn support_maps(&self) -> Vec<PartialMap> {
        self.families
            .iter()
            .map(|(fam, f)| {
                PartialMap::canonical(
                    f.cells()
                        .iter()
                        .map(|(iv, _)| Atom::from_family(iv.clone(), fam.clone()))
                        .collect(),
                )
            })
            .collect()
    }

    /// Whether every edge of `map` carries positive multiplicity here.
    pub fn supports(&self, map: &PartialMap) -> bool {
        map.atoms()
            .iter()
            .all(|a| match self.families.get(&a.family) {
                Some(f) => IntervalSet::interval(a.src.lo.clone(), a.src.hi.clone())
                    .is_subset(&f.support()),
                None => false,
            })
    }

    /// Part of `map` whose graph lies in the support.
    pub fn restrict_to_support(&self, map: &PartialMap) -> PartialMap {
        let mut out = Vec::new();
        for a in map.atoms() {
            if let Some(f) = self.families.get(&a.family) {
                let support = f.support();
                out.extend(
                    overlapping(&support, &a.src).map(|iv| Atom::from_family(iv, a.family.clone())),
                );
            }
        }
        PartialMap::canonical(out)
    }

    /// A sub-multiset of multiplicity one with exactly one edge out of each
    /// point of `rows` that has any; families are taken in order.
    pub fn greedy_row_cover(&self, rows: &IntervalSet) -> GraphMultiset {
        let mut remaining = rows.clone();
        let mut atoms = Vec::new();
        for (fam, f) in &self.families {
            let take = f.support().intersect(&remaining);
            if take.is_empty() {
                continue;
            }
            remaining = remaining.subtract(&take);
            atoms.extend(
                take.intervals()
                    .iter()
                    .map(|iv| (Atom::from_family(iv.clone(), fam.clone()), 1)),
            );
        }
        GraphMultiset::from_atoms(atoms)
    }

    /// A sub-multiset of multiplicity one with exactly one edge into each
    /// point of `cols` that has any.
    pub fn greedy_col_cover(&self, cols: &IntervalSet) -> GraphMultiset {
        self.flip().greedy_row_cover(cols).flip()
    }
}

/// Pairs two equal-measure interval lists in order by slope `+1` pieces:
/// the `t`-th unit of arc length of `src` goes to the `t`-th of `dst`. The
/// lists may overlap each other or themselves.
pub fn monotone_pairing(src: &[Interval], dst: &[Interval]) -> Result<Vec<Atom>> {
    let total = |ivs: &[Interval]| ivs.iter().map(Interval::length).sum::<Rational>();
    if total(src) != total(dst) {
        return Err(Error::MassMismatch {
            expected: total(src),
            actual: total(dst),
        });
    }
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut a_lo = src.first().map(|iv| iv.lo.clone());
    let mut b_lo = dst.first().map(|iv| iv.lo.clone());
    while i < src.len() && j < dst.len() {
        let (a, b) = (a_lo.clone().unwrap(), b_lo.clone().unwrap());
        let a_left = &src[i].hi - &a;
        let b_left = &dst[j].hi - &b;
        let len = if a_left <= b_left {
            a_left.clone()
        } else {
            b_left.clone()
        };
        if len.is_positive() {
            let piece = Interval::new(a.clone(), &a + &len);
            out.push(Atom::from_family(piece, Family::new(Slope::Pos, &b - &a)));
        }
        if a_left == len {
            i += 1;
            a_lo = src.get(i).map(|iv| iv.lo.clone());
        } else {
            a_lo = Some(&a + &len);
        }
        if b_left == len {
            j += 1;
            b_lo = dst.get(j).map(|iv| iv.lo.clone());
        } else {
            b_lo = Some(&b + &len);
        }
    }
    Ok(out)
}

impl fmt::Debug for GraphMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.entries().iter().map(|(a, m)| format!("{a:?} ×{m}")))
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct EntryRepr {
    src: [Rational; 2],
    slope: Slope,
    offset: Rational,
    multiplicity: i64,
}

impl Serialize for GraphMultiset {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<EntryRepr> = self
            .entries()
            .into_iter()
            .map(|(a, m)| EntryRepr {
                src: [a.src.lo.clone(), a.src.hi.clone()],
                slope: a.family.slope,
                offset: a.family.offset.clone(),
                multiplicity: m,
            })
            .collect();
        entries.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GraphMultiset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<EntryRepr>::deserialize(deserializer)?;
        let mut atoms = Vec::with_capacity(entries.len());
        for e in entries {
            if e.multiplicity <= 0 {
                return Err(serde::de::Error::custom("multiplicity must be positive"));
            }
            let [lo, hi] = e.src;
            let atom = Atom::new(Interval::new(lo, hi), e.slope, e.offset)
                .map_err(serde::de::Error::custom)?;
            atoms.push((atom, e.multiplicity));
        }
        Ok(GraphMultiset::from_atoms(atoms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partial_map::tests::arb_map;
    use proptest::prelude::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    fn half_shift() -> PartialMap {
        PartialMap::new(vec![
            Atom::translation(r(0, 1), r(1, 2), r(1, 2)).unwrap(),
            Atom::translation(r(1, 2), r(1, 1), r(-1, 2)).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn doubling_multiplies() {
        let t = half_shift();
        let g = GraphMultiset::from_maps([&t, &t]);
        let entries = g.entries();
        assert_eq!(entries.len(), 2);
        assert!(entries.iter().all(|(_, m)| *m == 2));
        assert_eq!(g.mass(), r(2, 1));
    }

    #[test]
    fn distance_counts_unmatched_mass() {
        let id = PartialMap::identity();
        let a = GraphMultiset::from_maps([&id, &id]);
        let b = GraphMultiset::from_maps([&id, &half_shift()]);
        assert_eq!(a.distance(&b), r(2, 1));
        assert_eq!(a.distance(&a), r(0, 1));
    }

    #[test]
    fn flip_of_shift_and_reflection() {
        let t = half_shift();
        let g = GraphMultiset::from_map(&t, 1);
        assert!(g.is_symmetric());
        let up = GraphMultiset::from_map(
            &PartialMap::from_atom(Atom::translation(r(0, 1), r(1, 4), r(1, 2)).unwrap()),
            1,
        );
        let down = GraphMultiset::from_map(
            &PartialMap::from_atom(Atom::translation(r(1, 2), r(3, 4), r(-1, 2)).unwrap()),
            1,
        );
        assert_eq!(up.flip(), down);
        let refl = GraphMultiset::from_map(
            &PartialMap::from_atom(Atom::reflection(r(0, 1), r(1, 4), r(1, 1)).unwrap()),
            1,
        );
        let refl_back = GraphMultiset::from_map(
            &PartialMap::from_atom(Atom::reflection(r(3, 4), r(1, 1), r(1, 1)).unwrap()),
            1,
        );
        assert_eq!(refl.flip(), refl_back);
    }

    #[test]
    fn covers_pick_one_edge_per_point() {
        let id = PartialMap::identity();
        let g = GraphMultiset::from_maps([&id, &id, &half_shift()]);
        let rows = IntervalSet::interval(r(1, 4), r(3, 4));
        let cover = g.greedy_row_cover(&rows);
        assert_eq!(cover.row_mass(), StepFn::indicator(&rows));
        assert!(g.contains(&cover));
        let cols = cover.col_mass();
        assert_eq!(cols.integral(), r(1, 2));
        let cc = g.greedy_col_cover(&rows);
        assert_eq!(cc.col_mass(), StepFn::indicator(&rows));
    }

    #[test]
    fn pairing_is_monotone() {
        let src = [
            Interval::new(r(0, 1), r(1, 4)),
            Interval::new(r(1, 2), r(3, 4)),
        ];
        let dst = [Interval::new(r(1, 8), r(5, 8))];
        let atoms = monotone_pairing(&src, &dst).unwrap();
        let map = PartialMap::new(atoms).unwrap();
        assert_eq!(map.apply(&r(1, 2)), Some(r(3, 8)));
        assert_eq!(map.image(), IntervalSet::interval(r(1, 8), r(5, 8)));
        assert!(monotone_pairing(&src, &dst[..0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = GraphMultiset::from_maps([&half_shift(), &half_shift()]);
        let json = serde_json::to_string(&g).unwrap();
        assert!(json.contains("\"multiplicity\":2"));
        let back: GraphMultiset = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }

    proptest! {
        #[test]
        fn flip_is_mass_preserving_involution(maps in prop::collection::vec(arb_map(), 1..4)) {
            let g = GraphMultiset::from_maps(&maps);
            prop_assert_eq!(g.flip().flip(), g.clone());
            prop_assert_eq!(g.flip().mass(), g.mass());
            prop_assert_eq!(g.flip().row_mass(), g.col_mass());
        }

        #[test]
        fn distance_is_a_metric(a in arb_map(), b in arb_map(), c in arb_map()) {
            let (ga, gb, gc) = (GraphMultiset::from_map(&a, 1), GraphMultiset::from_map(&b, 1), GraphMultiset::from_map(&c, 1));
            prop_assert_eq!(ga.distance(&gb), gb.distance(&ga));
            prop_assert!(ga.distance(&gc) <= ga.distance(&gb) + gb.distance(&gc));
            prop_assert_eq!(ga.distance(&ga), Rational::zero());
        }

        #[test]
        fn row_and_col_mass_agree_in_total(maps in prop::collection::vec(arb_map(), 1..4)) {
            let g = GraphMultiset::from_maps(&maps);
            prop_assert_eq!(g.row_mass().integral(), g.mass());
            prop_assert_eq!(g.col_mass().integral(), g.mass());
        }
    }
}
