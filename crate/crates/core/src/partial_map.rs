//! Measure-preserving partial isomorphisms of `[0,1)` built from affine atoms
//! of slope `±1`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::intervals::{Interval, IntervalSet};
use crate::rational::Rational;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Slope {
    Pos,
    Neg,
}

impl Slope {
    pub fn sign(self) -> i64 {
        match self {
            Slope::Pos => 1,
            Slope::Neg => -1,
        }
    }

    pub fn times(self, other: Slope) -> Slope {
        if self == other {
            Slope::Pos
        } else {
            Slope::Neg
        }
    }

    fn apply(self, x: &Rational) -> Rational {
        match self {
            Slope::Pos => x.clone(),
            Slope::Neg => -x,
        }
    }
}

impl Serialize for Slope {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_i64(self.sign())
    }
}

impl<'de> Deserialize<'de> for Slope {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match i64::deserialize(deserializer)? {
            1 => Ok(Slope::Pos),
            -1 => Ok(Slope::Neg),
            other => Err(serde::de::Error::custom(format!(
                "slope must be 1 or -1, got {other}"
            ))),
        }
    }
}

/// The affine law `x ↦ slope·x + offset` shared by graph atoms. Graphs of two
/// different families meet in at most one point.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Family {
    pub slope: Slope,
    pub offset: Rational,
}

impl Family {
    pub fn new(slope: Slope, offset: Rational) -> Self {
        Family { slope, offset }
    }

    pub fn identity() -> Self {
        Family::new(Slope::Pos, Rational::zero())
    }

    pub fn apply(&self, x: &Rational) -> Rational {
        self.slope.apply(x) + &self.offset
    }

    pub fn image(&self, src: &Interval) -> Interval {
        match self.slope {
            Slope::Pos => src.translate(&self.offset),
            Slope::Neg => src.reflect(&self.offset),
        }
    }

    /// Sources whose image is `target` (the inverse law applied to an interval).
    pub fn preimage(&self, target: &Interval) -> Interval {
        self.inverse().image(target)
    }

    pub fn inverse(&self) -> Family {
        match self.slope {
            Slope::Pos => Family::new(Slope::Pos, -&self.offset),
            Slope::Neg => self.clone(),
        }
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &Family) -> Family {
        Family::new(
            self.slope.times(inner.slope),
            self.slope.apply(&inner.offset) + &self.offset,
        )
    }
}

/// One affine piece of a partial map: `x ↦ slope·x + offset` on `src`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub src: Interval,
    pub family: Family,
}

impl Atom {
    /// Checked constructor: `src` must be a non-empty subinterval of `[0,1)`
    /// and its image must stay inside `[0,1)`.
    pub fn new(src: Interval, slope: Slope, offset: Rational) -> Result<Atom> {
        let atom = Atom {
            src,
            family: Family::new(slope, offset),
        };
        let unit = Interval::new(Rational::zero(), Rational::one());
        let inside = |iv: &Interval| iv.lo >= unit.lo && iv.hi <= unit.hi;
        if atom.src.is_empty() || !inside(&atom.src) || !inside(&atom.image()) {
            return Err(Error::InvalidAtom(format!("{atom:?}")));
        }
        Ok(atom)
    }

    pub(crate) fn from_family(src: Interval, family: Family) -> Atom {
        Atom { src, family }
    }

    pub fn translation(lo: Rational, hi: Rational, offset: Rational) -> Result<Atom> {
        Atom::new(Interval::new(lo, hi), Slope::Pos, offset)
    }

    /// `x ↦ about - x` on `[lo, hi)`.
    pub fn reflection(lo: Rational, hi: Rational, about: Rational) -> Result<Atom> {
        Atom::new(Interval::new(lo, hi), Slope::Neg, about)
    }

    pub fn slope(&self) -> Slope {
        self.family.slope
    }

    pub fn offset(&self) -> &Rational {
        &self.family.offset
    }

    pub fn image(&self) -> Interval {
        self.family.image(&self.src)
    }

    pub fn apply(&self, x: &Rational) -> Option<Rational> {
        self.src.contains(x).then(|| self.family.apply(x))
    }

    pub fn inverse(&self) -> Atom {
        Atom::from_family(self.image(), self.family.inverse())
    }

    pub fn restrict(&self, to: &Interval) -> Option<Atom> {
        self.src
            .intersect(to)
            .map(|src| Atom::from_family(src, self.family.clone()))
    }

    /// The part of `self` whose image lies in `target`.
    pub fn restrict_image(&self, target: &Interval) -> Option<Atom> {
        self.image()
            .intersect(target)
            .map(|img| Atom::from_family(self.family.preimage(&img), self.family.clone()))
    }

    pub fn length(&self) -> Rational {
        self.src.length()
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.family.slope == Slope::Pos {
            ""
        } else {
            "-"
        };
        write!(
            f,
            "{:?}: x ↦ {}x + {:?}",
            self.src, sign, self.family.offset
        )
    }
}

#[derive(Serialize, Deserialize)]
struct AtomRepr {
    src: [Rational; 2],
    slope: Slope,
    offset: Rational,
}

impl Serialize for Atom {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        AtomRepr {
            src: [self.src.lo.clone(), self.src.hi.clone()],
            slope: self.family.slope,
            offset: self.family.offset.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Atom {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let AtomRepr {
            src: [lo, hi],
            slope,
            offset,
        } = AtomRepr::deserialize(deserializer)?;
        Atom::new(Interval::new(lo, hi), slope, offset).map_err(serde::de::Error::custom)
    }
}

/// Injective finite union of atoms: sources pairwise disjoint, images pairwise
/// disjoint. Stored sorted by source with contiguous same-family atoms merged,
/// so structural equality is equality of maps up to measure zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PartialMap {
    atoms: Vec<Atom>,
}

impl PartialMap {
    pub fn empty() -> Self {
        PartialMap::default()
    }

    pub fn identity() -> Self {
        PartialMap::identity_on(&IntervalSet::full())
    }

    pub fn identity_on(set: &IntervalSet) -> Self {
        PartialMap {
            atoms: set
                .intervals()
                .iter()
                .map(|iv| Atom::from_family(iv.clone(), Family::identity()))
                .collect(),
        }
    }

    pub fn from_atom(atom: Atom) -> Self {
        PartialMap { atoms: vec![atom] }
    }

    /// Checked constructor; fails with [`Error::Overlap`] when sources or
    /// images overlap in positive measure.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let map = PartialMap::canonical(atoms);
        for w in map.atoms.windows(2) {
            if w[1].src.lo < w[0].src.hi {
                return Err(Error::Overlap(format!("sources {:?} and {:?}", w[0], w[1])));
            }
        }
        let mut images: Vec<Interval> = map.atoms.iter().map(Atom::image).collect();
        images.sort();
        for w in images.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(Error::Overlap(format!("images {:?} and {:?}", w[0], w[1])));
            }
        }
        Ok(map)
    }

    /// Canonical form without the injectivity check; callers guarantee it.
    pub(crate) fn canonical(mut atoms: Vec<Atom>) -> Self {
        atoms.retain(|a| !a.src.is_empty());
        atoms.sort_by(|a, b| a.src.lo.cmp(&b.src.lo));
        let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            match out.last_mut() {
                Some(last) if last.family == atom.family && last.src.hi == atom.src.lo => {
                    last.src.hi = atom.src.hi;
                }
                _ => out.push(atom),
            }
        }
        PartialMap { atoms: out }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn domain(&self) -> IntervalSet {
        IntervalSet::from_intervals(self.atoms.iter().map(|a| a.src.clone()).collect())
    }

    pub fn image(&self) -> IntervalSet {
        IntervalSet::from_intervals(self.atoms.iter().map(Atom::image).collect())
    }

    /// Measure of the domain (equal to the measure of the image).
    pub fn measure(&self) -> Rational {
        self.atoms.iter().map(Atom::length).sum()
    }

    pub fn apply(&self, x: &Rational) -> Option<Rational> {
        let idx = self.atoms.partition_point(|a| &a.src.hi <= x);
        self.atoms.get(idx).and_then(|a| a.apply(x))
    }

    pub fn invert(&self) -> PartialMap {
        PartialMap::canonical(self.atoms.iter().map(Atom::inverse).collect())
    }

    /// `outer ∘ inner`, defined on `inner⁻¹(domain(outer))`.
    pub fn compose(outer: &PartialMap, inner: &PartialMap) -> PartialMap {
        let mut out = Vec::new();
        for g in &inner.atoms {
            let img = g.image();
            let start = outer.atoms.partition_point(|f| f.src.hi <= img.lo);
            for f in outer.atoms[start..]
                .iter()
                .take_while(|f| f.src.lo < img.hi)
            {
                if let Some(mid) = img.intersect(&f.src) {
                    let src = g.family.preimage(&mid);
                    out.push(Atom::from_family(src, f.family.after(&g.family)));
                }
            }
        }
        PartialMap::canonical(out)
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &PartialMap) -> PartialMap {
        PartialMap::compose(self, inner)
    }

    pub fn restrict(&self, to: &IntervalSet) -> PartialMap {
        let mut out = Vec::new();
        for a in &self.atoms {
            for piece in overlapping(to, &a.src) {
                out.push(Atom::from_family(piece, a.family.clone()));
            }
        }
        PartialMap { atoms: out }
    }

    /// Restriction to the points whose image lies in `target`.
    pub fn restrict_image(&self, target: &IntervalSet) -> PartialMap {
        let mut out = Vec::new();
        for a in &self.atoms {
            for piece in overlapping(target, &a.image()) {
                out.push(Atom::from_family(
                    a.family.preimage(&piece),
                    a.family.clone(),
                ));
            }
        }
        PartialMap::canonical(out)
    }

    pub fn image_of(&self, s: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for a in &self.atoms {
            for piece in overlapping(s, &a.src) {
                out.push(a.family.image(&piece));
            }
        }
        IntervalSet::from_intervals(out)
    }

    pub fn preimage_of(&self, s: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for a in &self.atoms {
            for piece in overlapping(s, &a.image()) {
                out.push(a.family.preimage(&piece));
            }
        }
        IntervalSet::from_intervals(out)
    }

    /// Union of maps with pairwise disjoint sources and images.
    pub fn glue<'a>(maps: impl IntoIterator<Item = &'a PartialMap>) -> Result<PartialMap> {
        let atoms = maps
            .into_iter()
            .flat_map(|m| m.atoms.iter().cloned())
            .collect();
        PartialMap::new(atoms)
    }

    /// The common part of the graphs of `f` and `g`.
    pub fn graph_intersect(f: &PartialMap, g: &PartialMap) -> PartialMap {
        let mut by_family: BTreeMap<&Family, Vec<&Interval>> = BTreeMap::new();
        for a in &g.atoms {
            by_family.entry(&a.family).or_default().push(&a.src);
        }
        let mut out = Vec::new();
        for a in &f.atoms {
            if let Some(srcs) = by_family.get(&a.family) {
                out.extend(srcs.iter().filter_map(|s| a.restrict(s)));
            }
        }
        PartialMap::canonical(out)
    }

    pub fn is_automorphism(&self) -> bool {
        self.domain() == IntervalSet::full() && self.image() == IntervalSet::full()
    }
}

/// Intersections of `set` with `iv`, in order.
pub(crate) fn overlapping<'a>(
    set: &'a IntervalSet,
    iv: &'a Interval,
) -> impl Iterator<Item = Interval> + 'a {
    let ivs = set.intervals();
    let start = ivs.partition_point(|s| s.hi <= iv.lo);
    ivs[start..]
        .iter()
        .take_while(move |s| s.lo < iv.hi)
        .filter_map(move |s| s.intersect(iv))
}

impl fmt::Debug for PartialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.atoms).finish()
    }
}

impl Serialize for PartialMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.atoms.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PartialMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let atoms = Vec::<Atom>::deserialize(deserializer)?;
        PartialMap::new(atoms).map_err(serde::de::Error::custom)
    }
}
