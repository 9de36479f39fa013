//! Doubly stochastic elements: finite families of partial maps whose domains
//! and images each cover `[0,1)` exactly `n` times.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{BadCell, Error, Result};
use crate::graph::GraphMultiset;
use crate::intervals::{Interval, IntervalSet};
use crate::partial_map::{Atom, Family, PartialMap};
use crate::rational::Rational;
use crate::step::StepFn;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "DseRepr", into = "DseRepr")]
pub struct Dse {
    multiplicity: u64,
    maps: Vec<PartialMap>,
    matrix: OnceLock<GraphMultiset>,
}

/// Unvalidated wire form of a [`Dse`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DseRepr {
    pub multiplicity: u64,
    pub maps: Vec<PartialMap>,
}

impl TryFrom<DseRepr> for Dse {
    type Error = Error;

    fn try_from(repr: DseRepr) -> Result<Dse> {
        Dse::new(repr.maps, repr.multiplicity)
    }
}

impl From<Dse> for DseRepr {
    fn from(d: Dse) -> DseRepr {
        DseRepr {
            multiplicity: d.multiplicity,
            maps: d.maps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverageCell {
    pub lo: Rational,
    pub hi: Rational,
    pub count: i64,
}

/// Exact coverage counts of domains and images over `[0,1)`.
#[derive(Clone, Debug, Serialize)]
pub struct CoverageReport {
    pub multiplicity: u64,
    pub domain: Vec<CoverageCell>,
    pub image: Vec<CoverageCell>,
    pub pass: bool,
}

impl CoverageReport {
    pub fn bad_cells(&self) -> Vec<BadCell> {
        let n = self.multiplicity as i64;
        let side = |cells: &[CoverageCell], name: &'static str| -> Vec<BadCell> {
            cells
                .iter()
                .filter(|c| c.count != n)
                .map(|c| BadCell {
                    lo: c.lo.clone(),
                    hi: c.hi.clone(),
                    side: name,
                    count: c.count as u64,
                })
                .collect()
        };
        let mut out = side(&self.domain, "domain");
        out.extend(side(&self.image, "image"));
        out
    }
}

fn coverage_cells(f: &StepFn) -> Vec<CoverageCell> {
    f.full_cells()
        .into_iter()
        .map(|(iv, count)| CoverageCell {
            lo: iv.lo,
            hi: iv.hi,
            count,
        })
        .collect()
}

/// Coverage of `maps` against the claimed multiplicity `n`.
pub fn validate(maps: &[PartialMap], n: u64) -> CoverageReport {
    let dom = StepFn::from_pieces(
        maps.iter()
            .flat_map(|m| m.atoms().iter().map(|a| (a.src.clone(), 1))),
    );
    let img = StepFn::from_pieces(
        maps.iter()
            .flat_map(|m| m.atoms().iter().map(|a| (a.image(), 1))),
    );
    let domain = coverage_cells(&dom);
    let image = coverage_cells(&img);
    let pass = n > 0 && domain.iter().chain(&image).all(|c| c.count == n as i64);
    CoverageReport {
        multiplicity: n,
        domain,
        image,
        pass,
    }
}

impl Dse {
    pub fn new(maps: Vec<PartialMap>, multiplicity: u64) -> Result<Dse> {
        let report = validate(&maps, multiplicity);
        if !report.pass {
            return Err(Error::InvalidDse {
                multiplicity,
                cells: report.bad_cells(),
            });
        }
        let maps = maps.into_iter().filter(|m| !m.is_empty()).collect();
        Ok(Dse::from_valid(maps, multiplicity))
    }

    fn from_valid(maps: Vec<PartialMap>, multiplicity: u64) -> Dse {
        Dse {
            multiplicity,
            maps,
            matrix: OnceLock::new(),
        }
    }

    pub fn identity() -> Dse {
        Dse::from_valid(vec![PartialMap::identity()], 1)
    }

    pub fn multiplicity(&self) -> u64 {
        self.multiplicity
    }

    pub fn maps(&self) -> &[PartialMap] {
        &self.maps
    }

    pub fn validate(&self) -> CoverageReport {
        validate(&self.maps, self.multiplicity)
    }

    /// The associated matrix: `Σ_i χ(graph φ_i)`.
    pub fn associated_matrix(&self) -> &GraphMultiset {
        self.matrix
            .get_or_init(|| GraphMultiset::from_maps(&self.maps))
    }

    pub fn distance(a: &Dse, b: &Dse) -> Result<Rational> {
        if a.multiplicity != b.multiplicity {
            return Err(Error::MultiplicityMismatch(a.multiplicity, b.multiplicity));
        }
        Ok(a.associated_matrix().distance(b.associated_matrix()))
    }

    pub fn equivalent(a: &Dse, b: &Dse) -> bool {
        a.multiplicity == b.multiplicity && a.associated_matrix() == b.associated_matrix()
    }

    pub fn inverse(&self) -> Dse {
        Dse::from_valid(
            self.maps.iter().map(PartialMap::invert).collect(),
            self.multiplicity,
        )
    }

    /// `Φ ⊔ Φ⁻¹`, of doubled multiplicity.
    pub fn symmetrize(&self) -> Dse {
        let mut maps = self.maps.clone();
        maps.extend(self.maps.iter().map(PartialMap::invert));
        Dse::from_valid(maps, 2 * self.multiplicity)
    }

    pub fn is_symmetric(&self) -> bool {
        self.associated_matrix().is_symmetric()
    }

    /// `N(C) = ⋃_i φ_i(C ∩ dom φ_i)`.
    pub fn neighbor_set(&self, c: &IntervalSet) -> IntervalSet {
        self.maps
            .iter()
            .fold(IntervalSet::empty(), |acc, m| acc.union(&m.image_of(c)))
    }

    /// Disjoint union of two DSEs; multiplicities add.
    pub fn disjoint_union(&self, other: &Dse) -> Dse {
        let mut maps = self.maps.clone();
        maps.extend(other.maps.iter().cloned());
        Dse::from_valid(maps, self.multiplicity + other.multiplicity)
    }
}

/// A finite DSE of multiplicity `n` whose associated matrix is `m`.
///
/// Over each cell of the common source refinement the fiber of `m` lists `n`
/// edges; the `j`-th of them (families in sorted order) defines the total
/// function `θ_j`. Each `θ_j` is then split into injective pieces: on every
/// target cell, its preimages are ranked by position and the `k`-th smallest
/// goes to the `k`-th piece.
pub fn normalize_cover(m: &GraphMultiset, n: u64) -> Result<Dse> {
    let target = StepFn::constant_on(&IntervalSet::full(), n as i64);
    if n == 0 || m.row_mass() != target || m.col_mass() != target {
        return Err(Error::NotDoublyStochastic(format!(
            "row and column mass must be constantly {n}"
        )));
    }
    let mut points: Vec<&Rational> = m
        .families()
        .flat_map(|(_, f)| f.cells().iter().flat_map(|(iv, _)| [&iv.lo, &iv.hi]))
        .collect();
    points.sort();
    points.dedup();

    let mut totals: Vec<Vec<Atom>> = vec![Vec::new(); n as usize];
    for w in points.windows(2) {
        let cell = Interval::new(w[0].clone(), w[1].clone());
        let mut fiber: Vec<&Family> = Vec::with_capacity(n as usize);
        for (fam, f) in m.families() {
            let mult = f.value_at(&cell.lo);
            fiber.extend(std::iter::repeat_n(fam, mult as usize));
        }
        debug_assert_eq!(fiber.len(), n as usize);
        for (j, fam) in fiber.into_iter().enumerate() {
            totals[j].push(Atom::from_family(cell.clone(), fam.clone()));
        }
    }

    let mut maps = Vec::new();
    for atoms in totals {
        maps.extend(split_by_rank(atoms));
    }
    Dse::new(maps, n)
}

/// Splits a possibly non-injective function (atoms with disjoint sources)
/// into injective maps by preimage rank on each target cell.
fn split_by_rank(atoms: Vec<Atom>) -> Vec<PartialMap> {
    let mut points: Vec<Rational> = atoms
        .iter()
        .flat_map(|a| {
            let img = a.image();
            [img.lo, img.hi]
        })
        .collect();
    points.sort();
    points.dedup();
    // (target cell index, source position, atom index)
    let mut hits: Vec<(usize, Rational, usize)> = Vec::new();
    for (idx, a) in atoms.iter().enumerate() {
        let img = a.image();
        let start = points.partition_point(|p| p < &img.lo);
        for c in start..points.len() - 1 {
            if points[c] >= img.hi {
                break;
            }
            let cell = Interval::new(points[c].clone(), points[c + 1].clone());
            hits.push((c, a.family.preimage(&cell).lo, idx));
        }
    }
    hits.sort();
    let mut ranked: Vec<Vec<Atom>> = Vec::new();
    let mut i = 0;
    while i < hits.len() {
        let c = hits[i].0;
        let cell = Interval::new(points[c].clone(), points[c + 1].clone());
        let mut rank = 0;
        while i < hits.len() && hits[i].0 == c {
            let a = &atoms[hits[i].2];
            if ranked.len() <= rank {
                ranked.push(Vec::new());
            }
            ranked[rank].push(Atom::from_family(
                a.family.preimage(&cell),
                a.family.clone(),
            ));
            rank += 1;
            i += 1;
        }
    }
    ranked.into_iter().map(PartialMap::canonical).collect()
}
