//! Orientations of symmetric graph multisets and their balancing.
//!
//! A division of a symmetric multiset `G` with row mass `2n` is a
//! sub-multiset `H` with `H + flip(H) = G`. Its error `∫|n − d_H|` vanishes
//! exactly when every point has out-degree `n`; better paths lower it.

use serde::Serialize;

use crate::dse::{normalize_cover, Dse};
use crate::error::{Error, Result};
use crate::extension::near_full_piece;
use crate::graph::{monotone_pairing, GraphMultiset};
use crate::intervals::{Interval, IntervalSet};
use crate::partial_map::{Atom, PartialMap, Slope};
use crate::rational::Rational;
use crate::step::StepFn;

#[derive(Clone, Debug, Serialize)]
pub struct Division {
    base: GraphMultiset,
    oriented: GraphMultiset,
    #[serde(skip)]
    n: u64,
    error: Rational,
}

/// Out-degree of `H` with the induced partition of `[0,1)`.
#[derive(Clone, Debug, Serialize)]
pub struct DegreeProfile {
    pub n: u64,
    pub degree: Vec<(Interval, i64)>,
    /// `{d_H > n}`
    pub plus: IntervalSet,
    /// `{d_H = n}`
    pub zero: IntervalSet,
    /// `{d_H < n}`
    pub minus: IntervalSet,
}

fn half_row_mass(g: &GraphMultiset) -> Result<u64> {
    let rows = g.row_mass();
    let cells = rows.full_cells();
    let first = cells[0].1;
    if cells.iter().any(|c| c.1 != first) || first <= 0 || first % 2 != 0 {
        return Err(Error::NotDoublyStochastic(
            "symmetric base must have constant even row mass".into(),
        ));
    }
    Ok(first as u64 / 2)
}

impl Division {
    /// Checks `H + flip(H) = G` and computes the error.
    pub fn new(base: GraphMultiset, oriented: GraphMultiset) -> Result<Division> {
        if !base.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
        let n = half_row_mass(&base)?;
        if oriented.add(&oriented.flip()) != base {
            return Err(Error::PreconditionViolated(
                "oriented part and its flip must partition the base".into(),
            ));
        }
        let error = degree_error(&oriented, n);
        Ok(Division {
            base,
            oriented,
            n,
            error,
        })
    }

    pub fn base(&self) -> &GraphMultiset {
        &self.base
    }

    pub fn oriented(&self) -> &GraphMultiset {
        &self.oriented
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn error(&self) -> &Rational {
        &self.error
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        let d = self.oriented.row_mass();
        let n = self.n as i64;
        DegreeProfile {
            n: self.n,
            degree: d.full_cells(),
            plus: d.level_set(|v| v > n),
            zero: d.level_set(|v| v == n),
            minus: d.level_set(|v| v < n),
        }
    }
}

fn degree_error(h: &GraphMultiset, n: u64) -> Rational {
    let full = StepFn::constant_on(&IntervalSet::full(), n as i64);
    full.sub(&h.row_mass()).abs_integral()
}

/// Orients every edge from the smaller to the larger endpoint; edges on the
/// diagonal are split evenly.
pub fn initial_division(g: &GraphMultiset) -> Result<Division> {
    if !g.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let mut atoms = Vec::new();
    for (fam, f) in g.families() {
        match fam.slope {
            Slope::Pos if fam.offset.is_positive() => {
                atoms.extend(
                    f.cells()
                        .iter()
                        .map(|(iv, m)| (Atom::from_family(iv.clone(), fam.clone()), *m)),
                );
            }
            Slope::Pos if fam.offset.is_zero() => {
                for (iv, m) in f.cells() {
                    if m % 2 != 0 {
                        return Err(Error::UnsplittableDiagonal {
                            lo: iv.lo.clone(),
                            hi: iv.hi.clone(),
                            multiplicity: *m as u64,
                        });
                    }
                    atoms.push((Atom::from_family(iv.clone(), fam.clone()), m / 2));
                }
            }
            Slope::Pos => {}
            Slope::Neg => {
                let below =
                    Interval::new(Rational::zero(), &fam.offset / Rational::from_integer(2));
                for (iv, m) in f.cells() {
                    if let Some(part) = iv.intersect(&below) {
                        atoms.push((Atom::from_family(part, fam.clone()), *m));
                    }
                }
            }
        }
    }
    Division::new(g.clone(), GraphMultiset::from_atoms(atoms))
}

/// A chain `V_0 → V_1 → … → V_k` of pieces inside `H` from the
/// over-degree region to the under-degree region.
#[derive(Clone, Debug, Serialize)]
pub struct BetterPath {
    pub links: Vec<PartialMap>,
    pub vertices: Vec<IntervalSet>,
}

impl BetterPath {
    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    fn all_vertices(&self) -> IntervalSet {
        self.vertices
            .iter()
            .fold(IntervalSet::empty(), |acc, v| acc.union(v))
    }

    fn graph(&self) -> GraphMultiset {
        GraphMultiset::from_maps(&self.links)
    }
}

fn greedy_fill(maps: &[PartialMap], allowed: &IntervalSet, forbidden: &IntervalSet) -> PartialMap {
    let mut domain = IntervalSet::empty();
    let mut blocked = forbidden.clone();
    let mut atoms = Vec::new();
    for m in maps {
        let available = allowed.subtract(&domain);
        if available.is_empty() {
            break;
        }
        let part = m.restrict(&available).restrict_image(&blocked.complement());
        if part.is_empty() {
            continue;
        }
        domain = domain.union(&part.domain());
        blocked = blocked.union(&part.image());
        atoms.extend(part.atoms().iter().cloned());
    }
    PartialMap::new(atoms).expect("greedy fill is injective")
}

/// Searches for a better path of length at most `max_len` whose vertices
/// avoid `consumed`. Layer `0` is the unconsumed over-degree region; layer
/// `j + 1` is the image of a maximal piece inside `H` from layers `0..=j`
/// into fresh territory. Once a layer meets the under-degree region the path
/// is recovered by walking back through the smallest available layers.
pub fn find_better_path(
    d: &Division,
    max_len: usize,
    consumed: &IntervalSet,
) -> Option<BetterPath> {
    let profile = d.degree_profile();
    let start = profile.plus.subtract(consumed);
    if start.is_empty() || max_len == 0 {
        return None;
    }
    let maps = d.oriented.support_maps();
    let mut links: Vec<PartialMap> = Vec::new();
    let mut reached = start.clone();
    let mut layers = vec![start];
    let walls = profile.plus.union(consumed);
    for _ in 0..max_len {
        let link = greedy_fill(&maps, &reached, &walls.union(&reached));
        let w = link.image();
        if w.is_empty() {
            return None;
        }
        let hit = w.intersect(&profile.minus);
        links.push(link);
        if !hit.is_empty() {
            return Some(walk_back(&links, &layers, &hit));
        }
        reached = reached.union(&w);
        layers.push(w);
    }
    None
}

/// `links[j]` maps part of `layers[0..=j]` onto `layers[j + 1]`; the last
/// link maps onto a set containing `hit`.
fn walk_back(links: &[PartialMap], layers: &[IntervalSet], hit: &IntervalSet) -> BetterPath {
    let mut chain = vec![links.len() - 1];
    let mut z = links[links.len() - 1].preimage_of(hit);
    loop {
        let top = *chain.last().expect("chain is non-empty");
        let i = (0..=top)
            .find(|&i| !z.intersect(&layers[i]).is_empty())
            .expect("link sources lie in earlier layers");
        z = z.intersect(&layers[i]);
        if i == 0 {
            break;
        }
        z = links[i - 1].preimage_of(&z);
        chain.push(i - 1);
    }
    chain.reverse();
    let mut out = BetterPath {
        links: Vec::with_capacity(chain.len()),
        vertices: vec![z.clone()],
    };
    let mut v = z;
    for &lvl in &chain {
        let phi = links[lvl].restrict(&v);
        v = phi.image();
        out.links.push(phi);
        out.vertices.push(v.clone());
    }
    out
}

/// Reverses the path: `H_1 = H − P + flip(P)`. The error must drop by exactly
/// `2·μ(V_0)`.
pub fn apply_better_path(d: &Division, p: &BetterPath) -> Result<Division> {
    let bad = |why: &str| Err(Error::InvalidPath(why.into()));
    if p.is_empty() || p.vertices.len() != p.len() + 1 {
        return bad("a path needs at least one link and one more vertex set");
    }
    if p.vertices[0].is_empty() {
        return bad("empty starting set");
    }
    let profile = d.degree_profile();
    if !p.vertices[0].is_subset(&profile.plus) || !p.vertices[p.len()].is_subset(&profile.minus) {
        return bad("path must run from the over-degree to the under-degree region");
    }
    for (i, link) in p.links.iter().enumerate() {
        if link.domain() != p.vertices[i] || link.image() != p.vertices[i + 1] {
            return bad("link does not map its vertex set onto the next");
        }
    }
    let total: Rational = p.vertices.iter().map(IntervalSet::measure).sum();
    if p.all_vertices().measure() != total {
        return bad("vertex sets overlap");
    }
    let graph = p.graph();
    let rest = d
        .oriented
        .checked_sub(&graph)
        .map_err(|_| Error::InvalidPath("path leaves the oriented part".into()))?;
    let oriented = rest.add(&graph.flip());
    let next = Division::new(d.base.clone(), oriented)?;
    let expected = &d.error - Rational::from_integer(2) * p.vertices[0].measure();
    if next.error != expected {
        return Err(Error::BoundViolated(format!(
            "error went from {} to {}, expected {}",
            d.error, next.error, expected
        )));
    }
    Ok(next)
}

/// `(E / (7n³ + E))²`: the guaranteed error drop of one improvement.
pub fn improvement_bound(n: u64, error: &Rational) -> Rational {
    let c = Rational::from_integer(7 * (n * n * n) as i64);
    (error / (c + error)).square()
}

#[derive(Clone, Debug, Serialize)]
pub struct ImprovementStep {
    pub before: Rational,
    pub after: Rational,
    pub required: Rational,
    pub paths: usize,
    pub max_length: usize,
}

/// Reverses a maximal family of vertex-disjoint better paths of length at
/// most `⌊7n²/μ(P_+)⌋`.
pub fn improve_division(d: &Division) -> Result<Division> {
    improve_traced(d).map(|(d, _)| d)
}

fn improve_traced(d: &Division) -> Result<(Division, ImprovementStep)> {
    if d.error.is_zero() {
        return Err(Error::AlreadyPerfect);
    }
    let plus = d.degree_profile().plus.measure();
    let n = d.n;
    let k = (Rational::from_integer((7 * n * n) as i64) / &plus).floor();
    let k: usize = k.try_into().unwrap_or(usize::MAX);

    let mut consumed = IntervalSet::empty();
    let mut paths = Vec::new();
    while let Some(p) = find_better_path(d, k, &consumed) {
        consumed = consumed.union(&p.all_vertices());
        paths.push(p);
    }
    if paths.is_empty() {
        return Err(Error::NoProgress(format!(
            "no better path of length ≤ {k} at error {}",
            d.error
        )));
    }
    let mut next = d.clone();
    for p in &paths {
        next = apply_better_path(&next, p)?;
    }
    let required = improvement_bound(n, &d.error);
    if &d.error - &next.error < required {
        return Err(Error::BoundViolated(format!(
            "error dropped from {} to {}, less than {required}",
            d.error, next.error
        )));
    }
    let step = ImprovementStep {
        before: d.error.clone(),
        after: next.error.clone(),
        required,
        paths: paths.len(),
        max_length: paths.iter().map(BetterPath::len).max().unwrap_or(0),
    };
    Ok((next, step))
}

/// A division of `g` with error `< ε`.
pub fn near_perfect_division(g: &GraphMultiset, eps: &Rational) -> Result<Division> {
    near_perfect_division_traced(g, eps).map(|(d, _)| d)
}

pub fn near_perfect_division_traced(
    g: &GraphMultiset,
    eps: &Rational,
) -> Result<(Division, Vec<ImprovementStep>)> {
    if !eps.is_positive() {
        return Err(Error::PreconditionViolated("ε must be positive".into()));
    }
    let mut d = initial_division(g)?;
    let mut trail = Vec::new();
    while d.error >= *eps {
        let (next, step) = improve_traced(&d)?;
        d = next;
        trail.push(step);
    }
    Ok((d, trail))
}

/// Reverses length-1 better paths until no edge of `H` runs from the
/// over-degree region straight into the under-degree region.
fn eliminate_short_paths(mut d: Division) -> Result<Division> {
    loop {
        let profile = d.degree_profile();
        let maps = d.oriented.support_maps();
        let link = greedy_fill(&maps, &profile.plus, &profile.minus.complement());
        if link.is_empty() {
            return Ok(d);
        }
        let path = BetterPath {
            vertices: vec![link.domain(), link.image()],
            links: vec![link],
        };
        d = apply_better_path(&d, &path)?;
    }
}

/// Picks `need(x)` distinct edges of `g` out of every point `x`.
fn pick_out_edges(g: &GraphMultiset, need: &StepFn) -> Result<GraphMultiset> {
    let mut picked = GraphMultiset::new();
    for rows in need.layers() {
        let available = g.checked_sub(&picked)?;
        let cover = available.restrict_rows(&rows).greedy_row_cover(&rows);
        if cover.row_mass() != StepFn::indicator(&rows) {
            return Err(Error::PreconditionViolated(
                "not enough edges to prune".into(),
            ));
        }
        picked = picked.add(&cover);
    }
    Ok(picked)
}

/// Result of splitting a symmetric DSE.
#[derive(Clone, Debug)]
pub struct Split {
    pub half: Dse,
    pub division_error: Rational,
    /// `d(Ψ, S(half))`, recomputed.
    pub distance: Rational,
}

/// A DSE `Φ` of multiplicity `n` with `d(Ψ, S(Φ)) < ε` for a symmetric `Ψ` of
/// multiplicity `2n`.
///
/// A division with error `E < ε/4` is cleaned of length-1 better paths, the
/// excess out-edges of the over-degree region and excess in-edges of the
/// under-degree region are pruned, and translations restore row and column
/// mass `n`; the result differs from `H` by at most `2E` in mass.
pub fn symmetric_split(psi: &Dse, eps: &Rational) -> Result<Split> {
    let g = psi.associated_matrix();
    if !g.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    if !psi.multiplicity().is_multiple_of(2) {
        return Err(Error::PreconditionViolated(
            "multiplicity must be even".into(),
        ));
    }
    let n = psi.multiplicity() / 2;
    let d = near_perfect_division(g, &(eps / Rational::from_integer(4)))?;
    let d = eliminate_short_paths(d)?;
    let division_error = d.error.clone();

    let h = &d.oriented;
    let ni = n as i64;
    let deg = h.row_mass();
    let excess_out = deg.map_values(|v| (v - ni).max(0));
    let excess_in = deg.map_values(|v| (ni - v).max(0));
    let out_edges = pick_out_edges(h, &excess_out)?;
    let in_edges = pick_out_edges(&h.checked_sub(&out_edges)?.flip(), &excess_in)?.flip();
    let h1 = h.checked_sub(&out_edges)?.checked_sub(&in_edges)?;

    let full = StepFn::constant_on(&IntervalSet::full(), ni);
    let row_gap = full.sub(&h1.row_mass());
    let col_gap = full.sub(&h1.col_mass());
    let flat = |f: &StepFn| -> Vec<Interval> {
        f.layers()
            .into_iter()
            .flat_map(|s| s.intervals().to_vec())
            .collect()
    };
    let correction = monotone_pairing(&flat(&row_gap), &flat(&col_gap))?;
    let h2 = h1.add(&GraphMultiset::from_atoms(
        correction.into_iter().map(|a| (a, 1)),
    ));
    let half = normalize_cover(&h2, n)?;

    let distance = Dse::distance(psi, &half.symmetrize())?;
    if distance >= *eps {
        return Err(Error::BoundViolated(format!(
            "split distance {distance} not below {eps}"
        )));
    }
    Ok(Split {
        half,
        division_error,
        distance,
    })
}

/// A partial map with graph inside the support of the `2n`-regular symmetric
/// multiset `g`, defined on a set of measure `> 1 − ε`.
///
/// Splits `g` within `ε/2`, grows a piece of measure `> 1 − ε/2` in the half,
/// and keeps the part of it that lies in the support of `g`.
pub fn regular_graph_partial_automorphism(g: &GraphMultiset, eps: &Rational) -> Result<PartialMap> {
    let n = half_row_mass(g)?;
    let psi = normalize_cover(g, 2 * n)?;
    let half_eps = eps / Rational::from_integer(2);
    let split = symmetric_split(&psi, &half_eps)?;
    let piece = near_full_piece(&split.half, &half_eps)?;
    let map = g.restrict_to_support(piece.map());
    if map.measure() <= Rational::one() - eps {
        return Err(Error::BoundViolated(format!(
            "map of measure {} inside the support",
            map.measure()
        )));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::counterexample;

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

    fn sym_shift() -> Dse {
        Dse::new(vec![half_shift()], 1).unwrap().symmetrize()
    }

    #[test]
    fn initial_division_of_symmetrized_shift() {
        let d = initial_division(sym_shift().associated_matrix()).unwrap();
        let up = PartialMap::from_atom(Atom::translation(r(0, 1), r(1, 2), r(1, 2)).unwrap());
        assert_eq!(d.oriented(), &GraphMultiset::from_map(&up, 2));
        assert_eq!(d.error(), &Rational::one());
        let p = d.degree_profile();
        assert_eq!(p.plus, IntervalSet::interval(r(0, 1), r(1, 2)));
        assert_eq!(p.minus, IntervalSet::interval(r(1, 2), r(1, 1)));
    }

    #[test]
    fn diagonal_is_split_evenly() {
        let g = GraphMultiset::from_map(&PartialMap::identity(), 2);
        let d = initial_division(&g).unwrap();
        assert_eq!(
            d.oriented(),
            &GraphMultiset::from_map(&PartialMap::identity(), 1)
        );
        assert!(d.error().is_zero());
        let odd = GraphMultiset::from_map(&PartialMap::identity(), 1);
        assert!(matches!(
            initial_division(&odd),
            Err(Error::UnsplittableDiagonal { .. })
        ));
    }

    #[test]
    fn reflections_split_at_fixed_point() {
        let refl = PartialMap::from_atom(Atom::reflection(r(0, 1), r(1, 1), r(1, 1)).unwrap());
        let g = GraphMultiset::from_maps([&refl, &refl]);
        let d = initial_division(&g).unwrap();
        let lower = PartialMap::from_atom(Atom::reflection(r(0, 1), r(1, 2), r(1, 1)).unwrap());
        assert_eq!(d.oriented(), &GraphMultiset::from_map(&lower, 2));
    }

    #[test]
    fn asymmetric_base_is_rejected() {
        let g = counterexample(2).associated_matrix().clone();
        assert!(matches!(initial_division(&g), Err(Error::NotSymmetric)));
        let h = g.clone();
        assert!(Division::new(g, h).is_err());
    }

    #[test]
    fn single_path_fixes_shift() {
        let d = initial_division(sym_shift().associated_matrix()).unwrap();
        assert!(find_better_path(&d, 0, &IntervalSet::empty()).is_none());
        let p = find_better_path(&d, 1, &IntervalSet::empty()).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.vertices[0], IntervalSet::interval(r(0, 1), r(1, 2)));
        assert_eq!(p.vertices[1], IntervalSet::interval(r(1, 2), r(1, 1)));
        let fixed = apply_better_path(&d, &p).unwrap();
        assert!(fixed.error().is_zero());
        assert!(matches!(
            apply_better_path(&fixed, &p),
            Err(Error::InvalidPath(_))
        ));
        assert!(find_better_path(&fixed, 3, &IntervalSet::empty()).is_none());
    }

    #[test]
    fn empty_path_is_rejected() {
        let d = initial_division(sym_shift().associated_matrix()).unwrap();
        let p = BetterPath {
            links: vec![PartialMap::empty()],
            vertices: vec![IntervalSet::empty(), IntervalSet::empty()],
        };
        assert!(matches!(
            apply_better_path(&d, &p),
            Err(Error::InvalidPath(_))
        ));
    }

    #[test]
    fn improvement_examples() {
        let g = GraphMultiset::from_map(&PartialMap::identity(), 2);
        let perfect = initial_division(&g).unwrap();
        assert!(matches!(
            improve_division(&perfect),
            Err(Error::AlreadyPerfect)
        ));

        let d = initial_division(sym_shift().associated_matrix()).unwrap();
        let better = improve_division(&d).unwrap();
        assert!(better.error().is_zero());
        assert!(Rational::one() - better.error() >= r(1, 8).square());
    }

    #[test]
    fn near_perfect_examples() {
        let g = GraphMultiset::from_map(&PartialMap::identity(), 2);
        assert!(near_perfect_division(&g, &r(1, 2))
            .unwrap()
            .error()
            .is_zero());
        let (d, trail) =
            near_perfect_division_traced(sym_shift().associated_matrix(), &r(1, 2)).unwrap();
        assert!(d.error().is_zero());
        assert_eq!(trail.len(), 1);
    }

    #[test]
    fn split_examples() {
        let s = symmetric_split(&sym_shift(), &r(1, 100)).unwrap();
        assert_eq!(s.distance, Rational::zero());
        let t = Dse::new(vec![half_shift()], 1).unwrap();
        assert!(Dse::equivalent(&s.half, &t) || Dse::equivalent(&s.half, &t.inverse()));

        let id2 = Dse::new(vec![PartialMap::identity(), PartialMap::identity()], 2).unwrap();
        let s = symmetric_split(&id2, &r(1, 100)).unwrap();
        assert!(Dse::equivalent(&s.half, &Dse::identity()));
    }

    #[test]
    fn regular_graph_examples() {
        let g = GraphMultiset::from_map(&PartialMap::identity(), 2);
        assert_eq!(
            regular_graph_partial_automorphism(&g, &r(1, 8)).unwrap(),
            PartialMap::identity()
        );
        let m =
            regular_graph_partial_automorphism(sym_shift().associated_matrix(), &r(1, 8)).unwrap();
        assert_eq!(m, half_shift());
    }

    mod props {
        use super::*;
        use crate::dse::tests::arb_dse;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn initial_division_partitions_base(d in arb_dse(2)) {
                let s = d.symmetrize();
                let div = initial_division(s.associated_matrix()).unwrap();
                prop_assert_eq!(div.oriented().add(&div.oriented().flip()), div.base().clone());
                prop_assert_eq!(div.oriented().mass(), Rational::from_integer(2));
                let plus = div.degree_profile().plus.measure();
                prop_assert!(plus <= *div.error());
                prop_assert!(*div.error() <= Rational::from_integer(4) * plus);
            }

            #[test]
            fn each_path_drops_error_by_twice_its_start(d in arb_dse(2)) {
                let s = d.symmetrize();
                let mut div = initial_division(s.associated_matrix()).unwrap();
                while !div.error().is_zero() {
                    let p = find_better_path(&div, 64, &IntervalSet::empty()).unwrap();
                    let next = apply_better_path(&div, &p).unwrap();
                    let drop = div.error() - next.error();
                    prop_assert_eq!(drop, Rational::from_integer(2) * p.vertices[0].measure());
                    div = next;
                }
            }

            #[test]
            fn split_is_close(d in arb_dse(2)) {
                let s = d.symmetrize();
                let eps = Rational::new(1, 32);
                let sp = symmetric_split(&s, &eps).unwrap();
                prop_assert_eq!(sp.half.multiplicity(), 2);
                prop_assert!(sp.distance < eps);
                prop_assert!(sp.distance <= Rational::from_integer(4) * &sp.division_error);
            }
        }
    }
}
