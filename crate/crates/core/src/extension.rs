//! Pieces inside the support of a DSE and the augmenting-chain search that
//! grows them until they are defined almost everywhere.

use serde::Serialize;

use crate::dse::Dse;
use crate::error::{Error, Result};
use crate::intervals::IntervalSet;
use crate::partial_map::PartialMap;
use crate::rational::Rational;

/// A partial map whose graph lies in the support of its host's associated
/// matrix.
#[derive(Clone, Debug)]
pub struct Piece<'a> {
    map: PartialMap,
    host: &'a Dse,
}

impl<'a> Piece<'a> {
    pub fn new(map: PartialMap, host: &'a Dse) -> Result<Piece<'a>> {
        if !host.associated_matrix().supports(&map) {
            return Err(Error::PreconditionViolated(
                "graph of the map leaves the support of the host".into(),
            ));
        }
        Ok(Piece { map, host })
    }

    pub(crate) fn trusted(map: PartialMap, host: &'a Dse) -> Piece<'a> {
        debug_assert!(host.associated_matrix().supports(&map));
        Piece { map, host }
    }

    pub fn empty(host: &'a Dse) -> Piece<'a> {
        Piece {
            map: PartialMap::empty(),
            host,
        }
    }

    pub fn map(&self) -> &PartialMap {
        &self.map
    }

    pub fn into_map(self) -> PartialMap {
        self.map
    }

    pub fn host(&self) -> &'a Dse {
        self.host
    }

    pub fn domain(&self) -> IntervalSet {
        self.map.domain()
    }

    pub fn image(&self) -> IntervalSet {
        self.map.image()
    }

    pub fn measure(&self) -> Rational {
        self.map.measure()
    }

    pub fn is_valid(&self) -> bool {
        self.host.associated_matrix().supports(&self.map)
    }
}

/// An augmenting chain for a base piece `θ: A → B`: `links[i]` maps
/// `sources[i]` onto `targets[i]`, with `sources[0] ⊆ A^c`, the middle
/// sources equal to `θ⁻¹` of the preceding targets, and the last target in
/// `B^c`. The depth is the number of rerouted middle steps.
#[derive(Clone, Debug, Serialize)]
pub struct Extension {
    pub links: Vec<PartialMap>,
    pub sources: Vec<IntervalSet>,
    pub targets: Vec<IntervalSet>,
}

impl Extension {
    pub fn depth(&self) -> usize {
        self.links.len() - 1
    }

    pub fn gain(&self) -> Rational {
        self.sources[0].measure()
    }

    fn all_sources(&self) -> IntervalSet {
        self.sources
            .iter()
            .fold(IntervalSet::empty(), |acc, s| acc.union(s))
    }

    fn all_targets(&self) -> IntervalSet {
        self.targets
            .iter()
            .fold(IntervalSet::empty(), |acc, t| acc.union(t))
    }
}

/// One pass over `maps` in order, each absorbing all of its currently
/// available sources whose images avoid the blocked targets.
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
    PartialMap::canonical(atoms)
}

/// A piece with domain in `allowed` and image avoiding `forbidden` that no
/// single map of `host` can enlarge within those constraints.
pub fn maximal_piece<'a>(
    host: &'a Dse,
    allowed: &IntervalSet,
    forbidden: &IntervalSet,
) -> Piece<'a> {
    Piece::trusted(greedy_fill(host.maps(), allowed, forbidden), host)
}

/// A maximal piece from `a` avoiding `b` and the blocker's image, checked
/// against `μ(S) ≥ (μ(a) − μ(b))/2 − ((n−1)/(2n))·μ(dom blocker)`.
pub fn lemma_piece<'a>(
    host: &'a Dse,
    a: &IntervalSet,
    b: &IntervalSet,
    blocker: &Piece<'_>,
) -> Result<Piece<'a>> {
    if !a.is_disjoint(&blocker.domain()) || !b.is_disjoint(&blocker.image()) {
        return Err(Error::PreconditionViolated(
            "sets must avoid the blocker's domain and image".into(),
        ));
    }
    let piece = maximal_piece(host, a, &b.union(&blocker.image()));
    let n = Rational::from_integer(host.multiplicity() as i64);
    let two = Rational::from_integer(2);
    let bound = (a.measure() - b.measure()) / &two
        - (&n - Rational::one()) / (&two * &n) * blocker.measure();
    if piece.measure() < bound {
        return Err(Error::BoundViolated(format!(
            "piece of measure {} below {}",
            piece.measure(),
            bound
        )));
    }
    Ok(piece)
}

/// Sets already consumed by earlier extensions of the same round.
#[derive(Clone, Debug, Default)]
pub struct Occupied {
    pub sources: IntervalSet,
    pub targets: IntervalSet,
}

impl Occupied {
    fn absorb(&mut self, e: &Extension) {
        self.sources = self.sources.union(&e.all_sources());
        self.targets = self.targets.union(&e.all_targets());
    }
}

/// Searches for an extension of depth at most `max_depth` avoiding
/// `occupied`.
///
/// Builds a chain of maximal pieces: the first from the free part of `A^c`,
/// the `r`-th from `θ⁻¹(W_1 ∪ … ∪ W_r)` into fresh territory `W_{r+1}`. Once
/// some `W` reaches `B^c`, the chain is walked back to `A^c` through the
/// smallest available levels and the resulting sets are transported forward.
pub fn find_extension(
    host: &Dse,
    theta: &Piece<'_>,
    max_depth: usize,
    occupied: &Occupied,
) -> Option<Extension> {
    let a = theta.domain();
    let b = theta.image();
    let outside_b = b.complement();
    let mut sources = a.complement().subtract(&occupied.sources);
    if sources.is_empty() {
        return None;
    }
    let theta_inv = theta.map().invert();
    let mut links: Vec<PartialMap> = Vec::new();
    // θ⁻¹(W_i) for each reached layer.
    let mut pulled: Vec<IntervalSet> = Vec::new();
    let mut reached = IntervalSet::empty();
    for _ in 0..=max_depth {
        let link = greedy_fill(host.maps(), &sources, &occupied.targets.union(&reached));
        let w = link.image();
        if w.is_empty() {
            return None;
        }
        let escape = w.intersect(&outside_b);
        links.push(link);
        if !escape.is_empty() {
            return Some(backtrack(theta.map(), &theta_inv, &links, &pulled, &escape));
        }
        pulled.push(theta_inv.image_of(&w));
        reached = reached.union(&w);
        sources = theta_inv.image_of(&reached).subtract(&occupied.sources);
    }
    None
}

fn backtrack(
    theta: &PartialMap,
    theta_inv: &PartialMap,
    links: &[PartialMap],
    pulled: &[IntervalSet],
    escape: &IntervalSet,
) -> Extension {
    let mut level = links.len() - 1;
    let mut z = links[level].preimage_of(escape);
    let mut path = vec![level];
    while level > 0 {
        let i = (1..=level)
            .find(|&i| !z.intersect(&pulled[i - 1]).is_empty())
            .expect("chain sources lie in the pulled-back layers");
        let u = theta.image_of(&z.intersect(&pulled[i - 1]));
        level = i - 1;
        z = links[level].preimage_of(&u);
        path.push(level);
    }
    path.reverse();

    let mut ext = Extension {
        links: Vec::with_capacity(path.len()),
        sources: vec![z.clone()],
        targets: Vec::with_capacity(path.len()),
    };
    let mut s = z;
    for (step, &lvl) in path.iter().enumerate() {
        let phi = links[lvl].restrict(&s);
        let t = phi.image();
        ext.links.push(phi);
        if step + 1 < path.len() {
            s = theta_inv.image_of(&t);
            ext.sources.push(s.clone());
        }
        ext.targets.push(t);
    }
    ext
}

/// Reroutes `θ` along `e`: the result is defined on `A ∪ S_0` with image
/// `B ∪ T_{k+1}`.
pub fn apply_extension<'a>(theta: &Piece<'a>, e: &Extension) -> Result<Piece<'a>> {
    let bad = |why: &str| Err(Error::InvalidExtension(why.into()));
    let k = e.depth();
    if e.sources.len() != k + 1 || e.targets.len() != k + 1 {
        return bad("sources and targets must match the links");
    }
    let a = theta.domain();
    let b = theta.image();
    if e.sources[0].is_empty() {
        return bad("empty S_0");
    }
    if !e.sources[0].is_disjoint(&a) || !e.targets[k].is_disjoint(&b) {
        return bad("chain must start outside A and end outside B");
    }
    for i in 1..=k {
        if !e.sources[i].is_subset(&a) || !e.targets[i - 1].is_subset(&b) {
            return bad("middle of the chain must stay inside A and B");
        }
        if theta.map().preimage_of(&e.targets[i - 1]) != e.sources[i] {
            return bad("middle sources must be θ-preimages of the targets");
        }
    }
    for (i, link) in e.links.iter().enumerate() {
        if link.domain() != e.sources[i] || link.image() != e.targets[i] {
            return bad("link does not map its source onto its target");
        }
        if !theta.host().associated_matrix().supports(link) {
            return bad("link leaves the support of the host");
        }
    }
    let total: Rational = e.sources.iter().map(IntervalSet::measure).sum();
    if e.all_sources().measure() != total {
        return bad("sources overlap");
    }
    let rerouted = e.sources[1..]
        .iter()
        .fold(IntervalSet::empty(), |acc, s| acc.union(s));
    let kept = theta.map().restrict(&a.subtract(&rerouted));
    let map = PartialMap::glue(std::iter::once(&kept).chain(&e.links))
        .map_err(|err| Error::InvalidExtension(err.to_string()))?;
    Ok(Piece::trusted(map, theta.host()))
}

/// `(μ(A^c) / (7n + μ(A^c)))²`: the guaranteed growth of one enlargement.
pub fn growth_bound(n: u64, missing: &Rational) -> Rational {
    let seven_n = Rational::from_integer(7 * n as i64);
    (missing / (seven_n + missing)).square()
}

/// One enlargement step, with the data needed to audit it.
#[derive(Clone, Debug, Serialize)]
pub struct GrowthStep {
    pub before: Rational,
    pub after: Rational,
    pub required: Rational,
    pub extensions: usize,
    pub max_depth: usize,
}

/// Applies a maximal family of disjoint extensions of depth at most
/// `⌊7n/μ(A^c)⌋` and checks the growth bound.
pub fn enlarge_piece<'a>(host: &'a Dse, theta: &Piece<'a>) -> Result<Piece<'a>> {
    enlarge_traced(host, theta).map(|(p, _)| p)
}

fn enlarge_traced<'a>(host: &'a Dse, theta: &Piece<'a>) -> Result<(Piece<'a>, GrowthStep)> {
    let before = theta.measure();
    if before == Rational::one() {
        return Err(Error::AlreadyFull);
    }
    let missing = Rational::one() - &before;
    let n = host.multiplicity();
    let k = (Rational::from_integer(7 * n as i64) / &missing).floor();
    let k: usize = k.try_into().unwrap_or(usize::MAX);

    let mut occupied = Occupied::default();
    let mut found = Vec::new();
    while let Some(e) = find_extension(host, theta, k, &occupied) {
        occupied.absorb(&e);
        found.push(e);
    }
    if found.is_empty() {
        return Err(Error::NoProgress(format!(
            "no extension of depth ≤ {k} for a piece of measure {before}"
        )));
    }
    let mut piece = theta.clone();
    for e in &found {
        piece = apply_extension(&piece, e)?;
    }
    let after = piece.measure();
    let required = growth_bound(n, &missing);
    if after < &before + &required {
        return Err(Error::BoundViolated(format!(
            "piece grew from {before} to {after}, less than {required}"
        )));
    }
    let step = GrowthStep {
        before,
        after,
        required,
        extensions: found.len(),
        max_depth: found.iter().map(Extension::depth).max().unwrap_or(0),
    };
    Ok((piece, step))
}

/// A piece of measure `> 1 − ε`, grown from the greedy maximal piece.
pub fn near_full_piece<'a>(host: &'a Dse, eps: &Rational) -> Result<Piece<'a>> {
    near_full_piece_traced(host, eps).map(|(p, _)| p)
}

/// [`near_full_piece`] together with the audit trail of every enlargement.
pub fn near_full_piece_traced<'a>(
    host: &'a Dse,
    eps: &Rational,
) -> Result<(Piece<'a>, Vec<GrowthStep>)> {
    if !eps.is_positive() {
        return Err(Error::PreconditionViolated("ε must be positive".into()));
    }
    let threshold = Rational::one() - eps;
    let mut piece = maximal_piece(host, &IntervalSet::full(), &IntervalSet::empty());
    let mut trail = Vec::new();
    while piece.measure() <= threshold {
        let (next, step) = enlarge_traced(host, &piece)?;
        piece = next;
        trail.push(step);
    }
    Ok((piece, trail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::counterexample;
    use crate::partial_map::Atom;

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

    fn assert_maximal(host: &Dse, p: &Piece<'_>, allowed: &IntervalSet, forbidden: &IntervalSet) {
        let free = allowed.subtract(&p.domain());
        let covered = forbidden.union(&p.image());
        for m in host.maps() {
            assert!(m.image_of(&free).is_subset(&covered));
        }
    }

    #[test]
    fn maximal_piece_trivia() {
        let id = Dse::identity();
        assert!(
            maximal_piece(&id, &IntervalSet::empty(), &IntervalSet::empty())
                .map()
                .is_empty()
        );
        let p = maximal_piece(&id, &IntervalSet::full(), &IntervalSet::empty());
        assert_eq!(p.map(), &PartialMap::identity());
    }

    #[test]
    fn greedy_piece_on_counterexample() {
        let c = counterexample(2);
        let (full, none) = (IntervalSet::full(), IntervalSet::empty());
        let p = maximal_piece(&c, &full, &none);
        assert_eq!(p.domain(), IntervalSet::interval(r(0, 1), r(3, 4)));
        assert!(p.is_valid());
        assert_maximal(&c, &p, &full, &none);
        let rest = IntervalSet::interval(r(3, 4), r(1, 1));
        assert!(c.neighbor_set(&rest).is_subset(&p.image()));
    }

    #[test]
    fn lemma_piece_examples() {
        let id = Dse::identity();
        let empty = Piece::empty(&id);
        let none = IntervalSet::empty();
        assert!(lemma_piece(&id, &none, &none, &empty)
            .unwrap()
            .map()
            .is_empty());
        let half = IntervalSet::interval(r(0, 1), r(1, 2));
        assert_eq!(
            lemma_piece(&id, &half, &none, &empty).unwrap().measure(),
            r(1, 2)
        );

        let c = counterexample(2);
        let blocker = Piece::empty(&c);
        let a = IntervalSet::interval(r(3, 4), r(1, 1));
        let b = IntervalSet::interval(r(1, 4), r(1, 1));
        assert!(lemma_piece(&c, &a, &b, &blocker).is_ok());

        let p = maximal_piece(&id, &half, &none);
        assert!(matches!(
            lemma_piece(&id, &half, &none, &p),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn no_extension_for_full_piece() {
        let id = Dse::identity();
        let p = maximal_piece(&id, &IntervalSet::full(), &IntervalSet::empty());
        assert!(find_extension(&id, &p, 3, &Occupied::default()).is_none());
        assert!(matches!(enlarge_piece(&id, &p), Err(Error::AlreadyFull)));
    }

    #[test]
    fn depth_zero_extension_for_half_shift() {
        let t = half_shift();
        let host = Dse::new(vec![t.clone(), t.invert()], 2).unwrap();
        let half = IntervalSet::interval(r(0, 1), r(1, 2));
        let theta = Piece::new(t.restrict(&half), &host).unwrap();
        let e = find_extension(&host, &theta, 0, &Occupied::default()).unwrap();
        assert_eq!(e.depth(), 0);
        assert!(e.sources[0].is_subset(&half.complement()));
        assert!(e.targets[0].is_subset(&half));
        let grown = apply_extension(&theta, &e).unwrap();
        assert_eq!(grown.measure(), theta.measure() + e.gain());
    }

    #[test]
    fn deeper_extension_on_counterexample() {
        let c = counterexample(2);
        let theta = maximal_piece(&c, &IntervalSet::full(), &IntervalSet::empty());
        let e = find_extension(&c, &theta, 2, &Occupied::default()).unwrap();
        assert!(e.depth() >= 1);
        assert_eq!(e.sources[0], IntervalSet::interval(r(3, 4), r(7, 8)));
        let grown = apply_extension(&theta, &e).unwrap();
        assert!(grown.is_valid());
        assert_eq!(grown.measure(), r(3, 4) + e.gain());
        assert!(grown.measure() > r(3, 4));
    }

    #[test]
    fn rejects_tampered_extension() {
        let c = counterexample(2);
        let theta = maximal_piece(&c, &IntervalSet::full(), &IntervalSet::empty());
        let mut e = find_extension(&c, &theta, 2, &Occupied::default()).unwrap();
        e.sources[0] = IntervalSet::interval(r(0, 1), r(1, 8));
        assert!(matches!(
            apply_extension(&theta, &e),
            Err(Error::InvalidExtension(_))
        ));
    }

    #[test]
    fn enlarge_examples() {
        let id = Dse::identity();
        let empty = Piece::empty(&id);
        let p = enlarge_piece(&id, &empty).unwrap();
        assert_eq!(p.measure(), Rational::one());

        let c = counterexample(2);
        let theta = maximal_piece(&c, &IntervalSet::full(), &IntervalSet::empty());
        let grown = enlarge_piece(&c, &theta).unwrap();
        assert!(grown.measure() >= r(3, 4) + r(1, 57).square());
    }

    #[test]
    fn near_full_examples() {
        let id = Dse::identity();
        assert_eq!(
            near_full_piece(&id, &r(1, 2)).unwrap().map(),
            &PartialMap::identity()
        );

        let s = Dse::new(vec![half_shift()], 1).unwrap().symmetrize();
        let p = near_full_piece(&s, &r(1, 4)).unwrap();
        assert!(p.measure() > r(3, 4));
        assert!(p.is_valid());
    }
}
