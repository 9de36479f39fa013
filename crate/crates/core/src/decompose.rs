//! Approximating a DSE of multiplicity `n` by `n` automorphisms.

use serde::Serialize;

use crate::dse::{normalize_cover, Dse};
use crate::error::{Error, Result};
use crate::extension::{maximal_piece, near_full_piece, Piece};
use crate::graph::{monotone_pairing, GraphMultiset};
use crate::intervals::{Interval, IntervalSet};
use crate::partial_map::PartialMap;
use crate::rational::Rational;

/// A partial map defined on all of `[0,1)` and onto `[0,1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Automorphism(PartialMap);

impl Automorphism {
    pub fn new(map: PartialMap) -> Result<Automorphism> {
        if !map.is_automorphism() {
            return Err(Error::PreconditionViolated(
                "an automorphism must be defined on and onto [0,1)".into(),
            ));
        }
        Ok(Automorphism(map))
    }

    pub fn map(&self) -> &PartialMap {
        &self.0
    }

    pub fn into_map(self) -> PartialMap {
        self.0
    }
}

/// Extends `map` to an automorphism by sending the complement of its domain
/// onto the complement of its image in order, by translations.
pub fn complete_to_automorphism(map: &PartialMap) -> Automorphism {
    let rest_src = map.domain().complement();
    let rest_dst = map.image().complement();
    let filler = monotone_pairing(rest_src.intervals(), rest_dst.intervals())
        .expect("complements of a measure-preserving map have equal measure");
    let filler = PartialMap::new(filler).expect("monotone pairing of disjoint sets is injective");
    let full = PartialMap::glue([map, &filler]).expect("filler lives in the complements");
    Automorphism::new(full).expect("domain and image are complete")
}

/// Result of splitting one automorphism off a DSE.
#[derive(Clone, Debug)]
pub struct Peel {
    pub automorphism: Automorphism,
    pub rest: Dse,
    /// `4·μ(A^c)` for the piece `θ: A → B` the automorphism extends.
    pub bound: Rational,
    /// `d(Φ, rest ⊔ {automorphism})`, recomputed.
    pub distance: Rational,
    /// Whether the extra maximality pass added anything to the piece.
    pub maximality_fired: bool,
}

fn flatten(layers: Vec<IntervalSet>) -> Vec<Interval> {
    layers
        .into_iter()
        .flat_map(|s| s.intervals().to_vec())
        .collect()
}

/// Splits `Φ` (multiplicity `n ≥ 2`) into an automorphism and a DSE of
/// multiplicity `n − 1` whose union is within `ε/2` of `Φ`.
///
/// With `θ: A → B` a piece of measure `> 1 − ε/8` that no map can extend from
/// `A^c` into `B^c`, the residual is `M(Φ) − χθ` minus one edge out of each
/// point of `A^c` and one edge into each point of `B^c`, plus translations
/// restoring the lost row and column masses.
pub fn peel(phi: &Dse, eps: &Rational) -> Result<Peel> {
    let n = phi.multiplicity();
    if n < 2 {
        return Err(Error::PreconditionViolated(
            "peeling needs multiplicity at least 2".into(),
        ));
    }
    let theta = near_full_piece(phi, &(eps / Rational::from_integer(8)))?;
    let a_c = theta.domain().complement();
    let extra = maximal_piece(phi, &a_c, &theta.image());
    let maximality_fired = !extra.map().is_empty();
    let theta = if maximality_fired {
        let map = PartialMap::glue([theta.map(), extra.map()])?;
        Piece::new(map, phi)?
    } else {
        theta
    };
    let a_c = theta.domain().complement();
    let b_c = theta.image().complement();

    let matrix = phi.associated_matrix();
    let f0 = matrix.checked_sub(&GraphMultiset::from_map(theta.map(), 1))?;
    let out_cover = f0.restrict_rows(&a_c).greedy_row_cover(&a_c);
    let in_cover = f0.restrict_cols(&b_c).greedy_col_cover(&b_c);
    let f1 = f0.checked_sub(&out_cover)?.checked_sub(&in_cover)?;
    let correction = monotone_pairing(
        &flatten(in_cover.row_mass().layers()),
        &flatten(out_cover.col_mass().layers()),
    )?;
    let f = f1.add(&GraphMultiset::from_atoms(
        correction.into_iter().map(|a| (a, 1)),
    ));
    let rest = normalize_cover(&f, n - 1)?;

    let automorphism = complete_to_automorphism(theta.map());
    let mut maps = rest.maps().to_vec();
    maps.push(automorphism.map().clone());
    let combined = Dse::new(maps, n)?;
    let distance = Dse::distance(phi, &combined)?;
    let bound = Rational::from_integer(4) * a_c.measure();
    let half = eps / Rational::from_integer(2);
    if distance > bound || bound >= half {
        return Err(Error::BoundViolated(format!(
            "peel distance {distance}, bound {bound}, budget {half}"
        )));
    }
    Ok(Peel {
        automorphism,
        rest,
        bound,
        distance,
        maximality_fired,
    })
}

/// `n` automorphisms and their recomputed distance to the input.
#[derive(Clone, Debug, Serialize)]
pub struct Decomposition {
    pub automorphisms: Vec<Automorphism>,
    pub achieved_distance: Rational,
    /// Per-level `4·μ(A^c)` bounds, outermost first.
    pub peel_bounds: Vec<Rational>,
    /// Per-level record of whether the maximality pass fired.
    pub maximality_fired: Vec<bool>,
}

impl Decomposition {
    pub fn as_dse(&self) -> Dse {
        let maps = self.automorphisms.iter().map(|a| a.map().clone()).collect();
        Dse::new(maps, self.automorphisms.len() as u64).expect("automorphisms form a DSE")
    }
}

/// Automorphisms `θ_1, …, θ_n` with `d(Φ, {θ_j}) < ε`: peel one off with
/// budget `ε/2`, recurse on the rest with `ε/2`.
pub fn almost_decompose(phi: &Dse, eps: &Rational) -> Result<Decomposition> {
    if !eps.is_positive() {
        return Err(Error::PreconditionViolated("ε must be positive".into()));
    }
    let mut automorphisms = Vec::new();
    let mut peel_bounds = Vec::new();
    let mut maximality_fired = Vec::new();
    let mut current = phi.clone();
    let mut budget = eps.clone();
    while current.multiplicity() > 1 {
        let p = peel(&current, &budget)?;
        automorphisms.push(p.automorphism);
        peel_bounds.push(p.bound);
        maximality_fired.push(p.maximality_fired);
        current = p.rest;
        budget = budget / Rational::from_integer(2);
    }
    let last = normalize_cover(current.associated_matrix(), 1)?;
    automorphisms.push(Automorphism::new(PartialMap::glue(last.maps())?)?);

    let mut out = Decomposition {
        automorphisms,
        achieved_distance: Rational::zero(),
        peel_bounds,
        maximality_fired,
    };
    out.achieved_distance = Dse::distance(phi, &out.as_dse())?;
    if out.achieved_distance >= *eps {
        return Err(Error::BoundViolated(format!(
            "achieved distance {} not below {eps}",
            out.achieved_distance
        )));
    }
    Ok(out)
}
