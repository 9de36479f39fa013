//! Finite truncations of the classic examples: a DSE of multiplicity two with
//! no exact decomposition at infinite resolution, the reflection forest whose
//! composition is the dyadic odometer, and a decomposable amplification.

use crate::dse::Dse;
use crate::error::{Error, Result};
use crate::graph::{monotone_pairing, GraphMultiset};
use crate::intervals::{Interval, IntervalSet};
use crate::partial_map::{Atom, PartialMap};
use crate::rational::Rational;

fn d(p: i64, k: u32) -> Rational {
    Rational::dyadic(p, k)
}

fn shift(lo: Rational, hi: Rational, by: Rational) -> PartialMap {
    PartialMap::from_atom(Atom::translation(lo, hi, by).expect("gallery atoms stay inside [0,1)"))
}

fn reflect(lo: Rational, hi: Rational, about: Rational) -> PartialMap {
    PartialMap::from_atom(Atom::reflection(lo, hi, about).expect("gallery atoms stay inside [0,1)"))
}

/// The maps of the truncated counterexample, in order
/// `φ_1, φ_2, ψ_0^1, ψ_0^2, …, ψ_{k-1}^1, ψ_{k-1}^2, δ_1, δ_2`.
///
/// `φ_1` moves the left half onto the right half, `φ_2` is the identity on the
/// right half, `ψ_n^1, ψ_n^2` squeeze `[2^{-(n+1)}, 2^{-n})` twice onto
/// `[2^{-(n+2)}, 2^{-(n+1)})`, and `δ_1, δ_2` close the tail `[0, 2^{-k})`.
fn counterexample_maps(k: u32) -> Vec<PartialMap> {
    assert!(k >= 1, "truncation level must be at least 1");
    let mut maps = vec![
        shift(d(0, 0), d(1, 1), d(1, 1)),
        PartialMap::identity_on(&IntervalSet::interval(d(1, 1), d(1, 0))),
    ];
    for n in 0..k {
        maps.push(shift(d(1, n + 1), d(3, n + 2), -d(1, n + 2)));
        maps.push(shift(d(3, n + 2), d(1, n), -d(1, n + 1)));
    }
    maps.push(shift(d(0, 0), d(1, k + 1), d(0, 0)));
    maps.push(shift(d(1, k + 1), d(1, k), -d(1, k + 1)));
    maps
}

/// Truncated counterexample of multiplicity 2. Panics if `k == 0`.
pub fn counterexample(k: u32) -> Dse {
    Dse::new(counterexample_maps(k), 2).expect("counterexample covers [0,1) twice")
}

/// The reflection forest `(φ_1, φ_2)`: `φ_1(x) = 1 − x`, and `φ_2` reflects
/// each `[2^{-(n+1)}, 2^{-n})` onto itself for `n < k`, plus the tail
/// `[0, 2^{-k})` reflected onto itself. Both are involutions.
pub fn forest_example(k: u32) -> (PartialMap, PartialMap) {
    let phi1 = reflect(d(0, 0), d(1, 0), d(1, 0));
    let mut atoms = Vec::new();
    for n in 0..k {
        atoms.extend(
            reflect(d(1, n + 1), d(1, n), d(3, n + 1))
                .atoms()
                .iter()
                .cloned(),
        );
    }
    atoms.extend(reflect(d(0, 0), d(1, k), d(1, k)).atoms().iter().cloned());
    let phi2 = PartialMap::new(atoms).expect("disjoint reflections");
    (phi1, phi2)
}

/// `φ_2 ∘ φ_1` of the forest: the dyadic odometer truncated at level `k`.
pub fn odometer(k: u32) -> PartialMap {
    let (phi1, phi2) = forest_example(k);
    PartialMap::compose(&phi2, &phi1)
}

/// Whether `x0` and its next `n − 1` iterates under `m` visit every dyadic
/// cell of level `level`.
pub fn orbit_visits_cells(m: &PartialMap, x0: &Rational, level: u32, n: usize) -> Result<bool> {
    let cells = 1usize << level;
    let mut seen = vec![false; cells];
    let mut x = x0.clone();
    for step in 0..n {
        if step > 0 {
            x = m.apply(&x).ok_or_else(|| Error::OrbitEscapes {
                step,
                point: x.clone(),
            })?;
        } else if m.apply(&x).is_none() {
            return Err(Error::OrbitEscapes { step, point: x });
        }
        let idx = (&x * Rational::from_integer(cells as i64)).floor();
        let idx: usize = idx.try_into().map_err(|_| Error::OrbitEscapes {
            step,
            point: x.clone(),
        })?;
        seen[idx.min(cells - 1)] = true;
    }
    Ok(seen.iter().all(|&v| v))
}

/// The forest as one-directional pieces: the lower half of every reflection
/// atom of `φ_1` and `φ_2`, so that the forest is the union of their graphs
/// and inverse graphs. Target measures sum to 1.
pub fn forest_pieces(k: u32) -> Vec<PartialMap> {
    let (phi1, phi2) = forest_example(k);
    phi1.atoms()
        .iter()
        .chain(phi2.atoms())
        .map(|a| {
            let mid = (&a.src.lo + &a.src.hi) / Rational::from_integer(2);
            PartialMap::from_atom(
                a.restrict(&Interval::new(a.src.lo.clone(), mid))
                    .expect("non-empty half"),
            )
        })
        .collect()
}

/// A multiplicity-2 DSE whose pairwise compositions recover the pieces.
///
/// Each target `T_k` gets its own slot in `[0,1)`, packed left to right by a
/// monotone translation `π_k`; then `φ_{k,1} = π_k ∘ ψ_k` and `φ_{k,2} = π_k`.
pub fn forest_to_dse(pieces: &[PartialMap]) -> Result<Dse> {
    let total: Rational = pieces.iter().map(PartialMap::measure).sum();
    if total != Rational::one() {
        return Err(Error::MassMismatch {
            expected: Rational::one(),
            actual: total,
        });
    }
    let mut maps = Vec::with_capacity(2 * pieces.len());
    let mut at = Rational::zero();
    for psi in pieces {
        let target = psi.image();
        let end = &at + target.measure();
        let slot = [Interval::new(at.clone(), end.clone())];
        let pack = PartialMap::new(monotone_pairing(target.intervals(), &slot)?)?;
        maps.push(PartialMap::compose(&pack, psi));
        maps.push(pack);
        at = end;
    }
    Dse::new(maps, 2)
}

/// `Σ_{i≠j} χ(graph φ_i⁻¹ φ_j)`: the forest a multiplicity-2 DSE encodes.
pub fn recovered_forest(d: &Dse) -> GraphMultiset {
    let maps = d.maps();
    let mut g = GraphMultiset::new();
    for (i, a) in maps.iter().enumerate() {
        for (j, b) in maps.iter().enumerate() {
            if i != j {
                g.add_map(&PartialMap::compose(&a.invert(), b), 1);
            }
        }
    }
    g
}

/// Lifts an atom of the counterexample to the doubled space: copy `c` of
/// `[0,1)` lives at `[0,1/2) + c/2`, scaled by one half.
fn lift_atom(a: &Atom, from: i64, to: i64) -> Atom {
    let half = Rational::new(1, 2);
    let h_from = Rational::new(from, 2);
    let h_to = Rational::new(to, 2);
    let src = Interval::new(&a.src.lo * &half + &h_from, &a.src.hi * &half + &h_from);
    let sign = Rational::from_integer(a.slope().sign());
    let offset = -(&sign * &h_from) + a.offset() * &half + &h_to;
    Atom::new(src, a.slope(), offset).expect("lifted atoms stay inside [0,1)")
}

fn lift_map(m: &PartialMap, from: i64, to: i64) -> PartialMap {
    PartialMap::new(m.atoms().iter().map(|a| lift_atom(a, from, to)).collect())
        .expect("lift is injective")
}

/// The amplified counterexample on two copies of `[0,1)` (copy 1 at
/// `[0,1/2)`, copy 2 at `[1/2,1)`). Maps `φ_1, ψ^1, δ_1` keep the copy,
/// `φ_2, ψ^2, δ_2` switch it. The maps are listed so that the first half
/// pastes into one automorphism and the second half into another.
pub fn amplification(k: u32) -> Dse {
    let (first, second) = amplification_halves(k);
    let maps = first.into_iter().chain(second).collect();
    Dse::new(maps, 2).expect("amplification covers [0,1) twice")
}

fn amplification_halves(k: u32) -> (Vec<PartialMap>, Vec<PartialMap>) {
    let base = counterexample_maps(k);
    let stays = |i: usize| i == 0 || (i >= 2 && i.is_multiple_of(2));
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (i, m) in base.iter().enumerate() {
        let is_phi = i < 2;
        let (a, b) = if stays(i) {
            (lift_map(m, 0, 0), lift_map(m, 1, 1))
        } else {
            (lift_map(m, 0, 1), lift_map(m, 1, 0))
        };
        // φ's of copy 1 with ψ's and δ's of copy 2 form the first automorphism.
        if is_phi {
            first.push(a);
            second.push(b);
        } else {
            first.push(b);
            second.push(a);
        }
    }
    (first, second)
}

/// The two automorphisms the amplification decomposes into.
pub fn amplification_pastings(k: u32) -> (PartialMap, PartialMap) {
    let (first, second) = amplification_halves(k);
    let glue = |maps: &[PartialMap]| PartialMap::glue(maps).expect("pasting is injective");
    (glue(&first), glue(&second))
}
