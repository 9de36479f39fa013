//! Brute-force oracles over a common grid refinement. They read only raw atom
//! fields (source interval, slope, offset) and never call the step-function
//! or graph-multiset machinery.

#![allow(dead_code)]

use std::collections::BTreeMap;

use dse::{Atom, Dse, Rational, Slope};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::Rng;

/// An edge family: slope sign and offset.
type Key = (bool, Rational);

fn lcm_of<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> i64 {
    let mut d = BigInt::from(1);
    for a in atoms {
        for r in [&a.src.lo, &a.src.hi, a.offset()] {
            d = d.lcm(r.denom());
        }
    }
    d.to_i64().expect("grid fits in i64")
}

fn all_atoms<'a>(ds: &[&'a Dse]) -> Vec<&'a Atom> {
    ds.iter()
        .flat_map(|d| d.maps().iter().flat_map(|m| m.atoms()))
        .collect()
}

/// Cells `[c/D, (c+1)/D)` on which every source interval is all-or-nothing.
pub fn grid(ds: &[&Dse]) -> i64 {
    lcm_of(all_atoms(ds))
}

fn midpoint(c: i64, d: i64) -> Rational {
    Rational::new(2 * c + 1, 2 * d)
}

fn contains(a: &Atom, x: &Rational) -> bool {
    &a.src.lo <= x && x < &a.src.hi
}

fn key(a: &Atom) -> Key {
    (a.slope() == Slope::Pos, a.offset().clone())
}

/// Edge multiplicities leaving `x`, grouped by family.
pub fn edges_at<'a>(
    atoms: impl IntoIterator<Item = (&'a Atom, i64)>,
    x: &Rational,
) -> BTreeMap<Key, i64> {
    let mut out = BTreeMap::new();
    for (a, m) in atoms {
        if contains(a, x) {
            *out.entry(key(a)).or_insert(0) += m;
        }
    }
    out
}

fn dse_atoms(d: &Dse) -> Vec<(&Atom, i64)> {
    d.maps()
        .iter()
        .flat_map(|m| m.atoms().iter().map(|a| (a, 1)))
        .collect()
}

/// `∫|M(a) − M(b)|` by summing edge-count differences cell by cell.
pub fn grid_distance(a: &Dse, b: &Dse) -> Rational {
    let d = grid(&[a, b]);
    let (xa, xb) = (dse_atoms(a), dse_atoms(b));
    let mut total = 0i64;
    for c in 0..d {
        let x = midpoint(c, d);
        let ea = edges_at(xa.iter().copied(), &x);
        let eb = edges_at(xb.iter().copied(), &x);
        let keys: std::collections::BTreeSet<_> = ea.keys().chain(eb.keys()).collect();
        for k in keys {
            total += (ea.get(k).unwrap_or(&0) - eb.get(k).unwrap_or(&0)).abs();
        }
    }
    Rational::new(total, d)
}

/// `∫|n − out-degree|` of weighted atoms.
pub fn grid_degree_error(entries: &[(Atom, i64)], n: u64) -> Rational {
    let d = lcm_of(entries.iter().map(|(a, _)| a));
    let mut total = 0i64;
    for c in 0..d {
        let x = midpoint(c, d);
        let deg: i64 = entries
            .iter()
            .filter(|(a, _)| contains(a, &x))
            .map(|(_, m)| m)
            .sum();
        total += (n as i64 - deg).abs();
    }
    Rational::new(total, d)
}

/// Whether every edge of `map_atoms` is an edge of the weighted multiset.
pub fn grid_inside_support(map_atoms: &[Atom], support: &[(Atom, i64)]) -> bool {
    let d = lcm_of(map_atoms.iter().chain(support.iter().map(|(a, _)| a)));
    (0..d).all(|c| {
        let x = midpoint(c, d);
        let have = edges_at(support.iter().map(|(a, m)| (a, *m)), &x);
        map_atoms
            .iter()
            .filter(|a| contains(a, &x))
            .all(|a| have.get(&key(a)).is_some_and(|&m| m > 0))
    })
}

pub fn random_permutation<R: Rng>(rng: &mut R, m: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..m).collect();
    p.shuffle(rng);
    p
}
