//! Nonnegative integer matrices, permutation extraction, and the bridge
//! between cell-aligned DSEs and `B_m^n`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dse::Dse;
use crate::error::{Error, Result};
use crate::partial_map::{Atom, PartialMap, Slope};
use crate::rational::Rational;

/// Square matrix of nonnegative integers, row-major.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u64>>", into = "Vec<Vec<u64>>")]
pub struct IntMatrix {
    rows: Vec<Vec<u64>>,
}

impl TryFrom<Vec<Vec<u64>>> for IntMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<u64>>) -> Result<IntMatrix> {
        IntMatrix::new(rows)
    }
}

impl From<IntMatrix> for Vec<Vec<u64>> {
    fn from(m: IntMatrix) -> Self {
        m.rows
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            writeln!(f, "{row:?}")?;
        }
        Ok(())
    }
}

impl IntMatrix {
    pub fn new(rows: Vec<Vec<u64>>) -> Result<IntMatrix> {
        let m = rows.len();
        if let Some(i) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::Parse(format!(
                "row {i} has {} entries, expected {m}",
                rows[i].len()
            )));
        }
        Ok(IntMatrix { rows })
    }

    pub fn zeros(m: usize) -> IntMatrix {
        IntMatrix {
            rows: vec![vec![0; m]; m],
        }
    }

    pub fn identity(m: usize) -> IntMatrix {
        Self::from_permutation(&(0..m).collect::<Vec<_>>())
    }

    /// Permutation matrix with a one at `(sigma[j], j)` for every column `j`.
    pub fn from_permutation(sigma: &[usize]) -> IntMatrix {
        let mut out = IntMatrix::zeros(sigma.len());
        for (j, &i) in sigma.iter().enumerate() {
            out.rows[i][j] = 1;
        }
        out
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.rows[i][j]
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let mut out = vec![0; self.size()];
        for row in &self.rows {
            for (j, v) in row.iter().enumerate() {
                out[j] += v;
            }
        }
        out
    }

    pub fn total(&self) -> u64 {
        self.row_sums().iter().sum()
    }

    /// `Some(n)` when every row and column sums to the same `n`.
    pub fn degree(&self) -> Option<u64> {
        let rows = self.row_sums();
        let n = *rows.first()?;
        let uniform = |v: &[u64]| v.iter().all(|&s| s == n);
        (uniform(&rows) && uniform(&self.col_sums())).then_some(n)
    }

    pub fn is_doubly_stochastic(&self, n: u64) -> bool {
        self.degree() == Some(n) || (self.size() == 0 && n == 0)
    }

    /// The column-to-row assignment of a permutation matrix.
    pub fn as_permutation(&self) -> Option<Vec<usize>> {
        if self.degree() != Some(1) {
            return None;
        }
        (0..self.size())
            .map(|j| (0..self.size()).find(|&i| self.rows[i][j] == 1))
            .collect()
    }

    pub fn is_permutation(&self) -> bool {
        self.as_permutation().is_some()
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.size(), other.size(), "matrix sizes differ");
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        IntMatrix { rows }
    }

    pub fn checked_sub(&self, other: &IntMatrix) -> Option<IntMatrix> {
        if self.size() != other.size() {
            return None;
        }
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.checked_sub(*y)).collect())
            .collect::<Option<_>>()?;
        Some(IntMatrix { rows })
    }

    /// Whether `self ≤ other` entrywise.
    pub fn le(&self, other: &IntMatrix) -> bool {
        other.checked_sub(self).is_some()
    }
}

fn require_degree(a: &IntMatrix) -> Result<u64> {
    match a.degree() {
        Some(n) if n >= 1 => Ok(n),
        _ => Err(Error::NotDoublyStochastic(format!(
            "row sums {:?}, column sums {:?}",
            a.row_sums(),
            a.col_sums()
        ))),
    }
}

/// Kuhn's augmenting-path matching, columns scanned in index order.
fn perfect_matching(a: &IntMatrix) -> Option<Vec<usize>> {
    let m = a.size();
    let mut row_of: Vec<Option<usize>> = vec![None; m];
    let mut col_of: Vec<Option<usize>> = vec![None; m];

    fn augment(
        a: &IntMatrix,
        j: usize,
        seen: &mut [bool],
        row_of: &mut [Option<usize>],
        col_of: &mut [Option<usize>],
    ) -> bool {
        for i in 0..a.size() {
            if a.rows[i][j] == 0 || seen[i] {
                continue;
            }
            seen[i] = true;
            let free = match col_of[i] {
                None => true,
                Some(j2) => augment(a, j2, seen, row_of, col_of),
            };
            if free {
                col_of[i] = Some(j);
                row_of[j] = Some(i);
                return true;
            }
        }
        false
    }

    for j in 0..m {
        let mut seen = vec![false; m];
        if !augment(a, j, &mut seen, &mut row_of, &mut col_of) {
            return None;
        }
    }
    row_of.into_iter().collect()
}

/// A permutation matrix `p ≤ a`.
pub fn extract_permutation(a: &IntMatrix) -> Result<IntMatrix> {
    require_degree(a)?;
    let sigma = perfect_matching(a).expect("Hall's condition holds for a doubly stochastic matrix");
    Ok(IntMatrix::from_permutation(&sigma))
}

/// Exactly `n` permutation matrices summing to `a ∈ B_m^n`.
pub fn decompose_bvn(a: &IntMatrix) -> Result<Vec<IntMatrix>> {
    let n = require_degree(a)?;
    let mut rest = a.clone();
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let p = extract_permutation(&rest)?;
        rest = rest
            .checked_sub(&p)
            .expect("extracted permutation lies below");
        out.push(p);
    }
    Ok(out)
}

/// Adds a nonnegative `z` so that `y + z ∈ B_m^n`, pairing the first
/// deficient row with the first deficient column until none remain.
pub fn pad_to_doubly_stochastic(y: &IntMatrix, n: u64) -> Result<IntMatrix> {
    let rows = y.row_sums();
    let cols = y.col_sums();
    if let Some(i) = rows.iter().position(|&s| s > n) {
        return Err(Error::Infeasible(format!(
            "row {i} sums to {} > {n}",
            rows[i]
        )));
    }
    if let Some(j) = cols.iter().position(|&s| s > n) {
        return Err(Error::Infeasible(format!(
            "column {j} sums to {} > {n}",
            cols[j]
        )));
    }
    let mut row_gap: Vec<u64> = rows.iter().map(|s| n - s).collect();
    let mut col_gap: Vec<u64> = cols.iter().map(|s| n - s).collect();
    let mut z = IntMatrix::zeros(y.size());
    let (mut i, mut j) = (0, 0);
    loop {
        while i < row_gap.len() && row_gap[i] == 0 {
            i += 1;
        }
        while j < col_gap.len() && col_gap[j] == 0 {
            j += 1;
        }
        if i == row_gap.len() || j == col_gap.len() {
            break;
        }
        let t = row_gap[i].min(col_gap[j]);
        z.rows[i][j] += t;
        row_gap[i] -= t;
        col_gap[j] -= t;
    }
    Ok(z)
}

/// The matrix of a DSE whose atoms are translations between dyadic cells of
/// level `k`: entry `(i, j)` counts the maps carrying cell `j` onto cell `i`.
///
/// Reflections are rejected even when they map whole cells to whole cells:
/// a cell matrix only records translations, and lifting back must reproduce
/// the same graph.
pub fn discretize(phi: &Dse, level: u32) -> Result<IntMatrix> {
    let m = 1usize << level;
    let mut out = IntMatrix::zeros(m);
    let mut offending = Vec::new();
    for map in phi.maps() {
        for atom in map.atoms() {
            let idx = (
                atom.src.lo.scaled_index(level),
                atom.src.hi.scaled_index(level),
                atom.offset().scaled_index(level),
            );
            match (atom.slope(), idx) {
                (Slope::Pos, (Some(lo), Some(hi), Some(off))) => {
                    for j in lo..hi {
                        out.rows[(j + off) as usize][j as usize] += 1;
                    }
                }
                _ => offending.push(format!("{atom:?}")),
            }
        }
    }
    if !offending.is_empty() {
        return Err(Error::NotCellAligned {
            level,
            atoms: offending,
        });
    }
    Ok(out)
}

/// The DSE of cell translations realizing each permutation matrix of size
/// `2^level`.
pub fn lift(perms: &[IntMatrix], level: u32) -> Result<Dse> {
    let m = 1usize << level;
    let mut maps = Vec::with_capacity(perms.len());
    for (idx, p) in perms.iter().enumerate() {
        if p.size() != m {
            return Err(Error::NotPermutation(format!(
                "matrix {idx} has size {}, expected {m}",
                p.size()
            )));
        }
        let sigma = p
            .as_permutation()
            .ok_or_else(|| Error::NotPermutation(format!("matrix {idx}")))?;
        let atoms = sigma
            .iter()
            .enumerate()
            .map(|(j, &i)| {
                Atom::translation(
                    Rational::dyadic(j as i64, level),
                    Rational::dyadic(j as i64 + 1, level),
                    Rational::dyadic(i as i64 - j as i64, level),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        maps.push(PartialMap::new(atoms)?);
    }
    Dse::new(maps, perms.len() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::counterexample;
    use proptest::prelude::*;

    fn mat(rows: &[&[u64]]) -> IntMatrix {
        IntMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn all_perms(m: usize) -> Vec<Vec<usize>> {
        if m == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in all_perms(m - 1) {
            for pos in 0..m {
                let mut q = p.clone();
                q.insert(pos, m - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(IntMatrix::new(vec![vec![1, 0], vec![1]]).is_err());
    }

    #[test]
    fn extract_examples() {
        let id3 = IntMatrix::identity(3);
        let tripled = id3.add(&id3).add(&id3);
        assert_eq!(extract_permutation(&tripled).unwrap(), id3);

        let a = mat(&[&[1, 1, 0], &[0, 1, 1], &[1, 0, 1]]);
        let below: Vec<_> = all_perms(3)
            .into_iter()
            .map(|s| IntMatrix::from_permutation(&s))
            .filter(|p| p.le(&a))
            .collect();
        let p = extract_permutation(&a).unwrap();
        assert!(below.contains(&p));

        let zero_row = mat(&[&[1, 1], &[0, 0]]);
        assert!(matches!(
            extract_permutation(&zero_row),
            Err(Error::NotDoublyStochastic(_))
        ));
    }

    #[test]
    fn decompose_examples() {
        let swap = IntMatrix::from_permutation(&[1, 0]);
        assert_eq!(decompose_bvn(&swap).unwrap(), vec![swap]);
        let a = mat(&[&[1, 1, 0], &[0, 1, 1], &[1, 0, 1]]);
        let ps = decompose_bvn(&a).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].add(&ps[1]), a);
    }

    #[test]
    fn pad_examples() {
        let a = mat(&[&[1, 1, 0], &[0, 1, 1], &[1, 0, 1]]);
        assert_eq!(
            pad_to_doubly_stochastic(&a, 2).unwrap(),
            IntMatrix::zeros(3)
        );
        assert_eq!(
            pad_to_doubly_stochastic(&IntMatrix::zeros(2), 1).unwrap(),
            IntMatrix::identity(2)
        );
        let y = mat(&[&[1, 0], &[0, 0]]);
        assert_eq!(
            pad_to_doubly_stochastic(&y, 1).unwrap(),
            mat(&[&[0, 0], &[0, 1]])
        );
        assert!(matches!(
            pad_to_doubly_stochastic(&a, 1),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn discretize_examples() {
        assert_eq!(
            discretize(&Dse::identity(), 1).unwrap(),
            IntMatrix::identity(2)
        );
        let t = lift(&[IntMatrix::from_permutation(&[1, 0])], 1).unwrap();
        let s = discretize(&t.symmetrize(), 1).unwrap();
        assert_eq!(s, mat(&[&[0, 2], &[2, 0]]));
        let c = discretize(&counterexample(2), 4).unwrap();
        assert_eq!(c.size(), 16);
        assert!(c.is_doubly_stochastic(2));
        match discretize(&counterexample(2), 2) {
            Err(Error::NotCellAligned { level: 2, atoms }) => assert!(!atoms.is_empty()),
            other => panic!("expected misalignment, got {other:?}"),
        }
    }

    #[test]
    fn reflections_do_not_discretize() {
        let refl = PartialMap::from_atom(
            Atom::reflection(Rational::zero(), Rational::one(), Rational::one()).unwrap(),
        );
        let d = Dse::new(vec![refl], 1).unwrap();
        assert!(matches!(
            discretize(&d, 3),
            Err(Error::NotCellAligned { .. })
        ));
    }

    #[test]
    fn lift_examples() {
        assert_eq!(
            lift(&[IntMatrix::identity(4)], 2).unwrap().maps(),
            &[PartialMap::identity()]
        );
        let t = lift(&[IntMatrix::from_permutation(&[1, 0])], 1).unwrap();
        let shift = PartialMap::new(vec![
            Atom::translation(Rational::zero(), Rational::new(1, 2), Rational::new(1, 2)).unwrap(),
            Atom::translation(Rational::new(1, 2), Rational::one(), Rational::new(-1, 2)).unwrap(),
        ])
        .unwrap();
        assert_eq!(t.maps(), &[shift]);
        assert!(matches!(
            lift(&[mat(&[&[1, 1], &[0, 0]])], 1),
            Err(Error::NotPermutation(_))
        ));
        assert!(matches!(
            lift(&[IntMatrix::identity(3)], 1),
            Err(Error::NotPermutation(_))
        ));
    }

    #[test]
    fn counterexample_round_trip() {
        let c = counterexample(2);
        let back = lift(&decompose_bvn(&discretize(&c, 3).unwrap()).unwrap(), 3).unwrap();
        assert_eq!(Dse::distance(&c, &back).unwrap(), Rational::zero());
    }

    fn arb_perm(m: usize) -> impl Strategy<Value = Vec<usize>> {
        Just((0..m).collect::<Vec<_>>()).prop_shuffle()
    }

    fn arb_bvn(max_m: usize, max_n: usize) -> impl Strategy<Value = IntMatrix> {
        (1..=max_m, 1..=max_n).prop_flat_map(|(m, n)| {
            prop::collection::vec(arb_perm(m), n).prop_map(move |perms| {
                perms
                    .iter()
                    .map(|s| IntMatrix::from_permutation(s))
                    .fold(IntMatrix::zeros(m), |acc, p| acc.add(&p))
            })
        })
    }

    proptest! {
        #[test]
        fn bvn_sums_back(a in arb_bvn(12, 5)) {
            let n = a.degree().unwrap();
            let ps = decompose_bvn(&a).unwrap();
            prop_assert_eq!(ps.len() as u64, n);
            prop_assert!(ps.iter().all(IntMatrix::is_permutation));
            let sum = ps.iter().fold(IntMatrix::zeros(a.size()), |acc, p| acc.add(p));
            prop_assert_eq!(sum, a);
        }

        #[test]
        fn pad_completes(a in arb_bvn(8, 4), mask in prop::collection::vec(any::<bool>(), 64)) {
            let n = a.degree().unwrap();
            let m = a.size();
            let rows = (0..m)
                .map(|i| (0..m).map(|j| if mask[i * 8 + j] { a.get(i, j) } else { 0 }).collect())
                .collect();
            let y = IntMatrix::new(rows).unwrap();
            let z = pad_to_doubly_stochastic(&y, n).unwrap();
            prop_assert!(y.add(&z).is_doubly_stochastic(n));
        }

        #[test]
        fn lift_then_discretize(perms in (0u32..4).prop_flat_map(|k| prop::collection::vec(arb_perm(1 << k), 1..4).prop_map(move |p| (k, p)))) {
            let (k, perms) = perms;
            let mats: Vec<_> = perms.iter().map(|s| IntMatrix::from_permutation(s)).collect();
            let sum = mats.iter().fold(IntMatrix::zeros(1 << k), |acc, p| acc.add(p));
            let d = lift(&mats, k).unwrap();
            prop_assert_eq!(discretize(&d, k).unwrap(), sum.clone());
            let again = lift(&decompose_bvn(&sum).unwrap(), k).unwrap();
            prop_assert_eq!(Dse::distance(&d, &again).unwrap(), Rational::zero());
        }
    }
}
