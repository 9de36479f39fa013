mod common;

use dse::finite::{decompose_bvn, discretize, lift};
use dse::{Atom, Dse, PartialMap, Rational};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{grid_distance, random_permutation};

/// Cell permutations at level `k` with some cells reflected in place.
fn random_dse(seed: u64, k: u32, n: usize) -> Dse {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 1usize << k;
    let maps = (0..n)
        .map(|_| {
            let p = random_permutation(&mut rng, m);
            let atoms = p
                .iter()
                .enumerate()
                .map(|(j, &i)| {
                    let lo = Rational::dyadic(j as i64, k);
                    let hi = Rational::dyadic(j as i64 + 1, k);
                    if rng.gen_bool(0.25) {
                        Atom::reflection(lo, hi, Rational::dyadic((i + j + 1) as i64, k)).unwrap()
                    } else {
                        Atom::translation(lo, hi, Rational::dyadic(i as i64 - j as i64, k)).unwrap()
                    }
                })
                .collect();
            PartialMap::new(atoms).unwrap()
        })
        .collect();
    Dse::new(maps, n as u64).unwrap()
}

proptest! {
    #[test]
    fn distance_matches_grid_oracle(s1 in any::<u64>(), s2 in any::<u64>(), k1 in 1u32..5, k2 in 1u32..5, n in 1usize..4) {
        let a = random_dse(s1, k1, n);
        let b = random_dse(s2, k2, n);
        prop_assert_eq!(Dse::distance(&a, &b).unwrap(), grid_distance(&a, &b));
    }

    #[test]
    fn distance_is_a_metric(s in prop::array::uniform3(any::<u64>()), n in 1usize..3) {
        let [a, b, c] = s.map(|seed| random_dse(seed, 3, n));
        let ab = Dse::distance(&a, &b).unwrap();
        prop_assert_eq!(&ab, &Dse::distance(&b, &a).unwrap());
        prop_assert!(Dse::distance(&a, &a).unwrap().is_zero());
        prop_assert!(ab <= Dse::distance(&a, &c).unwrap() + Dse::distance(&c, &b).unwrap());
        prop_assert!(ab <= Rational::from_integer(2 * n as i64));
    }

    #[test]
    fn symmetrize_doubles_and_inverse_preserves_distance(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_dse(s1, 3, 2);
        let b = random_dse(s2, 3, 2);
        let d = grid_distance(&a, &b);
        prop_assert_eq!(grid_distance(&a.inverse(), &b.inverse()), d.clone());
        prop_assert!(grid_distance(&a.symmetrize(), &b.symmetrize()) <= Rational::from_integer(2) * d);
    }

    #[test]
    fn translation_dses_round_trip_through_matrices(seed in any::<u64>(), k in 1u32..6, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 1usize << k;
        let maps = (0..n)
            .map(|_| {
                let p = random_permutation(&mut rng, m);
                let atoms = p
                    .iter()
                    .enumerate()
                    .map(|(j, &i)| Atom::translation(Rational::dyadic(j as i64, k), Rational::dyadic(j as i64 + 1, k), Rational::dyadic(i as i64 - j as i64, k)).unwrap())
                    .collect();
                PartialMap::new(atoms).unwrap()
            })
            .collect();
        let phi = Dse::new(maps, n as u64).unwrap();
        let back = lift(&decompose_bvn(&discretize(&phi, k).unwrap()).unwrap(), k).unwrap();
        prop_assert!(grid_distance(&phi, &back).is_zero());
    }
}
