mod common;

use common::*;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use tdpair::matrix::DenseMatrix;
use tdpair::spectral::{canonical_order, expand_product, pairing, product_pairing, EigenIndex};
use tdpair::{GenericityTolerances, ModelParams};

fn complex() -> impl Strategy<Value = C> {
    (-1.0..1.0f64, -3.0..3.0f64).prop_map(|(re, im)| C::new(re, im))
}

fn small_matrix(dim: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(complex(), dim * dim).prop_map(move |e| DenseMatrix::from_row_major(dim, dim, e).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn level_rank_round_trip(n in 1usize..=10, seed in any::<u64>()) {
        let dim = 1u64 << n;
        let bits = seed % dim;
        let eps: Vec<i8> = (0..n).map(|l| if (bits >> l) & 1 == 0 { 1 } else { -1 }).collect();
        let idx = EigenIndex::from_epsilons(&eps).unwrap();
        prop_assert_eq!(idx.level, eps.iter().filter(|&&e| e < 0).count());
        let back = EigenIndex::from_level_rank(n, idx.level, idx.rank).unwrap();
        prop_assert_eq!(&back.epsilons, &eps);
        prop_assert_eq!(&canonical_order(n, idx.level).unwrap()[idx.rank - 1], &eps);
    }

    #[test]
    fn order_matches_recursive_oracle(n in 1usize..=8, level in 0usize..=8) {
        prop_assume!(level <= n);
        prop_assert_eq!(canonical_order(n, level).unwrap(), order(n, level));
    }

    #[test]
    fn product_pairing_is_dense_pairing(u in prop::collection::vec(complex(), 1..=6), seed in prop::collection::vec(complex(), 6)) {
        let v = &seed[..u.len()];
        let dense = pairing(&expand_product(&u), &expand_product(v)).unwrap();
        let fast = product_pairing(&u, v);
        prop_assert!((dense - fast).norm() <= 1e-12 * dense.norm().max(1.0));
    }

    #[test]
    fn kron_mixed_product(a in small_matrix(2), b in small_matrix(2), c in small_matrix(2), d in small_matrix(2)) {
        let lhs = a.kron(&b).matmul(&c.kron(&d)).unwrap();
        let rhs = a.matmul(&c).unwrap().kron(&b.matmul(&d).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * lhs.max_abs().max(1.0));
    }

    #[test]
    fn eigenvalues_match_formula(n in 1usize..=10, t in 0usize..5) {
        let p = all_params(n)[t];
        for (l, v) in p.eigenvalues().iter().enumerate() {
            prop_assert!((v - lambda(&p, l)).norm() < 1e-14);
        }
        for (s, v) in p.dual_eigenvalues().iter().enumerate() {
            prop_assert!((v - lambda_tilde(&p, s)).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_alpha_is_rejected(n in 1usize..=6, b in complex(), phi in 0.1..1.0f64) {
        let p = ModelParams::new(n, C::new(0.0, 0.0), b, C::new(0.0, phi), 0.0);
        prop_assert!(!p.validate(&GenericityTolerances::default()).is_valid());
    }

    #[test]
    fn dual_substitution_is_an_involution_on_alphas(t in 0usize..5, n in 1usize..=6) {
        let p = all_params(n)[t];
        let back = p.dual_substitution().dual_substitution();
        prop_assert!((back.alpha - p.alpha).norm() < 1e-15);
        prop_assert!((back.alpha_star - p.alpha_star).norm() < 1e-15);
        prop_assert!((back.phi - p.phi).norm() < 1e-15);
    }
}

#[test]
fn canonical_order_is_a_bijection_up_to_ten() {
    for n in 1..=10 {
        let mut seen = std::collections::HashSet::new();
        for level in 0..=n {
            let list = canonical_order(n, level).unwrap();
            assert_eq!(list.len(), binom(n, level));
            for eps in list {
                assert!(seen.insert(eps));
            }
        }
        assert_eq!(seen.len(), 1 << n);
    }
}
