mod common;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use tdpair::blocktri::{dual_entries, entries_recursive, oracle_entries, DualRoute};
use tdpair::spectral::{biorthogonality_defect, norm_coeffs, BasisKind};

fn spectrum(m: DMatrix<C>) -> Vec<C> {
    m.schur().unpack().1.diagonal().iter().copied().collect()
}

/// Each expected value must claim exactly its multiplicity among the found
/// values.
fn assert_spectrum(found: &[C], expected: &[(C, usize)], tol: f64) {
    let mut left: Vec<C> = found.to_vec();
    for &(value, mult) in expected {
        for _ in 0..mult {
            let (i, d) = left
                .iter()
                .enumerate()
                .map(|(i, x)| (i, (x - value).norm()))
                .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            assert!(d < tol, "eigenvalue {value} missing (closest {d:e})");
            left.remove(i);
        }
    }
    assert!(left.is_empty());
}

#[test]
fn dense_spectra_match_closed_forms() {
    for n in 1..=5 {
        for p in all_params(n) {
            let direct: Vec<(C, usize)> = (0..=n).map(|l| (lambda(&p, l), binom(n, l))).collect();
            let dual: Vec<(C, usize)> = (0..=n).map(|s| (lambda_tilde(&p, s), binom(n, s))).collect();
            // degenerate eigenvalues are only resolved to about √ε by Schur
            assert_spectrum(&spectrum(generator(&p, 0)), &direct, 1e-6);
            assert_spectrum(&spectrum(generator(&p, 1)), &dual, 1e-6);
        }
    }
}

#[test]
fn recursion_matches_library_basis_change() {
    for n in 1..=5 {
        for p in all_params(n) {
            let rec = entries_recursive(&p).unwrap();
            let ora = oracle_entries(&p).unwrap();
            assert!(rec.max_relative_diff(&ora).unwrap() < 1e-9, "N={n}");
            assert!(ora.off_band_max < 1e-10);
        }
    }
}

#[test]
fn dual_routes_agree() {
    for n in 1..=5 {
        for p in all_params(n) {
            let sub = dual_entries(&p, DualRoute::Substitution).unwrap();
            let bc = dual_entries(&p, DualRoute::BasisChange).unwrap();
            let d = sub.max_relative_diff(&bc).unwrap();
            assert!(d < 1e-9, "N={n}: {d}");
        }
    }
}

#[test]
fn block_trace_is_spectral_sum() {
    for n in 1..=6 {
        for p in all_params(n) {
            let expected: C = (0..=n).map(|s| lambda_tilde(&p, s) * binom(n, s) as f64).sum();
            let t = entries_recursive(&p).unwrap().trace();
            assert!((t - expected).norm() < 1e-10 * expected.norm().max(1.0));
        }
    }
}

#[test]
fn normalization_against_dense_pairings() {
    for n in 1..=6 {
        for p in all_params(n) {
            let norms = norm_coeffs(&p, false, 1e-8).unwrap().flat();
            for (pos, (_, eps)) in all_sequences(n).iter().enumerate() {
                let direct = dot(&psi_dual(&p, eps), &psi(&p, eps));
                assert!((norms[pos] * direct - 1.0).norm() < 1e-10);
            }
            let tilde = norm_coeffs(&p, true, 1e-8).unwrap().flat();
            for (pos, (_, eps)) in all_sequences(n).iter().enumerate() {
                let direct = dot(&phi_dual(&p, eps), &phi(&p, eps));
                assert!((tilde[pos] * direct - 1.0).norm() < 1e-10);
            }
            assert!(biorthogonality_defect(&p, BasisKind::Psi, 1e-8).unwrap() < 1e-10);
            assert!(biorthogonality_defect(&p, BasisKind::Phi, 1e-8).unwrap() < 1e-10);
        }
    }
}
