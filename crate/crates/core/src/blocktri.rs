//! Block-tridiagonal form of one generator in the eigenbasis of the other.
//!
//! For level `n` the blocks hold `W₁ψₙ₍ⱼ₎ = Σᵢ bₙ₍ᵢⱼ₎ψₙ₊₁₍ᵢ₎ + Σᵢ aₙ₍ᵢⱼ₎ψₙ₍ᵢ₎ + Σᵢ cₙ₍ᵢⱼ₎ψₙ₋₁₍ᵢ₎`.
//! Entry `(i, j)` of a stored block is `xₙ₍ᵢⱼ₎` with `i` the target rank and
//! `j` the source rank, both zero-based.

use serde::{Deserialize, Serialize};

use crate::construct::{build_unchecked, Generator};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, C64, ZERO};
use crate::params::{guard, require_valid, GenericityTolerances, ModelParams};
use crate::spectral::{
    binomial, dual_functionals, level_offsets, norm_coeffs, pairing, BasisKind, EigenBasis, NormCoeffs,
};

/// Condition estimate above which the basis-change oracle refuses to run.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockMethod {
    Recursive,
    BasisChange,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualRoute {
    Substitution,
    BasisChange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockTriMatrix {
    pub n_factors: usize,
    pub method: BlockMethod,
    /// `a[n]`: `C(N,n) × C(N,n)`.
    pub a: Vec<DenseMatrix>,
    /// `b[n]`: `C(N,n+1) × C(N,n)`; `b[N]` has no rows.
    pub b: Vec<DenseMatrix>,
    /// `c[n]`: `C(N,n−1) × C(N,n)`; `c[0]` has no rows.
    pub c: Vec<DenseMatrix>,
    /// Largest coefficient seen outside the three block diagonals. Always
    /// zero for the recursion; measured by the basis-change oracle.
    pub off_band_max: f64,
}

impl BlockTriMatrix {
    fn empty(n_factors: usize, method: BlockMethod) -> Self {
        let mut a = Vec::with_capacity(n_factors + 1);
        let mut b = Vec::with_capacity(n_factors + 1);
        let mut c = Vec::with_capacity(n_factors + 1);
        for n in 0..=n_factors {
            let d = binomial(n_factors, n);
            a.push(DenseMatrix::zeros(d, d));
            b.push(DenseMatrix::zeros(binomial(n_factors, n + 1), d));
            c.push(DenseMatrix::zeros(
                if n == 0 { 0 } else { binomial(n_factors, n - 1) },
                d,
            ));
        }
        Self {
            n_factors,
            method,
            a,
            b,
            c,
            off_band_max: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_factors
    }

    /// The full matrix `M` with `W₁P = PM`, `P` the basis columns.
    pub fn assemble(&self) -> DenseMatrix {
        let off = level_offsets(self.n_factors);
        let mut m = DenseMatrix::zeros(self.dim(), self.dim());
        for n in 0..=self.n_factors {
            place(&mut m, &self.a[n], off[n], off[n]);
            if n < self.n_factors {
                place(&mut m, &self.b[n], off[n + 1], off[n]);
            }
            if n > 0 {
                place(&mut m, &self.c[n], off[n - 1], off[n]);
            }
        }
        m
    }

    /// Largest entry of the assembled matrix outside the block band.
    pub fn assembled_off_band_max(&self) -> f64 {
        let off = level_offsets(self.n_factors);
        let level_of = |k: usize| off.iter().rposition(|&o| o <= k).expect("offset table starts at 0");
        let m = self.assemble();
        let mut worst: f64 = 0.0;
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                if level_of(r).abs_diff(level_of(c)) >= 2 {
                    worst = worst.max(m[(r, c)].norm());
                }
            }
        }
        worst
    }

    pub fn trace(&self) -> C64 {
        self.a.iter().map(DenseMatrix::trace).sum()
    }

    /// Largest entrywise difference, relative to `max(1, |other entry|)`.
    pub fn max_relative_diff(&self, other: &Self) -> Result<f64> {
        if self.n_factors != other.n_factors {
            return Err(Error::DimensionMismatch {
                left: self.n_factors,
                right: other.n_factors,
            });
        }
        let mut worst: f64 = 0.0;
        for (xs, ys) in [(&self.a, &other.a), (&self.b, &other.b), (&self.c, &other.c)] {
            for (x, y) in xs.iter().zip(ys.iter()) {
                for (u, v) in x.entries().iter().zip(y.entries()) {
                    worst = worst.max((u - v).norm() / v.norm().max(1.0));
                }
            }
        }
        Ok(worst)
    }
}

fn place(m: &mut DenseMatrix, block: &DenseMatrix, r0: usize, c0: usize) {
    for i in 0..block.rows() {
        for j in 0..block.cols() {
            m[(r0 + i, c0 + j)] = block[(i, j)];
        }
    }
}

/// The four `N = 1` coefficients `(a₀, a₁, b₀, c₁)`.
pub fn n1_entries(params: &ModelParams) -> Result<[C64; 4]> {
    let (a, s, ph) = (params.alpha, params.alpha_star, params.phi);
    let sa = guard(a.sinh(), GenericityTolerances::default().genericity, || "sinh α".into())?;
    let h = (ph / 2.0).sinh();
    let sum = a.cosh() + s.cosh();
    Ok([
        (s.cosh() * (a - ph / 2.0).sinh() - h) / sa,
        (s.cosh() * (a + ph / 2.0).sinh() + h) / sa,
        a.exp() * sum * h / sa,
        -(-a).exp() * sum * h / sa,
    ])
}

/// Blocks of `W₁` in the `ψ` basis from the level recursion in `N`.
///
/// Stepping from `N−1` to `N`, each level splits into the `ε_N = +1` family
/// (ranks `1..P`, `P = C(N−1,n)`) and the `ε_N = −1` family. Of the two
/// readings of the garbled vanishing statement for `c`, only the one implied
/// by the five explicit `C`-rules is used: entries with target rank beyond
/// `C(N−1,n−1)` and source rank at most `P` are zero.
pub fn entries_recursive(params: &ModelParams) -> Result<BlockTriMatrix> {
    let tol = GenericityTolerances::default();
    require_valid(params, &tol)?;
    let (al, ph) = (params.alpha, params.phi);
    let g = tol.genericity;
    let sh = |m: i64| (al + ph * (m as f64) / 2.0).sinh();
    let ch = |m: i64| (al + ph * (m as f64) / 2.0).cosh();
    let ex = |sign: f64, m: i64| (al * sign + ph * (sign * m as f64) / 2.0).exp();
    let h = (ph / 2.0).sinh();
    let sphi = ph.sinh();
    let eh = (ph / 2.0).exp();

    let [a0, a1, b0, c1] = n1_entries(params)?;
    let mut cur = BlockTriMatrix::empty(1, BlockMethod::Recursive);
    cur.a[0][(0, 0)] = a0;
    cur.a[1][(0, 0)] = a1;
    cur.b[0][(0, 0)] = b0;
    cur.c[1][(0, 0)] = c1;

    for m in 2..=params.n {
        let mi = m as i64;
        let mut next = BlockTriMatrix::empty(m, BlockMethod::Recursive);
        for n in 0..=m {
            let ni = n as i64;
            let p = binomial(m - 1, n);
            let dn = binomial(m, n);
            let lo = || guard(sh(mi - 1 - 2 * ni), g, || format!("sinh(α+({}−2n)φ/2), n={n}", m - 1));
            let hi = || guard(sh(mi + 1 - 2 * ni), g, || format!("sinh(α+({}−2n)φ/2), n={n}", m + 1));

            let a = &mut next.a[n];
            for i in 0..dn {
                for j in 0..dn {
                    a[(i, j)] = match (i < p, j < p) {
                        (true, true) => {
                            let prev = cur.a[n][(i, j)];
                            if i == j {
                                (prev * sh(mi - 2 - 2 * ni) - h) / lo()?
                            } else {
                                sh(mi - 2 - 2 * ni) / lo()? * prev
                            }
                        }
                        (false, false) => {
                            let prev = cur.a[n - 1][(i - p, j - p)];
                            if i == j {
                                (prev * sh(mi + 2 - 2 * ni) + h) / hi()?
                            } else {
                                sh(mi + 2 - 2 * ni) / hi()? * prev
                            }
                        }
                        (true, false) => -ex(-1.0, mi - 2 * ni) * sphi / lo()? * cur.b[n - 1][(i, j - p)],
                        (false, true) => ex(1.0, mi - 2 * ni) * sphi / hi()? * cur.c[n][(i - p, j)],
                    };
                }
            }

            if n < m {
                let pb = binomial(m - 1, n + 1);
                let pref = ex(1.0, mi - 1 - 2 * ni) * h / lo()?;
                let b = &mut next.b[n];
                for i in 0..b.rows() {
                    for j in 0..dn {
                        b[(i, j)] = if i < pb {
                            if j < p {
                                eh * cur.b[n][(i, j)]
                            } else {
                                ZERO
                            }
                        } else if j >= p {
                            eh.inv() * sh(mi + 1 - 2 * ni) / lo()? * cur.b[n - 1][(i - pb, j - p)]
                        } else if j == i - pb {
                            pref * (cur.a[n][(j, j)] + ch(mi - 1 - 2 * ni))
                        } else {
                            pref * cur.a[n][(i - pb, j)]
                        };
                    }
                }
            }

            if n > 0 {
                let pc = binomial(m - 1, n - 1);
                let pref = -ex(-1.0, mi + 1 - 2 * ni) * h / hi()?;
                let c = &mut next.c[n];
                for i in 0..c.rows() {
                    for j in 0..dn {
                        c[(i, j)] = if i >= pc {
                            if j >= p {
                                eh * cur.c[n - 1][(i - pc, j - p)]
                            } else {
                                ZERO
                            }
                        } else if j < p {
                            eh.inv() * lo()? / hi()? * cur.c[n][(i, j)]
                        } else if j - p == i {
                            pref * (cur.a[n - 1][(i, i)] + ch(mi + 1 - 2 * ni))
                        } else {
                            pref * cur.a[n - 1][(i, j - p)]
                        };
                    }
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// Expansion coefficients of `w` in `basis` via biorthogonality:
/// the coefficient of `vₐ` in `w v_b` is `𝒩ₐ⟨dualₐ, w v_b⟩`.
///
/// Coefficients between levels two or more apart are not stored; their
/// largest magnitude is reported in `off_band_max`.
pub fn entries_by_basis_change(
    w: &DenseMatrix,
    basis: &EigenBasis,
    duals: &EigenBasis,
    norms: &NormCoeffs,
) -> Result<BlockTriMatrix> {
    let n_factors = basis.n_factors();
    let dim = 1usize << n_factors;
    if w.rows() != dim || !w.is_square() {
        return Err(Error::DimensionMismatch {
            left: w.rows(),
            right: dim,
        });
    }
    if duals.n_factors() != n_factors || norms.n_factors != n_factors {
        return Err(Error::DimensionMismatch {
            left: duals.n_factors(),
            right: n_factors,
        });
    }
    let flat = norms.flat();
    let cond = condition_from_parts(basis, duals, &flat);
    if cond.is_nan() || cond > MAX_CONDITION {
        return Err(Error::Degenerate {
            context: "eigenbasis condition estimate".into(),
            value: cond.recip(),
            tol: MAX_CONDITION.recip(),
        });
    }

    let images: Vec<Vec<C64>> = basis.vectors().iter().map(|v| w.matvec(v)).collect::<Result<_>>()?;
    let dual_vecs = duals.vectors();
    let mut out = BlockTriMatrix::empty(n_factors, BlockMethod::BasisChange);
    for (tp, d) in dual_vecs.iter().enumerate() {
        let t = &basis.indices[tp];
        for (sp, img) in images.iter().enumerate() {
            let s = &basis.indices[sp];
            let x = flat[tp] * pairing(d, img)?;
            let (i, j) = (t.rank - 1, s.rank - 1);
            if t.level == s.level {
                out.a[s.level][(i, j)] = x;
            } else if t.level == s.level + 1 {
                out.b[s.level][(i, j)] = x;
            } else if t.level + 1 == s.level {
                out.c[s.level][(i, j)] = x;
            } else {
                out.off_band_max = out.off_band_max.max(x.norm());
            }
        }
    }
    Ok(out)
}

fn condition_from_parts(basis: &EigenBasis, duals: &EigenBasis, norms: &[C64]) -> f64 {
    let frob = |coeffs: &[Vec<C64>], weights: Option<&[C64]>| -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let w = weights.map_or(1.0, |ws| ws[k].norm_sqr());
                w * c.iter().map(|x| x.norm_sqr() + 1.0).product::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    };
    frob(&basis.coefficients, None) * frob(&duals.coefficients, Some(norms))
}

/// Blocks of `W₁` in the `ψ` basis through the basis-change oracle.
pub fn oracle_entries(params: &ModelParams) -> Result<BlockTriMatrix> {
    let tol = GenericityTolerances::default();
    require_valid(params, &tol)?;
    let w1 = build_unchecked(params, Generator::W1);
    let basis = EigenBasis::new(params, BasisKind::Psi);
    let duals = dual_functionals(params, BasisKind::Psi)?;
    let norms = norm_coeffs(params, false, tol.genericity)?;
    entries_by_basis_change(&w1, &basis, &duals, &norms)
}

/// Blocks `ã, b̃, c̃` of `W₀` in the `φ` basis, indexed by `s`.
pub fn dual_entries(params: &ModelParams, via: DualRoute) -> Result<BlockTriMatrix> {
    match via {
        DualRoute::Substitution => entries_recursive(&params.dual_substitution()),
        DualRoute::BasisChange => {
            let tol = GenericityTolerances::default();
            require_valid(params, &tol)?;
            let w0 = build_unchecked(params, Generator::W0);
            let basis = EigenBasis::new(params, BasisKind::Phi);
            let duals = dual_functionals(params, BasisKind::Phi)?;
            let norms = norm_coeffs(params, true, tol.genericity)?;
            entries_by_basis_change(&w0, &basis, &duals, &norms)
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn i(x: f64) -> C64 {
        C64::new(0.0, x)
    }

    fn sample(n: usize) -> ModelParams {
        ModelParams::new(n, i(PI / 3.0), i(PI / 5.0), i(0.37), 0.4)
    }

    fn generic(n: usize) -> ModelParams {
        ModelParams::new(n, C64::new(0.3, 0.7), C64::new(-0.2, 1.1), i(0.45), 1.3)
    }

    #[test]
    fn shapes() {
        let b = entries_recursive(&sample(4)).unwrap();
        for n in 0..=4 {
            assert_eq!((b.a[n].rows(), b.a[n].cols()), (binomial(4, n), binomial(4, n)));
            assert_eq!((b.b[n].rows(), b.b[n].cols()), (binomial(4, n + 1), binomial(4, n)));
            assert_eq!(b.c[n].cols(), binomial(4, n));
        }
        assert_eq!(b.b[4].rows(), 0);
        assert_eq!(b.c[0].rows(), 0);
        assert_eq!(b.assembled_off_band_max(), 0.0);
    }

    #[test]
    fn n1_matches_oracle() {
        for p in [sample(1), generic(1)] {
            let rec = entries_recursive(&p).unwrap();
            let ora = oracle_entries(&p).unwrap();
            assert!(rec.max_relative_diff(&ora).unwrap() < 1e-12);
        }
    }

    #[test]
    fn n2_scaled_b_entry() {
        let p = sample(2);
        let rec = entries_recursive(&p).unwrap();
        let [_, _, b0, _] = n1_entries(&p).unwrap();
        assert!((rec.b[0][(0, 0)] - (p.phi / 2.0).exp() * b0).norm() < 1e-15);
        let nonzero: usize = rec.assemble().entries().iter().filter(|x| x.norm() > 1e-14).count();
        // two structural zeros in the 4×4 matrix
        assert_eq!(nonzero, 14);
    }

    #[test]
    fn recursion_matches_oracle_n3_n4() {
        for n in 3..=4 {
            for p in [sample(n), generic(n)] {
                let rec = entries_recursive(&p).unwrap();
                let ora = oracle_entries(&p).unwrap();
                assert!(rec.max_relative_diff(&ora).unwrap() < 1e-9, "N={n}");
                assert!(ora.off_band_max < 1e-10);
            }
        }
    }

    #[test]
    fn dual_routes_agree() {
        for p in [sample(2), generic(3)] {
            let s = dual_entries(&p, DualRoute::Substitution).unwrap();
            let o = dual_entries(&p, DualRoute::BasisChange).unwrap();
            assert!(s.max_relative_diff(&o).unwrap() < 1e-10);
        }
    }

    #[test]
    fn substitution_is_an_involution_on_entries() {
        let p = generic(3);
        let twice = p.dual_substitution().dual_substitution();
        let x = entries_recursive(&p).unwrap();
        let y = entries_recursive(&twice).unwrap();
        assert!(x.max_relative_diff(&y).unwrap() < 1e-13);
    }

    #[test]
    fn trace_matches_generator() {
        let p = generic(4);
        let rec = entries_recursive(&p).unwrap();
        let w1 = build_unchecked(&p, Generator::W1);
        assert!((rec.trace() - w1.trace()).norm() < 1e-10);
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let p = sample(2);
        let w = build_unchecked(&sample(3), Generator::W1);
        let basis = EigenBasis::new(&p, BasisKind::Psi);
        let duals = dual_functionals(&p, BasisKind::Psi).unwrap();
        let norms = norm_coeffs(&p, false, 1e-8).unwrap();
        assert!(entries_by_basis_change(&w, &basis, &duals, &norms).is_err());
    }
}
