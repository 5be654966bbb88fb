//! The generators `W₀⁽ᴺ⁾`, `W₁⁽ᴺ⁾` built by Kronecker recursion, and the
//! algebraic relations they are checked against.

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{sigma_minus, sigma_plus, DenseMatrix, C64};
use crate::params::{derive_unchecked, require_valid, DerivedScalars, GenericityTolerances, ModelParams};

/// Largest `N` built densely unless a caller raises the cap.
pub const DEFAULT_MAX_N: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    W0,
    W1,
}

impl Generator {
    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            0 => Some(Generator::W0),
            1 => Some(Generator::W1),
            _ => None,
        }
    }
}

pub fn build_w0(params: &ModelParams) -> Result<DenseMatrix> {
    build(params, Generator::W0, DEFAULT_MAX_N)
}

pub fn build_w1(params: &ModelParams) -> Result<DenseMatrix> {
    build(params, Generator::W1, DEFAULT_MAX_N)
}

/// `W⁽ᴺ⁾ = (k₊σ₊ + k₋σ₋) ⊗ 𝟙⁽ᴺ⁻¹⁾ + q^{±σ₃/2} ⊗ W⁽ᴺ⁻¹⁾`, seeded with the
/// 1×1 matrix `cosh α` (for `W₀`) or `cosh α*` (for `W₁`).
pub fn build(params: &ModelParams, which: Generator, max_n: usize) -> Result<DenseMatrix> {
    require_valid(params, &GenericityTolerances::default())?;
    if params.n > max_n {
        return Err(Error::DimensionCap {
            n: params.n,
            cap: max_n,
        });
    }
    Ok(build_unchecked(params, which))
}

pub(crate) fn build_unchecked(params: &ModelParams, which: Generator) -> DenseMatrix {
    let coupling = coupling(params);
    let (seed, shift) = match which {
        Generator::W0 => (params.alpha.cosh(), params.q_half()),
        Generator::W1 => (params.alpha_star.cosh(), params.q_half().inv()),
    };
    let diag = DenseMatrix::from_diagonal(&[shift, shift.inv()]);
    let mut w = DenseMatrix::from_diagonal(&[seed]);
    for level in 1..=params.n {
        let ident = DenseMatrix::identity(1 << (level - 1));
        w = &coupling.kron(&ident) + &diag.kron(&w);
    }
    w
}

/// `k₊σ₊ + k₋σ₋`.
fn coupling(params: &ModelParams) -> DenseMatrix {
    &sigma_plus().scale(params.k_plus()) + &sigma_minus().scale(params.k_minus())
}

/// Frobenius-norm comparison of the two sides of a matrix relation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationResidual {
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    pub residual: f64,
    /// `residual / max(lhs_norm, rhs_norm, 1)`.
    pub relative: f64,
}

impl RelationResidual {
    fn new(lhs: &DenseMatrix, rhs: &DenseMatrix) -> Self {
        let lhs_norm = lhs.frobenius_norm();
        let rhs_norm = rhs.frobenius_norm();
        let residual = (lhs - rhs).frobenius_norm();
        Self {
            lhs_norm,
            rhs_norm,
            residual,
            relative: residual / lhs_norm.max(rhs_norm).max(1.0),
        }
    }
}

/// `[A,[A,[A,B]_q]_{q⁻¹}] − ρ[A,B]`, bracketed left to right as written.
fn cubic_relation(a: &DenseMatrix, b: &DenseMatrix, scalars: &DerivedScalars) -> Result<RelationResidual> {
    let inner = a.q_commutator(b, scalars.q_half)?;
    let middle = a.q_commutator(&inner, scalars.q_half.inv())?;
    let lhs = a.commutator(&middle)?;
    let rhs = a.commutator(b)?.scale(scalars.rho);
    Ok(RelationResidual::new(&lhs, &rhs))
}

/// Residuals of both tridiagonal relations, the first with `A = w0`,
/// `A* = w1` and the second with the roles exchanged.
pub fn check_tridiagonal_relations(
    w0: &DenseMatrix,
    w1: &DenseMatrix,
    scalars: &DerivedScalars,
) -> Result<(RelationResidual, RelationResidual)> {
    if !w0.is_square() || !w1.is_square() || w0.rows() != w1.rows() {
        return Err(Error::DimensionMismatch {
            left: w0.rows(),
            right: w1.rows(),
        });
    }
    Ok((cubic_relation(w0, w1, scalars)?, cubic_relation(w1, w0, scalars)?))
}

/// Build both generators and check the tridiagonal relations with the
/// derived `ρ`.
pub fn tridiagonal_residuals(params: &ModelParams) -> Result<(RelationResidual, RelationResidual)> {
    let w0 = build_w0(params)?;
    let w1 = build_w1(params)?;
    check_tridiagonal_relations(&w0, &w1, &derive_unchecked(params))
}

/// Least-squares fit of the Askey-Wilson structure constants with
/// `β = q + q⁻¹` held fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AwFit {
    pub beta: C64,
    pub gamma: C64,
    pub gamma_star: C64,
    pub varrho: C64,
    pub varrho_star: C64,
    pub omega: C64,
    pub eta: C64,
    pub eta_star: C64,
    /// `‖Mx − r‖ / ‖r‖` over all `2·dim²` entry equations.
    pub relative_residual: f64,
}

impl AwFit {
    pub fn constants(&self) -> [C64; 7] {
        [
            self.gamma,
            self.gamma_star,
            self.varrho,
            self.varrho_star,
            self.omega,
            self.eta,
            self.eta_star,
        ]
    }
}

/// Fit
///
/// ```text
/// A²A* − βAA*A + A*A² − γ(AA* + A*A) − ϱA* = γ*A² + ωA + ηI
/// A*²A − βA*AA* + AA*² − γ*(A*A + AA*) − ϱ*A = γA*² + ωA* + η*I
/// ```
///
/// for the unknowns `(γ, γ*, ϱ, ϱ*, ω, η, η*)`. Rank-deficient systems get
/// the minimum-norm solution.
pub fn fit_aw_constants(a: &DenseMatrix, a_star: &DenseMatrix, q: C64) -> Result<AwFit> {
    if !a.is_square() || !a_star.is_square() || a.rows() != a_star.rows() {
        return Err(Error::DimensionMismatch {
            left: a.rows(),
            right: a_star.rows(),
        });
    }
    let dim = a.rows();
    let beta = q + q.inv();
    let ident = DenseMatrix::identity(dim);
    let zero = DenseMatrix::zeros(dim, dim);

    let aa = a * a;
    let ss = a_star * a_star;
    let as_ = a * a_star;
    let sa = a_star * a;
    let r1 = &(&(&aa * a_star) - &(&as_ * a).scale(beta)) + &(a_star * &aa);
    let r2 = &(&(&ss * a) - &(&sa * a_star).scale(beta)) + &(a * &ss);
    let anti = &as_ + &sa;

    // Columns in the order (γ, γ*, ϱ, ϱ*, ω, η, η*).
    let first: [&DenseMatrix; 7] = [&anti, &aa, a_star, &zero, a, &ident, &zero];
    let second: [&DenseMatrix; 7] = [&ss, &anti, &zero, a, a_star, &zero, &ident];

    let rows = 2 * dim * dim;
    let mut design = DMatrix::<C64>::zeros(rows, 7);
    for (col, (x, y)) in first.iter().zip(second.iter()).enumerate() {
        for (r, v) in x.entries().iter().chain(y.entries()).enumerate() {
            design[(r, col)] = *v;
        }
    }
    let rhs = DVector::<C64>::from_iterator(rows, r1.entries().iter().chain(r2.entries()).copied());

    let svd = SVD::new(design.clone(), true, true);
    let max_sv = svd.singular_values.max();
    let eps = max_sv * 1e-13 * rows as f64;
    let x = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::Regime(format!("least-squares solve failed: {e}")))?;
    let resid = (&design * &x - &rhs).norm();
    let scale = rhs.norm();
    Ok(AwFit {
        beta,
        gamma: x[0],
        gamma_star: x[1],
        varrho: x[2],
        varrho_star: x[3],
        omega: x[4],
        eta: x[5],
        eta_star: x[6],
        relative_residual: if scale > 0.0 { resid / scale } else { resid },
    })
}
