//! Closed-form eigenbases of the two generators.
//!
//! Every basis vector is a product `⊗ₗ (xₗ f₊ˡ + f₋ˡ)` over the tensor
//! factors `l = 1..N`, with factor `l = N` leftmost in the Kronecker order.
//! Vectors are stored through their coefficients `xₗ` and expanded on demand.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, C64, ONE};
use crate::params::{guard, ModelParams};

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc
}

/// Start of each level in the level-major ordering: `offsets[n] = Σ_{l<n} C(N, l)`,
/// with a final entry equal to `2ᴺ`.
pub fn level_offsets(n_factors: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n_factors + 2);
    let mut acc = 0;
    out.push(0);
    for l in 0..=n_factors {
        acc += binomial(n_factors, l);
        out.push(acc);
    }
    out
}

/// A sign sequence together with its level and its rank inside the level.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EigenIndex {
    /// `ε₁, …, ε_N`, each `±1`.
    pub epsilons: Vec<i8>,
    /// `n = (N − Σεₖ)/2`.
    pub level: usize,
    /// One-based position inside the level.
    pub rank: usize,
}

impl EigenIndex {
    /// Locate a sign sequence in the canonical order.
    pub fn from_epsilons(epsilons: &[i8]) -> Result<Self> {
        if epsilons.iter().any(|e| *e != 1 && *e != -1) {
            return Err(Error::IndexOutOfRange(format!("signs must be ±1, got {epsilons:?}")));
        }
        let level = epsilons.iter().filter(|e| **e == -1).count();
        Ok(Self {
            epsilons: epsilons.to_vec(),
            level,
            rank: rank_of(epsilons) + 1,
        })
    }

    /// Sign sequence at `(level, rank)` for `N` factors.
    pub fn from_level_rank(n_factors: usize, level: usize, rank: usize) -> Result<Self> {
        if level > n_factors || rank == 0 || rank > binomial(n_factors, level) {
            return Err(Error::IndexOutOfRange(format!(
                "(level {level}, rank {rank}) for N = {n_factors}"
            )));
        }
        let mut eps = vec![0i8; n_factors];
        let (mut lvl, mut r) = (level, rank - 1);
        for m in (1..=n_factors).rev() {
            let split = binomial(m - 1, lvl);
            if r < split {
                eps[m - 1] = 1;
            } else {
                eps[m - 1] = -1;
                r -= split;
                lvl -= 1;
            }
        }
        Ok(Self {
            epsilons: eps,
            level,
            rank,
        })
    }

    pub fn n_factors(&self) -> usize {
        self.epsilons.len()
    }
}

/// Zero-based rank: the last factor splits a level into the `+1` family
/// (first `C(N−1, n)` slots) and the `−1` family.
fn rank_of(eps: &[i8]) -> usize {
    let mut rank = 0;
    let mut level = eps.iter().filter(|e| **e == -1).count();
    for m in (1..=eps.len()).rev() {
        if eps[m - 1] == -1 {
            rank += binomial(m - 1, level);
            level -= 1;
        }
    }
    rank
}

/// All sign sequences of level `level` for `N` factors, in canonical order.
pub fn canonical_order(n_factors: usize, level: usize) -> Result<Vec<Vec<i8>>> {
    if level > n_factors {
        return Err(Error::IndexOutOfRange(format!("level {level} for N = {n_factors}")));
    }
    // table[n] holds the level-n sequences for the current number of factors
    let mut table: Vec<Vec<Vec<i8>>> = vec![vec![vec![]]];
    for m in 1..=n_factors {
        let mut next = Vec::with_capacity(m + 1);
        for n in 0..=m {
            let mut seqs = Vec::with_capacity(binomial(m, n));
            if n < m {
                for s in &table[n] {
                    let mut s = s.clone();
                    s.push(1);
                    seqs.push(s);
                }
            }
            if n > 0 {
                for s in &table[n - 1] {
                    let mut s = s.clone();
                    s.push(-1);
                    seqs.push(s);
                }
            }
            next.push(seqs);
        }
        table = next;
    }
    Ok(std::mem::take(&mut table[level]))
}

/// Every index for `N` factors, level-major.
pub fn canonical_indices(n_factors: usize) -> Vec<EigenIndex> {
    let mut out = Vec::with_capacity(1 << n_factors);
    for level in 0..=n_factors {
        for (r, eps) in canonical_order(n_factors, level)
            .expect("level in range")
            .into_iter()
            .enumerate()
        {
            out.push(EigenIndex {
                epsilons: eps,
                level,
                rank: r + 1,
            });
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// Eigenvectors of `W₀`.
    Psi,
    /// Eigenvectors of `W₁`.
    Phi,
    /// `φ` with `α* → α`.
    PsiTilde,
    /// `ψ` with `α → α*`.
    PhiTilde,
}

impl BasisKind {
    /// `(sign, exponent, step)` such that factor `l` carries
    /// `sign · exp(εₗ·exponent + εₗ·Σ_{k<l}εₖ·step/2 + iθ)`.
    fn factor_rule(self, p: &ModelParams) -> (f64, C64, C64) {
        match self {
            BasisKind::Psi => (1.0, p.alpha, p.phi),
            BasisKind::Phi => (-1.0, -p.alpha_star, -p.phi),
            BasisKind::PsiTilde => (-1.0, -p.alpha, -p.phi),
            BasisKind::PhiTilde => (1.0, p.alpha_star, p.phi),
        }
    }

    fn eigenvalue(self, p: &ModelParams, level: usize) -> C64 {
        match self {
            BasisKind::Psi | BasisKind::PsiTilde => p.eigenvalue(level),
            BasisKind::Phi | BasisKind::PhiTilde => p.dual_eigenvalue(level),
        }
    }
}

/// Coefficients `x₁..x_N` of a product vector.
pub fn factor_coefficients(params: &ModelParams, kind: BasisKind, epsilons: &[i8]) -> Vec<C64> {
    let (sign, exponent, step) = kind.factor_rule(params);
    let phase = C64::new(0.0, params.theta);
    let mut partial = 0i64;
    epsilons
        .iter()
        .map(|&e| {
            let e = e as f64;
            let x = (exponent * e + step * (e * partial as f64 / 2.0) + phase).exp() * sign;
            partial += e as i64;
            x
        })
        .collect()
}

/// Expand `⊗_{l=N..1} (xₗ, 1)`; factor `l` controls bit `l − 1` of the
/// component index, bit value 0 meaning `f₊`.
pub fn expand_product(coeffs: &[C64]) -> Vec<C64> {
    let mut v = vec![ONE];
    for x in coeffs {
        let mut next = Vec::with_capacity(v.len() * 2);
        next.extend(v.iter().map(|c| c * x));
        next.extend_from_slice(&v);
        v = next;
    }
    v
}

fn check_index(params: &ModelParams, idx: &EigenIndex) -> Result<()> {
    let consistent = idx.epsilons.len() == params.n
        && EigenIndex::from_epsilons(&idx.epsilons)
            .map(|e| e.level == idx.level && e.rank == idx.rank)
            .unwrap_or(false);
    if consistent {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange(format!(
            "index {idx:?} inconsistent with N = {}",
            params.n
        )))
    }
}

/// `ψ⁽ᴺ⁾ₙ₍ᵢ₎ = ⊗ₗ (e^{εₗα + εₗΣ_{k<l}εₖφ/2 + iθ} f₊ˡ + f₋ˡ)`.
pub fn psi_vector(params: &ModelParams, idx: &EigenIndex) -> Result<Vec<C64>> {
    check_index(params, idx)?;
    Ok(expand_product(&factor_coefficients(
        params,
        BasisKind::Psi,
        &idx.epsilons,
    )))
}

/// `φ⁽ᴺ⁾ₛ₍ₖ₎ = ⊗ₗ (−e^{−ε̃ₗα* − ε̃ₗΣ_{j<l}ε̃ⱼφ/2 + iθ} f₊ˡ + f₋ˡ)`.
pub fn phi_vector(params: &ModelParams, idx: &EigenIndex) -> Result<Vec<C64>> {
    check_index(params, idx)?;
    Ok(expand_product(&factor_coefficients(
        params,
        BasisKind::Phi,
        &idx.epsilons,
    )))
}

/// Bilinear form `Σᵢ uᵢvᵢ`; no conjugation.
pub fn pairing(u: &[C64], v: &[C64]) -> Result<C64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(u.iter().zip(v).map(|(a, b)| a * b).sum())
}

/// Sesquilinear form `Σᵢ conj(uᵢ)vᵢ`.
pub fn hermitian_pairing(u: &[C64], v: &[C64]) -> Result<C64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(u.iter().zip(v).map(|(a, b)| a.conj() * b).sum())
}

/// Bilinear pairing of two product vectors, factor by factor.
pub fn product_pairing(u: &[C64], v: &[C64]) -> C64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b + 1.0).product()
}

/// An ordered eigenbasis in level-major canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenBasis {
    pub kind: BasisKind,
    pub params: ModelParams,
    pub indices: Vec<EigenIndex>,
    pub eigenvalues: Vec<C64>,
    /// Per vector, the factor coefficients `x₁..x_N`.
    pub coefficients: Vec<Vec<C64>>,
}

impl EigenBasis {
    pub fn new(params: &ModelParams, kind: BasisKind) -> Self {
        let indices = canonical_indices(params.n);
        let eigenvalues = indices.iter().map(|i| kind.eigenvalue(params, i.level)).collect();
        let coefficients = indices
            .iter()
            .map(|i| factor_coefficients(params, kind, &i.epsilons))
            .collect();
        Self {
            kind,
            params: *params,
            indices,
            eigenvalues,
            coefficients,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn n_factors(&self) -> usize {
        self.params.n
    }

    pub fn offsets(&self) -> Vec<usize> {
        level_offsets(self.params.n)
    }

    /// Position of `(level, rank)` (rank one-based) in the ordering.
    pub fn position(&self, level: usize, rank: usize) -> usize {
        level_offsets(self.params.n)[level] + rank - 1
    }

    pub fn vector(&self, pos: usize) -> Vec<C64> {
        expand_product(&self.coefficients[pos])
    }

    pub fn vectors(&self) -> Vec<Vec<C64>> {
        (0..self.len()).map(|p| self.vector(p)).collect()
    }

    /// The basis vectors as the columns of a `2ᴺ × 2ᴺ` matrix.
    pub fn columns(&self) -> DenseMatrix {
        DenseMatrix::from_columns(&self.vectors()).expect("uniform vector length")
    }
}

/// The literal tilde basis (`ψ̃` or `φ̃`) at the given parameters.
pub fn tilde_vectors(params: &ModelParams, kind: BasisKind) -> Result<EigenBasis> {
    match kind {
        BasisKind::PsiTilde | BasisKind::PhiTilde => Ok(EigenBasis::new(params, kind)),
        other => Err(Error::Regime(format!("{other:?} is not a tilde basis"))),
    }
}

/// Row functionals biorthogonal (up to [`NormCoeffs`]) to the `ψ` or `φ`
/// basis under the bilinear [`pairing`]: the matching tilde basis evaluated
/// at [`ModelParams::conjugate_continuation`].
///
/// When `α, α*, φ` are purely imaginary these are exactly the complex
/// conjugates of the tilde vectors, so `pairing(dual, v)` equals
/// `hermitian_pairing(tilde, v)`.
pub fn dual_functionals(params: &ModelParams, target: BasisKind) -> Result<EigenBasis> {
    let tilde = match target {
        BasisKind::Psi => BasisKind::PsiTilde,
        BasisKind::Phi => BasisKind::PhiTilde,
        other => return Err(Error::Regime(format!("no dual functionals for {other:?}"))),
    };
    Ok(EigenBasis::new(&params.conjugate_continuation(), tilde))
}

/// Normalization coefficients making the dual functionals biorthonormal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormCoeffs {
    pub tilde: bool,
    pub n_factors: usize,
    /// Per level, one value per rank.
    pub values: Vec<Vec<C64>>,
}

impl NormCoeffs {
    /// `𝒩ₙ₍ᵢ₎` with a one-based rank.
    pub fn get(&self, level: usize, rank: usize) -> C64 {
        self.values[level][rank - 1]
    }

    /// Flattened in level-major order.
    pub fn flat(&self) -> Vec<C64> {
        self.values.iter().flatten().copied().collect()
    }
}

/// `𝒩⁽ᴺ⁾ₙ₍ᵢ₎ = 𝒩⁽ᴺ⁻¹⁾ₙ₍ᵢ₎ (1 − e^{2α + (N−1−2n)φ})⁻¹` on the `+1` family and
/// `𝒩⁽ᴺ⁻¹⁾ₙ₋₁₍ᵢ₋C₎ (1 − e^{−2α − (N+1−2n)φ})⁻¹` on the `−1` family, from
/// `𝒩⁽⁰⁾ = 1`. The tilde table uses `α → −α*`, `φ → −φ`.
pub fn norm_coeffs(params: &ModelParams, tilde: bool, tol: f64) -> Result<NormCoeffs> {
    let (a, phi) = if tilde {
        (-params.alpha_star, -params.phi)
    } else {
        (params.alpha, params.phi)
    };
    let mut table: Vec<Vec<C64>> = vec![vec![ONE]];
    for m in 1..=params.n {
        let mut next = Vec::with_capacity(m + 1);
        for n in 0..=m {
            let mut row = Vec::with_capacity(binomial(m, n));
            if n < m {
                let d = ONE - (a * 2.0 + phi * (m as f64 - 1.0 - 2.0 * n as f64)).exp();
                let d = guard(d, tol, || format!("normalization denominator (N={m}, n={n}, + family)"))?;
                row.extend(table[n].iter().map(|x| x / d));
            }
            if n > 0 {
                let d = ONE - (-a * 2.0 - phi * (m as f64 + 1.0 - 2.0 * n as f64)).exp();
                let d = guard(d, tol, || format!("normalization denominator (N={m}, n={n}, − family)"))?;
                row.extend(table[n - 1].iter().map(|x| x / d));
            }
            next.push(row);
        }
        table = next;
    }
    Ok(NormCoeffs {
        tilde,
        n_factors: params.n,
        values: table,
    })
}

/// `max |𝒩ₐ⟨dualₐ, v_b⟩ − δₐᵦ|` over the whole basis, evaluated with dense
/// vectors.
pub fn biorthogonality_defect(params: &ModelParams, target: BasisKind, tol: f64) -> Result<f64> {
    let basis = EigenBasis::new(params, target);
    let duals = dual_functionals(params, target)?;
    let norms = norm_coeffs(params, target == BasisKind::Phi, tol)?.flat();
    let vs = basis.vectors();
    let mut worst: f64 = 0.0;
    for (a, nrm) in norms.iter().enumerate() {
        let d = duals.vector(a);
        for (b, v) in vs.iter().enumerate() {
            let target = if a == b { ONE } else { C64::new(0.0, 0.0) };
            worst = worst.max((nrm * pairing(&d, v)? - target).norm());
        }
    }
    Ok(worst)
}

/// `‖P‖_F ‖P⁻¹‖_F` for the matrix whose columns are the basis vectors,
/// using the closed-form inverse `P⁻¹ = diag(𝒩)·Dᵀ` with `D` the dual
/// functionals. Finite and moderate for generic parameters.
pub fn condition_estimate(params: &ModelParams, target: BasisKind, tol: f64) -> Result<f64> {
    let basis = EigenBasis::new(params, target);
    let duals = dual_functionals(params, target)?;
    let norms = norm_coeffs(params, target == BasisKind::Phi, tol)?.flat();
    let p_norm: f64 = basis
        .coefficients
        .iter()
        .map(|c| c.iter().map(|x| x.norm_sqr() + 1.0).product::<f64>())
        .sum::<f64>()
        .sqrt();
    let inv_norm: f64 = duals
        .coefficients
        .iter()
        .zip(&norms)
        .map(|(c, n)| n.norm_sqr() * c.iter().map(|x| x.norm_sqr() + 1.0).product::<f64>())
        .sum::<f64>()
        .sqrt();
    Ok(p_norm * inv_norm)
}

/// `max |(λ_{n−2} − λ_{n+1})/(λ_{n−1} − λ_n) − (q + q⁻¹ + 1)|` over
/// `2 ≤ n ≤ N − 1`; zero when the range is empty.
pub fn eigenvalue_ratio_defect(values: &[C64], q: Complex64) -> f64 {
    let target = q + q.inv() + 1.0;
    let len = values.len();
    if len < 4 {
        return 0.0;
    }
    (2..len - 1)
        .map(|n| {
            let ratio = (values[n - 2] - values[n + 1]) / (values[n - 1] - values[n]);
            (ratio - target).norm()
        })
        .fold(0.0, f64::max)
}
