//! Overlap functions between the two eigenbases, and the recurrence,
//! q-difference and orthogonality relations they satisfy.
//!
//! `F(n, i, k, s)` is the pairing of the dual functional attached to
//! `φₛ₍ₖ₎` with `ψₙ₍ᵢ₎`, divided by `Uₖ(s)`, so that `F(0, 1, k, s) = 1`.

use nalgebra::Schur;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::blocktri::BlockTriMatrix;
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, C64, ONE, ZERO};
use crate::params::{guard, require_valid, GenericityTolerances, ModelParams};
use crate::spectral::{
    binomial, canonical_indices, canonical_order, dual_functionals, level_offsets, norm_coeffs, product_pairing,
    BasisKind, EigenBasis, NormCoeffs,
};

/// `U⁽ᴺ⁾ₖ(s)` with `k` one-based and `U⁽⁰⁾₁(0) = 1`.
pub fn overlap_u(params: &ModelParams, k: usize, s: usize) -> Result<C64> {
    if s > params.n || k == 0 || k > binomial(params.n, s) {
        return Err(Error::IndexOutOfRange(format!("(k {k}, s {s}) for N = {}", params.n)));
    }
    let (a, b, ph) = (params.alpha, params.alpha_star, params.phi);
    let (mut k, mut s) = (k, s);
    let mut acc = ONE;
    for m in (1..=params.n).rev() {
        let split = binomial(m - 1, s);
        if k <= split {
            acc *= (a - b + ph * s as f64).exp() + 1.0;
        } else {
            acc *= (a + b + ph * (m - s) as f64).exp() + 1.0;
            k -= split;
            s -= 1;
        }
    }
    Ok(acc)
}

/// All `Uₖ(s)`, indexed `[s][k − 1]`.
pub fn u_table(params: &ModelParams) -> Result<Vec<Vec<C64>>> {
    (0..=params.n)
        .map(|s| (1..=binomial(params.n, s)).map(|k| overlap_u(params, k, s)).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapTable {
    pub params: ModelParams,
    /// `[s][k − 1]`.
    pub u: Vec<Vec<C64>>,
    /// `[s][k − 1][p]` with `p` the level-major position of `(n, i)`.
    pub f: Vec<Vec<Vec<C64>>>,
    /// `wₖ(s) = 𝒩̃ₛ₍ₖ₎ Uₖ(s)²`, indexed `[s][k − 1]`.
    pub weights: Vec<Vec<C64>>,
    pub lambda_tilde: Vec<C64>,
    /// `max |⟨dual, ψ₀⟩/U − 1|` before the normalization row is fixed to 1.
    pub normalization_defect: f64,
}

impl OverlapTable {
    pub fn n_factors(&self) -> usize {
        self.params.n
    }

    /// `F(n, i, k, s)` with one-based `i`, `k`.
    pub fn get(&self, n: usize, i: usize, k: usize, s: usize) -> C64 {
        let off = level_offsets(self.params.n);
        self.f[s][k - 1][off[n] + i - 1]
    }

    /// Rows `(n, i, k, s, F)` in the order `s, k, n, i`.
    pub fn rows(&self) -> Vec<(usize, usize, usize, usize, C64)> {
        let nf = self.params.n;
        let off = level_offsets(nf);
        let mut out = Vec::new();
        for (s, per_k) in self.f.iter().enumerate() {
            for (k, vals) in per_k.iter().enumerate() {
                for n in 0..=nf {
                    for i in 0..binomial(nf, n) {
                        out.push((n, i + 1, k + 1, s, vals[off[n] + i]));
                    }
                }
            }
        }
        out
    }
}

/// Tabulate `F`, `U` and the weights.
pub fn overlap_f(params: &ModelParams) -> Result<OverlapTable> {
    let tol = GenericityTolerances::default();
    require_valid(params, &tol)?;
    let psi = EigenBasis::new(params, BasisKind::Psi);
    let duals = dual_functionals(params, BasisKind::Phi)?;
    let u = u_table(params)?;
    let norms_tilde = norm_coeffs(params, true, tol.genericity)?;
    let off = level_offsets(params.n);

    let mut f = Vec::with_capacity(params.n + 1);
    let mut weights = Vec::with_capacity(params.n + 1);
    let mut defect: f64 = 0.0;
    for (s, us) in u.iter().enumerate() {
        let mut per_k = Vec::with_capacity(us.len());
        let mut ws = Vec::with_capacity(us.len());
        for (k, &uk) in us.iter().enumerate() {
            let uk = guard(uk, tol.genericity, || format!("U_{}({s})", k + 1))?;
            let d = &duals.coefficients[off[s] + k];
            let mut vals: Vec<C64> = psi.coefficients.iter().map(|c| product_pairing(d, c) / uk).collect();
            defect = defect.max((vals[0] - 1.0).norm());
            vals[0] = ONE;
            per_k.push(vals);
            ws.push(norms_tilde.get(s, k + 1) * uk * uk);
        }
        f.push(per_k);
        weights.push(ws);
    }
    Ok(OverlapTable {
        params: *params,
        u,
        f,
        weights,
        lambda_tilde: params.dual_eigenvalues(),
        normalization_defect: defect,
    })
}

/// Worst residual of a family of scalar identities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    /// Residual divided by `max(1, Σ |terms|)`.
    pub max_relative: f64,
    /// `(n, j, k, s)` of the worst relative residual.
    pub worst: Option<(usize, usize, usize, usize)>,
    pub checked: usize,
}

impl ResidualReport {
    fn new() -> Self {
        Self {
            max_residual: 0.0,
            max_relative: 0.0,
            worst: None,
            checked: 0,
        }
    }

    fn record(&mut self, residual: f64, scale: f64, at: (usize, usize, usize, usize)) {
        let rel = residual / scale.max(1.0);
        self.checked += 1;
        self.max_residual = self.max_residual.max(residual);
        if rel > self.max_relative || self.worst.is_none() {
            self.max_relative = self.max_relative.max(rel);
            self.worst = Some(at);
        }
    }
}

/// `λ̃ₛ Fₙ₍ⱼ₎ = Σᵢ bₙ₍ᵢⱼ₎Fₙ₊₁₍ᵢ₎ + Σᵢ aₙ₍ᵢⱼ₎Fₙ₍ᵢ₎ + Σᵢ cₙ₍ᵢⱼ₎Fₙ₋₁₍ᵢ₎` at every
/// `(n, j, k, s)`.
pub fn check_recurrence(table: &OverlapTable, blocks: &BlockTriMatrix) -> Result<ResidualReport> {
    let nf = table.n_factors();
    if blocks.n_factors != nf {
        return Err(Error::DimensionMismatch {
            left: blocks.n_factors,
            right: nf,
        });
    }
    let off = level_offsets(nf);
    let mut report = ResidualReport::new();
    for (s, per_k) in table.f.iter().enumerate() {
        let lt = table.lambda_tilde[s];
        for (k, vals) in per_k.iter().enumerate() {
            for n in 0..=nf {
                for j in 0..binomial(nf, n) {
                    let lhs = lt * vals[off[n] + j];
                    let mut rhs = ZERO;
                    let mut scale = lhs.norm();
                    let mut add = |x: C64, f: C64| {
                        let t = x * f;
                        scale += t.norm();
                        rhs += t;
                    };
                    for i in 0..blocks.a[n].rows() {
                        add(blocks.a[n][(i, j)], vals[off[n] + i]);
                    }
                    if n < nf {
                        for i in 0..blocks.b[n].rows() {
                            add(blocks.b[n][(i, j)], vals[off[n + 1] + i]);
                        }
                    }
                    if n > 0 {
                        for i in 0..blocks.c[n].rows() {
                            add(blocks.c[n][(i, j)], vals[off[n - 1] + i]);
                        }
                    }
                    report.record((lhs - rhs).norm(), scale, (n, j + 1, k + 1, s));
                }
            }
        }
    }
    Ok(report)
}

/// The three coefficient matrices of `𝔻(s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QDiffOperator {
    pub s: usize,
    /// `C(N,s) × C(N,s+1)`; no columns at `s = N`.
    pub phi: DenseMatrix,
    /// `C(N,s) × C(N,s−1)`; no columns at `s = 0`.
    pub phi_bar: DenseMatrix,
    pub mu: DenseMatrix,
}

/// `[Φ]ₖₗ = b̃ₛ₍ₗₖ₎Uₗ(s+1)/Uₖ(s)`, `[Φ̄]ₖₗ = c̃ₛ₍ₗₖ₎Uₗ(s−1)/Uₖ(s)`,
/// `[μ]ₖₗ = ãₛ₍ₗₖ₎Uₗ(s)/Uₖ(s)`.
pub fn qdiff_operator(
    params: &ModelParams,
    s: usize,
    dual_blocks: &BlockTriMatrix,
    u: &[Vec<C64>],
) -> Result<QDiffOperator> {
    let nf = params.n;
    if s > nf || dual_blocks.n_factors != nf || u.len() != nf + 1 {
        return Err(Error::IndexOutOfRange(format!("level {s} for N = {nf}")));
    }
    let tol = GenericityTolerances::default().genericity;
    let dim = |t: usize| binomial(nf, t);
    let width_up = if s < nf { dim(s + 1) } else { 0 };
    let width_down = if s > 0 { dim(s - 1) } else { 0 };
    let mut phi = DenseMatrix::zeros(dim(s), width_up);
    let mut phi_bar = DenseMatrix::zeros(dim(s), width_down);
    let mut mu = DenseMatrix::zeros(dim(s), dim(s));
    for k in 0..dim(s) {
        let uk = guard(u[s][k], tol, || format!("U_{}({s})", k + 1))?;
        for l in 0..width_up {
            phi[(k, l)] = dual_blocks.b[s][(l, k)] * u[s + 1][l] / uk;
        }
        for l in 0..width_down {
            phi_bar[(k, l)] = dual_blocks.c[s][(l, k)] * u[s - 1][l] / uk;
        }
        for l in 0..dim(s) {
            mu[(k, l)] = dual_blocks.a[s][(l, k)] * u[s][l] / uk;
        }
    }
    Ok(QDiffOperator { s, phi, phi_bar, mu })
}

/// `Σₗ Φₖₗ Fₙ₍ⱼ₎(l, s+1) + Σₗ Φ̄ₖₗ Fₙ₍ⱼ₎(l, s−1) + Σₗ μₖₗ Fₙ₍ⱼ₎(l, s) = λₙ Fₙ₍ⱼ₎(k, s)`.
pub fn check_qdiff(table: &OverlapTable, dual_blocks: &BlockTriMatrix) -> Result<ResidualReport> {
    let p = &table.params;
    let nf = p.n;
    let off = level_offsets(nf);
    let lambdas = p.eigenvalues();
    let ops: Vec<QDiffOperator> = (0..=nf)
        .map(|s| qdiff_operator(p, s, dual_blocks, &table.u))
        .collect::<Result<_>>()?;
    let mut report = ResidualReport::new();
    for (s, op) in ops.iter().enumerate() {
        for k in 0..binomial(nf, s) {
            for n in 0..=nf {
                for j in 0..binomial(nf, n) {
                    let pos = off[n] + j;
                    let lhs = lambdas[n] * table.f[s][k][pos];
                    let mut scale = lhs.norm();
                    let mut rhs = ZERO;
                    let mut add = |x: C64, f: C64| {
                        let t = x * f;
                        scale += t.norm();
                        rhs += t;
                    };
                    for l in 0..op.phi.cols() {
                        add(op.phi[(k, l)], table.f[s + 1][l][pos]);
                    }
                    for l in 0..op.phi_bar.cols() {
                        add(op.phi_bar[(k, l)], table.f[s - 1][l][pos]);
                    }
                    for l in 0..op.mu.cols() {
                        add(op.mu[(k, l)], table.f[s][l][pos]);
                    }
                    report.record((lhs - rhs).norm(), scale, (n, j + 1, k + 1, s));
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub weights: Vec<Vec<C64>>,
    /// `Σₛ Σₖ wₖ(s) Fₐ(k,s) F_b(k,s)` over level-major positions `a`, `b`.
    pub gram: DenseMatrix,
    /// `max |Gₐₐ 𝒩ₐ − 1|`.
    pub max_diagonal_deviation: f64,
    /// `max |Gₐᵦ| / √(|1/𝒩ₐ| |1/𝒩ᵦ|)` over `a ≠ b`.
    pub max_off_diagonal: f64,
    /// `max |Im w| / |w|`.
    pub weight_imag_ratio: f64,
    pub cancellation: f64,
}

impl OrthogonalityReport {
    pub fn max_relative(&self) -> f64 {
        self.max_diagonal_deviation.max(self.max_off_diagonal)
    }
}

type Cdd = num_complex::Complex<TwoFloat>;

fn dd(z: C64) -> Cdd {
    Cdd::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

/// `1/z` with a Newton step on `1/|z|²`; twofloat's own division is only
/// accurate to about one double.
fn recip(z: Cdd) -> Cdd {
    let m = z.re * z.re + z.im * z.im;
    let r0 = TwoFloat::from(1.0 / f64::from(m));
    let r = r0 + r0 * (TwoFloat::from(1.0) - m * r0);
    Cdd::new(z.re * r, -z.im * r)
}

fn round_dd(z: Cdd) -> C64 {
    C64::new(f64::from(z.re), f64::from(z.im))
}

/// Integer powers of one double-double base.
struct Powers {
    up: Vec<Cdd>,
    down: Vec<Cdd>,
}

impl Powers {
    fn new(base: Cdd, max: usize) -> Self {
        let inv = recip(base);
        let mut up = vec![Cdd::new(TwoFloat::from(1.0), TwoFloat::from(0.0))];
        let mut down = up.clone();
        for _ in 0..max {
            up.push(*up.last().unwrap() * base);
            down.push(*down.last().unwrap() * inv);
        }
        Powers { up, down }
    }

    fn get(&self, k: i64) -> Cdd {
        if k >= 0 {
            self.up[k as usize]
        } else {
            self.down[(-k) as usize]
        }
    }
}

/// `wₖ(s) Fₐ(k,s) F_b(k,s)` summands in double-double. Every factor is a
/// rational function of `e^α`, `e^{α*}`, `e^{φ/2}`, `e^{iθ}`, so once those
/// four are rounded the identity holds exactly and only the double-double
/// rounding of the sum remains.
fn gram_extended(params: &ModelParams) -> Result<(DenseMatrix, Vec<Vec<f64>>)> {
    let n = params.n;
    let dim = 1usize << n;
    let one = Cdd::new(TwoFloat::from(1.0), TwoFloat::from(0.0));
    let a = Powers::new(dd(params.alpha.exp()), 2);
    let b = Powers::new(dd(params.alpha_star.exp()), 2);
    let q = Powers::new(dd((params.phi / 2.0).exp()), 4 * n + 4);
    let t = Powers::new(dd(C64::new(0.0, params.theta).exp()), 1);

    let coeffs = |eps: &[i8], dual: bool| -> Vec<Cdd> {
        let mut partial = 0i64;
        eps.iter()
            .map(|&e| {
                let e = e as i64;
                let x = if dual {
                    b.get(-e) * q.get(-e * partial) * t.get(-1)
                } else {
                    a.get(e) * q.get(e * partial) * t.get(1)
                };
                partial += e;
                x
            })
            .collect()
    };
    let pair = |u: &[Cdd], v: &[Cdd]| u.iter().zip(v).fold(one, |acc, (x, y)| acc * (*x * *y + one));

    // tilde normalization with α → −α*, φ → −φ
    let mut norms: Vec<Vec<Cdd>> = vec![vec![one]];
    for m in 1..=n {
        let mut next = Vec::with_capacity(m + 1);
        for lvl in 0..=m {
            let mut row = Vec::new();
            if lvl < m {
                let d = one - b.get(-2) * q.get(-2 * (m as i64 - 1 - 2 * lvl as i64));
                row.extend(norms[lvl].iter().map(|x| *x * recip(d)));
            }
            if lvl > 0 {
                let d = one - b.get(2) * q.get(2 * (m as i64 + 1 - 2 * lvl as i64));
                row.extend(norms[lvl - 1].iter().map(|x| *x * recip(d)));
            }
            next.push(row);
        }
        norms = next;
    }

    let u_dd = |k: usize, s: usize| -> Cdd {
        let (mut k, mut s) = (k, s);
        let mut acc = one;
        for m in (1..=n).rev() {
            let split = binomial(m - 1, s);
            if k <= split {
                acc *= a.get(1) * b.get(-1) * q.get(2 * s as i64) + one;
            } else {
                acc *= a.get(1) * b.get(1) * q.get(2 * (m - s) as i64) + one;
                k -= split;
                s -= 1;
            }
        }
        acc
    };

    let psis: Vec<Vec<Cdd>> = canonical_indices(n)
        .iter()
        .map(|i| coeffs(&i.epsilons, false))
        .collect();
    let zero = Cdd::new(TwoFloat::from(0.0), TwoFloat::from(0.0));
    let mut gram = vec![zero; dim * dim];
    let mut magnitude = vec![vec![0.0; dim]; dim];
    for (s, norms_s) in norms.iter().enumerate() {
        for (k, eps) in canonical_order(n, s)?.iter().enumerate() {
            let u = u_dd(k + 1, s);
            let w = norms_s[k] * u * u;
            let d = coeffs(eps, true);
            let inv_u = recip(u);
            let f: Vec<Cdd> = psis.iter().map(|c| pair(&d, c) * inv_u).collect();
            for x in 0..dim {
                let wf = w * f[x];
                for y in x..dim {
                    let term = wf * f[y];
                    gram[x * dim + y] += term;
                    magnitude[x][y] += round_dd(term).norm();
                }
            }
        }
    }
    let mut out = DenseMatrix::zeros(dim, dim);
    for x in 0..dim {
        for y in x..dim {
            out[(x, y)] = round_dd(gram[x * dim + y]);
            out[(y, x)] = out[(x, y)];
            magnitude[y][x] = magnitude[x][y];
        }
    }
    Ok((out, magnitude))
}

/// Gram matrix of the overlap functions under the weights, summed `s`
/// outer and `k` inner, compared with `diag(1/𝒩)`. The sum cancels
/// heavily as `N` grows, so it is accumulated in double-double from the
/// table's parameters; `cancellation` records `max Σ|terms| / √(|1/𝒩ₐ||1/𝒩ᵦ|)`.
pub fn weights_and_orthogonality(table: &OverlapTable, norms: &NormCoeffs) -> Result<OrthogonalityReport> {
    let nf = table.n_factors();
    if norms.n_factors != nf || norms.tilde {
        return Err(Error::Regime(
            "orthogonality needs the untilded normalization of the same N".into(),
        ));
    }
    let dim = 1usize << nf;
    let imag = table
        .weights
        .iter()
        .flatten()
        .map(|w| w.im.abs() / w.norm())
        .fold(0.0, f64::max);
    let (gram, magnitude) = gram_extended(&table.params)?;
    let flat = norms.flat();
    let mut diag: f64 = 0.0;
    let mut offd: f64 = 0.0;
    let mut cancellation: f64 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            let scale = (flat[a].inv().norm() * flat[b].inv().norm()).sqrt();
            cancellation = cancellation.max(magnitude[a][b] / scale);
            if a == b {
                diag = diag.max((gram[(a, a)] * flat[a] - 1.0).norm());
            } else {
                offd = offd.max(gram[(a, b)].norm() / scale);
            }
        }
    }
    Ok(OrthogonalityReport {
        weights: table.weights.clone(),
        gram,
        max_diagonal_deviation: diag,
        max_off_diagonal: offd,
        weight_imag_ratio: imag,
        cancellation,
    })
}

/// Zeros, pole and prefactors of the `N = 2` rational functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct N2Rational {
    pub u11: C64,
    pub u12_plus: C64,
    pub u12_minus: C64,
    pub u21: C64,
    pub v: C64,
    pub k11: C64,
    pub k12: C64,
    pub k21: C64,
}

impl N2Rational {
    pub fn new(params: &ModelParams) -> Result<Self> {
        if params.n != 2 {
            return Err(Error::Regime(format!(
                "closed forms exist for N = 2 only, got N = {}",
                params.n
            )));
        }
        let tol = GenericityTolerances::default().genericity;
        let (a, b, f) = (params.alpha, params.alpha_star, params.phi);
        let sh = |x: C64| x.sinh();
        let ch = |x: C64| x.cosh();
        let h = f / 2.0;

        let v_den = guard(
            (sh(a - b - h) + sh(a + b - h) + sh(a * 2.0 + h) - sh(h) * 3.0) * 2.0,
            tol,
            || "pole denominator".into(),
        )?;
        // the last sinh(α+3φ/2) term enters with +3: with −3 the pole does not
        // cancel against the linear system's determinant
        let v_num = sh(a + b * 2.0 + h)
            + sh(a - b * 2.0 + h)
            + sh(a * 2.0 + b + h * 3.0)
            + sh(a * 2.0 - b + h * 3.0)
            + sh(a + h)
            - sh(a - h) * 3.0
            + sh(a - h * 3.0)
            + sh(a + h * 3.0) * 3.0
            + sh(b + h) * 3.0
            - sh(b - h) * 3.0;
        let v = v_num / v_den;

        let big_u = ch(a + h) * 4.0 + ch(b + h) * 2.0 + ch(b - h) * 2.0
            - ch(a + h * 3.0) * 2.0
            - ch(a - h) * 2.0
            - ch(b + a * 2.0 - h)
            - ch(b - a * 2.0 + h)
            - ch(b + a * 2.0 + h * 3.0)
            - ch(b - a * 2.0 - h * 3.0);
        let big_v = (ch(a * 2.0) + ch(a * 2.0 + f) - 2.0)
            * (ch(a + b) * 4.0 + ch(a - b) * 4.0 + ch(a + b + f) * 4.0 + ch(a - b + f) * 4.0 + ch(f) * 4.0
                - ch(a * 2.0) * 2.0
                + ch(a * 2.0 + f) * 2.0
                + ch(a * 2.0 + b * 2.0)
                + ch(a * 2.0 - b * 2.0)
                + ch(a * 2.0 + b * 2.0 + f)
                + ch(a * 2.0 - b * 2.0 + f)
                + 8.0);
        let u12_den = guard((ch(h) - ch(a * 2.0 + h)) * 4.0, tol, || {
            "cosh(φ/2) − cosh(2α+φ/2)".into()
        })?;
        let root = sh(h) * 2.0 * big_v.sqrt();
        let sah = guard(sh(a + h), tol, || "sinh(α+φ/2)".into())?;
        let u21 = (sh(a - b - h) + sh(a + b - h) - sh(h) - sh(h * 3.0)) / (sah * 2.0);

        let d = guard(sh(a - h) * ch(b) + ch(a + h) * sh(a) - sh(h), tol, || {
            "prefactor denominator".into()
        })?;
        let sum = ch(a) + ch(b);
        let shh = guard(sh(h), tol, || "sinh(φ/2)".into())?;
        Ok(Self {
            u11: -ch(a),
            u12_plus: (big_u + root) / u12_den,
            u12_minus: (big_u - root) / u12_den,
            u21,
            v,
            k11: -(-a - h).exp() * f.sinh() * sum / d,
            k12: (-a - h).exp() * sah * sh(a) / (shh * d),
            k21: -(-a * 2.0).exp() * sah * sum / d,
        })
    }

    /// `(F₁₍₁₎, F₁₍₂₎, F₂₍₁₎)` at a free argument `λ̃`.
    pub fn eval(&self, lambda: C64, tol: f64) -> Result<[C64; 3]> {
        let pole = guard(lambda - self.v, tol, || "λ̃ − v".into())?;
        Ok([
            self.k11 * (lambda - self.u11) / pole,
            self.k12 * (lambda - self.u12_plus) * (lambda - self.u12_minus) / pole,
            self.k21 * (lambda - self.u21) / pole,
        ])
    }
}

/// The `N = 2` rational functions evaluated at `λ̃ₛ`.
pub fn n2_closed_form(params: &ModelParams, s: usize) -> Result<[C64; 3]> {
    if s > 2 {
        return Err(Error::IndexOutOfRange(format!("s = {s} for N = 2")));
    }
    N2Rational::new(params)?.eval(params.dual_eigenvalue(s), GenericityTolerances::default().genericity)
}

/// Comparison of the `N = 2` closed forms with the tabulated overlaps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct N2Report {
    /// `max |closed − F| / max(1, |F|)` on the simple levels `s = 0, 2`.
    pub simple_levels_error: f64,
    /// Distance of the `s = 1` closed-form triple from the line through the
    /// two tabulated triples `F(·, k = 1, 1)` and `F(·, k = 2, 1)`.
    pub degenerate_level_collinearity: f64,
    /// Worst relative residual of the four `N = 2` recurrences, with the
    /// closed forms substituted, over `s = 0, 1, 2`.
    pub recurrence_residual: f64,
    /// `max |closed(α*) − closed(−α*)|` over the spectrum.
    pub parity_defect: f64,
}

pub fn check_n2_closed_form(params: &ModelParams, blocks: &BlockTriMatrix) -> Result<N2Report> {
    let table = overlap_f(params)?;
    let rational = N2Rational::new(params)?;
    let flipped = N2Rational::new(&params.with_alpha_star(-params.alpha_star))?;
    let tol = GenericityTolerances::default().genericity;
    let closed: Vec<[C64; 3]> = (0..=2)
        .map(|s| rational.eval(table.lambda_tilde[s], tol))
        .collect::<Result<_>>()?;

    // positions 1, 2, 3 are (1,1), (1,2), (2,1)
    let triple = |k: usize, s: usize| [table.f[s][k][1], table.f[s][k][2], table.f[s][k][3]];
    let mut simple: f64 = 0.0;
    for s in [0, 2] {
        for (c, f) in closed[s].iter().zip(triple(0, s)) {
            simple = simple.max((c - f).norm() / f.norm().max(1.0));
        }
    }

    let (f1, f2) = (triple(0, 1), triple(1, 1));
    let g = closed[1];
    let d: Vec<C64> = f1.iter().zip(&f2).map(|(x, y)| x - y).collect();
    let r: Vec<C64> = g.iter().zip(&f2).map(|(x, y)| x - y).collect();
    let dd: f64 = d.iter().map(|x| x.norm_sqr()).sum();
    let t: C64 = d.iter().zip(&r).map(|(x, y)| x.conj() * y).sum::<C64>() / dd;
    let dist = r
        .iter()
        .zip(&d)
        .map(|(y, x)| (y - t * x).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let scale = g.iter().map(|x| x.norm()).fold(1.0, f64::max);

    let mut rec: f64 = 0.0;
    for (s, c) in closed.iter().enumerate() {
        let vals = [ONE, c[0], c[1], c[2]];
        rec = rec.max(n2_recurrence_residual(blocks, table.lambda_tilde[s], &vals));
    }

    let mut parity: f64 = 0.0;
    for (s, c) in closed.iter().enumerate() {
        let other = flipped.eval(table.lambda_tilde[s], tol)?;
        for (x, y) in c.iter().zip(other.iter()) {
            parity = parity.max((x - y).norm());
        }
    }

    Ok(N2Report {
        simple_levels_error: simple,
        degenerate_level_collinearity: dist / scale,
        recurrence_residual: rec,
        parity_defect: parity,
    })
}

/// Worst relative residual of the general recurrence for `N = 2` given the
/// four values `F₀₍₁₎, F₁₍₁₎, F₁₍₂₎, F₂₍₁₎`.
fn n2_recurrence_residual(blocks: &BlockTriMatrix, lt: C64, vals: &[C64; 4]) -> f64 {
    let off = [0usize, 1, 3, 4];
    let mut worst: f64 = 0.0;
    for n in 0..=2 {
        for j in 0..blocks.a[n].cols() {
            let lhs = lt * vals[off[n] + j];
            let mut rhs = ZERO;
            let mut scale = lhs.norm();
            let mut terms = Vec::new();
            for i in 0..blocks.a[n].rows() {
                terms.push(blocks.a[n][(i, j)] * vals[off[n] + i]);
            }
            if n < 2 {
                for i in 0..blocks.b[n].rows() {
                    terms.push(blocks.b[n][(i, j)] * vals[off[n + 1] + i]);
                }
            }
            if n > 0 {
                for i in 0..blocks.c[n].rows() {
                    terms.push(blocks.c[n][(i, j)] * vals[off[n - 1] + i]);
                }
            }
            for t in terms {
                scale += t.norm();
                rhs += t;
            }
            worst = worst.max((lhs - rhs).norm() / scale.max(1.0));
        }
    }
    worst
}

/// Polynomial coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly(pub Vec<C64>);

impl Poly {
    pub fn constant(c: C64) -> Self {
        Poly(vec![c])
    }

    /// `x − r`.
    pub fn linear(r: C64) -> Self {
        Poly(vec![-r, ONE])
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![ZERO; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.0.len().max(other.0.len());
        Poly(
            (0..len)
                .map(|i| self.0.get(i).copied().unwrap_or(ZERO) + other.0.get(i).copied().unwrap_or(ZERO))
                .collect(),
        )
    }

    pub fn scale(&self, c: C64) -> Poly {
        Poly(self.0.iter().map(|x| x * c).collect())
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.0.iter().rev().fold(ZERO, |acc, c| acc * x + c)
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// Roots from the eigenvalues of the companion matrix.
    pub fn roots(&self) -> Result<Vec<C64>> {
        let d = self.degree();
        let lead = self.0[d];
        if lead.norm() == 0.0 || d == 0 {
            return Err(Error::Regime(
                "polynomial must have a nonzero leading coefficient and degree ≥ 1".into(),
            ));
        }
        let mut m = DenseMatrix::zeros(d, d);
        for i in 1..d {
            m[(i, i - 1)] = ONE;
        }
        for i in 0..d {
            m[(i, d - 1)] = -self.0[i] / lead;
        }
        let (_, t) = Schur::new(m.to_nalgebra()).unpack();
        Ok((0..d).map(|i| t[(i, i)]).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub roots: Vec<C64>,
    pub expected: Vec<C64>,
    /// Largest distance after matching roots to expected values.
    pub max_error: f64,
}

/// The polynomial in `λ̃` left over once the overlap functions have been
/// eliminated from the recurrence: for `N = 1` the second recurrence with
/// `F₁ = (λ̃ − a₀)/b₀`; for `N = 2` the unused equation for `F₁₍₂₎` times
/// `(λ̃ − v)`.
pub fn leftover_polynomial(params: &ModelParams, blocks: &BlockTriMatrix) -> Result<Poly> {
    match params.n {
        1 => {
            let (a0, a1) = (blocks.a[0][(0, 0)], blocks.a[1][(0, 0)]);
            let (b0, c1) = (blocks.b[0][(0, 0)], blocks.c[1][(0, 0)]);
            Ok(Poly::linear(a0).mul(&Poly::linear(a1)).add(&Poly::constant(-b0 * c1)))
        }
        2 => {
            let r = N2Rational::new(params)?;
            let a1 = &blocks.a[1];
            let (b12, c12) = (blocks.b[1][(0, 1)], blocks.c[1][(0, 1)]);
            let p12 = Poly::linear(r.u12_plus).mul(&Poly::linear(r.u12_minus)).scale(r.k12);
            let first = Poly::linear(a1[(1, 1)]).mul(&p12);
            let rest = Poly::linear(r.u21)
                .scale(b12 * r.k21)
                .add(&Poly::linear(r.u11).scale(a1[(0, 1)] * r.k11))
                .add(&Poly::linear(r.v).scale(c12));
            Ok(first.add(&rest.scale(-ONE)))
        }
        n => Err(Error::Regime(format!(
            "root check is defined for N = 1, 2; got N = {n}"
        ))),
    }
}

/// Roots of [`leftover_polynomial`] against `{λ̃ₛ}`.
pub fn eigenvalue_root_check(params: &ModelParams, blocks: &BlockTriMatrix) -> Result<RootReport> {
    let roots = leftover_polynomial(params, blocks)?.roots()?;
    let expected = params.dual_eigenvalues();
    Ok(RootReport {
        max_error: matched_distance(&roots, &expected),
        roots,
        expected,
    })
}

/// Largest pairwise distance after greedy nearest matching; infinite when
/// the counts differ.
pub fn matched_distance(found: &[C64], expected: &[C64]) -> f64 {
    if found.len() != expected.len() {
        return f64::INFINITY;
    }
    let mut left: Vec<C64> = found.to_vec();
    let mut worst: f64 = 0.0;
    for e in expected {
        let (pos, dist) = left
            .iter()
            .enumerate()
            .map(|(i, r)| (i, (r - e).norm()))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        worst = worst.max(dist);
        left.swap_remove(pos);
    }
    worst
}
