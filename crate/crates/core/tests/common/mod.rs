//! Reference computations written directly from the defining formulas,
//! sharing no code with the library beyond the parameter struct.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use tdpair::ModelParams;

pub fn im(x: f64) -> C {
    C::new(0.0, x)
}

/// Five parameter tuples valid up to N = 10; the first three are purely
/// imaginary.
pub fn tuples() -> Vec<(f64, f64, f64, f64, f64)> {
    vec![
        (0.0, std::f64::consts::PI / 3.0, 0.0, std::f64::consts::PI / 5.0, 0.37),
        (0.0, 0.9, 0.0, 0.35, 0.29),
        (0.0, 1.7, 0.0, 2.3, 0.41),
        (0.3, 0.7, -0.2, 1.1, 0.45),
        (0.2, -0.5, 0.6, 0.4, 0.53),
    ]
}

pub fn params(n: usize, t: (f64, f64, f64, f64, f64), theta: f64) -> ModelParams {
    ModelParams::new(n, C::new(t.0, t.1), C::new(t.2, t.3), im(t.4), theta)
}

pub fn all_params(n: usize) -> Vec<ModelParams> {
    let thetas = [0.4, 2.1, 0.0, 1.3, -0.7];
    tuples()
        .into_iter()
        .zip(thetas)
        .map(|(t, th)| params(n, t, th))
        .collect()
}

pub fn imaginary_params(n: usize) -> Vec<ModelParams> {
    all_params(n).into_iter().take(3).collect()
}

pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, j| acc * (n - j) / (j + 1))
}

/// Level-`n` sign sequences for `N` factors: the `ε_N = +1` extensions of
/// the `N−1` list first, then the `ε_N = −1` extensions of level `n−1`.
pub fn order(n_factors: usize, level: usize) -> Vec<Vec<i8>> {
    if n_factors == 0 {
        return if level == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    if level < n_factors {
        for mut s in order(n_factors - 1, level) {
            s.push(1);
            out.push(s);
        }
    }
    if level > 0 {
        for mut s in order(n_factors - 1, level - 1) {
            s.push(-1);
            out.push(s);
        }
    }
    out
}

/// All sequences, level-major, with their level.
pub fn all_sequences(n_factors: usize) -> Vec<(usize, Vec<i8>)> {
    (0..=n_factors)
        .flat_map(|l| order(n_factors, l).into_iter().map(move |s| (l, s)))
        .collect()
}

/// Generator `W₀` (`which = 0`) or `W₁` entry by entry: a sum over the
/// factor `m` carrying `k₊σ₊ + k₋σ₋`, with `q^{±σ₃/2}` on every factor to its
/// left in the Kronecker order (factors `l > m`) and identity to its right,
/// plus the seed times `q^{±σ₃/2}` on all factors.
pub fn generator(p: &ModelParams, which: u8) -> DMatrix<C> {
    let dim = 1usize << p.n;
    let mut w = DMatrix::<C>::zeros(dim, dim);
    for r in 0..dim {
        for (c, v) in generator_row(p, which, r) {
            w[(r, c)] += v;
        }
    }
    w
}

/// `W v` from the row rule of [`generator`].
pub fn apply(p: &ModelParams, which: u8, v: &[C]) -> Vec<C> {
    (0..v.len())
        .map(|r| generator_row(p, which, r).into_iter().map(|(c, x)| x * v[c]).sum())
        .collect()
}

/// Nonzero entries `(column, value)` of row `r`.
pub fn generator_row(p: &ModelParams, which: u8, r: usize) -> Vec<(usize, C)> {
    let n = p.n;
    let qh = (p.phi / 2.0).exp();
    let (d, seed) = if which == 0 {
        (qh, p.alpha.cosh())
    } else {
        (qh.inv(), p.alpha_star.cosh())
    };
    let dv = [d, d.inv()];
    let kp = -(qh - qh.inv()) * im(p.theta).exp() / 2.0;
    let km = (qh - qh.inv()) * im(-p.theta).exp() / 2.0;
    let bit = |x: usize, l: usize| (x >> (l - 1)) & 1;
    let mut out = Vec::with_capacity(n + 1);
    let mut diag = seed;
    for l in 1..=n {
        diag *= dv[bit(r, l)];
    }
    out.push((r, diag));
    for m in 1..=n {
        let c = r ^ (1 << (m - 1));
        let mut v = if bit(r, m) == 0 { kp } else { km };
        for l in m + 1..=n {
            v *= dv[bit(r, l)];
        }
        out.push((c, v));
    }
    out
}

/// `⊗ₗ (xₗ, 1)` with factor `l` on bit `l − 1`.
pub fn expand(coeffs: &[C]) -> Vec<C> {
    let dim = 1usize << coeffs.len();
    (0..dim)
        .map(|r| {
            coeffs
                .iter()
                .enumerate()
                .map(|(l, x)| if (r >> l) & 1 == 0 { *x } else { C::new(1.0, 0.0) })
                .product()
        })
        .collect()
}

/// `sign · exp(εₗ a + εₗ Σ_{k<l} εₖ f/2 + i t)` for each factor.
pub fn coeffs(eps: &[i8], sign: f64, a: C, f: C, t: f64) -> Vec<C> {
    let mut partial = 0.0;
    eps.iter()
        .map(|&e| {
            let e = e as f64;
            let x = (a * e + f * (e * partial / 2.0) + im(t)).exp() * sign;
            partial += e;
            x
        })
        .collect()
}

pub fn psi(p: &ModelParams, eps: &[i8]) -> Vec<C> {
    expand(&coeffs(eps, 1.0, p.alpha, p.phi, p.theta))
}

pub fn phi(p: &ModelParams, eps: &[i8]) -> Vec<C> {
    expand(&coeffs(eps, -1.0, -p.alpha_star, -p.phi, p.theta))
}

/// `ψ̃ = φ|_{α*→α}` with every parameter negated: the row functional dual
/// to `ψ` under the bilinear pairing.
pub fn psi_dual(p: &ModelParams, eps: &[i8]) -> Vec<C> {
    expand(&coeffs(eps, -1.0, p.alpha, p.phi, -p.theta))
}

/// `φ̃ = ψ|_{α→α*}` with every parameter negated.
pub fn phi_dual(p: &ModelParams, eps: &[i8]) -> Vec<C> {
    expand(&coeffs(eps, 1.0, -p.alpha_star, -p.phi, -p.theta))
}

pub fn dot(u: &[C], v: &[C]) -> C {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(v: &[C]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn lambda(p: &ModelParams, n: usize) -> C {
    (p.alpha + p.phi * ((p.n as f64 - 2.0 * n as f64) / 2.0)).cosh()
}

pub fn lambda_tilde(p: &ModelParams, s: usize) -> C {
    (p.alpha_star + p.phi * ((p.n as f64 - 2.0 * s as f64) / 2.0)).cosh()
}

/// Columns `ψ` in level-major order.
pub fn psi_matrix(p: &ModelParams) -> DMatrix<C> {
    let cols: Vec<Vec<C>> = all_sequences(p.n).iter().map(|(_, e)| psi(p, e)).collect();
    let dim = 1usize << p.n;
    DMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Offsets of the levels in level-major order.
pub fn offsets(n: usize) -> Vec<usize> {
    let mut out = vec![0];
    for l in 0..=n {
        out.push(out[l] + binom(n, l));
    }
    out
}

pub fn level_of(n: usize, pos: usize) -> usize {
    let off = offsets(n);
    (0..=n).find(|&l| pos < off[l + 1]).expect("position in range")
}

/// Overlaps `F[s][k][pos] = ⟨φ-dual_{s,k}, ψ_pos⟩ / ⟨φ-dual_{s,k}, ψ_0⟩` and the
/// denominators `U[s][k]`, from dense vectors.
pub fn overlaps(p: &ModelParams) -> (Vec<Vec<Vec<C>>>, Vec<Vec<C>>) {
    let psis: Vec<Vec<C>> = all_sequences(p.n).iter().map(|(_, e)| psi(p, e)).collect();
    let mut f = Vec::new();
    let mut u = Vec::new();
    for s in 0..=p.n {
        let mut fs = Vec::new();
        let mut us = Vec::new();
        for e in order(p.n, s) {
            let d = phi_dual(p, &e);
            let uk = dot(&d, &psis[0]);
            fs.push(psis.iter().map(|v| dot(&d, v) / uk).collect());
            us.push(uk);
        }
        f.push(fs);
        u.push(us);
    }
    (f, u)
}
