//! Model parameters, the scalars derived from them, and the genericity guards
//! every closed-form expression downstream relies on.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::C64;

/// The scalar tuple `(N, α, α*, φ, θ)` with `q = e^φ`.
///
/// Complex fields serialize as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Number of spin-1/2 tensor factors; also the diameter of the pair.
    pub n: usize,
    pub alpha: C64,
    pub alpha_star: C64,
    /// Deformation exponent, purely imaginary.
    pub phi: C64,
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericityTolerances {
    /// Lower bound on every guarded denominator and on `|qᵐ − 1|`.
    pub genericity: f64,
    /// Allowed `|Re φ|` (and `|Re α|`, `|Re α*|` when the imaginary regime is requested).
    pub imaginary: f64,
}

impl Default for GenericityTolerances {
    fn default() -> Self {
        Self {
            genericity: 1e-8,
            imaginary: 1e-12,
        }
    }
}

/// One violated assumption.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    ZeroDiameter,
    NonFinite { field: String },
    AlphaZero,
    AlphaStarZero,
    PhiNotImaginary { re: f64 },
    RootOfUnity { order: usize, distance: f64 },
    SinhAlphaDegenerate { m: i64, value: f64 },
    SinhAlphaStarDegenerate { m: i64, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroDiameter => write!(f, "N must be at least 1"),
            Violation::NonFinite { field } => write!(f, "{field} must be finite"),
            Violation::AlphaZero => write!(f, "α must be nonzero"),
            Violation::AlphaStarZero => write!(f, "α* must be nonzero"),
            Violation::PhiNotImaginary { re } => {
                write!(f, "φ must be purely imaginary (Re φ = {re:e})")
            }
            Violation::RootOfUnity { order, distance } => {
                write!(f, "q is too close to a root of unity: |q^{order} − 1| = {distance:.3e}")
            }
            Violation::SinhAlphaDegenerate { m, value } => {
                write!(f, "|sinh(α + {m}φ/2)| = {value:.3e} is not generic")
            }
            Violation::SinhAlphaStarDegenerate { m, value } => {
                write!(f, "|sinh(α* + {m}φ/2)| = {value:.3e} is not generic")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidParams(self.violations))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedScalars {
    pub q: C64,
    /// `e^{φ/2}`, never a square root of `q`.
    pub q_half: C64,
    pub k_plus: C64,
    pub k_minus: C64,
    /// `ρ = ρ* = (q^{1/2} + q^{-1/2})² k₊k₋`.
    pub rho: C64,
}

impl DerivedScalars {
    /// `−(q − q⁻¹)²/4`, the second expression for `ρ`.
    pub fn rho_from_q(&self) -> C64 {
        let d = self.q - self.q.inv();
        -(d * d) / 4.0
    }

    /// Relative gap between the two expressions for `ρ`.
    pub fn rho_consistency(&self) -> f64 {
        let alt = self.rho_from_q();
        (self.rho - alt).norm() / self.rho.norm().max(alt.norm()).max(f64::MIN_POSITIVE)
    }
}

fn finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

impl ModelParams {
    pub fn new(n: usize, alpha: C64, alpha_star: C64, phi: C64, theta: f64) -> Self {
        Self {
            n,
            alpha,
            alpha_star,
            phi,
            theta,
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..*self }
    }

    pub fn q(&self) -> C64 {
        self.phi.exp()
    }

    pub fn q_half(&self) -> C64 {
        (self.phi / 2.0).exp()
    }

    /// `k₊ = −(q^{1/2} − q^{-1/2}) e^{iθ} / 2`.
    pub fn k_plus(&self) -> C64 {
        let qh = self.q_half();
        -(qh - qh.inv()) * Complex64::from_polar(1.0, self.theta) / 2.0
    }

    /// Analytic form of `k₋`; it equals `conj(k₊)` whenever `φ` is purely imaginary.
    pub fn k_minus(&self) -> C64 {
        let qh = self.q_half();
        (qh - qh.inv()) * Complex64::from_polar(1.0, -self.theta) / 2.0
    }

    /// `cosh(α + (N − 2n)φ/2)`, the eigenvalue of `W₀` on level `n`.
    pub fn eigenvalue(&self, level: usize) -> C64 {
        (self.alpha + self.phi * (self.n as f64 - 2.0 * level as f64) / 2.0).cosh()
    }

    /// `cosh(α* + (N − 2s)φ/2)`, the eigenvalue of `W₁` on level `s`.
    pub fn dual_eigenvalue(&self, level: usize) -> C64 {
        (self.alpha_star + self.phi * (self.n as f64 - 2.0 * level as f64) / 2.0).cosh()
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..=self.n).map(|l| self.eigenvalue(l)).collect()
    }

    pub fn dual_eigenvalues(&self) -> Vec<C64> {
        (0..=self.n).map(|l| self.dual_eigenvalue(l)).collect()
    }

    /// `n → s, α ↔ −α*, φ → −φ, θ → θ + π`: exchanges the roles of the two
    /// generators (the image of `W₀` is `W₁` and vice versa).
    pub fn dual_substitution(&self) -> Self {
        Self {
            n: self.n,
            alpha: -self.alpha_star,
            alpha_star: -self.alpha,
            phi: -self.phi,
            theta: self.theta + std::f64::consts::PI,
        }
    }

    /// All of `α, α*, φ, θ` negated. For purely imaginary `α, α*, φ` every
    /// closed-form vector evaluated here is the complex conjugate of the same
    /// vector at `self`, so pairing against it reproduces the hermitian
    /// product while staying analytic in the parameters.
    pub fn conjugate_continuation(&self) -> Self {
        Self {
            n: self.n,
            alpha: -self.alpha,
            alpha_star: -self.alpha_star,
            phi: -self.phi,
            theta: -self.theta,
        }
    }

    pub fn with_alpha_star(&self, alpha_star: C64) -> Self {
        Self { alpha_star, ..*self }
    }

    pub fn with_alpha(&self, alpha: C64) -> Self {
        Self { alpha, ..*self }
    }

    /// `α`, `α*` and `φ` all purely imaginary, which makes both spectra real.
    pub fn is_imaginary_regime(&self, tol: f64) -> bool {
        self.alpha.re.abs() <= tol && self.alpha_star.re.abs() <= tol && self.phi.re.abs() <= tol
    }

    pub fn validate(&self, tol: &GenericityTolerances) -> ValidationReport {
        validate(self, tol)
    }

    pub fn derive(&self) -> Result<DerivedScalars> {
        derive(self)
    }
}

/// Report every violated assumption. Never fails.
pub fn validate(p: &ModelParams, tol: &GenericityTolerances) -> ValidationReport {
    let mut violations = Vec::new();
    if p.n == 0 {
        violations.push(Violation::ZeroDiameter);
    }
    for (name, z) in [("α", p.alpha), ("α*", p.alpha_star), ("φ", p.phi)] {
        if !finite(z) {
            violations.push(Violation::NonFinite {
                field: name.to_string(),
            });
        }
    }
    if !p.theta.is_finite() {
        violations.push(Violation::NonFinite {
            field: "θ".to_string()
        });
    }
    if !violations.is_empty() {
        return ValidationReport { violations };
    }

    if p.alpha.norm() == 0.0 {
        violations.push(Violation::AlphaZero);
    }
    if p.alpha_star.norm() == 0.0 {
        violations.push(Violation::AlphaStarZero);
    }
    if p.phi.re.abs() > tol.imaginary {
        violations.push(Violation::PhiNotImaginary { re: p.phi.re });
    }

    let q = p.q();
    let mut qm = C64::new(1.0, 0.0);
    for m in 1..=4 * p.n.max(1) {
        qm *= q;
        let distance = (qm - 1.0).norm();
        if distance <= tol.genericity {
            violations.push(Violation::RootOfUnity { order: m, distance });
            break;
        }
    }

    let reach = p.n as i64 + 1;
    for m in -reach..=reach {
        let shift = p.phi * (m as f64) / 2.0;
        let sa = (p.alpha + shift).sinh().norm();
        if sa <= tol.genericity {
            violations.push(Violation::SinhAlphaDegenerate { m, value: sa });
        }
        let sb = (p.alpha_star + shift).sinh().norm();
        if sb <= tol.genericity {
            violations.push(Violation::SinhAlphaStarDegenerate { m, value: sb });
        }
    }
    ValidationReport { violations }
}

/// Derived scalars under the default tolerances.
pub fn derive(p: &ModelParams) -> Result<DerivedScalars> {
    validate(p, &GenericityTolerances::default()).into_result()?;
    Ok(derive_unchecked(p))
}

pub(crate) fn derive_unchecked(p: &ModelParams) -> DerivedScalars {
    let q_half = p.q_half();
    let k_plus = p.k_plus();
    let k_minus = p.k_minus();
    let s = q_half + q_half.inv();
    DerivedScalars {
        q: p.q(),
        q_half,
        k_plus,
        k_minus,
        rho: s * s * k_plus * k_minus,
    }
}

/// Fail fast with the full list of violations.
pub fn require_valid(p: &ModelParams, tol: &GenericityTolerances) -> Result<()> {
    validate(p, tol).into_result()
}

/// Guard a denominator against the genericity tolerance.
pub(crate) fn guard(value: C64, tol: f64, context: impl FnOnce() -> String) -> Result<C64> {
    let v = value.norm();
    if v <= tol || !v.is_finite() {
        Err(Error::Degenerate {
            context: context(),
            value: v,
            tol,
        })
    } else {
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn i(x: f64) -> C64 {
        C64::new(0.0, x)
    }

    fn sample() -> ModelParams {
        ModelParams::new(2, i(PI / 3.0), i(PI / 5.0), i(PI / 7.0), 0.4)
    }

    #[test]
    fn sample_tuple_is_valid() {
        let report = sample().validate(&GenericityTolerances::default());
        assert!(report.is_valid(), "{:?}", report.violations);
    }

    #[test]
    fn zero_alpha_is_reported() {
        let p = ModelParams {
            alpha: C64::new(0.0, 0.0),
            ..sample()
        };
        let report = p.validate(&GenericityTolerances::default());
        assert!(report.violations.contains(&Violation::AlphaZero));
        assert!(report.violations.iter().any(|v| v.to_string() == "α must be nonzero"));
    }

    #[test]
    fn cube_root_of_unity_is_reported() {
        let p = ModelParams::new(3, i(0.7), i(0.45), i(2.0 * PI / 3.0), 0.1);
        let report = p.validate(&GenericityTolerances::default());
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RootOfUnity { order: 3, .. })));
    }

    #[test]
    fn real_phi_is_reported() {
        let p = ModelParams {
            phi: C64::new(0.1, 0.3),
            ..sample()
        };
        let report = p.validate(&GenericityTolerances::default());
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::PhiNotImaginary { .. })));
    }

    #[test]
    fn degenerate_sinh_is_reported() {
        // α + φ/2 = 0
        let p = ModelParams::new(2, i(-0.2), i(0.9), i(0.4), 0.0);
        let report = p.validate(&GenericityTolerances::default());
        assert!(report
            .violations
            .contains(&Violation::SinhAlphaDegenerate { m: 1, value: 0.0 }));
    }

    #[test]
    fn q_is_exp_phi() {
        let d = sample().derive().unwrap();
        assert!((d.q - C64::from_polar(1.0, PI / 7.0)).norm() < 1e-15);
        assert!((d.q_half - C64::from_polar(1.0, PI / 14.0)).norm() < 1e-15);
    }

    #[test]
    fn k_plus_at_zero_theta() {
        let p = ModelParams { theta: 0.0, ..sample() };
        let d = p.derive().unwrap();
        // −(e^{iπ/14} − e^{−iπ/14})/2 = −i sin(π/14)
        let expected = i(-(PI / 14.0).sin());
        assert!((d.k_plus - expected).norm() < 1e-15);
        assert!((d.k_minus - d.k_plus.conj()).norm() < 1e-15);
    }

    #[test]
    fn rho_expressions_agree() {
        let d = sample().derive().unwrap();
        assert!(d.rho_consistency() < 1e-12);
        assert!(d.rho.im.abs() < 1e-15);
    }

    #[test]
    fn dual_substitution_is_an_involution_up_to_two_pi() {
        let p = sample();
        let back = p.dual_substitution().dual_substitution();
        assert_eq!(back.alpha, p.alpha);
        assert_eq!(back.alpha_star, p.alpha_star);
        assert_eq!(back.phi, p.phi);
        assert!((back.theta - p.theta - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn params_json_uses_pairs() {
        let json = serde_json::to_value(sample()).unwrap();
        assert_eq!(json["alpha"][0], 0.0);
        assert!((json["phi"][1].as_f64().unwrap() - PI / 7.0).abs() < 1e-16);
        let back: ModelParams = serde_json::from_value(json).unwrap();
        assert_eq!(back, sample());
    }
}
