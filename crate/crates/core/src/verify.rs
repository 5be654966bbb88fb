//! Named residual checks with tolerance profiles, shared by the command line
//! and by callers that want a single pass/fail summary.

use std::fmt;
use std::str::FromStr;

use nalgebra::Schur;
use serde::{Deserialize, Serialize};

use crate::blocktri::{dual_entries, entries_recursive, oracle_entries, BlockTriMatrix, DualRoute};
use crate::construct::{build_unchecked, fit_aw_constants, tridiagonal_residuals, Generator};
use crate::error::{Error, Result};
use crate::matrix::{vec_norm, DenseMatrix, C64};
use crate::overlaps::{
    check_n2_closed_form, check_qdiff, check_recurrence, eigenvalue_root_check, matched_distance, overlap_f,
    weights_and_orthogonality, OverlapTable,
};
use crate::params::{derive, require_valid, GenericityTolerances, ModelParams};
use crate::spectral::{binomial, biorthogonality_defect, eigenvalue_ratio_defect, norm_coeffs, BasisKind, EigenBasis};

/// Environment variable naming the default tolerance profile.
pub const PROFILE_ENV: &str = "TDPAIR_TOLERANCE";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub relation: f64,
    pub eigenvector: f64,
    pub biorthogonality: f64,
    pub ratio: f64,
    pub blocks: f64,
    pub off_band: f64,
    pub dual_blocks: f64,
    pub spectrum: f64,
    pub trace: f64,
    pub recurrence: f64,
    pub qdiff: f64,
    pub closed_form: f64,
    pub parity: f64,
    pub orthogonality: f64,
    pub roots: f64,
    pub aw_fit: f64,
    /// Lower bound on the fit residual when no exact fit is expected.
    pub aw_obstruction: f64,
    pub genericity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Default,
    /// Every upper tolerance divided by ten.
    Strict,
    /// Every upper tolerance multiplied by a hundred.
    Loose,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "default" => Ok(Profile::Default),
            "strict" => Ok(Profile::Strict),
            "loose" => Ok(Profile::Loose),
            other => Err(format!("unknown tolerance profile `{other}` (default, strict, loose)")),
        }
    }
}

impl Profile {
    /// The profile named by [`PROFILE_ENV`], or `Default` when unset.
    pub fn from_env() -> std::result::Result<Self, String> {
        match std::env::var(PROFILE_ENV) {
            Ok(v) if !v.trim().is_empty() => v.trim().parse(),
            _ => Ok(Profile::Default),
        }
    }

    pub fn tolerances(self) -> Tolerances {
        let base = Tolerances::default();
        let f = match self {
            Profile::Default => return base,
            Profile::Strict => 0.1,
            Profile::Loose => 100.0,
        };
        Tolerances {
            relation: base.relation * f,
            eigenvector: base.eigenvector * f,
            biorthogonality: base.biorthogonality * f,
            ratio: base.ratio * f,
            blocks: base.blocks * f,
            off_band: base.off_band * f,
            dual_blocks: base.dual_blocks * f,
            spectrum: base.spectrum * f,
            trace: base.trace * f,
            recurrence: base.recurrence * f,
            qdiff: base.qdiff * f,
            closed_form: base.closed_form * f,
            parity: base.parity * f,
            orthogonality: base.orthogonality * f,
            roots: base.roots * f,
            aw_fit: base.aw_fit * f,
            ..base
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            relation: 1e-10,
            eigenvector: 1e-11,
            biorthogonality: 1e-10,
            ratio: 1e-12,
            blocks: 1e-9,
            off_band: 1e-10,
            dual_blocks: 1e-10,
            spectrum: 1e-9,
            trace: 1e-10,
            recurrence: 1e-9,
            qdiff: 1e-9,
            closed_form: 1e-9,
            parity: 1e-11,
            orthogonality: 1e-8,
            roots: 1e-9,
            aw_fit: 1e-10,
            aw_obstruction: 1e-3,
            genericity: 1e-8,
        }
    }
}

impl Tolerances {
    /// Override one entry by its field name.
    pub fn set(&mut self, key: &str, value: f64) -> std::result::Result<(), String> {
        let slot = match key {
            "relation" => &mut self.relation,
            "eigenvector" => &mut self.eigenvector,
            "biorthogonality" => &mut self.biorthogonality,
            "ratio" => &mut self.ratio,
            "blocks" => &mut self.blocks,
            "off_band" => &mut self.off_band,
            "dual_blocks" => &mut self.dual_blocks,
            "spectrum" => &mut self.spectrum,
            "trace" => &mut self.trace,
            "recurrence" => &mut self.recurrence,
            "qdiff" => &mut self.qdiff,
            "closed_form" => &mut self.closed_form,
            "parity" => &mut self.parity,
            "orthogonality" => &mut self.orthogonality,
            "roots" => &mut self.roots,
            "aw_fit" => &mut self.aw_fit,
            "aw_obstruction" => &mut self.aw_obstruction,
            "genericity" => &mut self.genericity,
            other => return Err(format!("unknown tolerance `{other}`")),
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Tridiagonal,
    Eigenvectors,
    Biorthogonality,
    Ratio,
    Blocks,
    OffBand,
    DualBlocks,
    Spectrum,
    Trace,
    Recurrence,
    Qdiff,
    Orthogonality,
    ClosedForm,
    Roots,
    AwFit,
}

impl Check {
    pub const ALL: [Check; 15] = [
        Check::Tridiagonal,
        Check::Eigenvectors,
        Check::Biorthogonality,
        Check::Ratio,
        Check::Blocks,
        Check::OffBand,
        Check::DualBlocks,
        Check::Spectrum,
        Check::Trace,
        Check::Recurrence,
        Check::Qdiff,
        Check::Orthogonality,
        Check::ClosedForm,
        Check::Roots,
        Check::AwFit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Tridiagonal => "tridiagonal",
            Check::Eigenvectors => "eigenvectors",
            Check::Biorthogonality => "biorthogonality",
            Check::Ratio => "ratio",
            Check::Blocks => "blocks",
            Check::OffBand => "off-band",
            Check::DualBlocks => "dual-blocks",
            Check::Spectrum => "spectrum",
            Check::Trace => "trace",
            Check::Recurrence => "recurrence",
            Check::Qdiff => "qdiff",
            Check::Orthogonality => "orthogonality",
            Check::ClosedForm => "closed-form",
            Check::Roots => "roots",
            Check::AwFit => "aw-fit",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Check::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown check `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// `value ≤ tolerance` passes, except for bounds marked `lower`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub label: String,
    pub value: f64,
    pub tolerance: f64,
    pub lower: bool,
}

impl Measurement {
    fn upper(label: &str, value: f64, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            value,
            tolerance,
            lower: false,
        }
    }

    fn passes(&self) -> bool {
        if self.lower {
            self.value >= self.tolerance
        } else {
            self.value <= self.tolerance
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: Check,
    pub status: Status,
    pub measurements: Vec<Measurement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub params: ModelParams,
    pub tolerances: Tolerances,
    pub outcomes: Vec<CheckOutcome>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.status != Status::Fail)
    }
}

/// Intermediate objects shared between checks.
struct Context<'a> {
    params: &'a ModelParams,
    tol: &'a Tolerances,
    blocks: Option<BlockTriMatrix>,
    dual: Option<BlockTriMatrix>,
    table: Option<OverlapTable>,
}

impl Context<'_> {
    fn blocks(&mut self) -> Result<&BlockTriMatrix> {
        if self.blocks.is_none() {
            self.blocks = Some(entries_recursive(self.params)?);
        }
        Ok(self.blocks.as_ref().expect("just set"))
    }

    fn dual(&mut self) -> Result<&BlockTriMatrix> {
        if self.dual.is_none() {
            self.dual = Some(dual_entries(self.params, DualRoute::Substitution)?);
        }
        Ok(self.dual.as_ref().expect("just set"))
    }

    fn table(&mut self) -> Result<&OverlapTable> {
        if self.table.is_none() {
            self.table = Some(overlap_f(self.params)?);
        }
        Ok(self.table.as_ref().expect("just set"))
    }
}

/// Run the selected checks in the given order.
pub fn run_checks(params: &ModelParams, checks: &[Check], tol: &Tolerances) -> Result<Report> {
    require_valid(
        params,
        &GenericityTolerances {
            genericity: tol.genericity,
            ..GenericityTolerances::default()
        },
    )?;
    let mut ctx = Context {
        params,
        tol,
        blocks: None,
        dual: None,
        table: None,
    };
    let mut outcomes = Vec::with_capacity(checks.len());
    for &check in checks {
        let (measurements, note) = match measure(&mut ctx, check)? {
            Some(m) => (m, None),
            None => {
                outcomes.push(CheckOutcome {
                    check,
                    status: Status::Skipped,
                    measurements: vec![],
                    note: Some(format!("not defined for N = {}", params.n)),
                });
                continue;
            }
        };
        let status = if measurements.iter().all(Measurement::passes) {
            Status::Pass
        } else {
            Status::Fail
        };
        outcomes.push(CheckOutcome {
            check,
            status,
            measurements,
            note,
        });
    }
    Ok(Report {
        params: *params,
        tolerances: *tol,
        outcomes,
    })
}

fn measure(ctx: &mut Context<'_>, check: Check) -> Result<Option<Vec<Measurement>>> {
    let p = ctx.params;
    let t = *ctx.tol;
    let g = t.genericity;
    let out = match check {
        Check::Tridiagonal => {
            let (r0, r1) = tridiagonal_residuals(p)?;
            vec![
                Measurement::upper("A=W0 relative residual", r0.relative, t.relation),
                Measurement::upper("A=W1 relative residual", r1.relative, t.relation),
            ]
        }
        Check::Eigenvectors => vec![
            Measurement::upper(
                "W0 psi residual",
                eigenvector_residual(p, BasisKind::Psi)?,
                t.eigenvector,
            ),
            Measurement::upper(
                "W1 phi residual",
                eigenvector_residual(p, BasisKind::Phi)?,
                t.eigenvector,
            ),
        ],
        Check::Biorthogonality => vec![
            Measurement::upper("psi", biorthogonality_defect(p, BasisKind::Psi, g)?, t.biorthogonality),
            Measurement::upper("phi", biorthogonality_defect(p, BasisKind::Phi, g)?, t.biorthogonality),
        ],
        Check::Ratio => {
            if p.n < 3 {
                return Ok(None);
            }
            vec![
                Measurement::upper("lambda", eigenvalue_ratio_defect(&p.eigenvalues(), p.q()), t.ratio),
                Measurement::upper(
                    "lambda tilde",
                    eigenvalue_ratio_defect(&p.dual_eigenvalues(), p.q()),
                    t.ratio,
                ),
            ]
        }
        Check::Blocks => {
            let oracle = oracle_entries(p)?;
            vec![Measurement::upper(
                "recursive vs oracle",
                ctx.blocks()?.max_relative_diff(&oracle)?,
                t.blocks,
            )]
        }
        Check::OffBand => {
            let oracle = oracle_entries(p)?;
            vec![
                Measurement::upper("oracle", oracle.off_band_max, t.off_band),
                Measurement::upper("recursive", ctx.blocks()?.assembled_off_band_max(), 0.0),
            ]
        }
        Check::DualBlocks => {
            let oracle = dual_entries(p, DualRoute::BasisChange)?;
            vec![Measurement::upper(
                "substitution vs oracle",
                ctx.dual()?.max_relative_diff(&oracle)?,
                t.dual_blocks,
            )]
        }
        Check::Spectrum => {
            let found = eigenvalues(&ctx.blocks()?.assemble());
            let expected: Vec<C64> = (0..=p.n)
                .flat_map(|s| std::iter::repeat_n(p.dual_eigenvalue(s), binomial(p.n, s)))
                .collect();
            vec![Measurement::upper(
                "max distance",
                matched_distance(&found, &expected),
                t.spectrum,
            )]
        }
        Check::Trace => {
            let w1 = build_unchecked(p, Generator::W1);
            vec![Measurement::upper(
                "|tr M − tr W1|",
                (ctx.blocks()?.trace() - w1.trace()).norm(),
                t.trace,
            )]
        }
        Check::Recurrence => {
            let blocks = ctx.blocks()?.clone();
            let r = check_recurrence(ctx.table()?, &blocks)?;
            vec![Measurement::upper("max relative", r.max_relative, t.recurrence)]
        }
        Check::Qdiff => {
            let dual = ctx.dual()?.clone();
            let r = check_qdiff(ctx.table()?, &dual)?;
            vec![Measurement::upper("max relative", r.max_relative, t.qdiff)]
        }
        Check::Orthogonality => {
            let norms = norm_coeffs(p, false, g)?;
            let r = weights_and_orthogonality(ctx.table()?, &norms)?;
            vec![
                Measurement::upper("diagonal", r.max_diagonal_deviation, t.orthogonality),
                Measurement::upper("off-diagonal", r.max_off_diagonal, t.orthogonality),
            ]
        }
        Check::ClosedForm => {
            if p.n != 2 {
                return Ok(None);
            }
            let r = check_n2_closed_form(p, ctx.blocks()?)?;
            vec![
                Measurement::upper("simple levels", r.simple_levels_error, t.closed_form),
                Measurement::upper(
                    "degenerate level collinearity",
                    r.degenerate_level_collinearity,
                    t.closed_form,
                ),
                Measurement::upper("recurrences", r.recurrence_residual, t.closed_form),
                Measurement::upper("alpha* parity", r.parity_defect, t.parity),
            ]
        }
        Check::Roots => {
            if p.n > 2 {
                return Ok(None);
            }
            let r = eigenvalue_root_check(p, ctx.blocks()?)?;
            vec![Measurement::upper("max root distance", r.max_error, t.roots)]
        }
        Check::AwFit => {
            let a = build_unchecked(p, Generator::W0);
            let b = build_unchecked(p, Generator::W1);
            let fit = fit_aw_constants(&a, &b, p.q())?;
            if p.n == 1 {
                vec![Measurement::upper("relative residual", fit.relative_residual, t.aw_fit)]
            } else {
                vec![Measurement {
                    label: "relative residual".into(),
                    value: fit.relative_residual,
                    tolerance: t.aw_obstruction,
                    lower: true,
                }]
            }
        }
    };
    Ok(Some(out))
}

/// `max ‖W v − λ v‖ / ‖v‖` over the closed-form basis of the generator it
/// diagonalizes.
pub fn eigenvector_residual(params: &ModelParams, kind: BasisKind) -> Result<f64> {
    let which = match kind {
        BasisKind::Psi => Generator::W0,
        BasisKind::Phi => Generator::W1,
        other => return Err(Error::Regime(format!("{other:?} is not an eigenbasis of a generator"))),
    };
    derive(params)?;
    let w = build_unchecked(params, which);
    let basis = EigenBasis::new(params, kind);
    let p = basis.columns();
    let wp = w.matmul(&p)?;
    let mut worst: f64 = 0.0;
    for (c, lambda) in basis.eigenvalues.iter().enumerate() {
        let r: Vec<C64> = (0..p.rows()).map(|i| wp[(i, c)] - lambda * p[(i, c)]).collect();
        worst = worst.max(vec_norm(&r) / vec_norm(&p.column(c)));
    }
    Ok(worst)
}

/// Eigenvalues of a square matrix from its complex Schur form.
pub fn eigenvalues(m: &DenseMatrix) -> Vec<C64> {
    let (_, t) = Schur::new(m.to_nalgebra()).unpack();
    (0..m.rows()).map(|i| t[(i, i)]).collect()
}
