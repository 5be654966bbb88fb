//! Command-line front end.
//!
//! Exit codes: 0 success, 1 tolerance breach, 2 usage or I/O error,
//! 3 invalid parameters.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::blocktri::{dual_entries, entries_recursive, oracle_entries, DualRoute};
use crate::construct::{build, Generator, DEFAULT_MAX_N};
use crate::error::Error;
use crate::export::{basis_export, blocks_export, matrix_export, orthogonality_export, to_json, write_overlap_csv};
use crate::matrix::C64;
use crate::overlaps::{check_n2_closed_form, overlap_f};
use crate::params::{GenericityTolerances, ModelParams};
use crate::spectral::{norm_coeffs, BasisKind, EigenBasis};
use crate::verify::{run_checks, Check, Profile, Report, Tolerances, PROFILE_ENV};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_BREACH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "tdpair",
    version,
    about = "Tridiagonal pairs on spin-1/2 chains: construction, bases, blocks and overlaps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the dense matrix of W0 or W1.
    Build {
        #[command(flatten)]
        params: ParamArgs,
        /// Generator index.
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        w: u8,
        /// Largest N built densely.
        #[arg(long, default_value_t = DEFAULT_MAX_N)]
        max_n: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write a closed-form eigenbasis.
    Basis {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = BasisArg::Psi)]
        which: BasisArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write the block-tridiagonal entries.
    Blocks {
        #[command(flatten)]
        params: ParamArgs,
        /// `direct`: W1 in the psi basis; `dual`: W0 in the phi basis.
        #[arg(long, value_enum, default_value_t = WhichBlocks::Direct)]
        which: WhichBlocks,
        #[arg(long, value_enum, default_value_t = MethodArg::Recursive)]
        method: MethodArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write the overlap table, or run one overlap check.
    Overlaps {
        #[command(flatten)]
        params: ParamArgs,
        /// Compare with the N = 2 rational functions.
        #[arg(long)]
        closed_form: bool,
        #[arg(long, value_enum)]
        check: Option<OverlapCheck>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        tolerance: ToleranceArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run residual checks; exits 1 if any tolerance is breached.
    Verify {
        #[command(flatten)]
        params: ParamArgs,
        /// Checks to run (repeatable); all of them when omitted.
        #[arg(long = "check", value_parser = parse_check)]
        checks: Vec<Check>,
        #[command(flatten)]
        tolerance: ToleranceArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run every check and write a JSON summary.
    Report {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        tolerance: ToleranceArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// JSON file with `n`, `alpha`, `alpha_star`, `phi` (as `[re, im]`) and `theta`.
    /// Flags given alongside it override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Complex value such as `0.3+1.2i` or `1.0471975511965976i`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub alpha: Option<C64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub alpha_star: Option<C64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub phi: Option<C64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ToleranceArgs {
    /// Tolerance profile.
    #[arg(long, env = PROFILE_ENV, value_parser = parse_profile, default_value = "default")]
    pub profile: Profile,
    /// Override a single tolerance, e.g. `--tol recurrence=1e-8` (repeatable).
    #[arg(long = "tol", value_parser = parse_override)]
    pub overrides: Vec<(String, f64)>,
}

impl ToleranceArgs {
    fn resolve(&self) -> Result<Tolerances, CliError> {
        let mut t = self.profile.tolerances();
        for (k, v) in &self.overrides {
            t.set(k, *v).map_err(CliError::Usage)?;
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BasisArg {
    Psi,
    Phi,
    PsiTilde,
    PhiTilde,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WhichBlocks {
    Direct,
    Dual,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Recursive,
    Oracle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OverlapCheck {
    Recurrence,
    Qdiff,
    Orthogonality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Accepts `a`, `bi`, `a+bi`, `a-bi` (also with `j`).
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    t.parse::<C64>()
        .map_err(|e| format!("cannot parse `{s}` as a complex number: {e}"))
}

fn parse_check(s: &str) -> Result<Check, String> {
    s.parse()
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse()
}

fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|e| format!("bad tolerance value in `{s}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Invalid(String),
    Breach(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Breach(_) => EXIT_BREACH,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Invalid(m) | CliError::Breach(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_) | Error::Degenerate { .. } | Error::Regime(_) => CliError::Invalid(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl ParamArgs {
    pub fn resolve(&self) -> Result<ModelParams, CliError> {
        let base: Option<ModelParams> = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                Some(serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?)
            }
            None => None,
        };
        let missing = |name: &str| CliError::Usage(format!("missing --{name} (or a --config file)"));
        let p = ModelParams {
            n: self.n.or(base.map(|b| b.n)).ok_or_else(|| missing("n"))?,
            alpha: self.alpha.or(base.map(|b| b.alpha)).ok_or_else(|| missing("alpha"))?,
            alpha_star: self
                .alpha_star
                .or(base.map(|b| b.alpha_star))
                .ok_or_else(|| missing("alpha-star"))?,
            phi: self.phi.or(base.map(|b| b.phi)).ok_or_else(|| missing("phi"))?,
            theta: self.theta.or(base.map(|b| b.theta)).unwrap_or(0.0),
        };
        p.validate(&GenericityTolerances::default()).into_result()?;
        Ok(p)
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Usage(e.to_string()))
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    Ok(to_json(value)?)
}

fn report_text(report: &Report) -> Result<String, CliError> {
    json(report)
}

fn breach_message(report: &Report) -> Option<String> {
    let failed: Vec<&str> = report
        .outcomes
        .iter()
        .filter(|o| o.status == crate::verify::Status::Fail)
        .map(|o| o.check.name())
        .collect();
    (!failed.is_empty()).then(|| format!("tolerance breached: {}", failed.join(", ")))
}

/// Execute one parsed command.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Build {
            params,
            w,
            max_n,
            output,
        } => {
            let p = params.resolve()?;
            let which = Generator::from_index(w).expect("range checked by the parser");
            let m = build(&p, which, max_n)?;
            emit(&output.out, &json(&matrix_export(&m, &p))?)
        }
        Command::Basis { params, which, output } => {
            let p = params.resolve()?;
            let kind = match which {
                BasisArg::Psi => BasisKind::Psi,
                BasisArg::Phi => BasisKind::Phi,
                BasisArg::PsiTilde => BasisKind::PsiTilde,
                BasisArg::PhiTilde => BasisKind::PhiTilde,
            };
            emit(&output.out, &json(&basis_export(&EigenBasis::new(&p, kind)))?)
        }
        Command::Blocks {
            params,
            which,
            method,
            output,
        } => {
            let p = params.resolve()?;
            let blocks = match (which, method) {
                (WhichBlocks::Direct, MethodArg::Recursive) => entries_recursive(&p)?,
                (WhichBlocks::Direct, MethodArg::Oracle) => oracle_entries(&p)?,
                (WhichBlocks::Dual, MethodArg::Recursive) => dual_entries(&p, DualRoute::Substitution)?,
                (WhichBlocks::Dual, MethodArg::Oracle) => dual_entries(&p, DualRoute::BasisChange)?,
            };
            if blocks.off_band_max > 0.0 {
                eprintln!(
                    "largest coefficient outside the block band: {:.3e}",
                    blocks.off_band_max
                );
            }
            emit(&output.out, &json(&blocks_export(&blocks))?)
        }
        Command::Overlaps {
            params,
            closed_form,
            check,
            format,
            tolerance,
            output,
        } => {
            let p = params.resolve()?;
            let tol = tolerance.resolve()?;
            if closed_form {
                let blocks = entries_recursive(&p)?;
                let r = check_n2_closed_form(&p, &blocks)?;
                let report = run_checks(&p, &[Check::ClosedForm], &tol)?;
                emit(&output.out, &json(&r)?)?;
                return match breach_message(&report) {
                    Some(m) => Err(CliError::Breach(m)),
                    None => Ok(()),
                };
            }
            match check {
                None => {
                    let table = overlap_f(&p)?;
                    match format {
                        Format::Csv => {
                            let mut buf = Vec::new();
                            write_overlap_csv(&table, &mut buf)?;
                            emit(&output.out, &String::from_utf8(buf).expect("csv output is utf-8"))
                        }
                        Format::Json => emit(&output.out, &json(&table)?),
                    }
                }
                Some(OverlapCheck::Orthogonality) => {
                    let table = overlap_f(&p)?;
                    let norms = norm_coeffs(&p, false, tol.genericity)?;
                    let r = crate::overlaps::weights_and_orthogonality(&table, &norms)?;
                    emit(&output.out, &json(&orthogonality_export(&r))?)?;
                    if r.max_relative() > tol.orthogonality {
                        return Err(CliError::Breach(format!(
                            "orthogonality deviation {:.3e} above {:.1e}",
                            r.max_relative(),
                            tol.orthogonality
                        )));
                    }
                    Ok(())
                }
                Some(c) => {
                    let check = match c {
                        OverlapCheck::Recurrence => Check::Recurrence,
                        _ => Check::Qdiff,
                    };
                    verify_and_emit(&p, &[check], &tol, &output.out)
                }
            }
        }
        Command::Verify {
            params,
            checks,
            tolerance,
            output,
        } => {
            let p = params.resolve()?;
            let tol = tolerance.resolve()?;
            let checks = if checks.is_empty() { Check::ALL.to_vec() } else { checks };
            verify_and_emit(&p, &checks, &tol, &output.out)
        }
        Command::Report {
            params,
            tolerance,
            output,
        } => {
            let p = params.resolve()?;
            let tol = tolerance.resolve()?;
            let report = run_checks(&p, &Check::ALL, &tol)?;
            emit(&output.out, &report_text(&report)?)
        }
    }
}

fn verify_and_emit(p: &ModelParams, checks: &[Check], tol: &Tolerances, out: &Option<PathBuf>) -> Result<(), CliError> {
    let report = run_checks(p, checks, tol)?;
    emit(out, &report_text(&report)?)?;
    match breach_message(&report) {
        Some(m) => Err(CliError::Breach(m)),
        None => Ok(()),
    }
}

/// Parse `args`, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_PASS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_syntax() {
        assert_eq!(parse_complex("0.3+1.2i").unwrap(), C64::new(0.3, 1.2));
        assert_eq!(parse_complex("1.5i").unwrap(), C64::new(0.0, 1.5));
        assert_eq!(parse_complex("-0.25").unwrap(), C64::new(-0.25, 0.0));
        assert_eq!(parse_complex("-2-0.5i").unwrap(), C64::new(-2.0, -0.5));
        assert_eq!(parse_complex("1e-3+2e1i").unwrap(), C64::new(1e-3, 20.0));
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn overrides() {
        assert_eq!(parse_override("qdiff=1e-7").unwrap(), ("qdiff".to_string(), 1e-7));
        assert!(parse_override("qdiff").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(main_with_args(["tdpair", "frobnicate"]), EXIT_USAGE);
        assert_eq!(main_with_args(["tdpair", "build", "--w", "3", "--n", "1"]), EXIT_USAGE);
        assert_eq!(
            main_with_args(["tdpair", "build", "--w", "0", "--alpha", "1i"]),
            EXIT_USAGE
        );
    }

    #[test]
    fn invalid_params_exit_3() {
        let code = main_with_args([
            "tdpair",
            "verify",
            "--n",
            "2",
            "--alpha",
            "0",
            "--alpha-star",
            "0.5i",
            "--phi",
            "0.37i",
        ]);
        assert_eq!(code, EXIT_INVALID);
    }
}
