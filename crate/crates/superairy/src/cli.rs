//! Command-line front end: curve ingestion, the two recursions, the cross
//! check, Gaiotto vectors and exports.
//!
//! Exit status: 0 when every requested check passes, 1 for invalid input,
//! 2 for a nonzero residual or a mismatch, 3 when the index bound is too small.

use crate::airy::{self, AiryError, CellRecord, CoeffTable};
use crate::curve::{CurveError, Sector, SuperCurve};
use crate::fock::{relation_sweep, Representation};
use crate::gaiotto::{self, GaiottoError, GaiottoSpec, Normalization};
use crate::ring::{parse_value, TermRecord};
use crate::str_rec::{self, StrError};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Parser, Debug, Clone)]
#[command(
    name = "superairy",
    version,
    about = "Super Airy structures, super topological recursion and Gaiotto vectors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Curve file (JSON), or `gaiotto-ns` / `gaiotto-r`.
    #[arg(long, global = true)]
    pub curve: Option<String>,
    /// Sector of the built-in Gaiotto curve when `--curve` is absent.
    #[arg(long, global = true, value_enum)]
    pub sector: Option<SectorArg>,
    /// Largest `2g + n + 2m` computed.
    #[arg(long, global = true)]
    pub chi_max: Option<u32>,
    /// Certificate: no nonzero cell may carry a larger index.
    #[arg(long, global = true)]
    pub index_bound: Option<u32>,
    /// Largest `Lambda` exponent reported by `gaiotto` and `norm`.
    #[arg(long, global = true, default_value_t = 6)]
    pub lambda_order: u32,
    /// Normalization of the Gaiotto curve.
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Raw)]
    pub mode: ModeArg,
    /// Value of `tau0` for Gaiotto curves (rational or symbol); symbolic if absent.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tau0: Option<String>,
    /// Value of `Q0` for Gaiotto curves (rational or symbol); symbolic if absent.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub q0: Option<String>,
    /// Largest mode index in the `virasoro` relation sweep.
    #[arg(long, global = true, default_value_t = 4)]
    pub max_mode: i32,
    /// Write the JSON export here.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Check the curve invariants.
    Validate,
    /// Solve the constraints and verify them on `Z`.
    Airy,
    /// Run the residue recursion and check the loop equations.
    Str,
    /// Compare the two recursions cell by cell.
    Crosscheck,
    /// Gaiotto partition function and Whittaker conditions.
    Gaiotto,
    /// Norm `(Z|Z)` and `F_Nek` of the Gaiotto vector.
    Norm,
    /// Check the mode algebra and the super Virasoro relations.
    Virasoro,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectorArg {
    #[value(alias = "NS")]
    Ns,
    #[value(alias = "R")]
    R,
}

impl From<SectorArg> for Sector {
    fn from(s: SectorArg) -> Sector {
        match s {
            SectorArg::Ns => Sector::Ns,
            SectorArg::R => Sector::R,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Raw,
    Calibrated,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Airy(#[from] AiryError),
    #[error(transparent)]
    Str(#[from] StrError),
    #[error(transparent)]
    Gaiotto(#[from] GaiottoError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Airy(AiryError::IndexBound { .. })
            | CliError::Gaiotto(GaiottoError::Airy(AiryError::IndexBound { .. })) => 3,
            CliError::Airy(AiryError::Inconsistent(_))
            | CliError::Gaiotto(GaiottoError::Airy(AiryError::Inconsistent(_))) => 2,
            _ => 1,
        }
    }
}

/// Result of a command: the text report, an optional JSON export and the
/// exit status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub report: String,
    pub export: Option<String>,
    pub code: i32,
}

#[derive(Serialize)]
struct TableExport<'a> {
    command: &'a str,
    sector: Sector,
    chi_max: u32,
    index_bound: Option<u32>,
    cells: Vec<CellRecord>,
}

#[derive(Serialize)]
struct GaiottoExport<'a> {
    command: &'a str,
    sector: Sector,
    mode: &'a str,
    chi_max: u32,
    whittaker: &'a gaiotto::WhittakerReport,
    cells: Vec<CellRecord>,
}

#[derive(Serialize)]
struct SeriesRecord {
    series: &'static str,
    lambda_exponent: i32,
    poly_terms: Vec<TermRecord>,
}

#[derive(Serialize)]
struct NormExport<'a> {
    command: &'a str,
    sector: Sector,
    mode: &'a str,
    chi_max: u32,
    report: &'a gaiotto::NormReport,
    coefficients: Vec<SeriesRecord>,
}

#[derive(Serialize)]
struct SweepExport<'a> {
    command: &'a str,
    max_index: i32,
    sectors: Vec<(Sector, Vec<crate::fock::RelationCheck>)>,
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("export types serialize")
}

fn gaiotto_sector(name: &str) -> Option<Sector> {
    match name.to_ascii_lowercase().as_str() {
        "gaiotto-ns" => Some(Sector::Ns),
        "gaiotto-r" => Some(Sector::R),
        _ => None,
    }
}

impl Cli {
    fn normalization(&self) -> Normalization {
        match self.mode {
            ModeArg::Raw => Normalization::Raw,
            ModeArg::Calibrated => Normalization::Calibrated,
        }
    }

    fn mode_name(&self) -> &'static str {
        match self.mode {
            ModeArg::Raw => "raw",
            ModeArg::Calibrated => "calibrated",
        }
    }

    /// The Gaiotto spec selected by `--curve gaiotto-*` or `--sector`, if any.
    fn gaiotto_spec(&self) -> Result<Option<GaiottoSpec>, CliError> {
        let sector = match (&self.curve, self.sector) {
            (Some(name), sector) => match gaiotto_sector(name) {
                Some(s) => {
                    if sector.is_some_and(|x| Sector::from(x) != s) {
                        return Err(CliError::Usage(format!("--sector contradicts --curve {name}")));
                    }
                    s
                }
                None => return Ok(None),
            },
            (None, Some(s)) => s.into(),
            (None, None) => return Err(CliError::Usage("either --curve or --sector is required".into())),
        };
        let mut spec = GaiottoSpec::symbolic(sector, self.normalization());
        if let Some(v) = &self.tau0 {
            spec.tau0 = parse_value(v).map_err(|e| CliError::Usage(format!("--tau0: {e}")))?;
            if spec.tau0.is_zero() {
                return Err(CliError::Usage("--tau0 must be nonzero".into()));
            }
        }
        if let Some(v) = &self.q0 {
            spec.q0 = parse_value(v).map_err(|e| CliError::Usage(format!("--q0: {e}")))?;
        }
        Ok(Some(spec))
    }

    fn load_curve(&self) -> Result<(SuperCurve, Option<GaiottoSpec>), CliError> {
        if let Some(spec) = self.gaiotto_spec()? {
            return Ok((spec.curve(), Some(spec)));
        }
        let path = self.curve.as_deref().expect("non-Gaiotto curves come from a path");
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        let curve = SuperCurve::from_json(&text)?;
        if self.sector.is_some_and(|s| Sector::from(s) != curve.sector) {
            return Err(CliError::Usage(format!("--sector contradicts the sector of {path}")));
        }
        Ok((curve, None))
    }

    /// The index bound in force: explicit, or the certified default for
    /// Gaiotto curves.
    fn index_bound(&self, chi_max: u32, spec: &Option<GaiottoSpec>) -> Option<u32> {
        self.index_bound.or_else(|| spec.as_ref().map(|_| gaiotto::default_index_bound(chi_max)))
    }
}

fn check_bound(table: &CoeffTable, bound: Option<u32>) -> Result<(), CliError> {
    let Some(bound) = bound else { return Ok(()) };
    match table.entries().find(|(c, _)| c.max_index() > bound) {
        Some((cell, _)) => Err(CliError::Airy(AiryError::IndexBound { bound, cell: cell.to_string() })),
        None => Ok(()),
    }
}

fn table_export(
    cli: &Cli,
    command: &str,
    sector: Sector,
    chi_max: u32,
    bound: Option<u32>,
    table: &CoeffTable,
) -> Option<String> {
    cli.out
        .as_ref()
        .map(|_| to_json(&TableExport { command, sector, chi_max, index_bound: bound, cells: table.to_records() }))
}

fn status(ok: bool) -> i32 {
    if ok {
        0
    } else {
        2
    }
}

fn run_validate(cli: &Cli) -> Result<Outcome, CliError> {
    let (curve, _) = cli.load_curve()?;
    Ok(Outcome {
        report: format!("curve valid: sector {}, N = {}\n", curve.sector, curve.n),
        export: cli.out.as_ref().map(|_| curve.to_json()),
        code: 0,
    })
}

fn run_airy(cli: &Cli) -> Result<Outcome, CliError> {
    let (curve, spec) = cli.load_curve()?;
    let chi_max = cli.chi_max.unwrap_or(6);
    let bound = cli.index_bound(chi_max, &spec);
    let (table, solve) = airy::solve_with_report(&curve, chi_max, bound)?;
    let verify = airy::verify_constraints(&curve, &table, chi_max);
    let mut report = format!(
        "airy: {} nonzero cells through chi {chi_max}, {} redundant determinations, {} cross-checked\n",
        table.len(),
        solve.checks,
        solve.cross_checked
    );
    for m in &solve.mismatches {
        report += &format!("mismatch: {m}\n");
    }
    for r in verify.failures() {
        report += &format!("residual: {:?}_{} nonzero from degree {:?}\n", r.kind, r.i, r.lowest_nonzero);
    }
    let ok = solve.mismatches.is_empty() && verify.passed();
    report += &format!("constraints on Z: {}\n", if verify.passed() { "satisfied" } else { "violated" });
    Ok(Outcome { report, export: table_export(cli, "airy", curve.sector, chi_max, bound, &table), code: status(ok) })
}

fn run_str(cli: &Cli) -> Result<Outcome, CliError> {
    let (curve, spec) = cli.load_curve()?;
    let chi_max = cli.chi_max.unwrap_or(6);
    let bound = cli.index_bound(chi_max, &spec);
    let out = str_rec::recurse(&curve, chi_max)?;
    check_bound(&out.table, bound)?;
    let (checked, violations) = str_rec::loop_equations(&curve, &out.table, chi_max)?;
    let mut report = format!(
        "str: {} nonzero cells through chi {chi_max}, {} symmetry checks, {checked} loop-equation residues\n",
        out.table.len(),
        out.report.checks
    );
    for m in &out.report.mismatches {
        report += &format!("mismatch: {m}\n");
    }
    for c in &out.report.low_genus {
        report += &format!("nonzero below genus one: {c}\n");
    }
    for v in &violations {
        report += &format!(
            "loop equation {:?} at 2g = {}, ({:?}|{:?}), i = {}: {}\n",
            v.kind, v.two_g, v.bos, v.fer, v.i, v.value
        );
    }
    let ok = out.report.passed() && violations.is_empty();
    Ok(Outcome { report, export: table_export(cli, "str", curve.sector, chi_max, bound, &out.table), code: status(ok) })
}

fn run_crosscheck(cli: &Cli) -> Result<Outcome, CliError> {
    let (curve, spec) = cli.load_curve()?;
    let chi_max = cli.chi_max.unwrap_or(6);
    let bound = cli.index_bound(chi_max, &spec);
    let a = airy::solve(&curve, chi_max, bound)?;
    let s = str_rec::recurse(&curve, chi_max)?;
    let diff = a.differences(&s.table);
    let mut report =
        format!("compared {} airy cells with {} str cells through chi {chi_max}\n", a.len(), s.table.len());
    if diff.is_empty() {
        report += "all cells equal\n";
    }
    for cell in &diff {
        report += &format!("differs: {cell}: airy {} | str {}\n", a.get_cell(cell), s.table.get_cell(cell));
    }
    Ok(Outcome {
        report,
        export: table_export(cli, "crosscheck", curve.sector, chi_max, bound, &a),
        code: status(diff.is_empty()),
    })
}

fn require_gaiotto(spec: Option<GaiottoSpec>) -> Result<GaiottoSpec, CliError> {
    spec.ok_or_else(|| CliError::Usage("this command needs --curve gaiotto-ns|gaiotto-r or --sector".into()))
}

fn run_gaiotto(cli: &Cli) -> Result<Outcome, CliError> {
    let spec = require_gaiotto(cli.gaiotto_spec()?)?;
    // Whittaker residuals are exact through degree chi_max - 1.
    let chi_max = cli.chi_max.unwrap_or(cli.lambda_order + 2);
    let pf = gaiotto::partition_function(&spec, chi_max)?;
    let whittaker = gaiotto::whittaker_residuals(&pf, cli.lambda_order);
    let grading = gaiotto::t_grading_violations(spec.sector, &pf.table);
    let mut report = format!(
        "gaiotto {} ({}): {} cells through chi {chi_max}, L1 eigenvalue {}\n",
        spec.sector,
        cli.mode_name(),
        pf.table.len(),
        whittaker.eigenvalue
    );
    for r in &whittaker.residuals {
        let state = match r.lowest_lambda {
            None => "0".to_string(),
            Some(k) => format!("nonzero at Lambda^{k}"),
        };
        report += &format!("{} Z = {state} through Lambda^{}\n", r.operator, cli.lambda_order);
    }
    for c in &grading {
        report += &format!("T-grading violated: {c}\n");
    }
    let ok = whittaker.passed() && grading.is_empty();
    let export = cli.out.as_ref().map(|_| {
        to_json(&GaiottoExport {
            command: "gaiotto",
            sector: spec.sector,
            mode: cli.mode_name(),
            chi_max,
            whittaker: &whittaker,
            cells: pf.table.to_records(),
        })
    });
    Ok(Outcome { report, export, code: status(ok) })
}

fn run_norm(cli: &Cli) -> Result<Outcome, CliError> {
    let spec = require_gaiotto(cli.gaiotto_spec()?)?;
    let chi_max = cli.chi_max.unwrap_or(cli.lambda_order + 2);
    let pf = gaiotto::partition_function(&spec, chi_max)?;
    let norm = gaiotto::nekrasov_series(&pf, cli.lambda_order)?;
    let mut report = format!(
        "norm {} ({}) through Lambda^{}, total degree {}\n",
        spec.sector,
        cli.mode_name(),
        cli.lambda_order,
        norm.degree
    );
    let mut coefficients = Vec::new();
    for (name, poly) in [("norm", &norm.norm), ("f_nek", &norm.f_nek)] {
        for k in 0..=cli.lambda_order as i32 {
            let c = gaiotto::lambda_coefficient(poly, k);
            if c.is_zero() {
                continue;
            }
            report += &format!("{name} [Lambda^{k}] = {c}\n");
            coefficients.push(SeriesRecord { series: name, lambda_exponent: k, poly_terms: c.to_records() });
        }
    }
    let nonnegative = norm.min_hbar_half_exponent.is_none_or(|e| e >= 0);
    report += &format!("F_Nek hbar exponents nonnegative: {nonnegative}\n");
    let export = cli.out.as_ref().map(|_| {
        to_json(&NormExport {
            command: "norm",
            sector: spec.sector,
            mode: cli.mode_name(),
            chi_max,
            report: &norm,
            coefficients,
        })
    });
    Ok(Outcome { report, export, code: status(nonnegative) })
}

fn run_virasoro(cli: &Cli) -> Result<Outcome, CliError> {
    let sectors = match cli.sector {
        Some(s) => vec![Sector::from(s)],
        None => vec![Sector::Ns, Sector::R],
    };
    if cli.max_mode < 1 {
        return Err(CliError::Usage("--max-mode must be positive".into()));
    }
    let mut report = String::new();
    let mut ok = true;
    let mut results = Vec::new();
    for sector in sectors {
        let checks = relation_sweep(&Representation::symbolic(sector), cli.max_mode);
        let failed: Vec<_> = checks.iter().filter(|c| !c.holds).collect();
        report += &format!(
            "{sector}: {} relations with |index| <= {}, {} failing\n",
            checks.len(),
            cli.max_mode,
            failed.len()
        );
        for c in &failed {
            report += &format!("fails: {}\n", c.relation);
        }
        ok &= failed.is_empty();
        results.push((sector, checks));
    }
    let export = cli
        .out
        .as_ref()
        .map(|_| to_json(&SweepExport { command: "virasoro", max_index: cli.max_mode, sectors: results }));
    Ok(Outcome { report, export, code: status(ok) })
}

/// Runs one command without touching stdout or the filesystem beyond
/// reading the curve file.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Validate => run_validate(cli),
        Command::Airy => run_airy(cli),
        Command::Str => run_str(cli),
        Command::Crosscheck => run_crosscheck(cli),
        Command::Gaiotto => run_gaiotto(cli),
        Command::Norm => run_norm(cli),
        Command::Virasoro => run_virasoro(cli),
    }
}

/// Runs a command, prints its report, writes the export and returns the
/// exit status.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let outcome = match execute(cli) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    let _ = stdout.write_all(outcome.report.as_bytes());
    if let (Some(path), Some(json)) = (&cli.out, &outcome.export) {
        if let Err(e) = std::fs::write(path, json) {
            let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
            return 1;
        }
    }
    outcome.code
}
