//! Batch front end: Diophantine classification of flat bundle tuples,
//! majorant tables, normalization of germ systems, named examples and scans.
//!
//! Exit status: 0 when a run completes, 2 for a mathematical negative result
//! (finite type, torsion or Diophantine violation; the report is still
//! written), 1 for input and usage errors.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use flatnorm::bundles::{
    classify, epsilon_sequence, siegel_check, Classification, FlatBundleTuple,
};
use flatnorm::majorant::{
    diagonal_bounds, diagonal_csv, implicit_cross_check, majorant_series, weighted_majorant_series,
    DiagonalVariant, MajorantParams,
};
use flatnorm::normalizer::{
    generate_example, AnySystem, ExampleParams, NormalizationReport, NormalizeOptions, SystemJson,
    SystemType,
};

use report::{config_hash, Outcome, Report};

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "flatnorm",
    version,
    about = "Normalization of germ systems with unitary flat linear part"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true, display_order = 100)]
    #[serde(skip)]
    threads: Option<usize>,
    /// Directory for report.json and report.csv (stdout when absent).
    #[arg(long, global = true, display_order = 100)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Classify a flat line bundle tuple and check the Siegel properties.
    Classify(ClassifyArgs),
    /// Majorant coefficients, implicit-equation cross-check and diagonal bounds.
    Majorant(MajorantArgs),
    /// Normalize a germ system given as JSON.
    Normalize(NormalizeArgs),
    /// Generate a named example system and normalize it.
    Example(ExampleArgs),
    /// Run classify or normalize over a grid and aggregate a CSV.
    Scan(ScanArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
enum Mode {
    Exact,
    Float,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct ClassifyArgs {
    /// Tuple file `{"genus", "bundles": [{"angles": [..]}]}`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 200)]
    scan_bound: u64,
    /// Largest denominator accepted as torsion.
    #[arg(long, default_value_t = 720)]
    torsion_bound: u64,
    /// Exponent `A` of the CSV bound column `(2n)^-A`.
    #[arg(long, default_value_t = 2.0)]
    exponent: f64,
    /// Range of the Siegel checks.
    #[arg(long, default_value_t = 30)]
    siegel_m: usize,
}

#[derive(Args, Debug, Serialize)]
struct MajorantArgs {
    /// Parameter file `{"K", "M", "R", "r", "epsilon"?}`; overrides the flags.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// `R`, the inverse radius in the premise `|f_a| <= M R^|a|`.
    #[arg(long = "radius-inverse", default_value_t = 1.0)]
    radius_inverse: f64,
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long, default_value_t = 12)]
    degree: u32,
}

#[derive(Args, Debug, Serialize)]
struct NormalizeOptionsArgs {
    /// Keep the hypersurface `w^1 = 0` invariant.
    #[arg(long)]
    hypersurface: bool,
    /// Track the majorant bound with this `K` (needs `--majorant-m` and `--majorant-r`).
    #[arg(long)]
    majorant_k: Option<f64>,
    #[arg(long)]
    majorant_m: Option<f64>,
    #[arg(long)]
    majorant_r: Option<f64>,
}

impl NormalizeOptionsArgs {
    fn options(&self, r: usize) -> Result<NormalizeOptions> {
        let track_majorant = match (self.majorant_k, self.majorant_m, self.majorant_r) {
            (None, None, None) => None,
            (Some(k), Some(m), Some(rad)) => Some(MajorantParams::new(k, m, rad, r)?),
            _ => bail!("--majorant-k, --majorant-m and --majorant-r must be given together"),
        };
        Ok(NormalizeOptions {
            hypersurface: self.hypersurface,
            track_majorant,
            ..Default::default()
        })
    }
}

#[derive(Args, Debug, Serialize)]
struct NormalizeArgs {
    /// Germ-system file.
    #[arg(long)]
    input: PathBuf,
    /// Arithmetic; overrides the file's `mode`.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Truncation degree; overrides the file's `N`.
    #[arg(long)]
    degree: Option<u32>,
    #[command(flatten)]
    options: NormalizeOptionsArgs,
}

#[derive(Args, Debug, Serialize)]
struct ExampleArgs {
    /// deformation_trivial, projective_bundle, resonant_demo or random_diophantine.
    name: String,
    /// Example parameter file; flags override its fields.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    r: Option<usize>,
    #[command(flatten)]
    options: NormalizeOptionsArgs,
}

#[derive(Args, Debug, Serialize)]
struct ScanArgs {
    /// Grid file: `{"tuples": [..]}` or `{"example", "seeds", "params"?}`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 200)]
    scan_bound: u64,
    #[arg(long, default_value_t = 720)]
    torsion_bound: u64,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    degree: Option<u32>,
    /// First seed of an example sweep; overrides the file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScanGrid {
    Tuples {
        tuples: Vec<FlatBundleTuple>,
    },
    Examples {
        example: String,
        seeds: u64,
        #[serde(default)]
        first_seed: u64,
        #[serde(default)]
        params: ExampleParams,
    },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<(T, Vec<u8>)> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    match serde_json::from_slice(&bytes) {
        Ok(v) => Ok((v, bytes)),
        Err(e) => bail!(
            "{}:{}:{}: invalid input: {e}",
            path.display(),
            e.line(),
            e.column()
        ),
    }
}

fn check_degree(n: u32) -> Result<()> {
    if n < 2 {
        bail!("truncation degree must be at least 2, got {n}");
    }
    Ok(())
}

fn check_scan_bound(b: u64) -> Result<()> {
    if b < 1 {
        bail!("scan bound must be at least 1");
    }
    Ok(())
}

#[derive(Serialize)]
struct ClassifyResult {
    tuple: FlatBundleTuple,
    report: flatnorm::bundles::ClassificationReport,
    fitted_exponent: Option<f64>,
    siegel: flatnorm::bundles::SiegelReport,
}

fn run_classify(cli: &Cli, args: &ClassifyArgs) -> Result<Report<ClassifyResult>> {
    check_scan_bound(args.scan_bound)?;
    let (tuple, bytes): (FlatBundleTuple, _) = read_json(&args.input)?;
    let tuple = tuple.validated()?;
    let report = classify(&tuple, args.scan_bound, args.torsion_bound);
    let eps = epsilon_sequence(&tuple, 1.0, args.siegel_m.max(1) as u64);
    let siegel = siegel_check(&eps, args.siegel_m.max(1));
    let outcome = match report.classification {
        Classification::Diophantine { .. } => Outcome::Completed,
        Classification::Torsion { .. } | Classification::Violation { .. } => Outcome::Negative,
    };
    let csv = report.csv(args.exponent);
    Ok(Report {
        command: "classify",
        config_hash: config_hash(cli, &[&bytes])?,
        outcome,
        result: ClassifyResult {
            fitted_exponent: report.fitted_exponent(),
            tuple,
            report,
            siegel,
        },
        csv: Some(csv),
        attachments: vec![],
    })
}

#[derive(Serialize)]
struct CrossCheckSummary {
    max_relative_deviation: f64,
    max_abs_deviation: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct MajorantResult {
    params: MajorantParams,
    series: serde_json::Value,
    cross_check: Option<CrossCheckSummary>,
    plain: flatnorm::majorant::DiagonalBounds,
    hat: flatnorm::majorant::DiagonalBounds,
}

fn run_majorant(cli: &Cli, args: &MajorantArgs) -> Result<Report<MajorantResult>> {
    check_degree(args.degree)?;
    let (params, bytes) = match &args.input {
        Some(path) => {
            let (p, bytes): (MajorantParams, _) = read_json(path)?;
            p.validate()?;
            (p, bytes)
        }
        None => (
            MajorantParams::new(args.k, args.m, args.radius_inverse, args.r)?,
            vec![],
        ),
    };
    let weighted = params.epsilon.is_some();
    let series = if weighted {
        weighted_majorant_series(&params, args.degree)?
    } else {
        majorant_series(&params, args.degree)?
    };
    let cross_check = if weighted {
        None
    } else {
        let c = implicit_cross_check(&params, args.degree)?;
        Some(CrossCheckSummary {
            max_relative_deviation: c.max_relative_deviation,
            max_abs_deviation: c.max_abs_deviation,
            iterations: c.iterations,
        })
    };
    let plain = diagonal_bounds(&series, DiagonalVariant::Plain)?;
    let hat = diagonal_bounds(&series, DiagonalVariant::Hat)?;
    let csv = diagonal_csv(&plain, &hat);
    Ok(Report {
        command: "majorant",
        config_hash: config_hash(cli, &[&bytes])?,
        outcome: Outcome::Completed,
        result: MajorantResult {
            params,
            series: series.to_json(),
            cross_check,
            plain,
            hat,
        },
        csv: Some(csv),
        attachments: vec![],
    })
}

fn outcome_of(report: &NormalizationReport) -> Outcome {
    match report.system_type {
        SystemType::Infinite { .. } => Outcome::Completed,
        SystemType::Finite { .. } => Outcome::Negative,
    }
}

fn run_normalize(cli: &Cli, args: &NormalizeArgs) -> Result<Report<NormalizationReport>> {
    let (mut system, bytes): (SystemJson, _) = read_json(&args.input)?;
    if let Some(n) = args.degree {
        system.max_degree = n;
    }
    check_degree(system.max_degree)?;
    let system = AnySystem::from_json(&system, args.mode.map(Mode::as_str))?;
    let report = system.normalize(&args.options.options(system.r())?)?;
    Ok(Report {
        command: "normalize",
        config_hash: config_hash(cli, &[&bytes])?,
        outcome: outcome_of(&report),
        result: report,
        csv: None,
        attachments: vec![],
    })
}

#[derive(Serialize)]
struct ExampleResult {
    name: String,
    params: ExampleParams,
    system: SystemJson,
    report: NormalizationReport,
}

fn run_example(cli: &Cli, args: &ExampleArgs) -> Result<Report<ExampleResult>> {
    let (mut params, bytes) = match &args.input {
        Some(path) => read_json::<ExampleParams>(path)?,
        None => (ExampleParams::default(), vec![]),
    };
    if let Some(n) = args.degree {
        params.max_degree = n;
    }
    if let Some(s) = args.seed {
        params.seed = s;
    }
    if let Some(r) = args.r {
        params.r = Some(r);
    }
    if let Some(m) = args.mode {
        params.exact = m == Mode::Exact;
    }
    check_degree(params.max_degree)?;
    let system = generate_example(&args.name, &params)?;
    let report = system.normalize(&args.options.options(system.r())?)?;
    let system_json = system.to_json();
    Ok(Report {
        command: "example",
        config_hash: config_hash(cli, &[&bytes])?,
        outcome: outcome_of(&report),
        attachments: vec![("system.json", serde_json::to_value(&system_json)?)],
        result: ExampleResult {
            name: args.name.clone(),
            params,
            system: system_json,
            report,
        },
        csv: None,
    })
}

#[derive(Serialize)]
struct ScanRow {
    index: u64,
    label: String,
    verdict: String,
    value: Option<f64>,
    detail: Option<f64>,
}

#[derive(Serialize)]
struct ScanResult {
    kind: &'static str,
    columns: [&'static str; 5],
    rows: Vec<ScanRow>,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:e}"))
}

fn run_scan(cli: &Cli, args: &ScanArgs) -> Result<Report<ScanResult>> {
    check_scan_bound(args.scan_bound)?;
    let (grid, bytes): (ScanGrid, _) = read_json(&args.input)?;
    let result = match grid {
        ScanGrid::Tuples { tuples } => {
            let tuples = tuples
                .into_iter()
                .map(|t| t.validated())
                .collect::<Result<Vec<_>, _>>()?;
            let rows = tuples
                .par_iter()
                .enumerate()
                .map(|(i, t)| {
                    let rep = classify(t, args.scan_bound, args.torsion_bound);
                    let (verdict, value, detail) = match &rep.classification {
                        Classification::Torsion { order } => {
                            ("torsion".to_string(), Some(*order as f64), None)
                        }
                        Classification::Diophantine {
                            exponent,
                            witness_distance,
                            ..
                        } => (
                            "diophantine".to_string(),
                            Some(*exponent),
                            Some(*witness_distance),
                        ),
                        Classification::Violation { .. } => {
                            ("violation".to_string(), None, Some(0.0))
                        }
                    };
                    ScanRow {
                        index: i as u64,
                        label: format!("g{}r{}", t.genus, t.r()),
                        verdict,
                        value,
                        detail,
                    }
                })
                .collect();
            ScanResult {
                kind: "classify",
                columns: [
                    "index",
                    "label",
                    "class",
                    "exponent_or_order",
                    "witness_distance",
                ],
                rows,
            }
        }
        ScanGrid::Examples {
            example,
            seeds,
            first_seed,
            params,
        } => {
            let first = args.seed.unwrap_or(first_seed);
            let mut params = params;
            if let Some(n) = args.degree {
                params.max_degree = n;
            }
            if let Some(m) = args.mode {
                params.exact = m == Mode::Exact;
            }
            check_degree(params.max_degree)?;
            let rows = (first..first + seeds)
                .into_par_iter()
                .map(|seed| {
                    let p = ExampleParams {
                        seed,
                        ..params.clone()
                    };
                    let system = generate_example(&example, &p)?;
                    let report = system.normalize(&NormalizeOptions::default())?;
                    let min_divisor = report
                        .divisors
                        .iter()
                        .map(|d| d.min_singular_value)
                        .fold(f64::INFINITY, f64::min);
                    Ok(ScanRow {
                        index: seed,
                        label: example.clone(),
                        verdict: report.system_type.to_string(),
                        value: report.residual,
                        detail: min_divisor.is_finite().then_some(min_divisor),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ScanResult {
                kind: "normalize",
                columns: ["seed", "example", "type", "residual", "min_divisor"],
                rows,
            }
        }
    };
    let mut csv = result.columns.join(",");
    csv.push('\n');
    for row in &result.rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.index,
            row.label,
            row.verdict,
            fmt_opt(row.value),
            fmt_opt(row.detail)
        ));
    }
    Ok(Report {
        command: "scan",
        config_hash: config_hash(cli, &[&bytes])?,
        outcome: Outcome::Completed,
        result,
        csv: Some(csv),
        attachments: vec![],
    })
}

fn run(cli: &Cli) -> Result<Outcome> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()?;
    }
    let out = cli.out.as_deref();
    macro_rules! emit {
        ($report:expr) => {{
            let report = $report?;
            report.emit(out)?;
            Ok(report.outcome)
        }};
    }
    match &cli.command {
        Command::Classify(a) => emit!(run_classify(cli, a)),
        Command::Majorant(a) => emit!(run_majorant(cli, a)),
        Command::Normalize(a) => emit!(run_normalize(cli, a)),
        Command::Example(a) => emit!(run_example(cli, a)),
        Command::Scan(a) => emit!(run_scan(cli, a)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
