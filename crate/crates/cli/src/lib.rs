//! Library half of the `depsi` binary: argument types, CSV ingestion and the
//! command implementations. Every command renders into a byte buffer first so
//! that equal configurations always produce identical output.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use depsi_core::measures::DependenceFunctionals;
use depsi_core::model::DEFAULT_GRID;
use depsi_core::selection::DEFAULT_IMPROVEMENT_THRESHOLD;
use depsi_core::{
    closed_form_measures, estimate_psi, grid_sup_distance, measure_report, psi_closed_form, sample,
    select_features, Dataset, FamilySpec, GridCopula, MeasureReport, PsiClosedForm, SeedSpec,
    SelectionTrace, Variant,
};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] depsi_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric_degeneracy() => EXIT_DEGENERATE,
            _ => EXIT_INPUT,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "depsi",
    version,
    about = "Directed dependence measures via the psi copula transform"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a sample from a copula family and write it as CSV.
    Simulate(SimulateArgs),
    /// Rank estimates T_n, R²_n and Q_n for a CSV dataset.
    Estimate(DataArgs),
    /// Footrule, rho and gamma of an estimated or closed-form psi.
    Measures(SourceArgs),
    /// Greedy forward selection of predictors by T_n.
    Featsel(FeatselArgs),
    /// Closed-form psi image and population measures of a family.
    Family(FamilyArgs),
    /// psi on the (N+1)×(N+1) grid, estimated from data or closed form.
    PsiGrid(SourceArgs),
    /// Sup-distance of estimated to exact psi over sample sizes and replicates.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Base seed for sampling and tie-breaking.
    #[arg(long, env = "DEPSI_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub family: FamilySpec,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Columns {
    #[arg(long)]
    pub input: PathBuf,
    /// Response column name.
    #[arg(long)]
    pub y: String,
    /// Predictor column names; all non-response columns when absent.
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[command(flatten)]
    pub columns: Columns,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    #[arg(long, required_unless_present = "family")]
    pub input: Option<PathBuf>,
    #[arg(long, requires = "input")]
    pub y: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<String>>,
    #[arg(long, conflicts_with_all = ["input", "y", "x"])]
    pub family: Option<FamilySpec>,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FeatselArgs {
    #[command(flatten)]
    pub columns: Columns,
    #[arg(long, default_value_t = DEFAULT_IMPROVEMENT_THRESHOLD)]
    pub threshold: f64,
    /// Stop after this many selected variables.
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    #[arg(long)]
    pub family: FamilySpec,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long)]
    pub family: FamilySpec,
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    #[command(flatten)]
    pub common: Common,
}

/// Parses the arguments, runs the command and writes its output.
pub fn run(cli: Cli) -> Result<()> {
    let (bytes, out) = match cli.command {
        Command::Simulate(a) => {
            let ds = sample(&a.family, a.n, SeedSpec::new(a.common.seed))?;
            (render_dataset(&ds)?, a.common.out)
        }
        Command::Estimate(a) => {
            let ds = read_dataset(&a.columns)?;
            let report = cmd_estimate(&ds, SeedSpec::new(a.common.seed))?;
            (render_record(&report, a.common.format)?, a.common.out)
        }
        Command::Measures(a) => {
            let report = cmd_measures(&a)?;
            (render_record(&report, a.common.format)?, a.common.out)
        }
        Command::Featsel(a) => {
            let ds = read_dataset(&a.columns)?;
            let trace = cmd_featsel(&ds, SeedSpec::new(a.common.seed), a.threshold, a.max_steps)?;
            (render_trace(&trace, a.common.format)?, a.common.out)
        }
        Command::Family(a) => {
            let report = cmd_family(&a.family)?;
            (render_json(&report)?, a.common.out)
        }
        Command::PsiGrid(a) => {
            let grid = cmd_psi_grid(&a)?;
            (render_grid(&grid, a.common.format)?, a.common.out)
        }
        Command::Convergence(a) => {
            let rows = cmd_convergence(
                &a.family,
                &a.sizes,
                a.reps,
                a.grid,
                SeedSpec::new(a.common.seed),
            )?;
            let bytes = match a.common.format {
                Some(Format::Json) => render_json(&rows)?,
                _ => render_rows(&rows)?,
            };
            (bytes, a.common.out)
        }
    };
    emit(&bytes, out.as_deref())
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|source| io_error(path, source)),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn io_error(path: &Path, source: io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a headed numeric CSV and picks the response and predictor columns.
pub fn read_dataset(columns: &Columns) -> Result<Dataset> {
    let mut text = String::new();
    File::open(&columns.input)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| io_error(&columns.input, e))?;
    parse_dataset(&text, &columns.y, columns.x.as_deref())
}

pub fn parse_dataset(text: &str, y: &str, x: Option<&[String]>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let locate = |name: &str, role: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Input(format!(
                "{role} column `{name}` not found; available columns: {}",
                header.join(", ")
            ))
        })
    };
    let y_at = locate(y, "response")?;
    let x_at: Vec<usize> = match x {
        Some(names) => names
            .iter()
            .map(|n| locate(n, "predictor"))
            .collect::<Result<_>>()?,
        None => (0..header.len()).filter(|&j| j != y_at).collect(),
    };
    if x_at.contains(&y_at) {
        return Err(CliError::Input(format!(
            "column `{y}` cannot be both response and predictor"
        )));
    }

    let d = x_at.len();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let row = k + 1;
        let cell = |j: usize| -> Result<f64> {
            let raw = record.get(j).unwrap_or("").trim();
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::Input(format!(
                    "row {row}, column `{}`: expected a finite number, found `{raw}`",
                    header[j]
                ))),
            }
        };
        for &j in &x_at {
            xs.push(cell(j)?);
        }
        ys.push(cell(y_at)?);
    }
    let names = x_at
        .iter()
        .chain([&y_at])
        .map(|&j| header[j].clone())
        .collect();
    Ok(Dataset::from_flat(xs, d, ys)?.with_column_names(names)?)
}

pub fn cmd_estimate(ds: &Dataset, seed: SeedSpec) -> Result<MeasureReport> {
    Ok(measure_report(ds, seed)?)
}

pub fn cmd_featsel(
    ds: &Dataset,
    seed: SeedSpec,
    threshold: f64,
    max_steps: Option<usize>,
) -> Result<SelectionTrace> {
    Ok(select_features(
        ds,
        seed,
        threshold,
        max_steps.unwrap_or(ds.d()),
    )?)
}

/// Functionals of ψ, the image parameters when the family has them, and the
/// population measures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub family: FamilySpec,
    pub psi: PsiClosedForm,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_star: Option<f64>,
    pub t: f64,
    pub r2: f64,
    pub q: f64,
    /// `closed_form`, or `grid` when the measures come from a 400-grid.
    pub measures_source: &'static str,
}

pub fn cmd_family(family: &FamilySpec) -> Result<FamilyReport> {
    let psi = psi_closed_form(family)?;
    let (r_star, alpha_star, beta_star) = match psi {
        PsiClosedForm::Gaussian { r_star } => (Some(r_star), None, None),
        PsiClosedForm::MarshallOlkin { alpha, beta } => (None, Some(alpha), Some(beta)),
        PsiClosedForm::Frechet {
            alpha_star,
            beta_star,
        } => (None, Some(alpha_star), Some(beta_star)),
        PsiClosedForm::Efgm { alpha_star } => (None, Some(alpha_star), None),
        PsiClosedForm::Independence | PsiClosedForm::MarshallOlkinImage { .. } => {
            (None, None, None)
        }
    };
    let (t, r2, q, measures_source) = match closed_form_measures(family) {
        Ok(m) => (m.t, m.r2, m.q, "closed_form"),
        Err(depsi_core::Error::NoClosedForm(_)) => {
            let grid = psi.grid(400)?;
            (
                grid.footrule(),
                grid.spearman_rho(),
                grid.gini_gamma(),
                "grid",
            )
        }
        Err(e) => return Err(e.into()),
    };
    Ok(FamilyReport {
        family: *family,
        psi,
        r_star,
        alpha_star,
        beta_star,
        t,
        r2,
        q,
        measures_source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub footrule: f64,
    pub spearman_rho: f64,
    pub gini_gamma: f64,
}

/// Functionals of the step-exact D_n for data, or of the N-grid for a family.
pub fn cmd_measures(a: &SourceArgs) -> Result<FunctionalReport> {
    let seed = SeedSpec::new(a.common.seed);
    let functionals: Box<dyn DependenceFunctionals> = match source(a)? {
        Source::Data(ds) => Box::new(estimate_psi(&ds, seed, Variant::DStar)?),
        Source::Family(f) => Box::new(psi_closed_form(&f)?.grid(a.grid)?),
    };
    Ok(FunctionalReport {
        footrule: functionals.footrule(),
        spearman_rho: functionals.spearman_rho(),
        gini_gamma: functionals.gini_gamma(),
    })
}

pub fn cmd_psi_grid(a: &SourceArgs) -> Result<GridCopula> {
    match source(a)? {
        Source::Data(ds) => {
            Ok(estimate_psi(&ds, SeedSpec::new(a.common.seed), Variant::DStar)?.to_grid(a.grid)?)
        }
        Source::Family(f) => Ok(psi_closed_form(&f)?.grid(a.grid)?),
    }
}

enum Source {
    Data(Dataset),
    Family(FamilySpec),
}

fn source(a: &SourceArgs) -> Result<Source> {
    match (&a.input, &a.family) {
        (Some(input), None) => {
            let y =
                a.y.clone()
                    .ok_or_else(|| CliError::Input("--y is required with --input".into()))?;
            Ok(Source::Data(read_dataset(&Columns {
                input: input.clone(),
                y,
                x: a.x.clone(),
            })?))
        }
        (None, Some(f)) => Ok(Source::Family(*f)),
        _ => Err(CliError::Input(
            "give exactly one of --input and --family".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub replicate: usize,
    pub d_infty: f64,
}

/// One row per (size, replicate). Replicate `k` at size `n` uses the seed
/// `seed.derive((n << 32) | k)`, so rows do not depend on the schedule or on
/// which other sizes are requested.
pub fn cmd_convergence(
    family: &FamilySpec,
    sizes: &[usize],
    reps: usize,
    grid: usize,
    seed: SeedSpec,
) -> Result<Vec<ConvergenceRow>> {
    if reps == 0 {
        return Err(CliError::Input("--reps must be at least 1".into()));
    }
    if let Some(&n) = sizes.iter().find(|&&n| n < 2) {
        return Err(CliError::Input(format!("sample size {n} is below 2")));
    }
    let exact = psi_closed_form(family)?.grid(grid)?;
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let jobs: Vec<(usize, usize)> = sizes
        .iter()
        .flat_map(|&n| (0..reps).map(move |k| (n, k)))
        .collect();
    jobs.into_par_iter()
        .map(|(n, replicate)| {
            let sub = seed.derive(((n as u64) << 32) | replicate as u64);
            let ds = sample(family, n, sub)?;
            let estimate = estimate_psi(&ds, sub, Variant::DStar)?.to_grid(grid)?;
            Ok(ConvergenceRow {
                n,
                replicate,
                d_infty: grid_sup_distance(&estimate, &exact)?,
            })
        })
        .collect()
}

pub fn render_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Serializes records as CSV with a header row. Floats use Rust's shortest
/// round-trip formatting, so parsing the file back gives identical bits.
pub fn render_rows<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn render_record<T: Serialize>(record: &T, format: Option<Format>) -> Result<Vec<u8>> {
    match format {
        Some(Format::Csv) => render_rows(std::slice::from_ref(record)),
        _ => render_json(record),
    }
}

/// Predictor columns are `x1..xd` unless the dataset carries names.
pub fn render_dataset(ds: &Dataset) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = match ds.column_names() {
        Some(names) => names.to_vec(),
        None => (1..=ds.d())
            .map(|j| format!("x{j}"))
            .chain(["y".to_owned()])
            .collect(),
    };
    writer.write_record(&header)?;
    for i in 0..ds.n() {
        let row = ds.row(i).iter().chain([&ds.y()[i]]).map(|v| v.to_string());
        writer.write_record(row)?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::Input(e.to_string()))
}

#[derive(Serialize)]
struct GridNode {
    s: f64,
    t: f64,
    value: f64,
}

#[derive(Serialize)]
struct GridJson<'a> {
    resolution: usize,
    values: &'a [f64],
}

/// Long format `s,t,value`, row-major in s.
pub fn render_grid(grid: &GridCopula, format: Option<Format>) -> Result<Vec<u8>> {
    match format {
        Some(Format::Json) => render_json(&GridJson {
            resolution: grid.resolution(),
            values: grid.values(),
        }),
        _ => {
            let nodes: Vec<GridNode> = grid
                .nodes()
                .map(|(s, t, value)| GridNode { s, t, value })
                .collect();
            render_rows(&nodes)
        }
    }
}

#[derive(Serialize)]
struct TraceRow<'a> {
    position: usize,
    variable: &'a str,
    t: f64,
    r2: f64,
}

/// Text table by default, JSON or CSV on request.
pub fn render_trace(trace: &SelectionTrace, format: Option<Format>) -> Result<Vec<u8>> {
    match format {
        Some(Format::Json) => render_json(trace),
        Some(Format::Csv) => {
            let labels: Vec<String> = trace
                .steps
                .iter()
                .map(|s| {
                    s.name
                        .clone()
                        .unwrap_or_else(|| format!("x{}", s.column + 1))
                })
                .collect();
            let rows: Vec<TraceRow> = trace
                .steps
                .iter()
                .zip(&labels)
                .enumerate()
                .map(|(k, (s, label))| TraceRow {
                    position: k + 1,
                    variable: label,
                    t: s.t,
                    r2: s.r2,
                })
                .collect();
            render_rows(&rows)
        }
        None => Ok(trace.to_string().into_bytes()),
    }
}
