//! Command-line surface.
//!
//! Exit status is 0 on success, 1 for unreadable or malformed input files and
//! 2 when a spec, recipe or run parameter is invalid.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::geometry::{Polyline2D, Polyline3D};
use crate::io::{
    parse_centerline, read_recipe, read_spec, synth_track, write_centerline, write_series,
    Centerline, IoError, SpecFile,
};
use crate::optimizer::CostBreakdown;
use crate::pipeline::{prepare, report_for, run_many, segment};
use crate::report::{export_series, geometry_report, ComparisonTable, GeometryReport, KeyMeasures};
use crate::Error;

#[derive(Debug, Parser)]
#[command(
    name = "bobtrack",
    version,
    about = "Generate 3D bobsleigh track centerlines from planar ones"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize elevations for a planar centerline.
    Generate(GenerateArgs),
    /// Print the geometry report of a 3D centerline.
    Analyze(AnalyzeArgs),
    /// Tabulate relative errors of generated tracks against a reference.
    Compare(CompareArgs),
    /// Write height, slope and curvature series of a 3D centerline.
    PlotData(PlotDataArgs),
    /// Sample a planar centerline from a primitive recipe.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Planar centerline CSV (`x,y`).
    #[arg(long)]
    pub input: PathBuf,
    /// Run spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output 3D centerline CSV; with several runs, `<stem>_<k>.<ext>`.
    #[arg(long)]
    pub output: PathBuf,
    /// Seed of the first run; defaults to the spec's optimizer seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    /// Override the spec's segment count.
    #[arg(long)]
    pub segments: Option<usize>,
    /// Optimize the planar scale factor as well.
    #[arg(long)]
    pub scaled: bool,
    /// Write the per-run JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// 3D centerline CSV (`x,y,z`).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Reference track: a 3D centerline CSV or a JSON report.
    #[arg(long)]
    pub reference: PathBuf,
    /// Spec used to segment CSV inputs.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Generated tracks: 3D centerline CSVs or JSON reports.
    #[arg(required = true)]
    pub generated: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotDataArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Recipe JSON.
    #[arg(long)]
    pub recipe: PathBuf,
    /// Output planar centerline CSV.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = crate::geometry::DEFAULT_SPACING)]
    pub spacing: f64,
    /// Also write the ground-truth 3D centerline (requires per-primitive slopes).
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

/// An error paired with the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(e: impl std::fmt::Display) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }

    fn invalid(e: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(io) => io.into(),
            other => Self::invalid(other),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Invalid { .. } => Self::invalid(e),
            other => Self::input(other),
        }
    }
}

/// Parses arguments, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Analyze(args) => analyze(args),
        Command::Compare(args) => compare(args),
        Command::PlotData(args) => plot_data(args),
        Command::Synth(args) => synth(args),
    }
}

fn read_planar(path: &Path) -> Result<Polyline2D, CliError> {
    match parse_centerline(path)? {
        Centerline::Planar(l) => Ok(l),
        Centerline::Spatial(_) => Err(CliError::input(format!(
            "{}: expected a planar `x,y` centerline",
            path.display()
        ))),
    }
}

fn read_spatial(path: &Path) -> Result<Polyline3D, CliError> {
    match parse_centerline(path)? {
        Centerline::Spatial(l) => Ok(l),
        Centerline::Planar(_) => Err(CliError::input(format!(
            "{}: expected a 3D `x,y,z` centerline",
            path.display()
        ))),
    }
}

/// `out.csv` with k = 2 becomes `out_2.csv`.
pub fn run_output_path(base: &Path, k: usize) -> PathBuf {
    let stem = base.file_stem().unwrap_or_default().to_string_lossy();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{k}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{k}"),
    };
    base.with_file_name(name)
}

#[derive(Debug, Serialize)]
struct RunSummary {
    seed: u64,
    output: PathBuf,
    converged: bool,
    iterations: usize,
    final_cost: CostBreakdown,
    #[serde(skip_serializing_if = "Option::is_none")]
    recovered_scale: Option<f64>,
    scale_clamped: bool,
    report: GeometryReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
}

#[derive(Debug, Serialize)]
struct GenerateSummary {
    runs: Vec<RunSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let raw = read_planar(&args.input)?;
    let mut spec = read_spec(&args.spec)?;
    if let Some(s) = args.segments {
        spec.segment_count = Some(s);
    }
    spec.scaled |= args.scaled;
    spec.validate()?;
    let seed = args.seed.unwrap_or(spec.optimizer.seed);
    let runs = args.runs as usize;

    let prepared = prepare(raw.points(), &spec)?;
    let results = run_many(&prepared, &spec, seed, runs);

    let mut summaries = Vec::with_capacity(runs);
    let mut table = ComparisonTable::new("Target", KeyMeasures::from(&spec.targets));
    for (k, result) in results.into_iter().enumerate() {
        let result = result?;
        let output = if runs == 1 {
            args.output.clone()
        } else {
            run_output_path(&args.output, k + 1)
        };
        write_centerline(&Centerline::Spatial(result.centerline.clone()), &output)?;
        let report = report_for(&result, &spec)?;
        table
            .push(format!("Generated track {}", k + 1), report.key_measures())
            .map_err(CliError::invalid)?;
        let warning = (!result.converged).then(|| {
            format!(
                "run did not converge within {} iterations",
                spec.optimizer.max_iterations
            )
        });
        if let Some(w) = &warning {
            eprintln!("warning: seed {}: {w}", seed + k as u64);
        }
        summaries.push(RunSummary {
            seed: seed + k as u64,
            output,
            converged: result.converged,
            iterations: result.iterations,
            final_cost: result.final_cost,
            recovered_scale: result.recovered_scale,
            scale_clamped: result.scale_clamped,
            report,
            warning,
        });
    }
    let unconverged = summaries.iter().filter(|s| !s.converged).count();
    let summary = GenerateSummary {
        warning: (unconverged > 0)
            .then(|| format!("{unconverged} of {runs} runs did not converge")),
        runs: summaries,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    match &args.report {
        Some(path) => {
            std::fs::write(path, json + "\n").map_err(|e| {
                CliError::input(IoError::Io {
                    path: path.clone(),
                    source: e,
                })
            })?;
            println!("{table}");
        }
        None => println!("{json}"),
    }
    Ok(())
}

/// Segments the planar projection of a generated centerline and measures it.
fn measure(line: &Polyline3D, spec: &SpecFile) -> Result<GeometryReport, CliError> {
    let prepared = segment(line.projection().map_err(CliError::input)?, spec)?;
    geometry_report(line, &prepared.partition, &spec.targets).map_err(CliError::invalid)
}

fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let line = read_spatial(&args.input)?;
    let spec = read_spec(&args.spec)?;
    let report = measure(&line, &spec)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(())
}

fn key_measures(path: &Path, spec: Option<&SpecFile>) -> Result<KeyMeasures, CliError> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::input(IoError::Io {
                path: path.to_path_buf(),
                source: e,
            })
        })?;
        return serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())));
    }
    let spec = spec.ok_or_else(|| {
        CliError::invalid(format!(
            "{}: --spec is required to measure CSV centerlines",
            path.display()
        ))
    })?;
    Ok(measure(&read_spatial(path)?, spec)?.key_measures())
}

fn compare(args: CompareArgs) -> Result<(), CliError> {
    let spec = args.spec.as_deref().map(read_spec).transpose()?;
    let reference = key_measures(&args.reference, spec.as_ref())?;
    let mut table = ComparisonTable::new("Reference track", reference);
    for (k, path) in args.generated.iter().enumerate() {
        let generated = key_measures(path, spec.as_ref())?;
        table
            .push(format!("Generated track {}", k + 1), generated)
            .map_err(CliError::invalid)?;
    }
    println!("{table}");
    Ok(())
}

fn plot_data(args: PlotDataArgs) -> Result<(), CliError> {
    let line = read_spatial(&args.input)?;
    let spec = read_spec(&args.spec)?;
    let prepared = segment(line.projection().map_err(CliError::input)?, &spec)?;
    let series = export_series(&line, &prepared.partition, &prepared.curvature)
        .map_err(CliError::invalid)?;
    write_series(&series, &args.output_dir)?;
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let recipe = read_recipe(&args.recipe)?;
    let track = synth_track(&recipe, args.spacing)?;
    write_centerline(&Centerline::Planar(track.line), &args.output)?;
    if let Some(path) = &args.truth {
        let truth = track.ground_truth.ok_or_else(|| {
            CliError::invalid("recipe has no per-primitive slopes, so there is no ground truth")
        })?;
        write_centerline(&Centerline::Spatial(truth), path)?;
    }
    Ok(())
}
