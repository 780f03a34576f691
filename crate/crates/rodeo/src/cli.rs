//! Command-line interface. Results go to the output stream or `--output`,
//! diagnostics to stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rodeo_core::baselines::ApInterpolation;
use rodeo_core::evaluate::{parse_threshold_label, EvalConfig};
use rodeo_core::synthetic::{synthetic_dataset, SyntheticConfig};

use crate::io::{default_class_names, load_dataset, pair_datasets, render_dataset, DatasetFile, Format};
use crate::report::{render_json, render_table};
use crate::sweep::{from_long, par_run_sweep, parse_grid, parse_range, parse_sweep_table, render_summary, render_sweep_table, to_long};

#[derive(Debug, Parser)]
#[command(name = "rodeo", version, about = "Object detection metrics: RoDeO, acc@IoU, AP and mAP")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score predictions against targets.
    Evaluate(EvaluateArgs),
    /// Run a corruption grid on oracle predictions derived from targets.
    Sweep(SweepArgs),
    /// Reshape a sweep table into long format for plotting.
    Report(ReportArgs),
    /// Write a synthetic class-balanced targets file.
    Synth(SynthArgs),
    /// Convert a dataset file between formats.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub targets: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    /// canonical-json, coco-corner-json or csv; guessed from the extension
    /// when absent.
    #[arg(long)]
    pub format: Option<Format>,
    /// Class vocabulary in id order. CSV files otherwise take their
    /// classes from the rows, sorted by name.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    /// Format of the predictions file when it differs from the targets.
    #[arg(long)]
    pub predictions_format: Option<Format>,
    /// Comma-separated IoU thresholds for acc@t and AP@t, as fractions or
    /// whole percents.
    #[arg(long, value_delimiter = ',', default_value = "0.3")]
    pub acc_thresholds: Vec<String>,
    /// mAP thresholds as `lo:hi:step`.
    #[arg(long, default_value = "0.1:0.7:0.1")]
    pub map_thresholds: String,
    /// 11-point interpolated AP instead of the all-point envelope.
    #[arg(long)]
    pub eleven_point: bool,
    /// Skip AP and mAP, for predictions without confidences.
    #[arg(long)]
    pub no_ap: bool,
    #[arg(long)]
    pub per_class: bool,
    #[arg(long)]
    pub json: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub targets: PathBuf,
    /// Grid file (JSON).
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long)]
    pub format: Option<Format>,
    /// Class vocabulary in id order, for CSV targets.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    /// Overrides the grid's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the grid's number of runs.
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write per-axis marginals here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Sweep table written by `rodeo sweep`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Read a long-format file and write the sweep table back.
    #[arg(long)]
    pub wide: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub images: usize,
    #[arg(long, default_value_t = 8)]
    pub classes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "canonical-json")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub from: Option<Format>,
    #[arg(long)]
    pub to: Format,
    /// Class vocabulary in id order. CSV files otherwise take their
    /// classes from the rows, sorted by name.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => out.write_all(text.as_bytes()).context("writing output"),
    }
}

fn format_of(explicit: Option<Format>, path: &Path) -> Format {
    explicit.unwrap_or_else(|| Format::from_path(path))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Evaluate(a) => evaluate(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Report(a) => report(a, out),
        Command::Synth(a) => synth(a, out),
        Command::Convert(a) => convert(a, out),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    execute(Cli::try_parse_from(args)?, out)
}

fn evaluate(a: EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let mut thresholds = Vec::new();
    for s in &a.acc_thresholds {
        match parse_threshold_label(s.trim()) {
            Some(t) => thresholds.push(t),
            None => bail!("invalid IoU threshold `{s}` in --acc-thresholds"),
        }
    }
    let map_thresholds = parse_range(&a.map_thresholds).map_err(|m| anyhow::anyhow!("--map-thresholds: {m}"))?;
    let config = EvalConfig {
        thresholds,
        map_thresholds,
        interpolation: if a.eleven_point { ApInterpolation::ElevenPoint } else { ApInterpolation::AllPoint },
        average_precision: !a.no_ap,
        ..Default::default()
    };

    let tf = format_of(a.format, &a.targets);
    let targets = load_dataset(&a.targets, tf, a.classes.as_deref())?;
    let pf = a.predictions_format.or(a.format).unwrap_or_else(|| Format::from_path(&a.predictions));
    let predictions = load_dataset(&a.predictions, pf, Some(&targets.classes))?;
    let dataset = pair_datasets(&targets, &predictions)?;
    let report = crate::par_evaluate(&dataset, &config).map_err(|e| match e {
        rodeo_core::EvalError::MissingConfidence(id) => {
            anyhow::anyhow!("prediction without confidence in image `{id}`; AP needs scores (pass --no-ap to skip AP and mAP)")
        }
        e => e.into(),
    })?;

    let text =
        if a.json { render_json(&report, &targets.classes, a.per_class) } else { render_table(&report, &targets.classes, a.per_class) };
    emit(out, a.output.as_deref(), &text)
}

fn sweep(a: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let grid_file = a.grid.display().to_string();
    let mut grid = parse_grid(&grid_file, &read(&a.grid)?)?;
    if let Some(seed) = a.seed {
        grid.points.iter_mut().for_each(|p| p.seed = seed);
    }
    if let Some(runs) = a.runs {
        if runs == 0 {
            bail!("--runs must be at least 1");
        }
        grid.config.runs = runs;
    }
    let targets = load_dataset(&a.targets, format_of(a.format, &a.targets), a.classes.as_deref())?;
    let empty = DatasetFile { classes: targets.classes.clone(), images: Vec::new() };
    let dataset = pair_datasets(&targets, &empty)?;
    let rows = par_run_sweep(&dataset, &grid.points, &grid.config)?;
    if let Some(path) = &a.summary {
        fs::write(path, render_summary(&rows, &grid.axes)).with_context(|| format!("writing {}", path.display()))?;
    }
    emit(out, a.output.as_deref(), &render_sweep_table(&rows, &grid.axes))
}

fn report(a: ReportArgs, out: &mut dyn Write) -> Result<()> {
    let text = read(&a.input)?;
    let name = a.input.display();
    let reshaped = if a.wide {
        let table = from_long(&text).map_err(|m| anyhow::anyhow!("{name}: {m}"))?;
        crate::sweep::render_table(&table)
    } else {
        to_long(&parse_sweep_table(&text).map_err(|m| anyhow::anyhow!("{name}: {m}"))?)
    };
    emit(out, a.output.as_deref(), &reshaped)
}

fn synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    if a.images == 0 || a.classes == 0 {
        bail!("--images and --classes must be positive");
    }
    let config = SyntheticConfig { images: a.images, num_classes: a.classes, ..Default::default() };
    let dataset = synthetic_dataset(&config, a.seed);
    let file = DatasetFile::targets_of(&dataset, default_class_names(a.classes));
    emit(out, a.output.as_deref(), &render_dataset(&file, a.format))
}

fn convert(a: ConvertArgs, out: &mut dyn Write) -> Result<()> {
    let file = load_dataset(&a.input, format_of(a.from, &a.input), a.classes.as_deref())?;
    emit(out, a.output.as_deref(), &render_dataset(&file, a.to))
}
