//! Command-line driver: dataset generation, training, sampling, evaluation,
//! and SVG figures.
//!
//! Every command resolves its parameters as defaults < config file < flags,
//! writes its primary output plus a fully-resolved `*.config.json` sibling,
//! and is byte-for-byte reproducible given the same inputs and seeds.
//! Exit codes: 0 success, 1 usage error, 2 runtime/divergence error. Log
//! verbosity comes from `RUST_LOG` (error/warn/info/debug).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::data::{read_dataset, spiral_generate, write_dataset, PriorSpec, SpiralSpec};
use crate::error::{Error, Result};
use crate::eval::{evaluate, DEFAULT_VALIDITY_THRESHOLD};
use crate::io::sha256_hex;
use crate::nnet::ScalarField;
use crate::plot::{quiver_svg, scatter_svg, DEFAULT_QUIVER_GRID};
use crate::sampling::{
    sample_batch, ChainInit, GeometricSchedule, SampleSet, SamplerKind, SamplerSpec,
    DEFAULT_ASCENT_EPS, DEFAULT_GENERATION_EPS, DEFAULT_GENERATION_STEPS,
};
use crate::training::{train_com, Checkpoint, TrainConfig, TrainVariant};

#[derive(Debug, Parser)]
#[command(
    name = "coms",
    version,
    about = "Conservative objective models on a 2D spiral benchmark"
)]
pub struct Cli {
    /// JSON run-config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the spiral dataset (optionally with a figure).
    Data(DataArgs),
    /// Train a surrogate/energy model or the external oracle.
    Train(TrainArgs),
    /// Draw samples from a trained model.
    Sample(SampleArgs),
    /// Score a sample file against the ground truth.
    Eval(EvalArgs),
    /// Emit SVG figures.
    #[command(subcommand)]
    Plot(PlotCommand),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Number of points.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gaussian jitter around the spiral centerline.
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// Output dataset path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a scatter figure of the dataset.
    #[arg(long, value_name = "SVG")]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Original,
    Stochastic,
    Oracle,
}

impl From<VariantArg> for TrainVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Original => TrainVariant::Original,
            VariantArg::Stochastic => TrainVariant::Stochastic,
            VariantArg::Oracle => TrainVariant::OracleOnly,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Input dataset path.
    #[arg(long)]
    pub data: PathBuf,
    /// Output checkpoint path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-epoch metrics log path (default: <out>.metrics.json).
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Regulariser weight; the oracle variant forces 0.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Contrastive-divergence chain length.
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerChoice {
    Ascent,
    Langevin,
    Tilted,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Trained model checkpoint.
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Oracle checkpoint (required by --sampler tilted).
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerChoice>,
    /// Number of chains / samples.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Chain length.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Langevin noise schedule endpoints.
    #[arg(long)]
    pub sched_start: Option<f64>,
    #[arg(long)]
    pub sched_end: Option<f64>,
    /// Gradient-ascent step size.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Tilt weight toward high oracle reward.
    #[arg(long)]
    pub w: Option<f64>,
    #[arg(long)]
    pub prior_low: Option<f64>,
    #[arg(long)]
    pub prior_high: Option<f64>,
    /// Output samples path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Samples file produced by `coms sample`.
    #[arg(long)]
    pub samples: PathBuf,
    /// Validity distance threshold.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Output report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum PlotCommand {
    /// Dataset points over the reward heatmap, plus optional samples.
    Scatter {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Vector field of the model gradient.
    Quiver {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Sampler settings as they appear in the run-config file; a flat mirror of
/// [`SamplerSpec`] that flags can override field by field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    pub sampler: SamplerChoice,
    pub n: usize,
    pub steps: usize,
    pub sched_start: f64,
    pub sched_end: f64,
    pub eps: f64,
    pub w: f64,
    pub prior_low: f64,
    pub prior_high: f64,
    pub seed: u64,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            sampler: SamplerChoice::Langevin,
            n: 256,
            steps: DEFAULT_GENERATION_STEPS,
            sched_start: DEFAULT_GENERATION_EPS.0,
            sched_end: DEFAULT_GENERATION_EPS.1,
            eps: DEFAULT_ASCENT_EPS,
            w: 0.0,
            prior_low: PriorSpec::default().low,
            prior_high: PriorSpec::default().high,
            seed: 0,
        }
    }
}

impl SamplerSettings {
    fn to_spec(self) -> Result<SamplerSpec> {
        let sampler = match self.sampler {
            SamplerChoice::Ascent => SamplerKind::GradientAscent {
                eps: self.eps,
                steps: self.steps,
            },
            SamplerChoice::Langevin => SamplerKind::Langevin {
                schedule: GeometricSchedule::new(self.sched_start, self.sched_end, self.steps)?,
            },
            SamplerChoice::Tilted => SamplerKind::TiltedLangevin {
                schedule: GeometricSchedule::new(self.sched_start, self.sched_end, self.steps)?,
                tilt_weight: self.w,
            },
        };
        Ok(SamplerSpec {
            sampler,
            init: ChainInit::Prior(PriorSpec {
                low: self.prior_low,
                high: self.prior_high,
            }),
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub tau: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            tau: DEFAULT_VALIDITY_THRESHOLD,
        }
    }
}

/// Optional run-config file; sections mirror the library specs and unknown
/// keys are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub spiral: Option<SpiralSpec>,
    pub train: Option<TrainConfig>,
    pub sampler: Option<SamplerSettings>,
    pub eval: Option<EvalSettings>,
    pub outputs: Option<OutputPaths>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub samples: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub figure: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn outputs(&self) -> OutputPaths {
        self.outputs.clone().unwrap_or_default()
    }
}

/// Parses argv, runs the command, and reports the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = std::error::Error::source(&e);
            while let Some(c) = cause {
                eprintln!("  caused by: {c}");
                cause = c.source();
            }
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Data(args) => cmd_data(&config, args),
        Command::Train(args) => cmd_train(&config, args),
        Command::Sample(args) => cmd_sample(&config, args),
        Command::Eval(args) => cmd_eval(&config, args),
        Command::Plot(args) => cmd_plot(&config, args),
    }
}

fn require_out(flag: Option<&PathBuf>, from_config: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.cloned()
        .or(from_config)
        .ok_or_else(|| Error::Usage(format!("--out is required for {what}")))
}

/// `d.json -> d.config.json`: the fully-resolved parameters of a run live
/// next to its primary output.
fn resolved_config_path(out: &Path) -> PathBuf {
    out.with_extension("config.json")
}

fn write_resolved_config(out: &Path, value: serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    fs::write(resolved_config_path(out), text)?;
    Ok(())
}

pub fn cmd_data(config: &RunConfig, args: &DataArgs) -> Result<()> {
    let mut spec = config.spiral.unwrap_or_default();
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(noise) = args.noise_std {
        spec.noise_std = noise;
    }
    let out = require_out(args.out.as_ref(), config.outputs().dataset, "data")?;

    let points = spiral_generate(&spec)?;
    write_dataset(&out, &points)?;
    write_resolved_config(
        &out,
        json!({ "command": "data", "spiral": spec, "out": out, "plot": args.plot }),
    )?;
    if let Some(figure) = &args.plot {
        fs::write(figure, scatter_svg(&points, &[]))?;
    }
    println!("wrote {} points to {}", points.len(), out.display());
    Ok(())
}

pub fn cmd_train(config: &RunConfig, args: &TrainArgs) -> Result<()> {
    let mut train = config.train.unwrap_or_default();
    if let Some(variant) = args.variant {
        train.variant = variant.into();
        if train.variant == TrainVariant::OracleOnly && args.alpha.is_none() {
            train.alpha = 0.0;
        }
    }
    if let Some(alpha) = args.alpha {
        train.alpha = alpha;
    }
    if let Some(k) = args.k {
        train.cd_steps = k;
    }
    if let Some(epochs) = args.epochs {
        train.epochs = epochs;
    }
    if let Some(batch) = args.batch_size {
        train.batch_size = batch;
    }
    if let Some(lr) = args.lr {
        train.learning_rate = lr;
    }
    if let Some(hidden) = args.hidden {
        train.hidden_dim = hidden;
    }
    if let Some(seed) = args.seed {
        train.seed = seed;
    }
    train.validate()?;
    let out = require_out(args.out.as_ref(), config.outputs().checkpoint, "train")?;
    let metrics = args
        .metrics
        .clone()
        .or(config.outputs().metrics)
        .unwrap_or_else(|| out.with_extension("metrics.json"));

    let dataset = read_dataset(&args.data)?;
    let checkpoint = train_com(&train, &dataset)?;
    checkpoint.save(&out)?;
    checkpoint.save_metrics(&metrics)?;
    write_resolved_config(
        &out,
        json!({
            "command": "train",
            "train": train,
            "data": args.data,
            "out": out,
            "metrics": metrics,
        }),
    )?;
    let last = checkpoint.history.last().expect("at least one epoch");
    println!(
        "trained {:?} (alpha {}) for {} epochs: final total {:.6} (mse {:.6}, reg {:.6}) -> {}",
        checkpoint.meta.variant,
        checkpoint.meta.alpha,
        checkpoint.history.len(),
        last.total,
        last.mse_term,
        last.reg_term,
        out.display()
    );
    Ok(())
}

fn load_checkpoint_with_hash(path: &Path) -> Result<(Checkpoint, String)> {
    let bytes = fs::read(path)?;
    let checkpoint = Checkpoint::from_json_str(std::str::from_utf8(&bytes).map_err(|e| {
        Error::Parse {
            index: 0,
            message: format!("{}: {e}", path.display()),
        }
    })?)?;
    Ok((checkpoint, sha256_hex(&bytes)))
}

pub fn cmd_sample(config: &RunConfig, args: &SampleArgs) -> Result<()> {
    let mut settings = config.sampler.unwrap_or_default();
    if let Some(sampler) = args.sampler {
        settings.sampler = sampler;
    }
    if let Some(n) = args.n {
        settings.n = n;
    }
    if let Some(seed) = args.seed {
        settings.seed = seed;
    }
    if let Some(steps) = args.steps {
        settings.steps = steps;
    }
    if let Some(v) = args.sched_start {
        settings.sched_start = v;
    }
    if let Some(v) = args.sched_end {
        settings.sched_end = v;
    }
    if let Some(v) = args.eps {
        settings.eps = v;
    }
    if let Some(v) = args.w {
        settings.w = v;
    }
    if let Some(v) = args.prior_low {
        settings.prior_low = v;
    }
    if let Some(v) = args.prior_high {
        settings.prior_high = v;
    }
    if settings.sampler == SamplerChoice::Tilted && args.oracle.is_none() {
        return Err(Error::Usage(
            "--sampler tilted requires --oracle <checkpoint>".into(),
        ));
    }
    let out = require_out(args.out.as_ref(), config.outputs().samples, "sample")?;

    let (energy, energy_hash) = load_checkpoint_with_hash(&args.ckpt)?;
    let oracle = args
        .oracle
        .as_ref()
        .map(|p| load_checkpoint_with_hash(p))
        .transpose()?;
    let spec = settings.to_spec()?;
    let samples = sample_batch(
        &spec,
        &energy.field,
        oracle.as_ref().map(|(c, _)| &c.field as &dyn ScalarField),
        settings.n,
        None,
    )?;
    let set = SampleSet {
        spec: spec.clone(),
        seed: settings.seed,
        checkpoint_hash: energy_hash,
        oracle_checkpoint_hash: oracle.map(|(_, h)| h),
        samples,
    };
    set.save(&out)?;
    write_resolved_config(
        &out,
        json!({
            "command": "sample",
            "sampler": settings,
            "ckpt": args.ckpt,
            "oracle": args.oracle,
            "out": out,
        }),
    )?;
    println!("wrote {} samples to {}", set.samples.len(), out.display());
    Ok(())
}

pub fn cmd_eval(config: &RunConfig, args: &EvalArgs) -> Result<()> {
    let spiral = config.spiral.unwrap_or_default();
    let tau = args
        .tau
        .unwrap_or_else(|| config.eval.unwrap_or_default().tau);
    let set = SampleSet::load(&args.samples)?;
    let report = evaluate(&set.samples, &spiral, tau)?;
    print!("{}", report.to_json_string()?);
    if let Some(out) = args.out.as_ref().cloned().or(config.outputs().report) {
        report.save(&out)?;
        write_resolved_config(
            &out,
            json!({
                "command": "eval",
                "spiral": spiral,
                "tau": tau,
                "samples": args.samples,
                "out": out,
            }),
        )?;
    }
    Ok(())
}

pub fn cmd_plot(config: &RunConfig, command: &PlotCommand) -> Result<()> {
    match command {
        PlotCommand::Scatter { data, samples, out } => {
            let points = read_dataset(data)?;
            let sample_points = match samples {
                Some(path) => SampleSet::load(path)?.samples,
                None => Vec::new(),
            };
            fs::write(out, scatter_svg(&points, &sample_points))?;
            write_resolved_config(
                out,
                json!({
                    "command": "plot scatter",
                    "data": data,
                    "samples": samples,
                    "out": out,
                }),
            )?;
            println!("wrote {}", out.display());
        }
        PlotCommand::Quiver { ckpt, grid, out } => {
            let grid = grid.unwrap_or(DEFAULT_QUIVER_GRID);
            if grid == 0 {
                return Err(Error::Usage("--grid must be >= 1".into()));
            }
            let (checkpoint, _) = load_checkpoint_with_hash(ckpt)?;
            fs::write(out, quiver_svg(&checkpoint.field, grid))?;
            write_resolved_config(
                out,
                json!({
                    "command": "plot quiver",
                    "ckpt": ckpt,
                    "grid": grid,
                    "out": out,
                }),
            )?;
            println!("wrote {}", out.display());
        }
    }
    let _ = config;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_rejects_unknown_keys() {
        let err: std::result::Result<RunConfig, _> =
            serde_json::from_str(r#"{"spiralle": {}}"#);
        assert!(err.is_err());
        let err: std::result::Result<RunConfig, _> =
            serde_json::from_str(r#"{"spiral": {"radius": 1.0}}"#);
        assert!(err.is_err());
        let ok: RunConfig = serde_json::from_str(r#"{"spiral": {"n": 10}}"#).unwrap();
        assert_eq!(ok.spiral.unwrap().n, 10);
    }

    #[test]
    fn sampler_settings_build_specs() {
        let mut settings = SamplerSettings::default();
        let spec = settings.to_spec().unwrap();
        assert!(matches!(spec.sampler, SamplerKind::Langevin { .. }));
        settings.sampler = SamplerChoice::Ascent;
        assert!(matches!(
            settings.to_spec().unwrap().sampler,
            SamplerKind::GradientAscent { eps, steps }
                if eps == DEFAULT_ASCENT_EPS && steps == DEFAULT_GENERATION_STEPS
        ));
        settings.sampler = SamplerChoice::Tilted;
        settings.w = 5.0;
        assert!(matches!(
            settings.to_spec().unwrap().sampler,
            SamplerKind::TiltedLangevin { tilt_weight, .. } if tilt_weight == 5.0
        ));
    }

    #[test]
    fn resolved_config_sits_next_to_output() {
        assert_eq!(
            resolved_config_path(Path::new("runs/d.json")),
            Path::new("runs/d.config.json")
        );
    }

    #[test]
    fn help_and_bad_flags_exit_codes() {
        assert_eq!(run(["coms", "--help"]), 0);
        assert_eq!(run(["coms", "data", "--n", "-1", "--out", "d.json"]), 1);
        assert_eq!(run(["coms", "no-such-command"]), 1);
    }
}
