//! Command-line flags and their merge with an optional config file.
//! A flag given on the command line wins over the same key in the file.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use stsr_core::flow::FlowParams;
use stsr_core::pipeline::{sr_method_from, ConfigFile, PipelineConfig};
use stsr_core::qfi::MotionModel;
use stsr_core::Error;

#[derive(Debug, Parser)]
#[command(name = "stsr", version, about = "Space-time video super-resolution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Upscale a sequence 4x in space and 2x in time.
    Run(RunArgs),
    /// PSNR/SSIM of predicted frames against ground truth.
    Eval(EvalArgs),
    /// Time LR flow plus upsampling against HR flow.
    Bench(BenchArgs),
    /// Bicubic downscaling of every frame in a directory.
    Degrade(DegradeArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Input directory of %08d.png frames.
    #[arg(long = "in", value_name = "DIR")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Flat key=value file; keys are the long flag names.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Seed for synthetic inputs.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[arg(long)]
    pub pyramid_levels: Option<usize>,
    /// Solver iterations per pyramid level.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Smoothness weight.
    #[arg(long)]
    pub alpha: Option<f32>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub flow: FlowArgs,
    /// Read `<i>_<j>.flo` flows from here instead of estimating them.
    #[arg(long, value_name = "DIR")]
    pub flow_dir: Option<PathBuf>,
    /// Precomputed super-resolved input frames.
    #[arg(long, value_name = "DIR")]
    pub hr_dir: Option<PathBuf>,
    /// Also write the interpolated LR frames to <out>/lr.
    #[arg(long)]
    pub emit_lr: bool,
    #[arg(long, value_name = "FILE")]
    pub refine_weights: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub mask_weights: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub flow_refine_weights: Option<PathBuf>,
    /// Interpolation time inside each gap, in (2, 4). Repeatable.
    #[arg(long = "t", value_name = "T")]
    pub t: Vec<f32>,
    /// quadratic or linear.
    #[arg(long)]
    pub motion: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Ground-truth directory.
    #[arg(long, value_name = "DIR")]
    pub gt: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub flow: FlowArgs,
    /// HR frame pair; `--in` holds the LR pair.
    #[arg(long, value_name = "DIR")]
    pub hr_dir: Option<PathBuf>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Synthetic LR height when no input is given.
    #[arg(long, default_value_t = 180)]
    pub lr_height: usize,
    #[arg(long, default_value_t = 320)]
    pub lr_width: usize,
    #[arg(long, default_value_t = 4)]
    pub factor: usize,
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub scale: Option<usize>,
}

/// Command-line values layered over the config file.
pub struct Settings {
    file: ConfigFile,
    workers: Option<usize>,
}

impl Settings {
    pub fn resolve(common: &Common) -> Result<Self, Error> {
        let file = match &common.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Ok(Self {
            file,
            workers: common.workers,
        })
    }

    pub fn workers(&self) -> Result<Option<usize>, Error> {
        let w = self.value(self.workers, "workers")?;
        if w == Some(0) {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        Ok(w)
    }

    pub fn value<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>, Error> {
        match cli {
            Some(v) => Ok(Some(v)),
            None => self.file.parsed(key),
        }
    }

    pub fn path(&self, cli: &Option<PathBuf>, key: &str) -> Option<PathBuf> {
        cli.clone().or_else(|| self.file.path(key))
    }

    pub fn required_path(&self, cli: &Option<PathBuf>, key: &str) -> Result<PathBuf, Error> {
        self.path(cli, key)
            .ok_or_else(|| Error::InvalidArgument(format!("--{key} is required")))
    }

    pub fn flow_params(&self, a: &FlowArgs) -> Result<FlowParams, Error> {
        let d = FlowParams::default();
        let p = FlowParams {
            pyramid_levels: self.value(a.pyramid_levels, "pyramid-levels")?.unwrap_or(d.pyramid_levels),
            iterations_per_level: self.value(a.iterations, "iterations")?.unwrap_or(d.iterations_per_level),
            smoothness_alpha: self.value(a.alpha, "alpha")?.unwrap_or(d.smoothness_alpha),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn pipeline_config(&self, a: &RunArgs) -> Result<PipelineConfig, Error> {
        let d = PipelineConfig::default();
        let mut t_values = if a.t.is_empty() { self.file.t_values()? } else { a.t.clone() };
        if t_values.is_empty() {
            t_values = d.t_values.clone();
        }
        t_values.sort_by(f32::total_cmp);
        let motion = match a.motion.as_deref().or(self.file.get("motion")) {
            Some(m) => m.parse::<MotionModel>()?,
            None => d.motion,
        };
        let config = PipelineConfig {
            scale: self.value(None, "scale")?.unwrap_or(d.scale),
            t_values,
            flow: self.flow_params(&a.flow)?,
            sr: sr_method_from(self.path(&a.hr_dir, "hr-dir")),
            flow_dir: self.path(&a.flow_dir, "flow-dir"),
            refine_weights: self.path(&a.refine_weights, "refine-weights"),
            mask_weights: self.path(&a.mask_weights, "mask-weights"),
            flow_refine_weights: self.path(&a.flow_refine_weights, "flow-refine-weights"),
            output_dir: self.required_path(&a.common.out, "out")?,
            workers: self.workers()?,
            emit_lr: a.emit_lr || self.file.flag("emit-lr")?,
            motion,
        };
        config.validate()?;
        Ok(config)
    }
}
