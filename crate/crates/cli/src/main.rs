//! `stsr`: space-time super-resolution of frame sequences.

mod args;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use stsr_core::imaging::read_png;
use stsr_core::metrics::SSIM_CONVENTION;
use stsr_core::pipeline::{
    bench_flow, degrade_dir, eval_dirs, list_frames, run_pipeline, synthetic_bench_pair, SequenceManifest,
};
use stsr_core::{Error, Frame};

use args::{BenchArgs, Cli, Command, DegradeArgs, EvalArgs, RunArgs, Settings};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { EXIT_USAGE } else { EXIT_DATA })
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(a) => {
            let s = Settings::resolve(&a.common)?;
            with_workers(s.workers()?, || run(&a, &s))
        }
        Command::Eval(a) => {
            let s = Settings::resolve(&a.common)?;
            with_workers(s.workers()?, || eval(&a, &s))
        }
        Command::Bench(a) => {
            let s = Settings::resolve(&a.common)?;
            with_workers(s.workers()?, || bench(&a, &s))
        }
        Command::Degrade(a) => {
            let s = Settings::resolve(&a.common)?;
            with_workers(s.workers()?, || degrade(&a, &s))
        }
    }
}

#[cfg(feature = "parallel")]
fn with_workers<R>(workers: Option<usize>, f: impl FnOnce() -> Result<R, Error> + Send) -> Result<R, Error>
where
    R: Send,
{
    let Some(n) = workers else {
        return f();
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {n} workers: {e}")))?;
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_workers<R>(_workers: Option<usize>, f: impl FnOnce() -> Result<R, Error>) -> Result<R, Error> {
    f()
}

fn run(a: &RunArgs, s: &Settings) -> Result<(), Error> {
    let input = s.required_path(&a.common.input, "in")?;
    let config = s.pipeline_config(a)?;
    let manifest = SequenceManifest::from_dir(&input)?;
    let written = run_pipeline(&manifest, &config)?;
    println!(
        "wrote {} frames to {} ({} inputs, sequence {:?})",
        written.len(),
        config.output_dir.display(),
        manifest.input_count(),
        manifest.id
    );
    Ok(())
}

fn eval(a: &EvalArgs, s: &Settings) -> Result<(), Error> {
    let pred = s.required_path(&a.common.input, "in")?;
    let gt = s.required_path(&a.gt, "gt")?;
    let report = eval_dirs(&pred, &gt)?;
    let csv = report.to_csv();
    print!("{csv}");
    println!("# {SSIM_CONVENTION}");
    print!("{}", report.summary_table());
    if let Some(out) = s.path(&a.common.out, "out") {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::Io {
                path: parent.to_path_buf(),
                source: e,
            })?;
        }
        std::fs::write(&out, format!("# {SSIM_CONVENTION}\n{csv}")).map_err(|e| Error::Io {
            path: out.clone(),
            source: e,
        })?;
    }
    Ok(())
}

/// The first two `%08d.png` frames of `dir`.
fn first_pair(dir: &Path) -> Result<(Frame, Frame), Error> {
    let paths: Vec<PathBuf> = list_frames(dir)?.into_values().take(2).collect();
    if paths.len() < 2 {
        return Err(Error::Ingestion {
            path: dir.to_path_buf(),
            reason: "bench needs two %08d.png frames".into(),
        });
    }
    Ok((read_png(&paths[0])?, read_png(&paths[1])?))
}

fn bench(a: &BenchArgs, s: &Settings) -> Result<(), Error> {
    let params = s.flow_params(&a.flow)?;
    let runs = s.value(a.runs, "runs")?.unwrap_or(stsr_core::pipeline::MIN_BENCH_RUNS);
    let lr_dir = s.path(&a.common.input, "in");
    let hr_dir = s.path(&a.hr_dir, "hr-dir");
    let (lr, hr) = match (lr_dir, hr_dir) {
        (Some(l), Some(h)) => (first_pair(&l)?, first_pair(&h)?),
        (None, None) => {
            let seed = s.value(a.common.seed, "seed")?.unwrap_or(0);
            synthetic_bench_pair(a.lr_height, a.lr_width, a.factor, seed)?
        }
        _ => {
            return Err(Error::InvalidArgument(
                "bench takes both --in and --hr-dir, or neither".into(),
            ))
        }
    };
    let report = bench_flow((&lr.0, &lr.1), (&hr.0, &hr.1), &params, runs)?;
    print!("{}", report.to_key_values());
    Ok(())
}

fn degrade(a: &DegradeArgs, s: &Settings) -> Result<(), Error> {
    let input = s.required_path(&a.common.input, "in")?;
    let out = s.required_path(&a.common.out, "out")?;
    let scale = s.value(a.scale, "scale")?.unwrap_or(stsr_core::SCALE);
    let n = degrade_dir(&input, &out, scale)?;
    println!("degraded {n} frames by {scale}x into {}", out.display());
    Ok(())
}
