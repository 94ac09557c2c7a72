//! End-to-end orchestration: ingestion, the sliding four-frame window,
//! evaluation and the LR-vs-HR flow benchmark.

pub mod bench;
pub mod config;
pub mod eval;
pub mod manifest;

pub use bench::{bench_flow, synthetic_bench_pair, BenchReport, MIN_BENCH_RUNS};
pub use config::{ConfigFile, PipelineConfig, CONFIG_KEYS, DEFAULT_T};
pub use eval::{eval_dirs, eval_frames};
pub use manifest::{frame_file_name, list_frames, parse_frame_name, FrameEntry, FrameRole, SequenceManifest};

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::flow::{estimate_flow, read_flo, FlowParams};
use crate::hr::{refine_hr_frame, synthesize_coarse_hr, upsample_flow_to_hr, upsample_mask_to_hr, RefineInputs, WeightBundle};
use crate::imaging::{backward_warp, bicubic_resize, read_png, write_png, FlowField, Frame};
use crate::par;
use crate::qfi::{interpolate_lr, MotionModel, QfiInputs, QfiNetworks};
use crate::sr::{super_resolve, SrInput, SrMethod};

/// Minimum number of input frames: one full `I0, I2, I4, I6` window.
pub const MIN_INPUT_FRAMES: usize = 4;

/// Directory under the output directory for interpolated LR frames.
pub const LR_SUBDIR: &str = "lr";

/// Where pairwise flows come from.
#[derive(Clone, Debug, PartialEq)]
pub enum FlowSource {
    Estimate(FlowParams),
    /// `<i>_<j>.flo` files named by frame index.
    Dir(PathBuf),
}

impl FlowSource {
    pub fn from_config(config: &PipelineConfig) -> Self {
        match &config.flow_dir {
            Some(d) => FlowSource::Dir(d.clone()),
            None => FlowSource::Estimate(config.flow),
        }
    }
}

pub fn flo_file_name(from: usize, to: usize) -> String {
    format!("{from}_{to}.flo")
}

/// Optional weight bundles of the three learned stages.
#[derive(Clone, Debug, Default)]
pub struct Networks {
    pub flow_refine: Option<WeightBundle>,
    pub mask: Option<WeightBundle>,
    pub refine: Option<WeightBundle>,
}

impl Networks {
    pub fn load(config: &PipelineConfig) -> Result<Self> {
        let load = |p: &Option<PathBuf>| p.as_deref().map(WeightBundle::load).transpose();
        Ok(Self {
            flow_refine: load(&config.flow_refine_weights)?,
            mask: load(&config.mask_weights)?,
            refine: load(&config.refine_weights)?,
        })
    }

    fn qfi(&self) -> QfiNetworks<'_> {
        QfiNetworks {
            flow_refine: self.flow_refine.as_ref(),
            mask: self.mask.as_ref(),
        }
    }
}

/// Output frames keyed by output index, ascending.
#[derive(Clone, Debug, Default)]
pub struct PipelineOutput {
    pub frames: Vec<(usize, Frame)>,
    /// Interpolated LR frames, under the same indices as their HR frames.
    pub lr_frames: Vec<(usize, Frame)>,
}

/// Flows between consecutive inputs `k` and `k + 1`.
struct PairFlows {
    fwd: Vec<FlowField>,
    bwd: Vec<FlowField>,
}

impl PairFlows {
    fn compute(inputs: &[Frame], source: &FlowSource) -> Result<Self> {
        let gaps = inputs.len() - 1;
        let flows = par::map_range(2 * gaps, |i| {
            let k = i / 2;
            let (a, b) = if i % 2 == 0 { (k, k + 1) } else { (k + 1, k) };
            match source {
                FlowSource::Estimate(p) => estimate_flow(&inputs[a], &inputs[b], p),
                FlowSource::Dir(dir) => load_flow(dir, 2 * a, 2 * b, &inputs[a]),
            }
        });
        let mut fwd = Vec::with_capacity(gaps);
        let mut bwd = Vec::with_capacity(gaps);
        for (i, f) in flows.into_iter().enumerate() {
            if i % 2 == 0 {
                fwd.push(f?);
            } else {
                bwd.push(f?);
            }
        }
        Ok(Self { fwd, bwd })
    }

    /// `(F_2->0, F_2->4, F_4->2, F_4->6)` for the gap between inputs `g` and
    /// `g + 1`. At either end of the sequence the missing outer flow is
    /// extrapolated from the quadratic trajectory fitted on the nearest full
    /// window, so no flow beyond the sequence is needed.
    fn window(&self, g: usize) -> Result<(FlowField, &FlowField, &FlowField, FlowField)> {
        let f24 = &self.fwd[g];
        let f42 = &self.bwd[g];
        let f20 = if g > 0 {
            self.bwd[g - 1].clone()
        } else {
            // Center of the nearest window is input 1: back = F_1->0, fwd = F_1->2.
            extrapolate_outer(&self.fwd[1], &self.bwd[0], f24)?
        };
        let f46 = if g + 1 < self.fwd.len() {
            self.fwd[g + 1].clone()
        } else {
            // Center is input g: back = F_g->g+1, fwd = F_g->g-1.
            extrapolate_outer(&self.bwd[g - 1], f24, f42)?
        };
        Ok((f20, f24, f42, f46))
    }
}

/// Outer flow of a boundary frame `e` whose neighbour `c` is the center of a
/// full window. With `p(s) = v s + a s^2 / 2` fitted at `c` through
/// `p(-1) = F_c->e` and `p(1) = F_c->o`, the flow from `e` one step further
/// out is `p(-2) - p(-1) = 2 F_c->e + F_c->o`, read at `x + F_e->c(x)`.
fn extrapolate_outer(f_c_other: &FlowField, f_c_e: &FlowField, f_e_c: &FlowField) -> Result<FlowField> {
    let fit = f_c_e.scaled(2.0).add(f_c_other)?;
    backward_warp(&fit, f_e_c)
}

fn load_flow(dir: &Path, from: usize, to: usize, like: &Frame) -> Result<FlowField> {
    let path = dir.join(flo_file_name(from, to));
    let f = read_flo(&path).map_err(|e| Error::Ingestion {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    if !f.same_size(like) {
        return Err(Error::Ingestion {
            path,
            reason: format!(
                "flow is {}x{}, frames are {}x{}",
                f.height(),
                f.width(),
                like.height(),
                like.width()
            ),
        });
    }
    Ok(f)
}

/// Runs the full pipeline on in-memory input frames (the even frames of a
/// sequence, in order).
pub fn run_frames(
    inputs: &[Frame],
    config: &PipelineConfig,
    nets: &Networks,
    flows: &FlowSource,
) -> Result<PipelineOutput> {
    config.validate()?;
    if inputs.len() < MIN_INPUT_FRAMES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_INPUT_FRAMES} input frames, got {}",
            inputs.len()
        )));
    }
    for f in &inputs[1..] {
        inputs[0].as_raster().ensure_same_shape(f, "run_frames")?;
    }
    let names: Vec<String> = (0..inputs.len()).map(|k| frame_file_name(2 * k)).collect();
    let sr_inputs: Vec<SrInput> = inputs
        .iter()
        .zip(&names)
        .map(|(frame, n)| SrInput { file_name: n, frame })
        .collect();
    let (pair, hr) = par::join(
        || PairFlows::compute(inputs, flows),
        || super_resolve(&sr_inputs, &config.sr, config.scale),
    );
    let (pair, hr) = (pair?, hr?);

    let m = config.frames_per_gap();
    let nt = config.t_values.len();
    let gaps = inputs.len() - 1;
    let synthesized = par::map_range(gaps * nt, |i| {
        let (g, j) = (i / nt, i % nt);
        let t = config.t_values[j];
        synthesize_gap(inputs, &hr, &pair, g, t, nets, config.motion).map(|(h, l)| (g * m + 1 + j, h, l))
    });

    let mut out = PipelineOutput::default();
    for (k, f) in hr.into_iter().enumerate() {
        out.frames.push((k * m, f));
    }
    for s in synthesized {
        let (idx, h, l) = s?;
        out.frames.push((idx, h));
        out.lr_frames.push((idx, l));
    }
    out.frames.sort_by_key(|(i, _)| *i);
    out.lr_frames.sort_by_key(|(i, _)| *i);
    Ok(out)
}

fn synthesize_gap(
    inputs: &[Frame],
    hr: &[Frame],
    pair: &PairFlows,
    g: usize,
    t: f32,
    nets: &Networks,
    motion: MotionModel,
) -> Result<(Frame, Frame)> {
    let (f20, f24, f42, f46) = pair.window(g)?;
    let lr = interpolate_lr(
        &QfiInputs {
            i2: &inputs[g],
            i4: &inputs[g + 1],
            t,
            f20: &f20,
            f24,
            f42,
            f46: &f46,
        },
        nets.qfi(),
        motion,
    )?;
    let (i2_hr, i4_hr) = (&hr[g], &hr[g + 1]);
    let f_t2_hr = upsample_flow_to_hr(&lr.f_t2)?;
    let f_t4_hr = upsample_flow_to_hr(&lr.f_t4)?;
    let m_hr = upsample_mask_to_hr(&lr.mask)?;
    let coarse = synthesize_coarse_hr(i2_hr, i4_hr, &f_t2_hr, &f_t4_hr, &m_hr, t)?;
    let refined = refine_hr_frame(
        &RefineInputs {
            coarse: &coarse.frame,
            i2_hr,
            i4_hr,
            f_t2_hr: &f_t2_hr,
            f_t4_hr: &f_t4_hr,
            m_hr: &m_hr,
            warped2: &coarse.warped2,
            warped4: &coarse.warped4,
        },
        nets.refine.as_ref(),
    )?;
    Ok((refined, lr.frame))
}

/// Writes `<%08d>.png` files; LR frames go to `<dir>/lr` when `emit_lr`.
pub fn write_output(out: &PipelineOutput, dir: &Path, emit_lr: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut jobs: Vec<(PathBuf, &Frame)> = out
        .frames
        .iter()
        .map(|(i, f)| (dir.join(frame_file_name(*i)), f))
        .collect();
    if emit_lr {
        let lr_dir = dir.join(LR_SUBDIR);
        std::fs::create_dir_all(&lr_dir).map_err(|e| Error::io(&lr_dir, e))?;
        jobs.extend(out.lr_frames.iter().map(|(i, f)| (lr_dir.join(frame_file_name(*i)), f)));
    }
    // One job per distinct path, so no two writers share a file.
    par::map_range(jobs.len(), |k| write_png(jobs[k].1, &jobs[k].0))
        .into_iter()
        .collect::<Result<()>>()?;
    Ok(jobs.into_iter().map(|(p, _)| p).collect())
}

/// Reads the sequence, runs the pipeline and writes the HR output frames.
pub fn run_pipeline(manifest: &SequenceManifest, config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    if manifest.input_count() < MIN_INPUT_FRAMES {
        return Err(Error::Ingestion {
            path: manifest.dir.clone(),
            reason: format!(
                "need at least {MIN_INPUT_FRAMES} even frames, found {}",
                manifest.input_count()
            ),
        });
    }
    let nets = Networks::load(config)?;
    let inputs = manifest.load_inputs()?;
    let out = run_frames(&inputs, config, &nets, &FlowSource::from_config(config))?;
    write_output(&out, &config.output_dir, config.emit_lr)
}

/// Bicubic reduction of a frame by an integer factor.
pub fn degrade_frame(frame: &Frame, scale: usize) -> Result<Frame> {
    if scale == 0 || frame.height() % scale != 0 || frame.width() % scale != 0 {
        return Err(Error::InvalidArgument(format!(
            "frame {}x{} is not divisible by scale {scale}",
            frame.height(),
            frame.width()
        )));
    }
    bicubic_resize(frame, frame.height() / scale, frame.width() / scale)
}

/// Degrades every `%08d.png` frame of `input` into `output`. Returns the
/// number of frames written.
pub fn degrade_dir(input: &Path, output: &Path, scale: usize) -> Result<usize> {
    let frames: Vec<(usize, PathBuf)> = list_frames(input)?.into_iter().collect();
    if frames.is_empty() {
        return Err(Error::Ingestion {
            path: input.to_path_buf(),
            reason: "no %08d.png frames found".into(),
        });
    }
    std::fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;
    par::map_range(frames.len(), |k| {
        let (i, path) = &frames[k];
        let f = read_png(path).map_err(|e| Error::Ingestion {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        write_png(&degrade_frame(&f, scale)?, &output.join(frame_file_name(*i)))
    })
    .into_iter()
    .collect::<Result<()>>()?;
    Ok(frames.len())
}

pub fn sr_method_from(hr_dir: Option<PathBuf>) -> SrMethod {
    hr_dir.map(SrMethod::Precomputed).unwrap_or_default()
}
