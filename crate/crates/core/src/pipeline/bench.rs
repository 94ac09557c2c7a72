//! Timing of flow estimation at LR plus upsampling against estimation
//! directly at HR.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::flow::{estimate_flow, FlowParams};
use crate::hr::upsample_flow;
use crate::imaging::{bicubic_resize, Frame};
use crate::synth::shifted_pair;

pub const MIN_BENCH_RUNS: usize = 5;

/// Median wall-clock seconds per stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchReport {
    pub runs: usize,
    pub factor: usize,
    pub lr_dims: (usize, usize),
    pub hr_dims: (usize, usize),
    pub lr_flow_secs: f64,
    pub upsample_secs: f64,
    /// Median of the per-run sum of LR estimation and upsampling.
    pub lr_total_secs: f64,
    pub hr_flow_secs: f64,
    /// `hr_flow_secs / lr_total_secs`.
    pub ratio: f64,
}

impl BenchReport {
    pub fn to_key_values(&self) -> String {
        format!(
            "runs={}\nfactor={}\nlr_size={}x{}\nhr_size={}x{}\nlr_flow_s={:.6}\nupsample_s={:.6}\nlr_total_s={:.6}\nhr_flow_s={:.6}\nratio={:.4}\n",
            self.runs,
            self.factor,
            self.lr_dims.0,
            self.lr_dims.1,
            self.hr_dims.0,
            self.hr_dims.1,
            self.lr_flow_secs,
            self.upsample_secs,
            self.lr_total_secs,
            self.hr_flow_secs,
            self.ratio
        )
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn scale_factor(lr: &Frame, hr: &Frame) -> Result<usize> {
    let bad = || {
        Error::InvalidArgument(format!(
            "HR dims {}x{} must be an integer multiple of LR dims {}x{}",
            hr.height(),
            hr.width(),
            lr.height(),
            lr.width()
        ))
    };
    if hr.height() % lr.height() != 0 {
        return Err(bad());
    }
    let f = hr.height() / lr.height();
    if f == 0 || hr.width() != f * lr.width() {
        return Err(bad());
    }
    Ok(f)
}

/// Both estimations use the same `params`, so every pyramid level gets the
/// same iteration budget.
pub fn bench_flow(
    lr: (&Frame, &Frame),
    hr: (&Frame, &Frame),
    params: &FlowParams,
    runs: usize,
) -> Result<BenchReport> {
    if runs < MIN_BENCH_RUNS {
        return Err(Error::InvalidArgument(format!(
            "bench needs at least {MIN_BENCH_RUNS} runs, got {runs}"
        )));
    }
    lr.0.as_raster().ensure_same_shape(lr.1, "bench_flow")?;
    hr.0.as_raster().ensure_same_shape(hr.1, "bench_flow")?;
    let factor = scale_factor(lr.0, hr.0)?;
    params.validate()?;

    let (mut lr_t, mut up_t, mut tot_t, mut hr_t) = (vec![], vec![], vec![], vec![]);
    for _ in 0..runs {
        let t0 = Instant::now();
        let f = estimate_flow(lr.0, lr.1, params)?;
        let t1 = Instant::now();
        let up = upsample_flow(&f, factor)?;
        let t2 = Instant::now();
        std::hint::black_box(&up);
        let g = estimate_flow(hr.0, hr.1, params)?;
        let t3 = Instant::now();
        std::hint::black_box(&g);
        lr_t.push((t1 - t0).as_secs_f64());
        up_t.push((t2 - t1).as_secs_f64());
        tot_t.push((t2 - t0).as_secs_f64());
        hr_t.push((t3 - t2).as_secs_f64());
    }
    let lr_total_secs = median(tot_t);
    let hr_flow_secs = median(hr_t);
    Ok(BenchReport {
        runs,
        factor,
        lr_dims: (lr.0.height(), lr.0.width()),
        hr_dims: (hr.0.height(), hr.0.width()),
        lr_flow_secs: median(lr_t),
        upsample_secs: median(up_t),
        lr_total_secs,
        hr_flow_secs,
        ratio: hr_flow_secs / lr_total_secs.max(f64::MIN_POSITIVE),
    })
}

/// A translated texture pair at HR and its bicubic reduction to LR.
pub fn synthetic_bench_pair(
    lr_height: usize,
    lr_width: usize,
    factor: usize,
    seed: u64,
) -> Result<((Frame, Frame), (Frame, Frame))> {
    if factor == 0 || lr_height == 0 || lr_width == 0 {
        return Err(Error::InvalidArgument("bench sizes must be positive".into()));
    }
    let (h, w) = (lr_height * factor, lr_width * factor);
    let d = factor as f32;
    let (a, b) = shifted_pair(h, w, 1.5 * d, 0.5 * d, seed);
    let la = bicubic_resize(&a, lr_height, lr_width)?;
    let lb = bicubic_resize(&b, lr_height, lr_width)?;
    Ok(((la, lb), (a, b)))
}
