//! PSNR, SSIM and the Charbonnier-based losses, used as evaluation
//! quantities.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::imaging::{structure_detail_decompose, Frame, DEFAULT_STRUCTURE_SIGMA};

/// PSNR reported for (near) identical frames.
pub const PSNR_CAP_DB: f64 = 100.0;
const PSNR_MIN_MSE: f64 = 1e-10;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

pub const CHARBONNIER_EPS: f64 = 1e-3;
/// Weights of the frame-reconstruction and structure-detail terms.
pub const LOSS_WEIGHT_FR: f64 = 45.0;
pub const LOSS_WEIGHT_SD: f64 = 45.0;
/// Weight of the LR intermediate-frame term inside the reconstruction loss.
pub const LR_FRAME_LOSS_WEIGHT: f64 = 0.5;

/// Recorded alongside every report.
pub const SSIM_CONVENTION: &str =
    "SSIM: 11x11 Gaussian window (sigma 1.5), valid positions only, mean over RGB channels";

fn ensure_match(a: &Frame, b: &Frame, op: &'static str) -> Result<()> {
    if a.same_size(b) && a.channels() == b.channels() {
        Ok(())
    } else {
        Err(Error::dims(op, a.shape_string(), b.shape_string()))
    }
}

pub fn mse(pred: &Frame, gt: &Frame) -> Result<f64> {
    ensure_match(pred, gt, "mse")?;
    let sum: f64 = pred
        .data()
        .iter()
        .zip(gt.data())
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(sum / pred.data().len() as f64)
}

/// `10 log10(1 / MSE)` for unit peak, capped at 100 dB.
pub fn psnr(pred: &Frame, gt: &Frame) -> Result<f64> {
    let m = mse(pred, gt)?;
    if m < PSNR_MIN_MSE {
        Ok(PSNR_CAP_DB)
    } else {
        Ok((10.0 * (1.0 / m).log10()).min(PSNR_CAP_DB))
    }
}

fn ssim_kernel() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as i64;
    let raw: Vec<f64> = (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Valid-mode separable filtering of one plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let (oh, ow) = (h - n + 1, w - n + 1);
    let mut tmp = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = (0..n).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| k[i] * tmp[(y + i) * ow + x]).sum();
        }
    }
    (out, oh, ow)
}

fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize, k: &[f64]) -> f64 {
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
    };
    let (mu_a, oh, ow) = filter_valid(a, h, w, k);
    let (mu_b, _, _) = filter_valid(b, h, w, k);
    let (aa, _, _) = filter_valid(&prod(&|x, _| x * x), h, w, k);
    let (bb, _, _) = filter_valid(&prod(&|_, y| y * y), h, w, k);
    let (ab, _, _) = filter_valid(&prod(&|x, y| x * y), h, w, k);
    let mut total = 0.0;
    for i in 0..oh * ow {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
            / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total / (oh * ow) as f64
}

/// Gaussian-windowed SSIM averaged over valid positions and channels.
pub fn ssim(pred: &Frame, gt: &Frame) -> Result<f64> {
    ensure_match(pred, gt, "ssim")?;
    let (h, w, c) = (pred.height(), pred.width(), pred.channels());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {h}x{w}"
        )));
    }
    if pred.data() == gt.data() {
        return Ok(1.0);
    }
    let k = ssim_kernel();
    let plane = |f: &Frame, ch: usize| -> Vec<f64> {
        f.data().iter().skip(ch).step_by(c).map(|&v| v as f64).collect()
    };
    let sum: f64 = (0..c)
        .map(|ch| ssim_plane(&plane(pred, ch), &plane(gt, ch), h, w, &k))
        .sum();
    Ok(sum / c as f64)
}

/// Mean over all values of `sqrt((x - y)^2 + eps^2)`.
pub fn charbonnier(x: &Frame, y: &Frame, eps: f64) -> Result<f64> {
    ensure_match(x, y, "charbonnier")?;
    let e2 = eps * eps;
    let sum: f64 = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            (d * d + e2).sqrt()
        })
        .sum();
    Ok(sum / x.data().len() as f64)
}

/// Position of an HR frame in the five-frame loss window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FrameSlot {
    I0,
    I2,
    It,
    I4,
    I6,
}

impl FrameSlot {
    pub const ALL: [FrameSlot; 5] = [
        FrameSlot::I0,
        FrameSlot::I2,
        FrameSlot::It,
        FrameSlot::I4,
        FrameSlot::I6,
    ];
}

/// A predicted HR frame and its ground truth.
#[derive(Clone, Copy, Debug)]
pub struct SlotPair<'a> {
    pub slot: FrameSlot,
    pub pred: &'a Frame,
    pub gt: &'a Frame,
}

fn ensure_complete(pairs: &[SlotPair<'_>]) -> Result<()> {
    for slot in FrameSlot::ALL {
        let n = pairs.iter().filter(|p| p.slot == slot).count();
        if n != 1 {
            return Err(Error::IncompleteFrameSet(format!(
                "slot {slot:?} appears {n} times, expected exactly once"
            )));
        }
    }
    if pairs.len() != FrameSlot::ALL.len() {
        return Err(Error::IncompleteFrameSet(format!(
            "expected {} frame pairs, got {}",
            FrameSlot::ALL.len(),
            pairs.len()
        )));
    }
    Ok(())
}

/// Charbonnier over the five HR frames plus half the LR intermediate term.
pub fn frame_reconstruction_loss(
    hr: &[SlotPair<'_>],
    lr_t_pred: &Frame,
    lr_t_gt: &Frame,
) -> Result<f64> {
    ensure_complete(hr)?;
    let mut total = 0.0;
    for p in hr {
        total += charbonnier(p.pred, p.gt, CHARBONNIER_EPS)?;
    }
    Ok(total + LR_FRAME_LOSS_WEIGHT * charbonnier(lr_t_pred, lr_t_gt, CHARBONNIER_EPS)?)
}

/// Charbonnier on the structure and on the detail components of the five
/// HR frames.
pub fn structure_detail_loss(hr: &[SlotPair<'_>]) -> Result<f64> {
    ensure_complete(hr)?;
    let mut total = 0.0;
    for p in hr {
        let (sp, dp) = structure_detail_decompose(p.pred, DEFAULT_STRUCTURE_SIGMA)?;
        let (sg, dg) = structure_detail_decompose(p.gt, DEFAULT_STRUCTURE_SIGMA)?;
        total += charbonnier(&sp, &sg, CHARBONNIER_EPS)?;
        total += charbonnier(&dp, &dg, CHARBONNIER_EPS)?;
    }
    Ok(total)
}

pub fn total_loss(fr: f64, sd: f64) -> f64 {
    LOSS_WEIGHT_FR * fr + LOSS_WEIGHT_SD * sd
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameKind {
    Even,
    Odd,
}

impl FrameKind {
    pub fn of_index(index: usize) -> Self {
        if index % 2 == 0 {
            FrameKind::Even
        } else {
            FrameKind::Odd
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FrameKind::Even => "even",
            FrameKind::Odd => "odd",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameMetric {
    pub index: usize,
    pub kind: FrameKind,
    pub psnr: f64,
    pub ssim: f64,
}

/// Arithmetic means over a group of frames.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Aggregate {
    pub count: usize,
    pub psnr: f64,
    pub ssim: f64,
}

impl Aggregate {
    fn of<'a>(rows: impl Iterator<Item = &'a FrameMetric>) -> Self {
        let (mut n, mut p, mut s) = (0usize, 0.0, 0.0);
        for r in rows {
            n += 1;
            p += r.psnr;
            s += r.ssim;
        }
        if n == 0 {
            Aggregate::default()
        } else {
            Aggregate {
                count: n,
                psnr: p / n as f64,
                ssim: s / n as f64,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub frames: Vec<FrameMetric>,
    pub even: Aggregate,
    pub odd: Aggregate,
    pub overall: Aggregate,
}

pub const CSV_HEADER: &str = "frame_index,kind,psnr,ssim";

impl MetricReport {
    /// Rows are sorted by frame index.
    pub fn from_frames(mut frames: Vec<FrameMetric>) -> Self {
        frames.sort_by_key(|f| f.index);
        let even = Aggregate::of(frames.iter().filter(|f| f.kind == FrameKind::Even));
        let odd = Aggregate::of(frames.iter().filter(|f| f.kind == FrameKind::Odd));
        let overall = Aggregate::of(frames.iter());
        Self {
            frames,
            even,
            odd,
            overall,
        }
    }

    /// `frame_index,kind,psnr,ssim` rows followed by `mean,<group>,...`
    /// summary rows for even, odd and overall.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(CSV_HEADER);
        s.push('\n');
        for f in &self.frames {
            let _ = writeln!(s, "{},{},{:.6},{:.6}", f.index, f.kind.as_str(), f.psnr, f.ssim);
        }
        for (name, a) in [("even", self.even), ("odd", self.odd), ("overall", self.overall)] {
            let _ = writeln!(s, "mean,{name},{:.6},{:.6}", a.psnr, a.ssim);
        }
        s
    }

    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<8} {:>6} {:>10} {:>8}", "group", "frames", "PSNR(dB)", "SSIM");
        for (name, a) in [("even", self.even), ("odd", self.odd), ("overall", self.overall)] {
            let _ = writeln!(s, "{:<8} {:>6} {:>10.4} {:>8.4}", name, a.count, a.psnr, a.ssim);
        }
        s
    }
}
