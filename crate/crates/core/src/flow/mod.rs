//! Coarse-to-fine Horn-Schunck optical flow and Middlebury `.flo` I/O.

mod flo;

pub use flo::{decode_flo, encode_flo, read_flo, write_flo, FLO_MAGIC};

use crate::error::{Error, Result};
use crate::imaging::{backward_warp, bilinear_resize, gaussian_blur, FlowField, Frame, Raster};
use crate::par;

/// Downscale factor between pyramid levels.
pub const PYRAMID_DOWNSCALE: usize = 2;

/// Luma is scaled to 8-bit range so the smoothness weight has its usual
/// magnitude.
const INTENSITY_SCALE: f32 = 255.0;

/// Pre-smoothing applied before each decimation.
const PYRAMID_SIGMA: f32 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowParams {
    pub pyramid_levels: usize,
    pub iterations_per_level: usize,
    pub smoothness_alpha: f32,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            pyramid_levels: 4,
            iterations_per_level: 100,
            smoothness_alpha: 15.0,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if self.pyramid_levels < 1 {
            return Err(Error::InvalidArgument("pyramid_levels must be >= 1".into()));
        }
        if self.iterations_per_level < 1 {
            return Err(Error::InvalidArgument(
                "iterations_per_level must be >= 1".into(),
            ));
        }
        if !(self.smoothness_alpha > 0.0 && self.smoothness_alpha.is_finite()) {
            return Err(Error::InvalidArgument(
                "smoothness_alpha must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Levels actually used for a `height x width` input: reduced until
    /// `2^levels` fits in the smaller side.
    pub fn effective_levels(&self, height: usize, width: usize) -> usize {
        let side = height.min(width);
        let mut levels = self.pyramid_levels;
        while levels > 1 && side < (1usize << levels) {
            levels -= 1;
        }
        levels
    }
}

fn build_pyramid(base: Raster, levels: usize) -> Result<Vec<Raster>> {
    let mut pyr = vec![base];
    for _ in 1..levels {
        let prev = pyr.last().expect("non-empty pyramid");
        let h = prev.height().div_ceil(PYRAMID_DOWNSCALE);
        let w = prev.width().div_ceil(PYRAMID_DOWNSCALE);
        let smoothed = gaussian_blur(prev, PYRAMID_SIGMA)?;
        pyr.push(bilinear_resize(&smoothed, h, w)?);
    }
    Ok(pyr)
}

/// Central differences with edge clamping.
fn gradients(img: &Raster) -> (Raster, Raster) {
    let (h, w) = (img.height(), img.width());
    let mut gx = Raster::zeros(h, w, 1);
    let mut gy = Raster::zeros(h, w, 1);
    for y in 0..h {
        let (ym, yp) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..w {
            let (xm, xp) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let dx = (img.get(y, xp, 0) - img.get(y, xm, 0)) / (xp - xm).max(1) as f32;
            let dy = (img.get(yp, x, 0) - img.get(ym, x, 0)) / (yp - ym).max(1) as f32;
            gx.set(y, x, 0, dx);
            gy.set(y, x, 0, dy);
        }
    }
    (gx, gy)
}

/// Per-pixel terms of the linearized data term at one level.
struct Linearization {
    ix: Vec<f32>,
    iy: Vec<f32>,
    it: Vec<f32>,
}

fn linearize(a: &Raster, b: &Raster, init: &FlowField) -> Result<Linearization> {
    let warped = backward_warp(b, init)?;
    let (ax, ay) = gradients(a);
    let (bx, by) = gradients(&warped);
    let n = a.height() * a.width();
    let mut lin = Linearization {
        ix: Vec::with_capacity(n),
        iy: Vec::with_capacity(n),
        it: Vec::with_capacity(n),
    };
    for i in 0..n {
        lin.ix.push(0.5 * (ax.data()[i] + bx.data()[i]));
        lin.iy.push(0.5 * (ay.data()[i] + by.data()[i]));
        lin.it.push(warped.data()[i] - a.data()[i]);
    }
    Ok(lin)
}

/// Jacobi iterations of Horn-Schunck on the total flow, linearized around
/// `init`. Each sweep reads only the previous iterate, so rows update in
/// parallel without changing the result.
fn jacobi(lin: &Linearization, init: &FlowField, iterations: usize, alpha: f32) -> FlowField {
    let (h, w) = (init.height(), init.width());
    let alpha2 = alpha * alpha;
    let base = init.data();
    let mut cur = init.as_raster().clone();
    let mut next = cur.clone();
    for _ in 0..iterations {
        let prev = cur.data();
        par::for_each_row(next.data_mut(), w * 2, |y, row| {
            let ym = y.saturating_sub(1);
            let yp = (y + 1).min(h - 1);
            for x in 0..w {
                let xm = x.saturating_sub(1);
                let xp = (x + 1).min(w - 1);
                let at = |yy: usize, xx: usize, k: usize| prev[(yy * w + xx) * 2 + k];
                let mut avg = [0.0f32; 2];
                for (k, a) in avg.iter_mut().enumerate() {
                    let edge = at(ym, x, k) + at(yp, x, k) + at(y, xm, k) + at(y, xp, k);
                    let diag = at(ym, xm, k) + at(ym, xp, k) + at(yp, xm, k) + at(yp, xp, k);
                    *a = edge / 6.0 + diag / 12.0;
                }
                let i = y * w + x;
                let (ix, iy, it) = (lin.ix[i], lin.iy[i], lin.it[i]);
                let du = avg[0] - base[i * 2];
                let dv = avg[1] - base[i * 2 + 1];
                let r = (ix * du + iy * dv + it) / (alpha2 + ix * ix + iy * iy);
                row[x * 2] = avg[0] - ix * r;
                row[x * 2 + 1] = avg[1] - iy * r;
            }
        });
        std::mem::swap(&mut cur, &mut next);
    }
    FlowField::from_raster(cur).expect("two-channel flow")
}

/// Estimates `F` with `a(x) ~= b(x + F(x))`.
pub fn estimate_flow(a: &Frame, b: &Frame, params: &FlowParams) -> Result<FlowField> {
    params.validate()?;
    if !a.same_size(b) || a.channels() != b.channels() {
        return Err(Error::dims(
            "estimate_flow",
            a.shape_string(),
            b.shape_string(),
        ));
    }
    let levels = params.effective_levels(a.height(), a.width());
    let scale = |r: Raster| r.map(|v| v * INTENSITY_SCALE);
    let (pa, pb) = par::join(
        || build_pyramid(scale(a.luma()), levels),
        || build_pyramid(scale(b.luma()), levels),
    );
    let (pa, pb) = (pa?, pb?);

    let coarsest = &pa[levels - 1];
    let mut flow = FlowField::zeros(coarsest.height(), coarsest.width());
    for level in (0..levels).rev() {
        let (la, lb) = (&pa[level], &pb[level]);
        if !flow.same_size(la) {
            let su = la.width() as f32 / flow.width() as f32;
            let sv = la.height() as f32 / flow.height() as f32;
            flow = bilinear_resize(&flow, la.height(), la.width())?.scaled_axes(su, sv);
        }
        let lin = linearize(la, lb, &flow)?;
        flow = jacobi(&lin, &flow, params.iterations_per_level, params.smoothness_alpha);
    }
    Ok(flow)
}
