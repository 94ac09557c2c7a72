use super::{FlowField, Raster, RasterKind};
use crate::error::Result;
use crate::par;

/// Bilinear sample of `src` at `(y, x)` with edge-clamped coordinates,
/// written into `out` (one value per channel).
#[inline]
pub fn sample_bilinear(src: &Raster, y: f32, x: f32, out: &mut [f32]) {
    let (h, w, c) = (src.height(), src.width(), src.channels());
    let x = x.clamp(0.0, (w - 1) as f32);
    let y = y.clamp(0.0, (h - 1) as f32);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = x - x0 as f32;
    let fy = y - y0 as f32;
    let d = src.data();
    let i00 = (y0 * w + x0) * c;
    let i01 = (y0 * w + x1) * c;
    let i10 = (y1 * w + x0) * c;
    let i11 = (y1 * w + x1) * c;
    // Lerp form keeps constants and zero offsets exact.
    for (k, o) in out.iter_mut().enumerate().take(c) {
        let top = d[i00 + k] + fx * (d[i01 + k] - d[i00 + k]);
        let bottom = d[i10 + k] + fx * (d[i11 + k] - d[i10 + k]);
        *o = top + fy * (bottom - top);
    }
}

/// `out(x) = src(x + flow(x))`, bilinear, edge-clamped.
pub fn backward_warp<T: RasterKind>(src: &T, flow: &FlowField) -> Result<T> {
    let src = src.raster();
    src.ensure_same_size(flow, "backward_warp")?;
    let (w, c) = (src.width(), src.channels());
    let mut out = Raster::zeros(src.height(), w, c);
    par::for_each_row(out.data_mut(), w * c, |y, row| {
        for x in 0..w {
            let (u, v) = flow.at(y, x);
            sample_bilinear(
                src,
                y as f32 + v,
                x as f32 + u,
                &mut row[x * c..(x + 1) * c],
            );
        }
    });
    Ok(T::rewrap(out))
}

/// Result of scattering values along a flow field.
#[derive(Clone, Debug)]
pub struct Splat {
    /// Weighted sum of the values that landed on each pixel.
    pub accumulated: Raster,
    /// Sum of the bilinear weights that landed on each pixel.
    pub weights: Raster,
}

/// Scatters each source pixel `x` to the four integer neighbours of
/// `x + flow(x)` with bilinear weights. Contributions that land outside the
/// raster are dropped.
pub fn forward_splat<T: RasterKind>(values: &T, flow: &FlowField) -> Result<Splat> {
    let values = values.raster();
    values.ensure_same_size(flow, "forward_splat")?;
    let (h, w, c) = (values.height(), values.width(), values.channels());
    let mut acc = Raster::zeros(h, w, c);
    let mut weights = Raster::zeros(h, w, 1);
    // Sequential so the summation order (and hence every bit) is fixed.
    for y in 0..h {
        for x in 0..w {
            let (u, v) = flow.at(y, x);
            let tx = x as f32 + u;
            let ty = y as f32 + v;
            let x0 = tx.floor();
            let y0 = ty.floor();
            let fx = tx - x0;
            let fy = ty - y0;
            let src = values.pixel(y, x);
            let taps = [
                (x0, y0, (1.0 - fx) * (1.0 - fy)),
                (x0 + 1.0, y0, fx * (1.0 - fy)),
                (x0, y0 + 1.0, (1.0 - fx) * fy),
                (x0 + 1.0, y0 + 1.0, fx * fy),
            ];
            for (nx, ny, wt) in taps {
                if wt == 0.0 || nx < 0.0 || ny < 0.0 || nx >= w as f32 || ny >= h as f32 {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                let base = (ny * w + nx) * c;
                let a = acc.data_mut();
                for k in 0..c {
                    a[base + k] += wt * src[k];
                }
                weights.data_mut()[ny * w + nx] += wt;
            }
        }
    }
    Ok(Splat {
        accumulated: acc,
        weights,
    })
}
