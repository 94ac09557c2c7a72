use super::{Frame, Raster, RasterKind};
use crate::error::{Error, Result};
use crate::par;

/// Catmull-Rom parameter of the cubic convolution kernel.
pub const BICUBIC_A: f64 = -0.5;

/// Keys cubic convolution kernel with `a = -0.5`.
pub fn catmull_rom(x: f64) -> f64 {
    let a = BICUBIC_A;
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Input coordinate of output pixel `i` when resizing `n_in -> n_out`.
#[inline]
fn source_coord(i: usize, n_in: usize, n_out: usize) -> f64 {
    (i as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5
}

struct LinearTap {
    i0: usize,
    i1: usize,
    frac: f32,
}

fn linear_taps(n_in: usize, n_out: usize) -> Vec<LinearTap> {
    (0..n_out)
        .map(|i| {
            let s = source_coord(i, n_in, n_out).clamp(0.0, (n_in - 1) as f64);
            let i0 = s.floor() as usize;
            LinearTap {
                i0,
                i1: (i0 + 1).min(n_in - 1),
                frac: (s - i0 as f64) as f32,
            }
        })
        .collect()
}

/// Bilinear resize of any raster kind to `out_h x out_w`. Values are not
/// rescaled; flow callers multiply displacements themselves.
pub fn bilinear_resize<T: RasterKind>(field: &T, out_h: usize, out_w: usize) -> Result<T> {
    let src = field.raster();
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidArgument(format!(
            "resize target must be non-empty, got {out_h}x{out_w}"
        )));
    }
    let c = src.channels();
    let xs = linear_taps(src.width(), out_w);
    let ys = linear_taps(src.height(), out_h);
    let d = src.data();
    let in_row = src.row_len();
    let mut out = Raster::zeros(out_h, out_w, c);
    par::for_each_row(out.data_mut(), out_w * c, |y, row| {
        let ty = &ys[y];
        let r0 = &d[ty.i0 * in_row..(ty.i0 + 1) * in_row];
        let r1 = &d[ty.i1 * in_row..(ty.i1 + 1) * in_row];
        for (x, tx) in xs.iter().enumerate() {
            for k in 0..c {
                let a = r0[tx.i0 * c + k];
                let b = r0[tx.i1 * c + k];
                let p = r1[tx.i0 * c + k];
                let q = r1[tx.i1 * c + k];
                let top = a + tx.frac * (b - a);
                let bottom = p + tx.frac * (q - p);
                row[x * c + k] = top + ty.frac * (bottom - top);
            }
        }
    });
    Ok(T::rewrap(out))
}

/// Bilinear upsampling by an integer factor.
pub fn bilinear_upsample<T: RasterKind>(field: &T, factor: usize) -> Result<T> {
    if factor < 1 {
        return Err(Error::InvalidArgument(format!(
            "upsampling factor must be >= 1, got {factor}"
        )));
    }
    let r = field.raster();
    bilinear_resize(field, r.height() * factor, r.width() * factor)
}

struct CubicTaps {
    start: Vec<usize>,
    len: Vec<usize>,
    index: Vec<usize>,
    weight: Vec<f32>,
}

/// Per-output-pixel tap lists. When shrinking, the kernel is stretched by
/// the scale ratio so the degradation is antialiased.
fn cubic_taps(n_in: usize, n_out: usize) -> CubicTaps {
    let ratio = n_in as f64 / n_out as f64;
    let stretch = ratio.max(1.0);
    let support = 2.0 * stretch;
    let mut taps = CubicTaps {
        start: Vec::with_capacity(n_out),
        len: Vec::with_capacity(n_out),
        index: Vec::new(),
        weight: Vec::new(),
    };
    let mut raw = Vec::new();
    for i in 0..n_out {
        let center = source_coord(i, n_in, n_out);
        let lo = (center - support).floor() as i64 + 1;
        let hi = (center + support).floor() as i64;
        raw.clear();
        for j in lo..=hi {
            let w = catmull_rom((j as f64 - center) / stretch);
            if w != 0.0 {
                raw.push((j.clamp(0, n_in as i64 - 1) as usize, w));
            }
        }
        let total: f64 = raw.iter().map(|&(_, w)| w).sum();
        taps.start.push(taps.index.len());
        taps.len.push(raw.len());
        for &(j, w) in &raw {
            taps.index.push(j);
            taps.weight.push((w / total) as f32);
        }
    }
    taps
}

/// Separable cubic-convolution resize without output clamping.
pub fn bicubic_resize_raster(src: &Raster, out_h: usize, out_w: usize) -> Result<Raster> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidArgument(format!(
            "resize target must be non-empty, got {out_h}x{out_w}"
        )));
    }
    let c = src.channels();
    let (in_h, in_w) = (src.height(), src.width());
    let xt = cubic_taps(in_w, out_w);
    let yt = cubic_taps(in_h, out_h);

    let mut horiz = Raster::zeros(in_h, out_w, c);
    let d = src.data();
    par::for_each_row(horiz.data_mut(), out_w * c, |y, row| {
        let line = &d[y * in_w * c..(y + 1) * in_w * c];
        for x in 0..out_w {
            let (s, n) = (xt.start[x], xt.len[x]);
            for k in 0..c {
                let mut acc = 0.0f32;
                for t in s..s + n {
                    acc += xt.weight[t] * line[xt.index[t] * c + k];
                }
                row[x * c + k] = acc;
            }
        }
    });

    let mut out = Raster::zeros(out_h, out_w, c);
    let hd = horiz.data();
    let stride = out_w * c;
    par::for_each_row(out.data_mut(), stride, |y, row| {
        let (s, n) = (yt.start[y], yt.len[y]);
        for t in s..s + n {
            let w = yt.weight[t];
            let line = &hd[yt.index[t] * stride..(yt.index[t] + 1) * stride];
            for (o, &v) in row.iter_mut().zip(line) {
                *o += w * v;
            }
        }
    });
    Ok(out)
}

/// Bicubic (Catmull-Rom) resize of a frame; output is clamped to `[0, 1]`.
pub fn bicubic_resize(frame: &Frame, out_h: usize, out_w: usize) -> Result<Frame> {
    let r = bicubic_resize_raster(frame.as_raster(), out_h, out_w)?;
    Ok(Frame::rewrap(r).clamped())
}
