use super::{Frame, Raster, RasterKind};
use crate::error::{Error, Result};
use crate::par;

/// Gaussian sigma separating structure from detail.
pub const DEFAULT_STRUCTURE_SIGMA: f32 = 1.5;

/// Normalized 1D Gaussian taps, truncated at `ceil(4 sigma)`.
pub fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let radius = (4.0 * sigma).ceil() as i64;
    let s2 = 2.0 * (sigma as f64) * (sigma as f64);
    let raw: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / s2).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| (w / total) as f32).collect()
}

fn convolve_axis(src: &Raster, taps: &[f32], horizontal: bool) -> Raster {
    let (h, w, c) = (src.height(), src.width(), src.channels());
    let radius = (taps.len() / 2) as i64;
    let d = src.data();
    let mut out = Raster::zeros(h, w, c);
    par::for_each_row(out.data_mut(), w * c, |y, row| {
        for x in 0..w {
            for k in 0..c {
                let mut acc = 0.0f32;
                for (t, &wt) in taps.iter().enumerate() {
                    let off = t as i64 - radius;
                    let (sy, sx) = if horizontal {
                        (y, (x as i64 + off).clamp(0, w as i64 - 1) as usize)
                    } else {
                        ((y as i64 + off).clamp(0, h as i64 - 1) as usize, x)
                    };
                    acc += wt * d[(sy * w + sx) * c + k];
                }
                row[x * c + k] = acc;
            }
        }
    });
    out
}

/// Separable, edge-clamped Gaussian blur.
pub fn gaussian_blur<T: RasterKind>(field: &T, sigma: f32) -> Result<T> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "blur sigma must be positive, got {sigma}"
        )));
    }
    let taps = gaussian_kernel(sigma);
    let tmp = convolve_axis(field.raster(), &taps, true);
    Ok(T::rewrap(convolve_axis(&tmp, &taps, false)))
}

/// Splits a frame into a low-frequency structure component and the detail
/// residual, with `structure + detail == frame`.
pub fn structure_detail_decompose(frame: &Frame, sigma: f32) -> Result<(Frame, Frame)> {
    let structure = gaussian_blur(frame, sigma)?;
    let detail = frame
        .as_raster()
        .zip_map(structure.as_raster(), "structure_detail", |f, s| f - s)?;
    Ok((structure, Frame::rewrap(detail)))
}
