//! Spatial super-resolution of the input frames. The interpolated LR frame
//! never goes through here: only the original inputs are upscaled.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imaging::{bicubic_resize, read_png, Frame};
use crate::{par, SCALE};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum SrMethod {
    /// Independent 4x bicubic upscaling of each frame.
    #[default]
    Bicubic,
    /// HR frames produced elsewhere, stored as PNGs under this directory
    /// with the same file names as the LR inputs.
    Precomputed(PathBuf),
}

/// One LR input frame and its file name.
#[derive(Clone, Copy, Debug)]
pub struct SrInput<'a> {
    pub file_name: &'a str,
    pub frame: &'a Frame,
}

pub fn super_resolve(inputs: &[SrInput<'_>], method: &SrMethod, scale: usize) -> Result<Vec<Frame>> {
    if scale != SCALE {
        return Err(Error::InvalidArgument(format!(
            "only {SCALE}x spatial upscaling is supported, got {scale}"
        )));
    }
    par::map_range(inputs.len(), |i| resolve_one(&inputs[i], method, scale))
        .into_iter()
        .collect()
}

fn resolve_one(input: &SrInput<'_>, method: &SrMethod, scale: usize) -> Result<Frame> {
    let (h, w) = (input.frame.height() * scale, input.frame.width() * scale);
    match method {
        SrMethod::Bicubic => bicubic_resize(input.frame, h, w),
        SrMethod::Precomputed(dir) => load_precomputed(dir, input, h, w),
    }
}

fn load_precomputed(dir: &Path, input: &SrInput<'_>, h: usize, w: usize) -> Result<Frame> {
    let path = dir.join(input.file_name);
    if !path.is_file() {
        return Err(Error::Ingestion {
            path,
            reason: "precomputed HR frame is missing".into(),
        });
    }
    let frame = read_png(&path).map_err(|e| Error::Ingestion {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    if frame.height() != h || frame.width() != w {
        return Err(Error::Ingestion {
            path,
            reason: format!(
                "precomputed HR frame is {}x{}, expected {h}x{w}",
                frame.height(),
                frame.width()
            ),
        });
    }
    if frame.channels() != input.frame.channels() {
        return Err(Error::Ingestion {
            path,
            reason: format!(
                "precomputed HR frame has {} channels, LR input has {}",
                frame.channels(),
                input.frame.channels()
            ),
        });
    }
    Ok(frame)
}
