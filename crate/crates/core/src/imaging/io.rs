use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

use super::Frame;
use crate::error::{Error, Result};

/// Decodes an 8-bit PNG into a frame with values `k / 255`.
pub fn read_png(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    from_dynamic(img)
}

pub fn decode_png(bytes: &[u8]) -> Result<Frame> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|source| {
        Error::Image {
            path: "<memory>".into(),
            source,
        }
    })?;
    from_dynamic(img)
}

fn from_dynamic(img: DynamicImage) -> Result<Frame> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => {
            Frame::new(h, w, 1, buf.into_raw().iter().map(|&v| v as f32 / 255.0).collect())
        }
        other => {
            let rgb = other.to_rgb8();
            Frame::new(h, w, 3, rgb.into_raw().iter().map(|&v| v as f32 / 255.0).collect())
        }
    }
}

#[inline]
fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn to_dynamic(frame: &Frame) -> DynamicImage {
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let bytes: Vec<u8> = frame.data().iter().map(|&v| quantize(v)).collect();
    if frame.channels() == 1 {
        DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, bytes).expect("buffer size"),
        )
    } else {
        DynamicImage::ImageRgb8(ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, bytes).expect("buffer size"))
    }
}

/// Quantizes to 8 bits (round to nearest) and writes a PNG.
pub fn write_png(frame: &Frame, path: &Path) -> Result<()> {
    to_dynamic(frame)
        .save_with_format(path, ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

pub fn encode_png(frame: &Frame) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    to_dynamic(frame)
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: "<memory>".into(),
            source,
        })?;
    Ok(out.into_inner())
}
