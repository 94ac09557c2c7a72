//! Raster types and the resampling, warping and filtering kernels that the
//! rest of the pipeline is built from.
//!
//! Every raster is row-major with interleaved channels. Sampling uses the
//! align-corners-false convention (pixel `i` has its center at `i`, and an
//! output pixel `i` of an `n -> m` resize maps to `(i + 0.5) * n / m - 0.5`)
//! with edge-clamped addressing.

mod blur;
mod io;
mod resample;
mod warp;

use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

pub use blur::{gaussian_blur, gaussian_kernel, structure_detail_decompose, DEFAULT_STRUCTURE_SIGMA};
pub use io::{decode_png, encode_png, read_png, write_png};
pub use resample::{
    bicubic_resize, bicubic_resize_raster, bilinear_resize, bilinear_upsample, catmull_rom,
    BICUBIC_A,
};
pub use warp::{backward_warp, forward_splat, sample_bilinear, Splat};

/// Rec.601 luma weights.
pub const LUMA_WEIGHTS: [f32; 3] = [0.299, 0.587, 0.114];

/// Dense multi-channel `f32` image.
#[derive(Clone, PartialEq)]
pub struct Raster {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl fmt::Debug for Raster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Raster")
            .field("height", &self.height)
            .field("width", &self.width)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl Raster {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::InvalidArgument(format!(
                "raster dimensions must be non-zero, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::dims(
                "Raster::new",
                height * width * channels,
                data.len(),
            ));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f32) -> Self {
        assert!(height > 0 && width > 0 && channels > 0, "empty raster");
        Self {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self::filled(height, width, channels, 0.0)
    }

    /// Builds a raster from `f(y, x, c)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        f: impl Fn(usize, usize, usize) -> f32,
    ) -> Self {
        let mut r = Self::zeros(height, width, channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    r.data[(y * width + x) * channels + c] = f(y, x, c);
                }
            }
        }
        r
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn row_len(&self) -> usize {
        self.width * self.channels
    }

    pub fn same_size(&self, other: &Raster) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub(crate) fn ensure_same_size(&self, other: &Raster, op: &'static str) -> Result<()> {
        if self.same_size(other) {
            Ok(())
        } else {
            Err(Error::dims(
                op,
                format!("{}x{}", self.height, self.width),
                format!("{}x{}", other.height, other.width),
            ))
        }
    }

    pub(crate) fn ensure_same_shape(&self, other: &Raster, op: &'static str) -> Result<()> {
        if self.same_size(other) && self.channels == other.channels {
            Ok(())
        } else {
            Err(Error::dims(op, self.shape_string(), other.shape_string()))
        }
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.height, self.width, self.channels)
    }

    /// Stacks rasters of identical size along the channel axis.
    pub fn concat_channels(parts: &[&Raster]) -> Result<Raster> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?;
        for p in parts {
            first.ensure_same_size(p, "concat_channels")?;
        }
        let channels: usize = parts.iter().map(|p| p.channels).sum();
        let mut data = Vec::with_capacity(first.height * first.width * channels);
        for i in 0..first.height * first.width {
            for p in parts {
                data.extend_from_slice(&p.data[i * p.channels..(i + 1) * p.channels]);
            }
        }
        Raster::new(first.height, first.width, channels, data)
    }

    /// Copies channels `start..start + count` into a new raster.
    pub fn channel_range(&self, start: usize, count: usize) -> Result<Raster> {
        if count == 0 || start + count > self.channels {
            return Err(Error::InvalidArgument(format!(
                "channel range {start}..{} out of {}",
                start + count,
                self.channels
            )));
        }
        let mut data = Vec::with_capacity(self.height * self.width * count);
        for px in self.data.chunks_exact(self.channels) {
            data.extend_from_slice(&px[start..start + count]);
        }
        Raster::new(self.height, self.width, count, data)
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Raster {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn zip_map(
        &self,
        other: &Raster,
        op: &'static str,
        f: impl Fn(f32, f32) -> f32,
    ) -> Result<Raster> {
        self.ensure_same_shape(other, op)?;
        Ok(self.with_data(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// Same shape, new contents.
    pub(crate) fn with_data(&self, data: Vec<f32>) -> Raster {
        debug_assert_eq!(data.len(), self.data.len());
        Raster {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Common access to the typed raster wrappers, used by the generic kernels.
pub trait RasterKind: Sized {
    fn raster(&self) -> &Raster;
    /// Rewraps a raster produced by a shape-preserving kernel.
    fn rewrap(raster: Raster) -> Self;
}

impl RasterKind for Raster {
    fn raster(&self) -> &Raster {
        self
    }
    fn rewrap(raster: Raster) -> Self {
        raster
    }
}

macro_rules! raster_newtype {
    ($name:ident) => {
        impl Deref for $name {
            type Target = Raster;
            fn deref(&self) -> &Raster {
                &self.0
            }
        }

        impl $name {
            pub fn as_raster(&self) -> &Raster {
                &self.0
            }

            pub fn into_raster(self) -> Raster {
                self.0
            }
        }
    };
}

/// Image with 1 or 3 channels, nominally in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame(Raster);
raster_newtype!(Frame);

impl Frame {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        Self::from_raster(Raster::new(height, width, channels, data)?)
    }

    pub fn from_raster(raster: Raster) -> Result<Self> {
        if raster.channels != 1 && raster.channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "frames have 1 or 3 channels, got {}",
                raster.channels
            )));
        }
        Ok(Frame(raster))
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f32) -> Self {
        Self::from_raster(Raster::filled(height, width, channels, value))
            .expect("frame channel count")
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        f: impl Fn(usize, usize, usize) -> f32,
    ) -> Self {
        Self::from_raster(Raster::from_fn(height, width, channels, f)).expect("frame channel count")
    }

    pub fn clamped(mut self) -> Self {
        for v in self.0.data.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        self
    }

    /// Single-channel Rec.601 luma. Grayscale frames are returned as is.
    pub fn luma(&self) -> Raster {
        if self.channels == 1 {
            return self.0.clone();
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2])
            .collect();
        Raster::new(self.height, self.width, 1, data).expect("luma shape")
    }
}

impl RasterKind for Frame {
    fn raster(&self) -> &Raster {
        &self.0
    }
    fn rewrap(raster: Raster) -> Self {
        Frame(raster)
    }
}

/// Per-pixel displacement `(u, v)` in pixels of the grid it is stored on;
/// `u` points right and `v` points down.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField(Raster);
raster_newtype!(FlowField);

impl FlowField {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        Self::from_raster(Raster::new(height, width, 2, data)?)
    }

    pub fn from_raster(raster: Raster) -> Result<Self> {
        if raster.channels != 2 {
            return Err(Error::InvalidArgument(format!(
                "flow fields have 2 channels, got {}",
                raster.channels
            )));
        }
        Ok(FlowField(raster))
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        FlowField(Raster::zeros(height, width, 2))
    }

    pub fn constant(height: usize, width: usize, u: f32, v: f32) -> Self {
        Self::from_fn(height, width, |_, _| (u, v))
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> (f32, f32)) -> Self {
        let mut r = Raster::zeros(height, width, 2);
        for y in 0..height {
            for x in 0..width {
                let (u, v) = f(y, x);
                r.set(y, x, 0, u);
                r.set(y, x, 1, v);
            }
        }
        FlowField(r)
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize) -> (f32, f32) {
        let p = self.pixel(y, x);
        (p[0], p[1])
    }

    /// Multiplies every displacement by `s`.
    pub fn scaled(&self, s: f32) -> FlowField {
        FlowField(self.0.map(|v| v * s))
    }

    pub fn add(&self, other: &FlowField) -> Result<FlowField> {
        Ok(FlowField(self.0.zip_map(&other.0, "FlowField::add", |a, b| a + b)?))
    }

    /// Scales `u` and `v` separately, for resizes with unequal axis ratios.
    pub(crate) fn scaled_axes(&self, su: f32, sv: f32) -> FlowField {
        let mut out = self.clone();
        for p in out.0.data.chunks_exact_mut(2) {
            p[0] *= su;
            p[1] *= sv;
        }
        out
    }
}

impl RasterKind for FlowField {
    fn raster(&self) -> &Raster {
        &self.0
    }
    fn rewrap(raster: Raster) -> Self {
        FlowField(raster)
    }
}

/// Single-channel weight map with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask(Raster);
raster_newtype!(Mask);

impl Mask {
    /// Values are clamped into `[0, 1]`.
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        Self::from_raster(Raster::new(height, width, 1, data)?)
    }

    pub fn from_raster(mut raster: Raster) -> Result<Self> {
        if raster.channels != 1 {
            return Err(Error::InvalidArgument(format!(
                "masks have 1 channel, got {}",
                raster.channels
            )));
        }
        for v in raster.data.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Mask(raster))
    }

    pub fn constant(height: usize, width: usize, value: f32) -> Self {
        Mask(Raster::filled(height, width, 1, value.clamp(0.0, 1.0)))
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize) -> f32 {
        self.get(y, x, 0)
    }
}

impl RasterKind for Mask {
    fn raster(&self) -> &Raster {
        &self.0
    }
    fn rewrap(raster: Raster) -> Self {
        Mask(raster)
    }
}
