//! Space-time video super-resolution: frames are interpolated in low
//! resolution with a quadratic motion model, the even frames are upscaled
//! 4x, and the low-resolution flows and blending mask are upsampled and
//! reused to synthesize the high-resolution intermediate frames.

pub mod error;
pub mod flow;
pub mod hr;
pub mod imaging;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod qfi;
pub mod sr;
pub mod synth;

pub use error::{Error, Result};
pub use imaging::{FlowField, Frame, Mask, Raster};

/// Spatial upscaling factor of the pipeline.
pub const SCALE: usize = 4;
