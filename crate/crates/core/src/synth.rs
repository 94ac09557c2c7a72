//! Seeded synthetic content: band-limited textures, translated pairs and a
//! Gaussian blob moving along a quadratic trajectory.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imaging::{gaussian_blur, sample_bilinear, Frame, Raster};

/// White noise blurred by `sigma`, then rescaled per channel to `[0.1, 0.9]`.
pub fn band_limited_noise(height: usize, width: usize, channels: usize, sigma: f32, seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..height * width * channels).map(|_| rng.gen::<f32>()).collect();
    let noise = Raster::new(height, width, channels, data).expect("noise shape");
    let mut smooth = gaussian_blur(&noise, sigma).expect("positive sigma");
    for c in 0..channels {
        let (mut lo, mut hi) = (f32::MAX, f32::MIN);
        for px in smooth.data().chunks_exact(channels) {
            lo = lo.min(px[c]);
            hi = hi.max(px[c]);
        }
        let span = (hi - lo).max(1e-6);
        for px in smooth.data_mut().chunks_exact_mut(channels) {
            px[c] = 0.1 + 0.8 * (px[c] - lo) / span;
        }
    }
    Frame::from_raster(smooth).expect("frame channels")
}

/// Returns `(a, b)` with `b(x) = a(x - d)`, so the flow from `a` to `b` is
/// the constant `d = (du, dv)`. Both are cut from one larger texture, so no
/// border is invented.
pub fn shifted_pair(height: usize, width: usize, du: f32, dv: f32, seed: u64) -> (Frame, Frame) {
    let margin = (du.abs().max(dv.abs()).ceil() as usize) + 2;
    let big = band_limited_noise(height + 2 * margin, width + 2 * margin, 3, 2.0, seed);
    let m = margin as f32;
    let crop = |ox: f32, oy: f32| {
        let mut out = Raster::zeros(height, width, 3);
        let mut px = [0.0f32; 3];
        for y in 0..height {
            for x in 0..width {
                sample_bilinear(big.as_raster(), y as f32 + oy, x as f32 + ox, &mut px);
                for (c, &v) in px.iter().enumerate() {
                    out.set(y, x, c, v);
                }
            }
        }
        Frame::from_raster(out).expect("rgb")
    };
    (crop(m, m), crop(m - du, m - dv))
}

/// `p(i) = start + velocity * i + acceleration * i^2 / 2`, in pixels per
/// frame index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticTrajectory {
    pub start: (f32, f32),
    pub velocity: (f32, f32),
    pub acceleration: (f32, f32),
}

impl QuadraticTrajectory {
    pub fn position(&self, i: f32) -> (f32, f32) {
        (
            self.start.0 + self.velocity.0 * i + 0.5 * self.acceleration.0 * i * i,
            self.start.1 + self.velocity.1 * i + 0.5 * self.acceleration.1 * i * i,
        )
    }
}

/// A colored Gaussian blob composited over a static texture.
#[derive(Clone, Debug)]
pub struct BlobClip {
    pub height: usize,
    pub width: usize,
    pub frame_count: usize,
    pub blob_sigma: f32,
    pub blob_color: [f32; 3],
    pub trajectory: QuadraticTrajectory,
    pub background_sigma: f32,
    pub seed: u64,
}

impl BlobClip {
    pub fn background(&self) -> Frame {
        let tex = band_limited_noise(self.height, self.width, 3, self.background_sigma, self.seed);
        // Compress to [0.3, 0.7] so the blob stands out.
        Frame::from_raster(tex.as_raster().map(|v| 0.3 + 0.4 * (v - 0.1) / 0.8))
            .expect("frame channels")
    }

    /// Blob center `(x, y)` at frame `i`.
    pub fn center(&self, i: usize) -> (f32, f32) {
        self.trajectory.position(i as f32)
    }

    fn render(&self, bg: &Frame, i: usize) -> Frame {
        let (cx, cy) = self.center(i);
        let s2 = 2.0 * self.blob_sigma * self.blob_sigma;
        Frame::from_fn(self.height, self.width, 3, |y, x, c| {
            let d2 = (x as f32 - cx).powi(2) + (y as f32 - cy).powi(2);
            let alpha = (-d2 / s2).exp();
            bg.get(y, x, c) * (1.0 - alpha) + self.blob_color[c] * alpha
        })
    }

    pub fn frames(&self) -> Vec<Frame> {
        let bg = self.background();
        (0..self.frame_count).map(|i| self.render(&bg, i)).collect()
    }
}

/// Intensity-weighted centroid `(x, y)` of `max(0, |frame - background|
/// - threshold)` summed over channels.
pub fn blob_centroid(frame: &Frame, background: &Frame, threshold: f32) -> Option<(f32, f32)> {
    let (mut sx, mut sy, mut sw) = (0.0f64, 0.0f64, 0.0f64);
    for y in 0..frame.height() {
        for x in 0..frame.width() {
            let d: f32 = frame
                .pixel(y, x)
                .iter()
                .zip(background.pixel(y, x))
                .map(|(a, b)| (a - b).abs())
                .sum();
            let w = (d - threshold).max(0.0) as f64;
            sx += w * x as f64;
            sy += w * y as f64;
            sw += w;
        }
    }
    (sw > 0.0).then(|| ((sx / sw) as f32, (sy / sw) as f32))
}
