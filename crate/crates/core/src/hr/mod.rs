//! High-resolution intermediate frames from upsampled LR flows and mask,
//! followed by residual refinement.

pub mod conv;

pub use conv::{conv_forward, Activation, ConvLayer, WeightBundle};

use crate::error::{Error, Result};
use crate::imaging::{bilinear_upsample, FlowField, Frame, Mask, Raster, RasterKind};
use crate::qfi::{blend_warped, Blend};
use crate::SCALE;

/// Channels in/out of a frame refinement network.
pub const FRAME_REFINE_CHANNELS: (usize, usize) = (20, 3);

/// Bilinear upsampling by `factor` with displacements multiplied by
/// `factor`.
pub fn upsample_flow(f: &FlowField, factor: usize) -> Result<FlowField> {
    Ok(bilinear_upsample(f, factor)?.scaled(factor as f32))
}

pub fn upsample_flow_to_hr(f: &FlowField) -> Result<FlowField> {
    upsample_flow(f, SCALE)
}

pub fn upsample_mask_to_hr(m: &Mask) -> Result<Mask> {
    bilinear_upsample(m, SCALE)
}

/// The LR blend evaluated on HR frames with the upsampled flows and mask.
/// Both warps read HR frames.
pub fn synthesize_coarse_hr(
    i2_hr: &Frame,
    i4_hr: &Frame,
    f_t2_hr: &FlowField,
    f_t4_hr: &FlowField,
    m_hr: &Mask,
    t: f32,
) -> Result<Blend> {
    blend_warped(i2_hr, i4_hr, f_t2_hr, f_t4_hr, m_hr, t)
}

/// Everything the frame refinement network sees.
#[derive(Clone, Copy, Debug)]
pub struct RefineInputs<'a> {
    pub coarse: &'a Frame,
    pub i2_hr: &'a Frame,
    pub i4_hr: &'a Frame,
    pub f_t2_hr: &'a FlowField,
    pub f_t4_hr: &'a FlowField,
    pub m_hr: &'a Mask,
    pub warped2: &'a Frame,
    pub warped4: &'a Frame,
}

impl RefineInputs<'_> {
    /// `[coarse, I2, I4, f_t2, f_t4, M, warped2, warped4]` along channels.
    pub fn stack(&self) -> Result<Raster> {
        Raster::concat_channels(&[
            self.coarse,
            self.i2_hr,
            self.i4_hr,
            self.f_t2_hr,
            self.f_t4_hr,
            self.m_hr,
            self.warped2,
            self.warped4,
        ])
    }
}

/// `clamp(coarse + residual, 0, 1)`; the residual is zero without weights.
pub fn refine_hr_frame(inputs: &RefineInputs<'_>, weights: Option<&WeightBundle>) -> Result<Frame> {
    let Some(net) = weights else {
        return Ok(inputs.coarse.clone());
    };
    let (cin, cout) = FRAME_REFINE_CHANNELS;
    net.ensure_contract(cin, cout, "frame refinement")?;
    let stack = inputs.stack()?;
    if stack.channels() != cin {
        return Err(Error::Config(format!(
            "frame refinement needs RGB frames ({cin} stacked channels), got {}",
            stack.channels()
        )));
    }
    let residual = conv_forward(net, &stack)?;
    let out = inputs
        .coarse
        .as_raster()
        .zip_map(&residual, "refine_hr_frame", |c, r| (c + r).clamp(0.0, 1.0))?;
    Ok(Frame::rewrap(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::backward_warp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_flow_is_scaled() {
        let up = upsample_flow_to_hr(&FlowField::constant(3, 5, 1.0, 0.0)).unwrap();
        assert_eq!((up.height(), up.width()), (12, 20));
        assert!(up.data().chunks(2).all(|p| p == [4.0, 0.0]));
        let z = upsample_flow_to_hr(&FlowField::zeros(2, 2)).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
    }

    // Bilinear weights computed from the coordinate map directly.
    fn bilinear_oracle(src: &Raster, oy: usize, ox: usize, factor: usize, c: usize) -> f64 {
        let map = |o: usize, n: usize| ((o as f64 + 0.5) / factor as f64 - 0.5).max(0.0).min((n - 1) as f64);
        let (sy, sx) = (map(oy, src.height()), map(ox, src.width()));
        let mut acc = 0.0;
        for y in 0..src.height() {
            for x in 0..src.width() {
                let w = (1.0 - (sy - y as f64).abs()).max(0.0) * (1.0 - (sx - x as f64).abs()).max(0.0);
                acc += w * src.get(y, x, c) as f64;
            }
        }
        acc
    }

    #[test]
    fn varying_flow_matches_scaled_oracle() {
        let f = FlowField::new(2, 2, vec![0.5, -1.0, 1.5, 0.25, -2.0, 0.0, 1.0, 3.0]).unwrap();
        let up = upsample_flow_to_hr(&f).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                for c in 0..2 {
                    let e = 4.0 * bilinear_oracle(f.as_raster(), y, x, 4, c);
                    assert!((up.get(y, x, c) as f64 - e).abs() < 1e-5);
                }
            }
        }
        // HR pixels whose source coordinate clamps onto an LR sample carry
        // exactly 4x that sample.
        assert_eq!(up.at(0, 0), (2.0, -4.0));
        assert_eq!(up.at(7, 7), (4.0, 12.0));
        assert_eq!(up.at(0, 7), (6.0, 1.0));
    }

    #[test]
    fn mask_upsampling() {
        let m = upsample_mask_to_hr(&Mask::constant(3, 3, 0.5)).unwrap();
        assert!(m.data().iter().all(|&v| v == 0.5));
        let m = upsample_mask_to_hr(&Mask::constant(3, 3, 1.0)).unwrap();
        assert!(m.data().iter().all(|&v| v == 1.0));
        let checker = Mask::new(4, 4, (0..16).map(|i| ((i / 4 + i % 4) % 2) as f32).collect()).unwrap();
        let up = upsample_mask_to_hr(&checker).unwrap();
        for y in 0..16 {
            for x in 0..16 {
                let v = up.at(y, x);
                assert!((0.0..=1.0).contains(&v));
                let e = bilinear_oracle(checker.as_raster(), y, x, 4, 0);
                assert!((v as f64 - e).abs() < 1e-6);
            }
        }
    }

    fn random_frame(h: usize, w: usize, rng: &mut impl Rng) -> Frame {
        Frame::new(h, w, 3, (0..h * w * 3).map(|_| rng.gen()).collect()).unwrap()
    }

    #[test]
    fn coarse_collapses() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, b) = (random_frame(8, 8, &mut rng), random_frame(8, 8, &mut rng));
        let f = FlowField::from_fn(8, 8, |y, x| (((x + y) % 3) as f32 * 0.4 - 0.4, 0.3));
        let g = FlowField::constant(8, 8, -0.7, 0.2);
        let one = Mask::constant(8, 8, 1.0);
        let c = synthesize_coarse_hr(&a, &b, &f, &g, &one, 3.0).unwrap();
        assert_eq!(c.frame, backward_warp(&a, &f).unwrap());
        let z = FlowField::zeros(8, 8);
        let m = Mask::new(8, 8, (0..64).map(|_| rng.gen()).collect()).unwrap();
        let c = synthesize_coarse_hr(&a, &a, &z, &z, &m, 3.0).unwrap();
        for (x, y) in c.frame.data().iter().zip(a.data()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    fn refine_inputs<'a>(
        coarse: &'a Frame,
        f: &'a FlowField,
        m: &'a Mask,
    ) -> RefineInputs<'a> {
        RefineInputs {
            coarse,
            i2_hr: coarse,
            i4_hr: coarse,
            f_t2_hr: f,
            f_t4_hr: f,
            m_hr: m,
            warped2: coarse,
            warped4: coarse,
        }
    }

    #[test]
    fn refinement_identity_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let coarse = random_frame(6, 6, &mut rng);
        let f = FlowField::constant(6, 6, 1.0, 2.0);
        let m = Mask::constant(6, 6, 0.3);
        let inputs = refine_inputs(&coarse, &f, &m);
        assert_eq!(refine_hr_frame(&inputs, None).unwrap(), coarse);

        let net = WeightBundle::new(vec![
            ConvLayer::new(20, 5, 3, 3, Activation::Relu, vec![0.05; 900], vec![0.1; 5]).unwrap(),
            ConvLayer::new(5, 3, 1, 1, Activation::Linear, vec![0.0; 15], vec![0.0; 3]).unwrap(),
        ])
        .unwrap();
        let out = refine_hr_frame(&inputs, Some(&net)).unwrap();
        assert!(out.data().iter().zip(coarse.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn refinement_bias_residual() {
        let coarse = Frame::from_fn(2, 2, 3, |y, x, c| [0.2, 0.95, 0.5, 0.0][y * 2 + x] + c as f32 * 0.01);
        let f = FlowField::zeros(2, 2);
        let m = Mask::constant(2, 2, 0.5);
        let net = WeightBundle::new(vec![ConvLayer::new(
            20,
            3,
            1,
            1,
            Activation::Linear,
            vec![0.0; 60],
            vec![0.1, 0.0, 0.0],
        )
        .unwrap()])
        .unwrap();
        let out = refine_hr_frame(&refine_inputs(&coarse, &f, &m), Some(&net)).unwrap();
        for y in 0..2 {
            for x in 0..2 {
                assert_eq!(out.get(y, x, 0), (coarse.get(y, x, 0) + 0.1).min(1.0));
                assert_eq!(out.get(y, x, 1), coarse.get(y, x, 1));
                assert_eq!(out.get(y, x, 2), coarse.get(y, x, 2));
            }
        }
        assert_eq!(out.get(0, 1, 0), 1.0);
    }

    #[test]
    fn refinement_contract() {
        let coarse = Frame::filled(2, 2, 3, 0.5);
        let f = FlowField::zeros(2, 2);
        let m = Mask::constant(2, 2, 0.5);
        let net = WeightBundle::new(vec![ConvLayer::new(20, 1, 1, 1, Activation::Linear, vec![0.0; 20], vec![0.0]).unwrap()])
            .unwrap();
        assert!(matches!(
            refine_hr_frame(&refine_inputs(&coarse, &f, &m), Some(&net)),
            Err(Error::Config(_))
        ));
        assert_eq!(refine_inputs(&coarse, &f, &m).stack().unwrap().channels(), 20);
    }
}
