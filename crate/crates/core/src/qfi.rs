//! Low-resolution frame interpolation between `I2` and `I4` from the four
//! frames `I0, I2, I4, I6`: quadratic intermediate flows, flow reversal,
//! optional flow refinement, the blending mask and the weighted blend.

use crate::error::{Error, Result};
use crate::hr::conv::{conv_forward, Activation, WeightBundle};
use crate::imaging::{backward_warp, forward_splat, FlowField, Frame, Mask, Raster};
use crate::par;

/// Splat weights at or below this are treated as holes.
pub const REVERSAL_WEIGHT_EPS: f32 = 1e-6;
/// Regularizer of the consistency-based mask.
pub const MASK_EPS: f32 = 1e-3;
/// Floor on the blend denominator.
pub const BLEND_DENOM_FLOOR: f32 = 1e-8;

/// Channels in/out of a flow refinement network.
pub const FLOW_REFINE_CHANNELS: (usize, usize) = (10, 4);
/// Channels in/out of a mask network.
pub const MASK_NET_CHANNELS: (usize, usize) = (8, 1);

/// How an intermediate flow is extrapolated from the two flows that leave a
/// center frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MotionModel {
    /// Constant acceleration through the three frames.
    #[default]
    Quadratic,
    /// The quadratic model with its acceleration term dropped.
    Linear,
}

impl std::str::FromStr for MotionModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(MotionModel::Quadratic),
            "linear" => Ok(MotionModel::Linear),
            other => Err(Error::InvalidArgument(format!(
                "unknown motion model {other:?} (expected quadratic or linear)"
            ))),
        }
    }
}

/// Inputs for one interpolated time `t` between `I2` and `I4`.
#[derive(Clone, Copy, Debug)]
pub struct QfiInputs<'a> {
    pub i2: &'a Frame,
    pub i4: &'a Frame,
    pub t: f32,
    pub f20: &'a FlowField,
    pub f24: &'a FlowField,
    pub f42: &'a FlowField,
    pub f46: &'a FlowField,
}

impl QfiInputs<'_> {
    pub fn validate(&self) -> Result<()> {
        ensure_t(self.t)?;
        if self.i2.as_raster().ensure_same_shape(self.i4, "QfiInputs").is_err() {
            return Err(Error::dims("QfiInputs", self.i2.shape_string(), self.i4.shape_string()));
        }
        for f in [self.f20, self.f24, self.f42, self.f46] {
            self.i2.ensure_same_size(f, "QfiInputs")?;
        }
        Ok(())
    }

    /// Time offsets for the flows anchored at `I2` and `I4`.
    pub fn taus(&self) -> (f32, f32) {
        ((self.t - 2.0) / 2.0, (4.0 - self.t) / 2.0)
    }
}

pub(crate) fn ensure_t(t: f32) -> Result<()> {
    if t > 2.0 && t < 4.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "interpolation time must lie strictly inside (2, 4), got {t}"
        )))
    }
}

/// Flow from a center frame to time `tau` (in units of the frame spacing)
/// given the flows to its previous and next neighbours:
/// `0.5 (fwd + back) tau^2 + 0.5 (fwd - back) tau`.
pub fn intermediate_flow(
    back: &FlowField,
    fwd: &FlowField,
    tau: f32,
    model: MotionModel,
) -> Result<FlowField> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must lie strictly inside (0, 1), got {tau}"
        )));
    }
    back.ensure_same_size(fwd, "intermediate_flow")?;
    let accel = match model {
        MotionModel::Quadratic => 0.5 * tau * tau,
        MotionModel::Linear => 0.0,
    };
    let vel = 0.5 * tau;
    let data = back
        .data()
        .iter()
        .zip(fwd.data())
        .map(|(&b, &f)| (f + b) * accel + (f - b) * vel)
        .collect();
    FlowField::new(back.height(), back.width(), data)
}

pub fn quadratic_intermediate_flow(
    f_center_back: &FlowField,
    f_center_fwd: &FlowField,
    tau: f32,
) -> Result<FlowField> {
    intermediate_flow(f_center_back, f_center_fwd, tau, MotionModel::Quadratic)
}

/// Converts a flow anchored at a known frame into one anchored at the
/// target time: `-f(x)` is splatted to `x + f(x)` and normalized, and holes
/// are filled from their valid neighbours.
pub fn reverse_flow(f_src_to_t: &FlowField) -> FlowField {
    let neg = f_src_to_t.scaled(-1.0);
    let splat = forward_splat(&neg, f_src_to_t).expect("same-size splat");
    let (h, w) = (neg.height(), neg.width());
    let mut out = Raster::zeros(h, w, 2);
    let mut valid = vec![false; h * w];
    for i in 0..h * w {
        let wt = splat.weights.data()[i];
        if wt > REVERSAL_WEIGHT_EPS {
            valid[i] = true;
            out.data_mut()[i * 2] = splat.accumulated.data()[i * 2] / wt;
            out.data_mut()[i * 2 + 1] = splat.accumulated.data()[i * 2 + 1] / wt;
        }
    }
    fill_holes(&mut out, &mut valid);
    FlowField::from_raster(out).expect("two channels")
}

/// Repeatedly replaces each hole that touches a valid pixel with the mean of
/// its valid 3x3 neighbours, for at most `h + w` sweeps. Anything still
/// unreached is left at zero.
fn fill_holes(field: &mut Raster, valid: &mut [bool]) {
    let (h, w, c) = (field.height(), field.width(), field.channels());
    if valid.iter().all(|&v| v) || !valid.iter().any(|&v| v) {
        return;
    }
    let mut updates: Vec<(usize, [f32; 4])> = Vec::new();
    for _ in 0..h + w {
        updates.clear();
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if valid[i] {
                    continue;
                }
                let mut sum = [0.0f32; 4];
                let mut n = 0usize;
                for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        let j = yy * w + xx;
                        if valid[j] {
                            for k in 0..c {
                                sum[k] += field.data()[j * c + k];
                            }
                            n += 1;
                        }
                    }
                }
                if n > 0 {
                    for s in sum.iter_mut().take(c) {
                        *s /= n as f32;
                    }
                    updates.push((i, sum));
                }
            }
        }
        if updates.is_empty() {
            break;
        }
        for &(i, v) in &updates {
            field.data_mut()[i * c..(i + 1) * c].copy_from_slice(&v[..c]);
            valid[i] = true;
        }
    }
}

/// Adds a network-predicted residual to the reversed flows. Without weights
/// the flows pass through unchanged.
pub fn refine_flow(
    f_t2: &FlowField,
    f_t4: &FlowField,
    i2: &Frame,
    i4: &Frame,
    weights: Option<&WeightBundle>,
) -> Result<(FlowField, FlowField)> {
    let Some(net) = weights else {
        return Ok((f_t2.clone(), f_t4.clone()));
    };
    let (cin, cout) = FLOW_REFINE_CHANNELS;
    net.ensure_contract(cin, cout, "flow refinement")?;
    let stack = Raster::concat_channels(&[f_t2, f_t4, i2, i4])?;
    if stack.channels() != cin {
        return Err(Error::Config(format!(
            "flow refinement needs RGB frames ({cin} stacked channels), got {}",
            stack.channels()
        )));
    }
    let residual = conv_forward(net, &stack)?;
    let r2 = FlowField::from_raster(residual.channel_range(0, 2)?)?;
    let r4 = FlowField::from_raster(residual.channel_range(2, 2)?)?;
    Ok((f_t2.add(&r2)?, f_t4.add(&r4)?))
}

/// Inputs of the blending-mask stage.
#[derive(Clone, Copy, Debug)]
pub struct MaskInputs<'a> {
    pub f_t2: &'a FlowField,
    pub f_2t: &'a FlowField,
    pub f_t4: &'a FlowField,
    pub f_4t: &'a FlowField,
    /// Frames are only read by the network path.
    pub i2: &'a Frame,
    pub i4: &'a Frame,
}

/// `|f_t(x) + f_back(x + f_t(x))|`: how far the round trip t -> frame -> t
/// lands from where it started.
pub fn consistency_error(f_t: &FlowField, f_back: &FlowField) -> Result<Raster> {
    let back_at = backward_warp(f_back, f_t)?;
    let data = f_t
        .data()
        .chunks_exact(2)
        .zip(back_at.data().chunks_exact(2))
        .map(|(a, b)| ((a[0] + b[0]).powi(2) + (a[1] + b[1]).powi(2)).sqrt())
        .collect();
    Raster::new(f_t.height(), f_t.width(), 1, data)
}

/// Blending mask; close to 1 where the correspondence towards `I2` is the
/// more consistent one.
pub fn estimate_blend_mask(inputs: &MaskInputs<'_>, weights: Option<&WeightBundle>) -> Result<Mask> {
    let (e2, e4) = par::join(
        || consistency_error(inputs.f_t2, inputs.f_2t),
        || consistency_error(inputs.f_t4, inputs.f_4t),
    );
    let (e2, e4) = (e2?, e4?);
    match weights {
        None => {
            let data = e2
                .data()
                .iter()
                .zip(e4.data())
                .map(|(&a, &b)| (b + MASK_EPS) / (a + b + 2.0 * MASK_EPS))
                .collect();
            Mask::new(e2.height(), e2.width(), data)
        }
        Some(net) => {
            let (cin, cout) = MASK_NET_CHANNELS;
            net.ensure_contract(cin, cout, "blend mask")?;
            if net.final_activation() != Activation::Sigmoid {
                return Err(Error::Config(
                    "blend mask network must end in a sigmoid layer".into(),
                ));
            }
            let w2 = backward_warp(inputs.i2, inputs.f_t2)?.luma();
            let w4 = backward_warp(inputs.i4, inputs.f_t4)?.luma();
            let stack = Raster::concat_channels(&[inputs.f_t2, inputs.f_t4, &e2, &e4, &w2, &w4])?;
            Mask::from_raster(conv_forward(net, &stack)?)
        }
    }
}

/// Output of the blend, with the two warped frames it was built from.
#[derive(Clone, Debug)]
pub struct Blend {
    pub frame: Frame,
    pub warped2: Frame,
    pub warped4: Frame,
}

/// `(w2 M bw(I2, f_t2) + w4 (1 - M) bw(I4, f_t4)) / (w2 M + w4 (1 - M))`
/// with `w2 = (4 - t) / 2` and `w4 = (t - 2) / 2`, clamped to `[0, 1]`.
/// Evaluated as `a + r (b - a)` so `M = 1` and `I2 == I4` reproduce the
/// warped frame bit for bit.
/// Resolution independent; used for both the LR and the coarse HR frame.
pub fn blend_warped(
    i2: &Frame,
    i4: &Frame,
    f_t2: &FlowField,
    f_t4: &FlowField,
    mask: &Mask,
    t: f32,
) -> Result<Blend> {
    ensure_t(t)?;
    i2.as_raster().ensure_same_shape(i4, "blend_warped")?;
    for r in [f_t2.as_raster(), f_t4.as_raster(), mask.as_raster()] {
        i2.ensure_same_size(r, "blend_warped")?;
    }
    let (warped2, warped4) = par::join(|| backward_warp(i2, f_t2), || backward_warp(i4, f_t4));
    let (warped2, warped4) = (warped2?, warped4?);
    let w2 = (4.0 - t) / 2.0;
    let w4 = (t - 2.0) / 2.0;
    let c = i2.channels();
    let mut out = Raster::zeros(i2.height(), i2.width(), c);
    let (a, b, m) = (warped2.data(), warped4.data(), mask.data());
    for (p, px) in out.data_mut().chunks_exact_mut(c).enumerate() {
        let m2 = w2 * m[p];
        let m4 = w4 * (1.0 - m[p]);
        let r = m4 / (m2 + m4).max(BLEND_DENOM_FLOOR);
        for k in 0..c {
            let (va, vb) = (a[p * c + k], b[p * c + k]);
            px[k] = (va + r * (vb - va)).clamp(0.0, 1.0);
        }
    }
    Ok(Blend {
        frame: Frame::from_raster(out)?,
        warped2,
        warped4,
    })
}

pub fn synthesize_lr_frame(
    i2: &Frame,
    i4: &Frame,
    f_t2: &FlowField,
    f_t4: &FlowField,
    mask: &Mask,
    t: f32,
) -> Result<Frame> {
    Ok(blend_warped(i2, i4, f_t2, f_t4, mask, t)?.frame)
}

/// Optional networks of the LR stage.
#[derive(Clone, Copy, Debug, Default)]
pub struct QfiNetworks<'a> {
    pub flow_refine: Option<&'a WeightBundle>,
    pub mask: Option<&'a WeightBundle>,
}

/// Everything the LR stage produces; the flows and mask are reused in HR.
#[derive(Clone, Debug)]
pub struct LrInterpolation {
    pub f_2t: FlowField,
    pub f_4t: FlowField,
    pub f_t2: FlowField,
    pub f_t4: FlowField,
    pub mask: Mask,
    pub frame: Frame,
}

pub fn interpolate_lr(
    inputs: &QfiInputs<'_>,
    nets: QfiNetworks<'_>,
    model: MotionModel,
) -> Result<LrInterpolation> {
    inputs.validate()?;
    let (tau2, tau4) = inputs.taus();
    let (f_2t, f_4t) = par::join(
        || intermediate_flow(inputs.f20, inputs.f24, tau2, model),
        || intermediate_flow(inputs.f46, inputs.f42, tau4, model),
    );
    let (f_2t, f_4t) = (f_2t?, f_4t?);
    let (f_t2, f_t4) = par::join(|| reverse_flow(&f_2t), || reverse_flow(&f_4t));
    let (f_t2, f_t4) = refine_flow(&f_t2, &f_t4, inputs.i2, inputs.i4, nets.flow_refine)?;
    let mask = estimate_blend_mask(
        &MaskInputs {
            f_t2: &f_t2,
            f_2t: &f_2t,
            f_t4: &f_t4,
            f_4t: &f_4t,
            i2: inputs.i2,
            i4: inputs.i4,
        },
        nets.mask,
    )?;
    let frame = synthesize_lr_frame(inputs.i2, inputs.i4, &f_t2, &f_t4, &mask, inputs.t)?;
    Ok(LrInterpolation {
        f_2t,
        f_4t,
        f_t2,
        f_t4,
        mask,
        frame,
    })
}
