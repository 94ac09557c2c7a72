//! Sequential convolution networks and their binary weight format.
//!
//! A bundle file is the 6-byte magic `STSRW1`, a `u32` layer count, then
//! for each layer five `u32` fields (`in_channels`, `out_channels`,
//! `kernel_h`, `kernel_w`, activation code) followed by the layer's weights
//! in `(out, in, kh, kw)` order and its `out_channels` biases. All integers
//! and floats are little-endian.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::Raster;
use crate::par;

pub const BUNDLE_MAGIC: &[u8; 6] = b"STSRW1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
}

impl Activation {
    pub fn code(self) -> u32 {
        match self {
            Activation::Linear => 0,
            Activation::Relu => 1,
            Activation::Sigmoid => 2,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(Activation::Linear),
            1 => Ok(Activation::Relu),
            2 => Ok(Activation::Sigmoid),
            other => Err(Error::CorruptFile(format!("unknown activation code {other}"))),
        }
    }

    #[inline]
    fn apply(self, v: f32) -> f32 {
        match self {
            Activation::Linear => v,
            Activation::Relu => v.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub activation: Activation,
    /// `(out, in, kh, kw)` order.
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl ConvLayer {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        activation: Activation,
        weights: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self> {
        let layer = Self {
            in_channels,
            out_channels,
            kernel_h,
            kernel_w,
            activation,
            weights,
            bias,
        };
        layer.validate().map_err(Error::Config)?;
        Ok(layer)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err("layer channel counts must be non-zero".into());
        }
        if self.kernel_h % 2 == 0 || self.kernel_w % 2 == 0 {
            return Err(format!(
                "kernel sizes must be odd, got {}x{}",
                self.kernel_h, self.kernel_w
            ));
        }
        if self.weights.len() != self.weight_count() {
            return Err(format!(
                "expected {} weights, got {}",
                self.weight_count(),
                self.weights.len()
            ));
        }
        if self.bias.len() != self.out_channels {
            return Err(format!(
                "expected {} biases, got {}",
                self.out_channels,
                self.bias.len()
            ));
        }
        Ok(())
    }

    fn weight_count(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel_h * self.kernel_w
    }

    /// Same-size, stride-1 convolution with edge-clamped padding.
    fn forward(&self, input: &Raster) -> Raster {
        let (h, w) = (input.height(), input.width());
        let (cin, cout) = (self.in_channels, self.out_channels);
        let (kh, kw) = (self.kernel_h, self.kernel_w);
        let (rh, rw) = ((kh / 2) as i64, (kw / 2) as i64);
        // Reorder to (ky, kx, in, out) so the inner loop is contiguous.
        let mut packed = vec![0.0f32; self.weights.len()];
        for o in 0..cout {
            for i in 0..cin {
                for ky in 0..kh {
                    for kx in 0..kw {
                        let src = ((o * cin + i) * kh + ky) * kw + kx;
                        let dst = ((ky * kw + kx) * cin + i) * cout + o;
                        packed[dst] = self.weights[src];
                    }
                }
            }
        }
        let d = input.data();
        let mut out = Raster::zeros(h, w, cout);
        par::for_each_row(out.data_mut(), w * cout, |y, row| {
            let mut acc = vec![0.0f32; cout];
            for x in 0..w {
                acc.copy_from_slice(&self.bias);
                for ky in 0..kh {
                    let sy = (y as i64 + ky as i64 - rh).clamp(0, h as i64 - 1) as usize;
                    for kx in 0..kw {
                        let sx = (x as i64 + kx as i64 - rw).clamp(0, w as i64 - 1) as usize;
                        let px = &d[(sy * w + sx) * cin..(sy * w + sx + 1) * cin];
                        let wk = &packed[(ky * kw + kx) * cin * cout..(ky * kw + kx + 1) * cin * cout];
                        for (i, &v) in px.iter().enumerate() {
                            let wrow = &wk[i * cout..(i + 1) * cout];
                            for (a, &wt) in acc.iter_mut().zip(wrow) {
                                *a += wt * v;
                            }
                        }
                    }
                }
                for (o, a) in row[x * cout..(x + 1) * cout].iter_mut().zip(&acc) {
                    *o = self.activation.apply(*a);
                }
            }
        });
        out
    }
}

/// An immutable stack of convolution layers.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightBundle {
    layers: Vec<ConvLayer>,
}

impl WeightBundle {
    pub fn new(layers: Vec<ConvLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("weight bundle has no layers".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_channels != pair[1].in_channels {
                return Err(Error::Config(format!(
                    "layer {i} emits {} channels but layer {} expects {}",
                    pair[0].out_channels,
                    i + 1,
                    pair[1].in_channels
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[ConvLayer] {
        &self.layers
    }

    pub fn input_channels(&self) -> usize {
        self.layers[0].in_channels
    }

    pub fn output_channels(&self) -> usize {
        self.layers[self.layers.len() - 1].out_channels
    }

    pub fn final_activation(&self) -> Activation {
        self.layers[self.layers.len() - 1].activation
    }

    /// Checks the bundle against a consumer's channel contract.
    pub fn ensure_contract(&self, inputs: usize, outputs: usize, consumer: &str) -> Result<()> {
        if self.input_channels() != inputs || self.output_channels() != outputs {
            return Err(Error::Config(format!(
                "{consumer} expects a {inputs}->{outputs} channel network, bundle is {}->{}",
                self.input_channels(),
                self.output_channels()
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(BUNDLE_MAGIC);
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for l in &self.layers {
            for v in [
                l.in_channels as u32,
                l.out_channels as u32,
                l.kernel_h as u32,
                l.kernel_w as u32,
                l.activation.code(),
            ] {
                out.extend_from_slice(&v.to_le_bytes());
            }
            for v in l.weights.iter().chain(&l.bias) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(BUNDLE_MAGIC.len())?;
        if magic != BUNDLE_MAGIC {
            return Err(Error::CorruptFile("bad weight bundle magic".into()));
        }
        let count = r.u32()? as usize;
        if count == 0 {
            return Err(Error::CorruptFile("weight bundle has no layers".into()));
        }
        let mut layers = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let in_channels = r.u32()? as usize;
            let out_channels = r.u32()? as usize;
            let kernel_h = r.u32()? as usize;
            let kernel_w = r.u32()? as usize;
            let activation = Activation::from_code(r.u32()?)?;
            let n = out_channels
                .checked_mul(in_channels)
                .and_then(|v| v.checked_mul(kernel_h))
                .and_then(|v| v.checked_mul(kernel_w))
                .ok_or_else(|| Error::CorruptFile("layer size overflow".into()))?;
            let weights = r.f32s(n)?;
            let bias = r.f32s(out_channels)?;
            let layer = ConvLayer {
                in_channels,
                out_channels,
                kernel_h,
                kernel_w,
                activation,
                weights,
                bias,
            };
            layer.validate().map_err(Error::CorruptFile)?;
            layers.push(layer);
        }
        if r.pos != bytes.len() {
            return Err(Error::CorruptFile(format!(
                "{} trailing bytes after weight bundle",
                bytes.len() - r.pos
            )));
        }
        Self::new(layers).map_err(|e| match e {
            Error::Config(m) => Error::CorruptFile(m),
            other => other,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::CorruptFile(m) => Error::CorruptFile(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::CorruptFile("weight bundle truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| {
            Error::CorruptFile("layer size overflow".into())
        })?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }
}

/// Runs every layer of `bundle` over `input`; spatial size is preserved.
pub fn conv_forward(bundle: &WeightBundle, input: &Raster) -> Result<Raster> {
    if input.channels() != bundle.input_channels() {
        return Err(Error::Config(format!(
            "network expects {} input channels, got {}",
            bundle.input_channels(),
            input.channels()
        )));
    }
    let mut x = bundle.layers[0].forward(input);
    for layer in &bundle.layers[1..] {
        x = layer.forward(&x);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn identity_1x1(c: usize) -> WeightBundle {
        let mut w = vec![0.0; c * c];
        for i in 0..c {
            w[i * c + i] = 1.0;
        }
        WeightBundle::new(vec![ConvLayer::new(c, c, 1, 1, Activation::Linear, w, vec![0.0; c]).unwrap()])
            .unwrap()
    }

    #[test]
    fn identity_layer() {
        let x = Raster::from_fn(4, 5, 3, |y, x, c| (y * 15 + x * 3 + c) as f32 * 0.01 - 0.2);
        assert_eq!(conv_forward(&identity_1x1(3), &x).unwrap(), x);
    }

    #[test]
    fn zero_weights_give_bias() {
        let b = WeightBundle::new(vec![ConvLayer::new(
            2,
            3,
            3,
            3,
            Activation::Linear,
            vec![0.0; 54],
            vec![0.5, -1.0, 2.0],
        )
        .unwrap()])
        .unwrap();
        let x = Raster::from_fn(4, 4, 2, |y, x, c| (y + x + c) as f32);
        let out = conv_forward(&b, &x).unwrap();
        assert!(out.data().chunks(3).all(|p| p == [0.5, -1.0, 2.0]));
    }

    #[test]
    fn hand_computed_3x3() {
        // Input rows: [1 2 3 4] [5 6 7 8] [9 10 11 12] [13 14 15 16]
        let x = Raster::from_fn(4, 4, 1, |y, x, _| (y * 4 + x + 1) as f32);
        // Kernel [[0 1 0] [1 -4 1] [0 1 0]] (Laplacian), bias 0.25.
        let k = vec![0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0];
        let b = WeightBundle::new(vec![ConvLayer::new(1, 1, 3, 3, Activation::Linear, k, vec![0.25]).unwrap()])
            .unwrap();
        let out = conv_forward(&b, &x).unwrap();
        // (0,0): up=1 (clamped), left=1 (clamped), right=2, down=5 -> 1+1+2+5-4 = 5.
        assert_eq!(out.get(0, 0, 0), 5.25);
        // (1,1): 2+5+7+10-24 = 0.
        assert_eq!(out.get(1, 1, 0), 0.25);
        // (3,3): up=12, left=15, right=16, down=16 -> 59-64 = -5.
        assert_eq!(out.get(3, 3, 0), -4.75);
        // (0,3): up=4, left=3, right=4, down=8 -> 19-16 = 3.
        assert_eq!(out.get(0, 3, 0), 3.25);
    }

    #[test]
    fn activations() {
        let b = WeightBundle::new(vec![
            ConvLayer::new(1, 1, 1, 1, Activation::Relu, vec![1.0], vec![0.0]).unwrap(),
            ConvLayer::new(1, 1, 1, 1, Activation::Sigmoid, vec![1.0], vec![0.0]).unwrap(),
        ])
        .unwrap();
        let x = Raster::new(1, 2, 1, vec![-3.0, 0.0]).unwrap();
        let out = conv_forward(&b, &x).unwrap();
        assert_eq!(out.data(), &[0.5, 0.5]);
    }

    #[test]
    fn channel_mismatch_is_config_error() {
        let x = Raster::zeros(2, 2, 4);
        assert!(matches!(conv_forward(&identity_1x1(3), &x), Err(Error::Config(_))));
        let l1 = ConvLayer::new(3, 2, 1, 1, Activation::Linear, vec![0.0; 6], vec![0.0; 2]).unwrap();
        let l2 = ConvLayer::new(3, 1, 1, 1, Activation::Linear, vec![0.0; 3], vec![0.0]).unwrap();
        assert!(matches!(WeightBundle::new(vec![l1, l2]), Err(Error::Config(_))));
        assert!(ConvLayer::new(1, 1, 2, 1, Activation::Linear, vec![0.0; 2], vec![0.0]).is_err());
    }

    #[test]
    fn corrupt_bundles() {
        let bytes = identity_1x1(2).to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(WeightBundle::from_bytes(&bad), Err(Error::CorruptFile(_))));
        assert!(matches!(
            WeightBundle::from_bytes(&bytes[..bytes.len() - 2]),
            Err(Error::CorruptFile(_))
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(WeightBundle::from_bytes(&extra).is_err());
        let mut act = bytes;
        act[6 + 4 + 16] = 9;
        assert!(WeightBundle::from_bytes(&act).is_err());
    }

    #[test]
    fn byte_layout() {
        let b = WeightBundle::new(vec![ConvLayer::new(1, 1, 1, 1, Activation::Sigmoid, vec![2.0], vec![-1.0]).unwrap()])
            .unwrap();
        let bytes = b.to_bytes();
        let mut expect = b"STSRW1".to_vec();
        for v in [1u32, 1, 1, 1, 1, 2] {
            expect.extend_from_slice(&v.to_le_bytes());
        }
        expect.extend_from_slice(&2.0f32.to_le_bytes());
        expect.extend_from_slice(&(-1.0f32).to_le_bytes());
        assert_eq!(bytes, expect);
    }

    proptest! {
        #[test]
        fn bundle_round_trip(
            cin in 1usize..4,
            cout in 1usize..4,
            k in prop::sample::select(vec![1usize, 3, 5]),
            act in 0u32..3,
            vals in proptest::collection::vec(-10f32..10.0, 1..40),
        ) {
            let n = cin * cout * k * k;
            let w: Vec<f32> = vals.iter().cycle().take(n).copied().collect();
            let b: Vec<f32> = vals.iter().rev().cycle().take(cout).copied().collect();
            let layer = ConvLayer::new(cin, cout, k, k, Activation::from_code(act).unwrap(), w, b).unwrap();
            let bundle = WeightBundle::new(vec![layer]).unwrap();
            let back = WeightBundle::from_bytes(&bundle.to_bytes()).unwrap();
            prop_assert_eq!(back.to_bytes(), bundle.to_bytes());
            prop_assert_eq!(back, bundle);
        }
    }
}
