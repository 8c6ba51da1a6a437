//! Forward-only detection network: a strided stub backbone, 1×1 channel
//! reduction to a thin pyramid, cascaded FPEM blocks, FFM fusion and a
//! small prediction head.

mod arch;
mod maps;
mod weights;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use arch::{architecture, fpn_reference_flops, model_flops, param_specs};
pub use maps::{PredictionMaps, SIM_DIM};
pub use weights::Weights;

/// Resolution ratio between the input image and the prediction maps.
pub const OUTPUT_STRIDE: usize = 4;

use crate::error::{Error, Result};
use crate::num::{sigmoid, Scalar};
use crate::tensor::{self, add, batch_norm_relu, concat, conv2d, upsample_bilinear, BatchNorm, Conv2d, Tensor};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    /// Number of cascaded FPEM blocks.
    pub n_c: usize,
    /// Pyramid width after reduction.
    pub channels: usize,
    pub head_hidden: usize,
    /// Raw channel counts of the backbone stages at strides 4, 8, 16, 32.
    pub backbone_widths: [usize; 4],
    pub height: usize,
    pub width: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            n_c: 2,
            channels: 128,
            head_hidden: 128,
            backbone_widths: [64, 128, 256, 512],
            height: 640,
            width: 640,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.head_hidden == 0 || self.backbone_widths.contains(&0) {
            return Err(Error::InvalidArgument("channel counts must be ≥ 1".into()));
        }
        if self.height == 0 || self.width == 0 || self.height % 32 != 0 || self.width % 32 != 0 {
            return Err(Error::InvalidArgument(format!(
                "input {}×{} not divisible by 32",
                self.height, self.width
            )));
        }
        Ok(())
    }

    /// Spatial size of pyramid level `l` (stride `4·2^l`).
    pub fn level_size(&self, l: usize) -> (usize, usize) {
        (self.height >> (l + 2), self.width >> (l + 2))
    }
}

/// Four maps at strides 4, 8, 16 and 32, finest first.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturePyramid<T = f32> {
    pub levels: [Tensor<T>; 4],
}

impl<T: Scalar> FeaturePyramid<T> {
    pub fn new(levels: Vec<Tensor<T>>) -> Result<Self> {
        let levels: [Tensor<T>; 4] = levels
            .try_into()
            .map_err(|v: Vec<_>| Error::Shape(format!("pyramid needs 4 levels, got {}", v.len())))?;
        let (c0, h0, w0) = levels[0].chw()?;
        for (l, t) in levels.iter().enumerate() {
            let (c, h, w) = t.chw()?;
            if c != c0 || h != h0 >> l || w != w0 >> l || h == 0 || w == 0 {
                return Err(Error::Shape(format!(
                    "level {l} has shape {:?}, level 0 {:?}",
                    t.shape(),
                    levels[0].shape()
                )));
            }
        }
        Ok(Self { levels })
    }

    pub fn shapes(&self) -> [Vec<usize>; 4] {
        self.levels.clone().map(|t| t.shape().to_vec())
    }
}

/// Wall-clock split of one forward pass.
#[derive(Clone, Copy, Debug, Default)]
pub struct ForwardTiming {
    pub backbone: Duration,
    pub head: Duration,
}

/// A configuration bound to a complete set of weights.
pub struct Network<'w, T: Scalar = f32> {
    cfg: NetConfig,
    weights: &'w Weights<T>,
}

impl<'w, T: Scalar> Network<'w, T> {
    pub fn new(cfg: NetConfig, weights: &'w Weights<T>) -> Result<Self> {
        cfg.validate()?;
        weights.check_complete(&cfg)?;
        Ok(Self { cfg, weights })
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    fn bn(&self, name: &str) -> Result<BatchNorm<T>> {
        let v = |part: &str| -> Result<Vec<T>> {
            Ok(self.weights.get(&format!("{name}.bn.{part}"))?.data().to_vec())
        };
        Ok(BatchNorm { mean: v("mean")?, var: v("var")?, gamma: v("gamma")?, beta: v("beta")?, eps: T::lit(1e-5) })
    }

    fn conv(&self, x: &Tensor<T>, name: &str, p: Conv2d) -> Result<Tensor<T>> {
        let w = self.weights.get(&format!("{name}.weight"))?;
        let bias = self.weights.try_get(&format!("{name}.bias")).map(|b| b.data());
        conv2d(x, w, bias, p)
    }

    fn conv_bn_relu(&self, x: &Tensor<T>, name: &str, p: Conv2d) -> Result<Tensor<T>> {
        batch_norm_relu(&self.conv(x, name, p)?, &self.bn(name)?, true)
    }

    /// Strided conv tower producing raw maps at strides 4/8/16/32.
    pub fn stub_backbone(&self, image: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        let (c, h, w) = image.chw()?;
        if c != 3 {
            return Err(Error::Shape(format!("image must be 3×H×W, got {:?}", image.shape())));
        }
        if h % 32 != 0 || w % 32 != 0 {
            return Err(Error::InvalidArgument(format!("image {h}×{w} not divisible by 32")));
        }
        let s2 = Conv2d::new(2, 1, 1);
        let stem = self.conv_bn_relu(image, "backbone.stem", s2)?;
        let mut x = self.conv_bn_relu(&stem, "backbone.stage1", s2)?;
        let mut raw = vec![x.clone()];
        for s in 2..=4 {
            x = self.conv_bn_relu(&x, &format!("backbone.stage{s}"), s2)?;
            raw.push(x.clone());
        }
        Ok(raw)
    }

    /// 1×1 reduction of every raw level to `channels`.
    pub fn reduce(&self, raw: &[Tensor<T>]) -> Result<FeaturePyramid<T>> {
        if raw.len() != 4 {
            return Err(Error::Shape(format!("raw pyramid has {} levels", raw.len())));
        }
        let levels = raw
            .iter()
            .enumerate()
            .map(|(l, t)| self.conv_bn_relu(t, &format!("reduce.{l}"), Conv2d::default()))
            .collect::<Result<Vec<_>>>()?;
        FeaturePyramid::new(levels)
    }

    /// One feature pyramid enhancement block (`index` selects its weights).
    ///
    /// Up-scale phase, coarse to fine: `u3 = f3`, `u_l = sep(up2(u_{l+1}) + f_l)`.
    /// Down-scale phase, fine to coarse: `d0 = u0`,
    /// `d_l = relu(bn(pw(dw_s2(d_{l-1}) + u_l)))`.
    pub fn fpem(&self, index: usize, p: &FeaturePyramid<T>) -> Result<FeaturePyramid<T>> {
        let c = p.levels[0].chw()?.0;
        let dw1 = Conv2d::new(1, 1, c);
        let dw2 = Conv2d::new(2, 1, c);
        let pw = Conv2d::default();

        let mut up: Vec<Tensor<T>> = p.levels.to_vec();
        for l in (0..3).rev() {
            let name = format!("fpem{index}.up{l}");
            let x = add(&upsample_bilinear(&up[l + 1], 2)?, &p.levels[l])?;
            let x = self.conv(&x, &format!("{name}.dw"), dw1)?;
            let x = self.conv(&x, &format!("{name}.pw"), pw)?;
            up[l] = batch_norm_relu(&x, &self.bn(&name)?, true)?;
        }

        let mut down = vec![up[0].clone()];
        for l in 1..4 {
            let name = format!("fpem{index}.down{l}");
            let x = self.conv(&down[l - 1], &format!("{name}.dw"), dw2)?;
            let x = add(&x, &up[l])?;
            let x = self.conv(&x, &format!("{name}.pw"), pw)?;
            down.push(batch_norm_relu(&x, &self.bn(&name)?, true)?);
        }
        FeaturePyramid::new(down)
    }

    /// Run the full cascade, returning every block's output.
    pub fn cascade(&self, reduced: FeaturePyramid<T>) -> Result<Vec<FeaturePyramid<T>>> {
        if self.cfg.n_c == 0 {
            return Ok(vec![reduced]);
        }
        let mut outs: Vec<FeaturePyramid<T>> = Vec::with_capacity(self.cfg.n_c);
        for i in 0..self.cfg.n_c {
            let next = self.fpem(i, outs.last().unwrap_or(&reduced))?;
            outs.push(next);
        }
        Ok(outs)
    }

    pub fn head(&self, fused: &Tensor<T>) -> Result<PredictionMaps<T>> {
        let (c, _, _) = fused.chw()?;
        if c != 4 * self.cfg.channels {
            return Err(Error::Shape(format!(
                "head expects {} channels, got {:?}",
                4 * self.cfg.channels,
                fused.shape()
            )));
        }
        let hidden = self.conv_bn_relu(fused, "head.conv", Conv2d::new(1, 1, 1))?;
        let out = self.conv(&hidden, "head.out", Conv2d::default())?;
        PredictionMaps::from_logits(&out)
    }

    pub fn forward(&self, image: &Tensor<T>) -> Result<PredictionMaps<T>> {
        self.forward_timed(image).map(|(m, _)| m)
    }

    pub fn forward_timed(&self, image: &Tensor<T>) -> Result<(PredictionMaps<T>, ForwardTiming)> {
        let (_, h, w) = image.chw()?;
        if (h, w) != (self.cfg.height, self.cfg.width) {
            return Err(Error::Shape(format!(
                "image {h}×{w} does not match configured {}×{}",
                self.cfg.height, self.cfg.width
            )));
        }
        let t0 = Instant::now();
        let raw = self.stub_backbone(image)?;
        let t1 = Instant::now();
        let reduced = self.reduce(&raw)?;
        let pyramids = self.cascade(reduced)?;
        let fused = ffm(&pyramids)?;
        let maps = self.head(&fused)?;
        let t2 = Instant::now();
        Ok((maps, ForwardTiming { backbone: t1 - t0, head: t2 - t1 }))
    }
}

/// Feature fusion: per-level sums across the cascade, then upsample to
/// stride 4 and concatenate (`4·C` channels).
pub fn ffm<T: Scalar>(pyramids: &[FeaturePyramid<T>]) -> Result<Tensor<T>> {
    let first = pyramids
        .first()
        .ok_or_else(|| Error::InvalidArgument("ffm needs at least one pyramid".into()))?;
    let shapes = first.shapes();
    let mut sums = first.levels.clone();
    for p in &pyramids[1..] {
        if p.shapes() != shapes {
            return Err(Error::Shape(format!(
                "pyramid shapes differ: {:?} vs {:?}",
                p.shapes(),
                shapes
            )));
        }
        for (s, t) in sums.iter_mut().zip(&p.levels) {
            *s = tensor::add(s, t)?;
        }
    }
    let mut parts = vec![sums[0].clone()];
    for (l, s) in sums.iter().enumerate().skip(1) {
        parts.push(upsample_bilinear(s, 1 << l)?);
    }
    concat(&parts.iter().collect::<Vec<_>>())
}

pub(crate) fn squash_channels<T: Scalar>(logits: &Tensor<T>, channels: usize) -> Tensor<T> {
    let mut out = logits.clone();
    for c in 0..channels {
        out.channel_mut(c).iter_mut().for_each(|v| *v = sigmoid(*v));
    }
    out
}
