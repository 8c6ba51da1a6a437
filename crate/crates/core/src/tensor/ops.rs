use rayon::prelude::*;

use super::Tensor;
use crate::error::{Error, Result};
use crate::num::Scalar;

/// Convolution hyper-parameters. `groups == C_in` is depthwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conv2d {
    pub stride: usize,
    pub padding: usize,
    pub groups: usize,
}

impl Conv2d {
    pub const fn new(stride: usize, padding: usize, groups: usize) -> Self {
        Self { stride, padding, groups }
    }

    pub fn output_size(&self, h: usize, w: usize, k: usize) -> Option<(usize, usize)> {
        let (hp, wp) = (h + 2 * self.padding, w + 2 * self.padding);
        if hp < k || wp < k || self.stride == 0 {
            return None;
        }
        Some(((hp - k) / self.stride + 1, (wp - k) / self.stride + 1))
    }
}

impl Default for Conv2d {
    fn default() -> Self {
        Self::new(1, 0, 1)
    }
}

/// Direct 2-D convolution of a `C_in×H×W` input with `C_out×(C_in/groups)×k×k`
/// weights.
///
/// Output channels are computed independently (in parallel); each output
/// element accumulates in a fixed order, so results do not depend on the
/// thread count.
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&[T]>,
    p: Conv2d,
) -> Result<Tensor<T>> {
    let (c_in, h, w) = input.chw()?;
    let [c_out, cin_g, kh, kw] = *weight.shape() else {
        return Err(Error::Shape(format!(
            "conv weights must be 4-D, got {:?}",
            weight.shape()
        )));
    };
    if p.groups == 0 || c_in % p.groups != 0 || c_out % p.groups != 0 {
        return Err(Error::Shape(format!(
            "groups={} does not divide input {:?} / weights {:?}",
            p.groups,
            input.shape(),
            weight.shape()
        )));
    }
    if cin_g != c_in / p.groups {
        return Err(Error::Shape(format!(
            "input {:?} incompatible with weights {:?} (groups={})",
            input.shape(),
            weight.shape(),
            p.groups
        )));
    }
    if kh != kw || kh % 2 == 0 {
        return Err(Error::Shape(format!(
            "kernel must be square and odd, weights {:?}",
            weight.shape()
        )));
    }
    if !(1..=2).contains(&p.stride) {
        return Err(Error::InvalidArgument(format!("stride {} not in {{1,2}}", p.stride)));
    }
    if let Some(b) = bias {
        if b.len() != c_out {
            return Err(Error::Shape(format!(
                "bias length {} != output channels {c_out}",
                b.len()
            )));
        }
    }
    let k = kh;
    let (ho, wo) = p.output_size(h, w, k).ok_or_else(|| {
        Error::Shape(format!("input {:?} smaller than kernel {k}", input.shape()))
    })?;

    let cout_g = c_out / p.groups;
    let (s, pad) = (p.stride as isize, p.padding as isize);
    let src = input.data();
    let wts = weight.data();
    let mut out = vec![T::zero(); c_out * ho * wo];

    out.par_chunks_mut(ho * wo).enumerate().for_each(|(oc, plane)| {
        if let Some(b) = bias {
            plane.iter_mut().for_each(|v| *v = b[oc]);
        }
        let g = oc / cout_g;
        for icl in 0..cin_g {
            let ic = g * cin_g + icl;
            let in_plane = &src[ic * h * w..(ic + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let wv = wts[((oc * cin_g + icl) * k + ky) * k + kx];
                    if wv == T::zero() {
                        continue;
                    }
                    // ox range with 0 <= ox*s + kx - pad < w
                    let off_x = kx as isize - pad;
                    let ox_lo = if off_x >= 0 { 0 } else { ((-off_x) + s - 1) / s };
                    let ox_hi = ((w as isize - 1 - off_x).div_euclid(s) + 1).min(wo as isize);
                    if ox_lo >= ox_hi {
                        continue;
                    }
                    for oy in 0..ho {
                        let iy = oy as isize * s + ky as isize - pad;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let row = &in_plane[iy as usize * w..(iy as usize + 1) * w];
                        let orow = &mut plane[oy * wo..(oy + 1) * wo];
                        if s == 1 {
                            let start = (ox_lo + off_x) as usize;
                            let n = (ox_hi - ox_lo) as usize;
                            for (o, &x) in orow[ox_lo as usize..ox_hi as usize]
                                .iter_mut()
                                .zip(&row[start..start + n])
                            {
                                *o += wv * x;
                            }
                        } else {
                            for ox in ox_lo..ox_hi {
                                let ix = (ox * s + off_x) as usize;
                                orow[ox as usize] += wv * row[ix];
                            }
                        }
                    }
                }
            }
        }
    });
    Tensor::new(vec![c_out, ho, wo], out)
}

/// Inference-mode batch normalisation statistics and affine parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm<T = f32> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub eps: T,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn identity(channels: usize) -> Self {
        Self {
            mean: vec![T::zero(); channels],
            var: vec![T::one(); channels],
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            eps: T::zero(),
        }
    }
}

pub fn batch_norm_relu<T: Scalar>(
    input: &Tensor<T>,
    bn: &BatchNorm<T>,
    apply_relu: bool,
) -> Result<Tensor<T>> {
    let (c, h, w) = input.chw()?;
    for (name, v) in [("mean", &bn.mean), ("var", &bn.var), ("gamma", &bn.gamma), ("beta", &bn.beta)] {
        if v.len() != c {
            return Err(Error::Shape(format!(
                "batch-norm {name} has length {}, input has {c} channels",
                v.len()
            )));
        }
    }
    if bn.var.iter().any(|&v| v < T::zero()) {
        return Err(Error::InvalidArgument("negative variance".into()));
    }
    let mut out = input.clone();
    for ch in 0..c {
        let scale = bn.gamma[ch] / (bn.var[ch] + bn.eps).sqrt();
        let (mean, beta) = (bn.mean[ch], bn.beta[ch]);
        for v in out.channel_mut(ch) {
            let y = scale * (*v - mean) + beta;
            *v = if apply_relu { y.max(T::zero()) } else { y };
        }
    }
    debug_assert_eq!(out.len(), c * h * w);
    Ok(out)
}

/// Bilinear upsampling by an integer factor, half-pixel-centre convention:
/// output coordinate `o` samples input position `(o + 0.5)/factor − 0.5`,
/// clamped to the valid range.
pub fn upsample_bilinear<T: Scalar>(input: &Tensor<T>, factor: usize) -> Result<Tensor<T>> {
    if factor < 2 {
        return Err(Error::InvalidArgument(format!("upsample factor {factor} < 2")));
    }
    let (c, h, w) = input.chw()?;
    let (ho, wo) = (h * factor, w * factor);
    let taps = |n_in: usize, n_out: usize| -> Vec<(usize, usize, T)> {
        let f = T::from_usize_lossy(factor);
        let half = T::lit(0.5);
        (0..n_out)
            .map(|o| {
                let src = ((T::from_usize_lossy(o) + half) / f - half).max(T::zero());
                let i0 = src.floor().to_usize().unwrap_or(0).min(n_in - 1);
                let i1 = (i0 + 1).min(n_in - 1);
                let frac = (src - T::from_usize_lossy(i0)).min(T::one());
                (i0, i1, frac)
            })
            .collect()
    };
    let ys = taps(h, ho);
    let xs = taps(w, wo);
    let mut out = vec![T::zero(); c * ho * wo];
    out.par_chunks_mut(ho * wo).enumerate().for_each(|(ch, plane)| {
        let src = input.channel(ch);
        for (oy, &(y0, y1, fy)) in ys.iter().enumerate() {
            for (ox, &(x0, x1, fx)) in xs.iter().enumerate() {
                let lerp = |a: T, b: T, t: T| a + (b - a) * t;
                let top = lerp(src[y0 * w + x0], src[y0 * w + x1], fx);
                let bot = lerp(src[y1 * w + x0], src[y1 * w + x1], fx);
                plane[oy * wo + ox] = lerp(top, bot, fy);
            }
        }
    });
    Tensor::new(vec![c, ho, wo], out)
}

pub fn add<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "add: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| x + y).collect();
    Tensor::new(a.shape().to_vec(), data)
}

/// Concatenation along the channel axis of 3-D tensors.
pub fn concat<T: Scalar>(parts: &[&Tensor<T>]) -> Result<Tensor<T>> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidArgument("concat of nothing".into()))?;
    let (_, h, w) = first.chw()?;
    let mut channels = 0;
    for t in parts {
        let (c, th, tw) = t.chw()?;
        if (th, tw) != (h, w) {
            return Err(Error::Shape(format!(
                "concat: spatial {:?} vs {:?}",
                first.shape(),
                t.shape()
            )));
        }
        channels += c;
    }
    let mut data = Vec::with_capacity(channels * h * w);
    for t in parts {
        data.extend_from_slice(t.data());
    }
    Tensor::new(vec![channels, h, w], data)
}
