//! Training losses on prediction maps, each with its analytic gradient.
//!
//! `L = L_tex + α·L_ker + β·(L_agg + L_dis)`, where the text and kernel
//! terms are dice losses (the text term restricted by hard-negative
//! mining) and the aggregation/discrimination terms act on the similarity
//! field through per-kernel mean vectors.

mod dice;
mod embedding;
pub mod fixture;

pub use dice::{dice_loss, ohem_mask};
pub use embedding::{kernel_mean, loss_agg, loss_dis, InstancePixels};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gt::GroundTruth;
use crate::net::PredictionMaps;
use crate::num::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig<T = f32> {
    pub alpha: T,
    pub beta: T,
    pub delta_agg: T,
    pub delta_dis: T,
    pub ohem_ratio: usize,
}

impl<T: Scalar> Default for LossConfig<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(0.5),
            beta: T::lit(0.25),
            delta_agg: T::lit(0.5),
            delta_dis: T::lit(3.0),
            ohem_ratio: 3,
        }
    }
}

impl<T: Scalar> LossConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.alpha, self.beta, self.delta_agg, self.delta_dis];
        if pos.iter().any(|&v| !(v > T::zero())) || self.ohem_ratio == 0 {
            return Err(Error::InvalidArgument(format!("invalid loss config {self:?}")));
        }
        Ok(())
    }
}

/// Component values and gradients w.r.t. the three prediction maps.
#[derive(Clone, Debug)]
pub struct LossBreakdown<T = f32> {
    pub l_tex: T,
    pub l_ker: T,
    pub l_agg: T,
    pub l_dis: T,
    pub total: T,
    pub grad_text: Tensor<T>,
    pub grad_kernel: Tensor<T>,
    pub grad_sim: Tensor<T>,
}

/// Values only, for logs and JSON dumps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossValues {
    pub total: f64,
    pub l_tex: f64,
    pub l_ker: f64,
    pub l_agg: f64,
    pub l_dis: f64,
}

impl<T: Scalar> LossBreakdown<T> {
    pub fn values(&self) -> LossValues {
        LossValues {
            total: self.total.as_f64(),
            l_tex: self.l_tex.as_f64(),
            l_ker: self.l_ker.as_f64(),
            l_agg: self.l_agg.as_f64(),
            l_dis: self.l_dis.as_f64(),
        }
    }
}

fn check_shapes<T: Scalar>(maps: &PredictionMaps<T>, gt: &GroundTruth) -> Result<()> {
    if maps.dims() != (gt.height, gt.width) {
        return Err(Error::Shape(format!(
            "maps {:?} vs ground truth {}×{}",
            maps.dims(),
            gt.height,
            gt.width
        )));
    }
    Ok(())
}

/// Hard-example mask for the text term, mined from the current `P_tex`.
pub fn text_ohem_mask<T: Scalar>(maps: &PredictionMaps<T>, gt: &GroundTruth, ratio: usize) -> Result<Vec<bool>> {
    check_shapes(maps, gt)?;
    let positives: Vec<bool> = gt.instance_labels.iter().map(|&l| l > 0).collect();
    Ok(ohem_mask(maps.text.data(), &positives, &gt.ignore, ratio))
}

/// Total loss with OHEM mined from the current maps.
pub fn total_loss<T: Scalar>(maps: &PredictionMaps<T>, gt: &GroundTruth, cfg: &LossConfig<T>) -> Result<LossBreakdown<T>> {
    let mask = text_ohem_mask(maps, gt, cfg.ohem_ratio)?;
    total_loss_with_mask(maps, gt, cfg, &mask)
}

/// Total loss with a caller-supplied (frozen) OHEM mask.
pub fn total_loss_with_mask<T: Scalar>(
    maps: &PredictionMaps<T>,
    gt: &GroundTruth,
    cfg: &LossConfig<T>,
    ohem: &[bool],
) -> Result<LossBreakdown<T>> {
    cfg.validate()?;
    check_shapes(maps, gt)?;
    let n = gt.height * gt.width;
    if ohem.len() != n {
        return Err(Error::Shape(format!("ohem mask has {} pixels, maps {n}", ohem.len())));
    }
    let bin = |labels: &[u32]| -> Vec<T> {
        labels.iter().map(|&l| if l > 0 { T::one() } else { T::zero() }).collect()
    };
    let g_tex = bin(&gt.instance_labels);
    let g_ker = bin(&gt.kernel_labels);
    let text_pixels: Vec<bool> = gt
        .instance_labels
        .iter()
        .zip(&gt.ignore)
        .map(|(&l, &ig)| l > 0 && !ig)
        .collect();

    let (l_tex, d_tex) = dice_loss(maps.text.data(), &g_tex, ohem)?;
    let (l_ker, d_ker) = dice_loss(maps.kernel.data(), &g_ker, &text_pixels)?;

    let instances = InstancePixels::from_ground_truth(gt);
    let (l_agg, d_agg) = loss_agg(&maps.sim, &instances, cfg.delta_agg)?;
    let (l_dis, d_dis) = loss_dis(&maps.sim, &instances, cfg.delta_dis)?;

    let total = l_tex + cfg.alpha * l_ker + cfg.beta * (l_agg + l_dis);
    let shape1 = maps.text.shape().to_vec();
    let grad_text = Tensor::new(shape1.clone(), d_tex)?;
    let grad_kernel = Tensor::new(shape1, d_ker.into_iter().map(|g| cfg.alpha * g).collect())?;
    let grad_sim = Tensor::new(
        maps.sim.shape().to_vec(),
        d_agg
            .data()
            .iter()
            .zip(d_dis.data())
            .map(|(&a, &d)| cfg.beta * (a + d))
            .collect(),
    )?;
    Ok(LossBreakdown { l_tex, l_ker, l_agg, l_dis, total, grad_text, grad_kernel, grad_sim })
}

#[cfg(test)]
mod tests;
