use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Scene;
use crate::error::{Error, Result};
use crate::gt::{make_ground_truth, GroundTruth};
use crate::loss::{total_loss, LossConfig, LossValues};
use crate::net::{PredictionMaps, OUTPUT_STRIDE, SIM_DIM};
use crate::num::Scalar;
use crate::tensor::Tensor;

/// Step size for the map-space trainer. Dice gradients scale with the
/// inverse pixel count, so the step is large by conventional standards.
pub const DEFAULT_LR: f64 = 20.0;
pub const DEFAULT_STEPS: usize = 2000;

pub const CSV_HEADER: &str = "step,total,l_tex,l_ker,l_agg,l_dis";

const P_MIN: f64 = 1e-4;

/// Result of a map-space optimisation run.
#[derive(Clone, Debug)]
pub struct TrainRun<T: Scalar = f32> {
    pub steps: usize,
    pub lr: f64,
    /// Loss before the first update and after every update (`steps + 1` rows).
    pub curve: Vec<LossValues>,
    pub maps: PredictionMaps<T>,
    pub gt: GroundTruth,
}

impl<T: Scalar> TrainRun<T> {
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for (i, v) in self.curve.iter().enumerate() {
            writeln!(out, "{i},{},{},{},{},{}", v.total, v.l_tex, v.l_ker, v.l_agg, v.l_dis)?;
        }
        Ok(())
    }

    pub fn initial_loss(&self) -> f64 {
        self.curve[0].total
    }

    pub fn final_loss(&self) -> f64 {
        self.curve[self.curve.len() - 1].total
    }
}

/// Uniform 0.5 probabilities and small seeded similarity noise (±0.1).
pub fn initial_maps<T: Scalar>(height: usize, width: usize, seed: u64) -> PredictionMaps<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = Tensor::full(&[1, height, width], T::lit(0.5));
    let sim = Tensor::from_fn(&[SIM_DIM, height, width], |_| T::lit(rng.gen_range(-0.1..0.1)));
    PredictionMaps { text: half.clone(), kernel: half, sim }
}

/// Maps that already satisfy the ground truth: clamped binary
/// probabilities and instance `k` placed at `k·spacing` on the first
/// similarity axis.
pub fn perfect_maps<T: Scalar>(gt: &GroundTruth, spacing: f64) -> PredictionMaps<T> {
    let (h, w) = (gt.height, gt.width);
    let prob = |labels: &[u32]| {
        Tensor::new(vec![1, h, w], labels.iter().map(|&l| T::lit(if l > 0 { 1.0 - P_MIN } else { P_MIN })).collect())
            .expect("grid-sized")
    };
    let plane = h * w;
    let sim = Tensor::from_fn(&[SIM_DIM, h, w], |i| {
        if i < plane {
            T::lit(gt.instance_labels[i] as f64 * spacing)
        } else {
            T::zero()
        }
    });
    PredictionMaps { text: prob(&gt.instance_labels), kernel: prob(&gt.kernel_labels), sim }
}

/// Plain gradient descent on the maps themselves; OHEM is re-mined every
/// step and probabilities are clamped to [1e-4, 1 − 1e-4] after updates.
pub fn train_maps<T: Scalar>(
    mut maps: PredictionMaps<T>,
    gt: &GroundTruth,
    cfg: &LossConfig<T>,
    steps: usize,
    lr: f64,
) -> Result<TrainRun<T>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be ≥ 1".into()));
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidArgument(format!("learning rate must be positive, got {lr}")));
    }
    let step_size = T::lit(lr);
    let (lo, hi) = (T::lit(P_MIN), T::lit(1.0 - P_MIN));
    let mut curve = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let b = total_loss(&maps, gt, cfg)?;
        if !b.total.is_finite() {
            return Err(Error::Divergence { step });
        }
        curve.push(b.values());
        if step == steps {
            break;
        }
        let descend = |x: &mut Tensor<T>, g: &Tensor<T>| {
            x.data_mut().iter_mut().zip(g.data()).for_each(|(v, &d)| *v -= step_size * d);
        };
        descend(&mut maps.text, &b.grad_text);
        descend(&mut maps.kernel, &b.grad_kernel);
        descend(&mut maps.sim, &b.grad_sim);
        for v in maps.text.data_mut().iter_mut().chain(maps.kernel.data_mut()) {
            *v = v.max(lo).min(hi);
        }
    }
    Ok(TrainRun { steps, lr, curve, maps, gt: gt.clone() })
}

/// Builds ground truth for `scene` at the output stride and trains from
/// [`initial_maps`] seeded by the scene seed.
pub fn train_toy<T: Scalar>(scene: &Scene, r: f64, cfg: &LossConfig<T>, steps: usize, lr: f64) -> Result<TrainRun<T>> {
    let gt = make_ground_truth(&scene.polygons, scene.height, scene.width, r as f32, OUTPUT_STRIDE)?.gt;
    let maps = initial_maps(gt.height, gt.width, scene.seed);
    train_maps(maps, &gt, cfg, steps, lr)
}
