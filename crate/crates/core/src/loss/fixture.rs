//! Randomised loss fixtures for gradient checking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gt::GroundTruth;
use crate::net::{PredictionMaps, SIM_DIM};
use crate::num::Scalar;
use crate::tensor::Tensor;

use super::{InstancePixels, LossConfig};

/// Minimum distance kept between any hinge argument and its threshold, so
/// that a central difference never straddles a kink.
pub const HINGE_MARGIN: f64 = 0.05;

/// A 16×16 scene with three banded instances, random scores in
/// `[0.05, 0.95]` and a random similarity field in `[−4, 4]⁴`, resampled
/// until every aggregation/discrimination distance is at least
/// [`HINGE_MARGIN`] away from its threshold.
pub fn random_fixture<T: Scalar>(seed: u64, cfg: &LossConfig<T>) -> (PredictionMaps<T>, GroundTruth) {
    let (h, w) = (16usize, 16usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instance_labels = vec![0u32; h * w];
    let mut kernel_labels = vec![0u32; h * w];
    let mut ignore = vec![false; h * w];
    for i in 0..3usize {
        let y0 = 5 * i + 1;
        let x0 = rng.gen_range(0..4);
        let x1 = rng.gen_range(10..=16);
        for y in y0..y0 + 4 {
            for x in x0..x1 {
                instance_labels[y * w + x] = i as u32 + 1;
                if (y0 + 1..y0 + 3).contains(&y) && (x0 + 1..x1 - 1).contains(&x) {
                    kernel_labels[y * w + x] = i as u32 + 1;
                }
            }
        }
    }
    for _ in 0..3 {
        ignore[rng.gen_range(0..h * w)] = true;
    }
    let gt = GroundTruth { height: h, width: w, instance_labels, kernel_labels, ignore, n_instances: 3 };
    let unit = |rng: &mut ChaCha8Rng| Tensor::from_fn(&[1, h, w], |_| T::lit(rng.gen_range(0.05..0.95)));
    let text = unit(&mut rng);
    let kernel = unit(&mut rng);
    let instances = InstancePixels::from_ground_truth(&gt);
    loop {
        let sim = Tensor::from_fn(&[SIM_DIM, h, w], |_| T::lit(rng.gen_range(-4.0..4.0)));
        if clear_of_hinges(&sim, &instances, cfg) {
            let maps = PredictionMaps::new(text, kernel, sim).expect("fixture shapes");
            return (maps, gt);
        }
    }
}

fn clear_of_hinges<T: Scalar>(sim: &Tensor<T>, instances: &[InstancePixels], cfg: &LossConfig<T>) -> bool {
    let plane = sim.shape()[1] * sim.shape()[2];
    let at = |p: usize| -> [f64; SIM_DIM] { std::array::from_fn(|c| sim.data()[c * plane + p].as_f64()) };
    let dist = |a: &[f64; SIM_DIM], b: &[f64; SIM_DIM]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let means: Vec<[f64; SIM_DIM]> = instances
        .iter()
        .map(|inst| {
            let mut m = [0.0; SIM_DIM];
            for &q in &inst.kernel {
                at(q).iter().zip(m.iter_mut()).for_each(|(v, a)| *a += v);
            }
            m.map(|v| v / inst.kernel.len() as f64)
        })
        .collect();
    let (da, dd) = (cfg.delta_agg.as_f64(), cfg.delta_dis.as_f64());
    for (inst, m) in instances.iter().zip(&means) {
        if inst.text.iter().any(|&p| (dist(&at(p), m) - da).abs() < HINGE_MARGIN || dist(&at(p), m) < HINGE_MARGIN) {
            return false;
        }
    }
    for i in 0..means.len() {
        for j in i + 1..means.len() {
            let s = dist(&means[i], &means[j]);
            if (s - dd).abs() < HINGE_MARGIN || s < HINGE_MARGIN {
                return false;
            }
        }
    }
    true
}
