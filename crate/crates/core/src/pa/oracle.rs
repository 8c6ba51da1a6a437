//! Slow reference model of [`aggregate`](super::aggregate), written as an
//! explicit generation-by-generation simulation with full grid rescans.

use super::aggregate::{check_inputs, kernel_means, neighbour, within, NEIGHBOURS};
use crate::error::Result;
use crate::num::Scalar;
use crate::tensor::Tensor;

/// Generation 0 is the kernel pixels in raster order. A pixel joins
/// generation g + 1 when some generation-g neighbour of an acceptable
/// label exists; among those it takes the one that comes first by
/// (neighbour's rank within generation g, direction from that neighbour
/// to the pixel). Generation g + 1 is ranked by the same key.
pub fn aggregate_oracle<T: Scalar>(text: &[bool], kernel_labels: &[u32], sim: &Tensor<T>, d: T) -> Result<Vec<u32>> {
    check_inputs(text, kernel_labels, sim, d)?;
    let (_, h, w) = sim.chw()?;
    let plane = h * w;
    let means = kernel_means(sim, kernel_labels)?;
    let data = sim.data();
    let mut labels = kernel_labels.to_vec();
    // rank[p] = position of p within the current generation
    let mut rank: Vec<Option<usize>> = vec![None; plane];
    let mut generation: Vec<usize> = Vec::new();
    for p in 0..plane {
        if labels[p] > 0 {
            rank[p] = Some(generation.len());
            generation.push(p);
        }
    }
    while !generation.is_empty() {
        let mut claims: Vec<((usize, usize), usize, u32)> = Vec::new();
        for p in 0..plane {
            if labels[p] != 0 || !text[p] {
                continue;
            }
            let mut best: Option<((usize, usize), u32)> = None;
            for dir_to_p in 0..NEIGHBOURS.len() {
                // q is the neighbour from which stepping in `dir_to_p` lands on p
                let opposite = dir_to_p ^ 1;
                let Some(q) = neighbour(p, opposite, h, w) else { continue };
                let Some(r) = rank[q] else { continue };
                let l = labels[q];
                if within(data, plane, p, &means[l as usize - 1], d) && best.map_or(true, |(k, _)| (r, dir_to_p) < k) {
                    best = Some(((r, dir_to_p), l));
                }
            }
            if let Some((key, l)) = best {
                claims.push((key, p, l));
            }
        }
        for &p in &generation {
            rank[p] = None;
        }
        claims.sort_unstable();
        generation = claims.iter().map(|&(_, p, _)| p).collect();
        for (r, &(_, p, l)) in claims.iter().enumerate() {
            labels[p] = l;
            rank[p] = Some(r);
        }
    }
    Ok(labels)
}

/// A randomised aggregation input: a ragged text mask, 1–`max_kernels`
/// small kernels inside it, and similarity vectors uniform in [−4, 4]⁴.
#[derive(Clone, Debug)]
pub struct RandomGrid {
    pub height: usize,
    pub width: usize,
    pub text: Vec<bool>,
    pub kernel_labels: Vec<u32>,
    pub n_kernels: usize,
    pub sim: Tensor<f32>,
}

impl RandomGrid {
    pub fn generate(seed: u64, height: usize, width: usize, max_kernels: usize) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let plane = height * width;
        let density = rng.gen_range(0.55..0.9);
        let mut text: Vec<bool> = (0..plane).map(|_| rng.gen_bool(density)).collect();
        let wanted = rng.gen_range(1..=max_kernels.max(1));
        let mut kernel = vec![false; plane];
        for _ in 0..wanted {
            let mut p = rng.gen_range(0..plane);
            for _ in 0..rng.gen_range(1..8) {
                kernel[p] = true;
                text[p] = true;
                if let Some(q) = neighbour(p, rng.gen_range(0..4), height, width) {
                    p = q;
                }
            }
        }
        let (kernel_labels, n_kernels) = super::connected_components(&kernel, height, width)?;
        let sim = Tensor::from_fn(&[crate::net::SIM_DIM, height, width], |_| rng.gen_range(-4.0f32..4.0));
        Ok(RandomGrid { height, width, text, kernel_labels, n_kernels, sim })
    }
}
