use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::net::SIM_DIM;
use crate::num::Scalar;
use crate::tensor::Tensor;

/// Neighbour visiting order shared by the growth and its reference model:
/// up, down, left, right as `(dy, dx)`.
pub(crate) const NEIGHBOURS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

pub(crate) fn neighbour(i: usize, dir: usize, height: usize, width: usize) -> Option<usize> {
    let (dy, dx) = NEIGHBOURS[dir];
    let y = (i / width) as isize + dy;
    let x = (i % width) as isize + dx;
    (y >= 0 && x >= 0 && (y as usize) < height && (x as usize) < width).then(|| y as usize * width + x as usize)
}

/// Mean similarity vector of every kernel (index `k − 1` for label `k`).
/// Kernels without pixels get a zero mean and never grow.
pub fn kernel_means<T: Scalar>(sim: &Tensor<T>, kernel_labels: &[u32]) -> Result<Vec<[T; SIM_DIM]>> {
    let (c, h, w) = sim.chw()?;
    let plane = h * w;
    if c != SIM_DIM || kernel_labels.len() != plane {
        return Err(Error::Shape(format!(
            "similarity {:?} vs {} kernel labels",
            sim.shape(),
            kernel_labels.len()
        )));
    }
    let n = kernel_labels.iter().copied().max().unwrap_or(0) as usize;
    let mut sums = vec![[T::zero(); SIM_DIM]; n];
    let mut counts = vec![0usize; n];
    let data = sim.data();
    for (p, &l) in kernel_labels.iter().enumerate() {
        if l > 0 {
            let k = l as usize - 1;
            counts[k] += 1;
            for (ch, s) in sums[k].iter_mut().enumerate() {
                *s += data[ch * plane + p];
            }
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            let inv = T::from_usize_lossy(n);
            s.iter_mut().for_each(|v| *v /= inv);
        }
    }
    Ok(sums)
}

/// The growth gate: `‖F(p) − mean‖ < d`, compared in squared form.
pub(crate) fn within<T: Scalar>(data: &[T], plane: usize, p: usize, mean: &[T; SIM_DIM], d: T) -> bool {
    let mut s = T::zero();
    for (ch, &m) in mean.iter().enumerate() {
        let diff = data[ch * plane + p] - m;
        s += diff * diff;
    }
    s < d * d
}

pub(crate) fn check_inputs<T: Scalar>(text: &[bool], kernel_labels: &[u32], sim: &Tensor<T>, d: T) -> Result<()> {
    let (_, h, w) = sim.chw()?;
    if text.len() != h * w || kernel_labels.len() != h * w {
        return Err(Error::Shape(format!(
            "text {} / kernels {} vs similarity {:?}",
            text.len(),
            kernel_labels.len(),
            sim.shape()
        )));
    }
    if d.is_nan() || d <= T::zero() {
        return Err(Error::InvalidArgument(format!("distance threshold must be > 0, got {d}")));
    }
    if let Some(i) = sim.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    if let Some(p) = kernel_labels.iter().zip(text).position(|(&k, &t)| k > 0 && !t) {
        return Err(Error::Contract(format!("kernel pixel {p} lies outside the text mask")));
    }
    Ok(())
}

/// Multi-source breadth-first growth from the kernels over text pixels.
/// The queue is seeded with kernel pixels in raster order; a popped pixel
/// claims each unlabelled text neighbour whose similarity vector lies
/// within `d` of the popped pixel's kernel mean. Means are fixed up front.
pub fn aggregate<T: Scalar>(text: &[bool], kernel_labels: &[u32], sim: &Tensor<T>, d: T) -> Result<Vec<u32>> {
    check_inputs(text, kernel_labels, sim, d)?;
    let (_, h, w) = sim.chw()?;
    let plane = h * w;
    let means = kernel_means(sim, kernel_labels)?;
    let data = sim.data();
    let mut labels = kernel_labels.to_vec();
    let mut queue: VecDeque<usize> = (0..plane).filter(|&p| labels[p] > 0).collect();
    while let Some(p) = queue.pop_front() {
        let l = labels[p];
        let mean = &means[l as usize - 1];
        for dir in 0..NEIGHBOURS.len() {
            if let Some(q) = neighbour(p, dir, h, w) {
                if labels[q] == 0 && text[q] && within(data, plane, q, mean, d) {
                    labels[q] = l;
                    queue.push_back(q);
                }
            }
        }
    }
    Ok(labels)
}
