//! Ground truth: polygon rasterisation, kernel shrinking and ignore regions.

mod annotations;
mod polygon;
mod raster;
mod shrink;

pub use annotations::{parse_ctw_lines, Annotation};
pub use polygon::{bounds, perimeter, segments_intersect, signed_area, Point, Polygon};
pub use raster::rasterize;
pub use shrink::{distance_to_background, shrink_mask, shrink_offset};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::tensor::Tensor;

/// Instance-labelled text and kernel maps on the prediction grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub height: usize,
    pub width: usize,
    /// 0 for background, `i ∈ 1..=n` for text instance `i`.
    pub instance_labels: Vec<u32>,
    /// 0 or the owning instance id.
    pub kernel_labels: Vec<u32>,
    pub ignore: Vec<bool>,
    pub n_instances: usize,
}

/// JSON sidecar written next to a ground-truth tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthInfo {
    pub n_instances: usize,
    pub height: usize,
    pub width: usize,
    pub shrink_ratio: f32,
    pub stride: usize,
    pub demoted: Vec<usize>,
}

impl GroundTruth {
    pub fn validate(&self) -> Result<()> {
        let n = self.height * self.width;
        if self.instance_labels.len() != n || self.kernel_labels.len() != n || self.ignore.len() != n {
            return Err(Error::Shape("ground-truth maps disagree with dims".into()));
        }
        let mut has_kernel = vec![false; self.n_instances];
        for (i, (&t, &k)) in self.instance_labels.iter().zip(&self.kernel_labels).enumerate() {
            if t as usize > self.n_instances {
                return Err(Error::Contract(format!("label {t} > instance count {}", self.n_instances)));
            }
            if k > 0 {
                if k != t {
                    return Err(Error::Contract(format!("kernel pixel {i} ({k}) outside its instance ({t})")));
                }
                has_kernel[k as usize - 1] = true;
            }
        }
        if let Some(i) = has_kernel.iter().position(|&h| !h) {
            return Err(Error::Contract(format!("instance {} has no kernel pixels", i + 1)));
        }
        Ok(())
    }

    /// `3×h×w` tensor: instance labels, kernel labels, ignore mask.
    pub fn to_tensor(&self) -> Tensor<f32> {
        let mut data = Vec::with_capacity(3 * self.ignore.len());
        data.extend(self.instance_labels.iter().map(|&v| v as f32));
        data.extend(self.kernel_labels.iter().map(|&v| v as f32));
        data.extend(self.ignore.iter().map(|&v| if v { 1.0 } else { 0.0 }));
        Tensor::new(vec![3, self.height, self.width], data).expect("consistent ground truth")
    }

    pub fn from_tensor(t: &Tensor<f32>) -> Result<Self> {
        let (c, h, w) = t.chw()?;
        if c != 3 {
            return Err(Error::Shape(format!("ground truth tensor must be 3×h×w, got {:?}", t.shape())));
        }
        let labels = |ch: usize| t.channel(ch).iter().map(|&v| v as u32).collect::<Vec<_>>();
        let instance_labels = labels(0);
        let n_instances = instance_labels.iter().copied().max().unwrap_or(0) as usize;
        let gt = Self {
            height: h,
            width: w,
            kernel_labels: labels(1),
            ignore: t.channel(2).iter().map(|&v| v > 0.5).collect(),
            instance_labels,
            n_instances,
        };
        gt.validate()?;
        Ok(gt)
    }

    pub fn text_mask(&self) -> Vec<bool> {
        self.instance_labels.iter().map(|&l| l > 0).collect()
    }

    /// Flat pixel indices per kernel, index `i` for instance `i + 1`.
    pub fn kernel_pixels(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_instances];
        for (i, &k) in self.kernel_labels.iter().enumerate() {
            if k > 0 {
                out[k as usize - 1].push(i);
            }
        }
        out
    }
}

/// Result of ground-truth generation, including the annotation indices of
/// instances demoted to ignore regions because their kernel vanished.
#[derive(Clone, Debug)]
pub struct GeneratedGroundTruth {
    pub gt: GroundTruth,
    /// Annotation polygon index for each instance id (`ids[i]` ↔ id `i+1`).
    pub source: Vec<usize>,
    pub demoted: Vec<usize>,
}

/// Rasterise every polygon onto the `⌈H/stride⌉×⌈W/stride⌉` grid and shrink
/// each text polygon by its offset `A(1−r²)/L`.
///
/// Overlaps resolve in favour of later polygons; kernel pixels always carry
/// their own instance id. Ignore polygons only mark the ignore mask.
pub fn make_ground_truth<T: Scalar>(
    polygons: &[Polygon<T>],
    height: usize,
    width: usize,
    r: T,
    stride: usize,
) -> Result<GeneratedGroundTruth> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be ≥ 1".into()));
    }
    let (h, w) = (height.div_ceil(stride), width.div_ceil(stride));
    let scale = T::one() / T::from_usize_lossy(stride);
    let n = h * w;
    let mut instance_labels = vec![0u32; n];
    let mut kernel_labels = vec![0u32; n];
    let mut ignore = vec![false; n];
    let mut candidates: Vec<(usize, Vec<bool>, Vec<bool>)> = Vec::new();
    let mut demoted = Vec::new();

    for (idx, poly) in polygons.iter().enumerate() {
        let text = rasterize(poly.points(), h, w, scale);
        if poly.ignore() {
            ignore.iter_mut().zip(&text).for_each(|(g, &t)| *g |= t);
            continue;
        }
        let d = (shrink_offset(poly, r)? * scale).as_f64();
        let kernel = shrink_mask(&text, h, w, d);
        if !kernel.contains(&true) {
            demoted.push(idx);
            ignore.iter_mut().zip(&text).for_each(|(g, &t)| *g |= t);
            continue;
        }
        candidates.push((idx, text, kernel));
    }

    for (k, (_, text, _)) in candidates.iter().enumerate() {
        for (l, &t) in instance_labels.iter_mut().zip(text) {
            if t {
                *l = k as u32 + 1;
            }
        }
    }
    for (k, (_, _, kernel)) in candidates.iter().enumerate() {
        for ((kl, il), &m) in kernel_labels.iter_mut().zip(instance_labels.iter_mut()).zip(kernel) {
            if m {
                *kl = k as u32 + 1;
                *il = k as u32 + 1;
            }
        }
    }

    // instances whose kernel was entirely overwritten become ignore regions
    let mut survives = vec![false; candidates.len()];
    kernel_labels.iter().filter(|&&k| k > 0).for_each(|&k| survives[k as usize - 1] = true);
    let mut remap = vec![0u32; candidates.len() + 1];
    let mut source = Vec::new();
    for (k, &alive) in survives.iter().enumerate() {
        if alive {
            source.push(candidates[k].0);
            remap[k + 1] = source.len() as u32;
        } else {
            demoted.push(candidates[k].0);
        }
    }
    for i in 0..n {
        let l = instance_labels[i] as usize;
        if l > 0 && !survives[l - 1] {
            ignore[i] = true;
        }
        instance_labels[i] = remap[l];
        kernel_labels[i] = remap[kernel_labels[i] as usize];
    }
    demoted.sort_unstable();

    let gt = GroundTruth { height: h, width: w, instance_labels, kernel_labels, ignore, n_instances: source.len() };
    gt.validate()?;
    Ok(GeneratedGroundTruth { gt, source, demoted })
}

impl Annotation {
    pub fn ground_truth(&self, r: f32, stride: usize) -> Result<GeneratedGroundTruth> {
        make_ground_truth(&self.polygons, self.height, self.width, r, stride)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f32, y0: f32, x1: f32, y1: f32) -> Polygon<f32> {
        Polygon::rect(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn two_disjoint_squares() {
        let polys = [rect(8.0, 8.0, 48.0, 48.0), rect(80.0, 80.0, 120.0, 120.0)];
        let g = make_ground_truth(&polys, 128, 128, 0.7, 4).unwrap().gt;
        assert_eq!(g.n_instances, 2);
        assert_eq!((g.height, g.width), (32, 32));
        let kp = g.kernel_pixels();
        assert!(!kp[0].is_empty() && !kp[1].is_empty());
    }

    #[test]
    fn ignore_polygon_only_marks_mask() {
        let polys = [rect(8.0, 8.0, 48.0, 48.0), rect(80.0, 80.0, 120.0, 120.0).with_ignore(true)];
        let g = make_ground_truth(&polys, 128, 128, 0.7, 4).unwrap().gt;
        assert_eq!(g.n_instances, 1);
        assert_eq!(g.ignore.iter().filter(|&&v| v).count(), 100);
    }

    #[test]
    fn vanishing_kernel_is_demoted() {
        let polys = [rect(8.0, 8.0, 48.0, 48.0), rect(60.0, 60.0, 67.0, 120.0)];
        // two cells wide on the grid; the offset (≈0.59 cells) exceeds their 0.5 boundary distance
        let out = make_ground_truth(&polys, 128, 128, 0.5, 4).unwrap();
        assert_eq!(out.gt.n_instances, 1);
        assert_eq!(out.demoted, vec![1]);
        assert!(out.gt.ignore.contains(&true));
    }

    #[test]
    fn later_instance_wins_overlap_and_kernels_stay_inside() {
        let polys = [rect(0.0, 0.0, 80.0, 40.0), rect(40.0, 20.0, 120.0, 60.0)];
        let g = make_ground_truth(&polys, 64, 128, 0.7, 1).unwrap().gt;
        assert_eq!(g.instance_labels[30 * 128 + 60], 2);
        g.validate().unwrap();
    }

    #[test]
    fn tensor_round_trip() {
        let polys = [rect(8.0, 8.0, 48.0, 48.0), rect(50.0, 8.0, 60.0, 12.0).with_ignore(true)];
        let g = make_ground_truth(&polys, 64, 64, 0.7, 4).unwrap().gt;
        assert_eq!(GroundTruth::from_tensor(&g.to_tensor()).unwrap(), g);
    }
}
