//! Post-processing: binarisation, kernel components, similarity-gated
//! region growing, and per-instance geometry.

mod aggregate;
mod components;
mod geometry;
pub mod oracle;

use serde::{Deserialize, Serialize};

pub use aggregate::{aggregate, kernel_means};
pub use components::connected_components;
pub use geometry::{convex_hull, min_area_rect, trace_contour, RotatedRect};

use crate::error::{Error, Result};
use crate::gt::Polygon;
use crate::net::{PredictionMaps, OUTPUT_STRIDE};
use crate::num::Scalar;

/// Post-processing thresholds. Only `d` has a published default; the rest
/// are tunable plumbing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaConfig {
    /// Maximum similarity distance from a pixel to its kernel's mean.
    pub d: f32,
    pub text_thresh: f32,
    pub kernel_thresh: f32,
    /// Minimum instance size in map pixels.
    pub min_area: usize,
    /// Minimum mean text probability over an instance.
    pub min_score: f32,
    /// Whether to fit a rotated rectangle to each instance.
    pub fit_rect: bool,
}

impl Default for PaConfig {
    fn default() -> Self {
        PaConfig { d: 6.0, text_thresh: 0.5, kernel_thresh: 0.5, min_area: 16, min_score: 0.85, fit_rect: true }
    }
}

impl PaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0) {
            return Err(Error::InvalidArgument(format!("d must be > 0, got {}", self.d)));
        }
        for (name, t) in [("text_thresh", self.text_thresh), ("kernel_thresh", self.kernel_thresh)] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {t}")));
            }
        }
        if self.min_area < 1 {
            return Err(Error::InvalidArgument("min_area must be ≥ 1".into()));
        }
        if !self.min_score.is_finite() {
            return Err(Error::InvalidArgument("min_score must be finite".into()));
        }
        Ok(())
    }
}

/// Strict thresholding; kernels are intersected with the text mask.
pub fn binarize<T: Scalar>(maps: &PredictionMaps<T>, cfg: &PaConfig) -> (Vec<bool>, Vec<bool>) {
    let (tt, kt) = (T::lit(cfg.text_thresh as f64), T::lit(cfg.kernel_thresh as f64));
    let text: Vec<bool> = maps.text.data().iter().map(|&p| p > tt).collect();
    let kernel = maps.kernel.data().iter().zip(&text).map(|(&p, &t)| t && p > kt).collect();
    (text, kernel)
}

/// Intermediate masks of one post-processing pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Segmentation {
    pub height: usize,
    pub width: usize,
    pub text: Vec<bool>,
    pub kernel_labels: Vec<u32>,
    pub n_kernels: usize,
    pub labels: Vec<u32>,
}

pub fn segment<T: Scalar>(maps: &PredictionMaps<T>, cfg: &PaConfig) -> Result<Segmentation> {
    cfg.validate()?;
    let (height, width) = maps.dims();
    let (text, kernel) = binarize(maps, cfg);
    let (kernel_labels, n_kernels) = connected_components(&kernel, height, width)?;
    let labels = aggregate(&text, &kernel_labels, &maps.sim, T::lit(cfg.d as f64))?;
    Ok(Segmentation { height, width, text, kernel_labels, n_kernels, labels })
}

/// One detected instance. Pixel indices are row-major on the map grid;
/// geometry is in image coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TextInstance {
    pub label: u32,
    pub pixels: Vec<usize>,
    pub score: f32,
    pub polygon: Polygon<f32>,
    pub rect: Option<RotatedRect>,
}

/// Groups labelled pixels, drops small or low-confidence groups, and fits
/// geometry to the survivors (ordered by label).
pub fn extract_instances<T: Scalar>(
    labels: &[u32],
    height: usize,
    width: usize,
    text_prob: &[T],
    cfg: &PaConfig,
) -> Result<Vec<TextInstance>> {
    if labels.len() != height * width || text_prob.len() != labels.len() {
        return Err(Error::Shape(format!(
            "labels {} / probabilities {} vs grid {height}×{width}",
            labels.len(),
            text_prob.len()
        )));
    }
    let n = labels.iter().copied().max().unwrap_or(0) as usize;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, &l) in labels.iter().enumerate() {
        if l > 0 {
            groups[l as usize - 1].push(i);
        }
    }
    let stride = OUTPUT_STRIDE as f32;
    let mut out = Vec::new();
    for (k, pixels) in groups.into_iter().enumerate() {
        if pixels.len() < cfg.min_area.max(1) {
            continue;
        }
        let score = pixels.iter().map(|&i| text_prob[i].as_f64()).sum::<f64>() / pixels.len() as f64;
        if score < cfg.min_score as f64 {
            continue;
        }
        let polygon = trace_contour(&pixels, height, width)?.scaled(stride);
        let rect = cfg.fit_rect.then(|| {
            let centres: Vec<[f64; 2]> =
                pixels.iter().map(|&i| [(i % width) as f64 + 0.5, (i / width) as f64 + 0.5]).collect();
            min_area_rect(&centres).scaled(stride as f64)
        });
        out.push(TextInstance { label: k as u32 + 1, pixels, score: score as f32, polygon, rect });
    }
    Ok(out)
}

/// Full post-processing of one set of prediction maps.
pub fn detect<T: Scalar>(maps: &PredictionMaps<T>, cfg: &PaConfig) -> Result<Vec<TextInstance>> {
    let seg = segment(maps, cfg)?;
    extract_instances(&seg.labels, seg.height, seg.width, maps.text.data(), cfg)
}

/// Per-image detection file body.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Detections {
    pub instances: Vec<Detection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub polygon: Vec<[f32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rect: Option<RotatedRect>,
    pub score: f32,
}

impl Detection {
    pub fn to_polygon(&self) -> Result<Polygon<f32>> {
        Polygon::new(self.polygon.clone(), false)
    }
}

impl From<&[TextInstance]> for Detections {
    fn from(instances: &[TextInstance]) -> Self {
        Detections {
            instances: instances
                .iter()
                .map(|t| Detection { polygon: t.polygon.points().to_vec(), rect: t.rect, score: t.score })
                .collect(),
        }
    }
}
