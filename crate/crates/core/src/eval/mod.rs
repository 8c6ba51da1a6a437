//! Detection scoring: raster polygon IoU, greedy one-to-one matching with
//! do-not-care regions, and micro-averaged precision / recall / F.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gt::{rasterize, Polygon};

/// Samples along the longer side of the union bounding box.
pub const DEFAULT_RESOLUTION: usize = 512;

/// IoU of two polygons rasterised on a shared grid spanning their union's
/// bounding box. Symmetric in its arguments; 0 when both rasterise empty.
pub fn polygon_iou(a: &Polygon<f32>, b: &Polygon<f32>, resolution: usize) -> f32 {
    let (ax0, ay0, ax1, ay1) = a.bounds();
    let (bx0, by0, bx1, by1) = b.bounds();
    let (x0, y0) = (ax0.min(bx0) as f64, ay0.min(by0) as f64);
    let (x1, y1) = (ax1.max(bx1) as f64, ay1.max(by1) as f64);
    let longer = (x1 - x0).max(y1 - y0);
    if !(longer > 0.0) || resolution == 0 {
        return 0.0;
    }
    let scale = resolution as f64 / longer;
    let w = (((x1 - x0) * scale).ceil() as usize).max(1);
    let h = (((y1 - y0) * scale).ceil() as usize).max(1);
    let shift = |p: &Polygon<f32>| -> Vec<[f64; 2]> {
        p.points().iter().map(|q| [q[0] as f64 - x0, q[1] as f64 - y0]).collect()
    };
    let ma = rasterize(&shift(a), h, w, scale);
    let mb = rasterize(&shift(b), h, w, scale);
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &q) in ma.iter().zip(&mb) {
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    if union == 0 {
        0.0
    } else {
        (inter as f64 / union as f64) as f32
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredPolygon {
    pub polygon: Polygon<f32>,
    pub score: f32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub det: usize,
    pub gt: usize,
    pub iou: f32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub matches: Vec<MatchRecord>,
    /// Detections dropped because they cover a do-not-care region.
    pub ignored_dets: Vec<usize>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f32,
    pub recall: f32,
    pub fmeasure: f32,
}

impl EvalReport {
    /// Builds the ratios from counts. An empty denominator means nothing
    /// could go wrong on that side, so the ratio is 1.
    pub fn from_counts(matches: Vec<MatchRecord>, ignored_dets: Vec<usize>, tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        let p = ratio(tp, tp + fp);
        let r = ratio(tp, tp + fn_);
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        EvalReport { matches, ignored_dets, tp, fp, fn_, precision: p as f32, recall: r as f32, fmeasure: f as f32 }
    }
}

/// Greedy matching in descending detection score (ties by index). Each
/// detection takes the unmatched non-ignore ground truth of highest IoU
/// above `iou_thresh`; failing that, a detection overlapping an ignore
/// region above the threshold is dropped, otherwise it is a false positive.
pub fn match_detections(dets: &[ScoredPolygon], gts: &[Polygon<f32>], iou_thresh: f32, resolution: usize) -> EvalReport {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));
    let mut taken = vec![false; gts.len()];
    let (mut matches, mut ignored, mut fp) = (Vec::new(), Vec::new(), 0);
    for &d in &order {
        let ious: Vec<f32> = gts.iter().map(|g| polygon_iou(&dets[d].polygon, g, resolution)).collect();
        let best = (0..gts.len())
            .filter(|&g| !gts[g].ignore() && !taken[g] && ious[g] > iou_thresh)
            .max_by(|&a, &b| ious[a].total_cmp(&ious[b]).then(b.cmp(&a)));
        if let Some(g) = best {
            taken[g] = true;
            matches.push(MatchRecord { det: d, gt: g, iou: ious[g] });
        } else if (0..gts.len()).any(|g| gts[g].ignore() && ious[g] > iou_thresh) {
            ignored.push(d);
        } else {
            fp += 1;
        }
    }
    let positives = gts.iter().filter(|g| !g.ignore()).count();
    let tp = matches.len();
    EvalReport::from_counts(matches, ignored, tp, fp, positives - tp)
}

/// Scores every image in parallel.
pub fn match_dataset(items: &[(Vec<ScoredPolygon>, Vec<Polygon<f32>>)], iou_thresh: f32, resolution: usize) -> Vec<EvalReport> {
    items.par_iter().map(|(d, g)| match_detections(d, g, iou_thresh, resolution)).collect()
}

/// Micro-averaged totals over a non-empty dataset.
pub fn summarize(reports: &[EvalReport]) -> Result<EvalReport> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("cannot summarise an empty dataset".into()));
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    let (mut matches, mut ignored) = (Vec::new(), Vec::new());
    for r in reports {
        tp += r.tp;
        fp += r.fp;
        fn_ += r.fn_;
        matches.extend_from_slice(&r.matches);
        ignored.extend_from_slice(&r.ignored_dets);
    }
    Ok(EvalReport::from_counts(matches, ignored, tp, fp, fn_))
}

/// Dataset-level report with per-image sections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub iou_thresh: f32,
    pub images: Vec<ImageReport>,
    pub total: EvalReport,
    /// Inputs that had no counterpart and were left out.
    pub unmatched: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub name: String,
    #[serde(flatten)]
    pub report: EvalReport,
}

impl DatasetReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "IoU threshold {:.2}", self.iou_thresh);
        let _ = writeln!(s, "{:<32} {:>4} {:>4} {:>4} {:>7} {:>7} {:>7}", "image", "TP", "FP", "FN", "P", "R", "F");
        let mut line = |name: &str, r: &EvalReport| {
            let _ = writeln!(
                s,
                "{:<32} {:>4} {:>4} {:>4} {:>7.4} {:>7.4} {:>7.4}",
                name, r.tp, r.fp, r.fn_, r.precision, r.recall, r.fmeasure
            );
        };
        for img in &self.images {
            line(&img.name, &img.report);
        }
        line("TOTAL", &self.total);
        for u in &self.unmatched {
            let _ = writeln!(s, "unmatched: {u}");
        }
        s
    }
}
