//! File formats: stacked prediction maps, ground-truth bundles, images,
//! JSON artifacts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gt::{GeneratedGroundTruth, GroundTruth, GroundTruthInfo};
use crate::net::PredictionMaps;
use crate::tensor::{load_tensor, save_tensor, Tensor};

pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Maps are stored as one 6×h×w tensor: text, kernel, then the four
/// similarity channels.
pub fn save_maps(path: impl AsRef<Path>, maps: &PredictionMaps<f32>) -> Result<()> {
    save_tensor(path, &maps.stacked())
}

pub fn load_maps(path: impl AsRef<Path>) -> Result<PredictionMaps<f32>> {
    PredictionMaps::from_stacked(&load_tensor(path)?)
}

/// Paths of the tensor and sidecar of a ground-truth bundle.
pub fn gt_bundle_paths(dir: impl AsRef<Path>, stem: &str) -> (PathBuf, PathBuf) {
    let dir = dir.as_ref();
    (dir.join(format!("{stem}.gt.ptns")), dir.join(format!("{stem}.gt.json")))
}

pub fn save_gt_bundle(
    dir: impl AsRef<Path>,
    stem: &str,
    generated: &GeneratedGroundTruth,
    shrink_ratio: f32,
    stride: usize,
) -> Result<(PathBuf, PathBuf)> {
    let (tensor_path, info_path) = gt_bundle_paths(dir, stem);
    let gt = &generated.gt;
    save_tensor(&tensor_path, &gt.to_tensor())?;
    let info = GroundTruthInfo {
        n_instances: gt.n_instances,
        height: gt.height,
        width: gt.width,
        shrink_ratio,
        stride,
        demoted: generated.demoted.clone(),
    };
    write_json(&info_path, &super::Artifact::new(info))?;
    Ok((tensor_path, info_path))
}

pub fn load_gt_bundle(dir: impl AsRef<Path>, stem: &str) -> Result<(GroundTruth, GroundTruthInfo)> {
    let (tensor_path, info_path) = gt_bundle_paths(dir, stem);
    let gt = GroundTruth::from_tensor(&load_tensor(tensor_path)?)?;
    let info: GroundTruthInfo = read_json(info_path)?;
    if (info.height, info.width, info.n_instances) != (gt.height, gt.width, gt.n_instances) {
        return Err(Error::Format("ground-truth sidecar disagrees with its tensor".into()));
    }
    Ok((gt, info))
}

/// Loads a PNG or PGM/PPM image as a 3×H×W tensor in [0, 1]; grey images
/// are replicated across channels.
pub fn load_image(path: impl AsRef<Path>) -> Result<Tensor<f32>> {
    let rgb = image::open(path)?.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let raw = rgb.as_raw();
    Ok(Tensor::from_fn(&[3, h, w], |i| {
        let (c, p) = (i / (h * w), i % (h * w));
        raw[p * 3 + c] as f32 / 255.0
    }))
}

/// Zero-pads the bottom and right edges up to multiples of `m`.
pub fn pad_to_multiple(t: &Tensor<f32>, m: usize) -> Result<Tensor<f32>> {
    let (c, h, w) = t.chw()?;
    let (ph, pw) = (h.div_ceil(m) * m, w.div_ceil(m) * m);
    if (ph, pw) == (h, w) {
        return Ok(t.clone());
    }
    let data = t.data();
    Ok(Tensor::from_fn(&[c, ph, pw], |i| {
        let (ch, y, x) = (i / (ph * pw), (i / pw) % ph, i % pw);
        if y < h && x < w {
            data[ch * h * w + y * w + x]
        } else {
            0.0
        }
    }))
}

/// Files in `dir` with the given suffix, sorted, as (stem, path).
pub fn list_with_suffix(dir: impl AsRef<Path>, suffix: &str) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if let Some(stem) = name.strip_suffix(suffix) {
            if path.is_file() && !stem.is_empty() {
                out.push((stem.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}
