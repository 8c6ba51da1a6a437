use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{param_specs, NetConfig};
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::tensor::{load_tensor, save_tensor, Tensor};

/// Named parameter tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Weights<T = f32> {
    params: BTreeMap<String, Tensor<T>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    file: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    config: NetConfig,
    layers: Vec<ManifestEntry>,
}

impl<T: Scalar> Weights<T> {
    /// Reproducible He-uniform initialisation; norms start as identity.
    pub fn random(cfg: &NetConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = param_specs(cfg)
            .into_iter()
            .map(|(name, shape)| {
                let t = if name.ends_with(".weight") {
                    let fan_in: usize = shape[1..].iter().product();
                    let a = (6.0 / fan_in as f64).sqrt();
                    Tensor::from_fn(&shape, |_| T::lit(rng.gen_range(-a..a)))
                } else if name.ends_with(".var") || name.ends_with(".gamma") {
                    Tensor::full(&shape, T::one())
                } else {
                    Tensor::zeros(&shape)
                };
                (name, t)
            })
            .collect();
        Self { params }
    }

    /// All-zero parameters (norms identity) — a network that predicts 0.5
    /// everywhere.
    pub fn zeros(cfg: &NetConfig) -> Self {
        let params = param_specs(cfg)
            .into_iter()
            .map(|(name, shape)| {
                let v = if name.ends_with(".var") || name.ends_with(".gamma") { T::one() } else { T::zero() };
                (name, Tensor::full(&shape, v))
            })
            .collect();
        Self { params }
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.params
            .get(name)
            .ok_or_else(|| Error::MissingWeights(format!("no parameter `{name}`")))
    }

    pub fn try_get(&self, name: &str) -> Option<&Tensor<T>> {
        self.params.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor<T>) {
        self.params.insert(name.into(), t);
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.params.get_mut(name)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Every parameter the architecture references exists with the right
    /// shape, and nothing else is present.
    pub fn check_complete(&self, cfg: &NetConfig) -> Result<()> {
        let specs = param_specs(cfg);
        for (name, shape) in &specs {
            let t = self.get(name)?;
            if t.shape() != shape.as_slice() {
                return Err(Error::Shape(format!(
                    "parameter `{name}` has shape {:?}, expected {shape:?}",
                    t.shape()
                )));
            }
        }
        if specs.len() != self.params.len() {
            let extra: Vec<_> = self
                .params
                .keys()
                .filter(|k| !specs.iter().any(|(n, _)| n == *k))
                .collect();
            return Err(Error::MissingWeights(format!("unexpected parameters {extra:?}")));
        }
        Ok(())
    }

    /// Write a bundle directory: one tensor file per parameter plus
    /// `manifest.json`.
    pub fn save(&self, dir: impl AsRef<Path>, cfg: &NetConfig) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut layers = Vec::new();
        for (name, t) in &self.params {
            let file = format!("{name}.ptns");
            save_tensor(dir.join(&file), t)?;
            layers.push(ManifestEntry { name: name.clone(), file, shape: t.shape().to_vec() });
        }
        let manifest = Manifest { config: cfg.clone(), layers };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<(NetConfig, Self)> {
        let dir = dir.as_ref();
        let manifest_path = dir.join("manifest.json");
        if !manifest_path.exists() {
            return Err(Error::MissingWeights(format!(
                "{} not found (create one with `pankit init-weights`)",
                manifest_path.display()
            )));
        }
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
        let mut params = BTreeMap::new();
        for e in manifest.layers {
            let t: Tensor<T> = load_tensor(dir.join(&e.file))?;
            if t.shape() != e.shape.as_slice() {
                return Err(Error::Shape(format!(
                    "{}: file shape {:?}, manifest {:?}",
                    e.file,
                    t.shape(),
                    e.shape
                )));
            }
            params.insert(e.name, t);
        }
        let w = Self { params };
        w.check_complete(&manifest.config)?;
        Ok((manifest.config, w))
    }
}
