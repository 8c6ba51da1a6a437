//! Synthetic scenes and the map-space trainer: prediction maps are
//! optimised directly under the total loss, then post-processed.

mod scene;
mod train;

pub use scene::{gen_scene, polygon_distance, raster_gap, Scene, SceneConfig};
pub use train::{initial_maps, perfect_maps, train_maps, train_toy, TrainRun, CSV_HEADER, DEFAULT_LR, DEFAULT_STEPS};
