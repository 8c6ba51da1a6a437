//! Operational surface shared by the command-line tool: file formats,
//! run manifests, rendering and benchmarking.

pub mod bench;
pub mod io;
pub mod manifest;
pub mod render;

pub use bench::{bench_maps, bench_network, configure_threads, resolve_threads, BenchMode, ImageTiming, TimingBreakdown, MIN_BENCH_INPUTS};
pub use manifest::{Artifact, RunManifest, Skipped, MANIFEST_FILE};

#[cfg(test)]
mod tests;
