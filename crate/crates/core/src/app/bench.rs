//! Post-processing benchmarks, sequential or as a two-stage bounded-queue
//! pipeline (one producer of prediction maps, N post-processing workers).

use std::borrow::Cow;
use std::sync::Mutex;
use std::time::Instant;

use crossbeam_channel::bounded;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Network, PredictionMaps};
use crate::pa::{detect, PaConfig};
use crate::tensor::Tensor;

/// Smallest batch accepted for timing.
pub const MIN_BENCH_INPUTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchMode {
    Sequential,
    Pipeline,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImageTiming {
    pub backbone_ms: f64,
    pub head_ms: f64,
    pub post_ms: f64,
    /// Per-image wall-clock including producer overhead (sequential), or
    /// the sum of stages (pipeline).
    pub total_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingBreakdown {
    pub mode: BenchMode,
    pub threads: usize,
    pub repetitions: usize,
    pub images: usize,
    /// Per-image means over the measured repetitions.
    pub per_image: Vec<ImageTiming>,
    pub mean: ImageTiming,
    /// Mean wall-clock of one pass over the batch.
    pub wall_clock_ms: f64,
    pub fps: f64,
}

impl TimingBreakdown {
    pub fn to_text(&self) -> String {
        let m = &self.mean;
        format!(
            "mode {:?}, {} images × {} repetitions, {} worker(s)\n\
             {:>10} {:>10} {:>10} {:>10}\n\
             {:>10.3} {:>10.3} {:>10.3} {:>10.3}  ms/image (backbone, head, post, total)\n\
             wall-clock {:.3} ms per pass, {:.2} FPS\n",
            self.mode,
            self.images,
            self.repetitions,
            self.threads,
            "backbone",
            "head",
            "post",
            "total",
            m.backbone_ms,
            m.head_ms,
            m.post_ms,
            m.total_ms,
            self.wall_clock_ms,
            self.fps
        )
    }
}

/// `--threads`, else `PANKIT_THREADS`, else the available parallelism.
pub fn resolve_threads(flag: Option<usize>) -> usize {
    flag.filter(|&t| t > 0)
        .or_else(|| std::env::var("PANKIT_THREADS").ok()?.trim().parse().ok().filter(|&t: &usize| t > 0))
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Sizes the global data-parallel pool; later calls are ignored.
pub fn configure_threads(threads: usize) {
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global() {
        log::debug!("thread pool already configured: {e}");
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Produced maps plus backbone and head milliseconds. Precomputed maps
/// are lent rather than copied so the copy is not timed.
type Produced<'a> = (Cow<'a, PredictionMaps<f32>>, f64, f64);

fn run<'a, P>(n: usize, produce: P, pa: &PaConfig, mode: BenchMode, threads: usize, repetitions: usize) -> Result<TimingBreakdown>
where
    P: Fn(usize) -> Result<Produced<'a>> + Sync,
{
    if n < MIN_BENCH_INPUTS {
        return Err(Error::InvalidArgument(format!("benchmark needs ≥ {MIN_BENCH_INPUTS} inputs, got {n}")));
    }
    if repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be ≥ 1".into()));
    }
    pa.validate()?;
    let threads = threads.max(1);
    let mut sums = vec![ImageTiming::default(); n];
    let mut wall = 0.0;
    // the first pass warms caches and is discarded
    for rep in 0..=repetitions {
        let (timings, elapsed) = match mode {
            BenchMode::Sequential => sequential_pass(n, &produce, pa)?,
            BenchMode::Pipeline => pipeline_pass(n, &produce, pa, threads)?,
        };
        if rep == 0 {
            continue;
        }
        wall += elapsed;
        for (s, t) in sums.iter_mut().zip(&timings) {
            s.backbone_ms += t.backbone_ms;
            s.head_ms += t.head_ms;
            s.post_ms += t.post_ms;
            s.total_ms += t.total_ms;
        }
    }
    let r = repetitions as f64;
    let per_image: Vec<ImageTiming> = sums
        .iter()
        .map(|s| ImageTiming {
            backbone_ms: s.backbone_ms / r,
            head_ms: s.head_ms / r,
            post_ms: s.post_ms / r,
            total_ms: s.total_ms / r,
        })
        .collect();
    let avg = |f: fn(&ImageTiming) -> f64| per_image.iter().map(f).sum::<f64>() / n as f64;
    let mean = ImageTiming {
        backbone_ms: avg(|t| t.backbone_ms),
        head_ms: avg(|t| t.head_ms),
        post_ms: avg(|t| t.post_ms),
        total_ms: avg(|t| t.total_ms),
    };
    let wall_clock_ms = wall / r;
    Ok(TimingBreakdown {
        mode,
        threads: if mode == BenchMode::Sequential { 1 } else { threads },
        repetitions,
        images: n,
        per_image,
        mean,
        wall_clock_ms,
        fps: n as f64 / (wall_clock_ms / 1e3),
    })
}

fn sequential_pass<'a, P>(n: usize, produce: &P, pa: &PaConfig) -> Result<(Vec<ImageTiming>, f64)>
where
    P: Fn(usize) -> Result<Produced<'a>>,
{
    let start = Instant::now();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t0 = Instant::now();
        let (maps, backbone_ms, head_ms) = produce(i)?;
        let t1 = Instant::now();
        detect(&maps, pa)?;
        out.push(ImageTiming { backbone_ms, head_ms, post_ms: ms(t1), total_ms: ms(t0) });
    }
    Ok((out, ms(start)))
}

fn pipeline_pass<'a, P>(n: usize, produce: &P, pa: &PaConfig, workers: usize) -> Result<(Vec<ImageTiming>, f64)>
where
    P: Fn(usize) -> Result<Produced<'a>> + Sync,
{
    let timings = Mutex::new(vec![ImageTiming::default(); n]);
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let fail = |e: Error| {
        failure.lock().expect("no poisoned locks").get_or_insert(e);
    };
    let start = Instant::now();
    std::thread::scope(|s| {
        let (tx, rx) = bounded::<(usize, Produced<'a>)>(workers * 2);
        s.spawn(move || {
            for i in 0..n {
                match produce(i) {
                    Ok(item) => {
                        if tx.send((i, item)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        fail(e);
                        break;
                    }
                }
            }
        });
        for _ in 0..workers {
            let rx = rx.clone();
            let (timings, fail) = (&timings, &fail);
            s.spawn(move || {
                for (i, (maps, backbone_ms, head_ms)) in rx.iter() {
                    let t = Instant::now();
                    if let Err(e) = detect(&maps, pa) {
                        fail(e);
                        continue;
                    }
                    let post_ms = ms(t);
                    timings.lock().expect("no poisoned locks")[i] =
                        ImageTiming { backbone_ms, head_ms, post_ms, total_ms: backbone_ms + head_ms + post_ms };
                }
            });
        }
    });
    let elapsed = ms(start);
    if let Some(e) = failure.into_inner().expect("no poisoned locks") {
        return Err(e);
    }
    Ok((timings.into_inner().expect("no poisoned locks"), elapsed))
}

/// Post-processing of precomputed maps; the producer stage hands out
/// copies, so backbone and head time is zero.
pub fn bench_maps(
    maps: &[PredictionMaps<f32>],
    pa: &PaConfig,
    mode: BenchMode,
    threads: usize,
    repetitions: usize,
) -> Result<TimingBreakdown> {
    run(maps.len(), |i| Ok((Cow::Borrowed(&maps[i]), 0.0, 0.0)), pa, mode, threads, repetitions)
}

/// Network forward followed by post-processing.
pub fn bench_network(
    net: &Network<'_, f32>,
    images: &[Tensor<f32>],
    pa: &PaConfig,
    mode: BenchMode,
    threads: usize,
    repetitions: usize,
) -> Result<TimingBreakdown> {
    run(
        images.len(),
        |i| {
            let (maps, t) = net.forward_timed(&images[i])?;
            Ok((Cow::Owned(maps), t.backbone.as_secs_f64() * 1e3, t.head.as_secs_f64() * 1e3))
        },
        pa,
        mode,
        threads,
        repetitions,
    )
}
