mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pankit::pa::PaConfig;

#[derive(Parser, Debug)]
#[command(name = "pankit", version, about = "Arbitrary-shaped text detection by pixel aggregation")]
struct Cli {
    /// Worker threads (falls back to PANKIT_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct PaArgs {
    /// Similarity distance threshold for pixel aggregation
    #[arg(long, default_value_t = 6.0)]
    d: f32,
    #[arg(long = "text-thresh", default_value_t = 0.5)]
    text_thresh: f32,
    #[arg(long = "kernel-thresh", default_value_t = 0.5)]
    kernel_thresh: f32,
    /// Minimum instance area in output-map pixels
    #[arg(long = "min-area", default_value_t = 16)]
    min_area: usize,
    /// Minimum mean text score of an instance
    #[arg(long = "min-score", default_value_t = 0.85)]
    min_score: f32,
    /// Skip rotated-rectangle fitting
    #[arg(long = "no-rect")]
    no_rect: bool,
}

impl PaArgs {
    pub fn config(&self) -> PaConfig {
        PaConfig {
            d: self.d,
            text_thresh: self.text_thresh,
            kernel_thresh: self.kernel_thresh,
            min_area: self.min_area,
            min_score: self.min_score,
            fit_rect: !self.no_rect,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a reproducible random weight bundle
    InitWeights {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of cascaded FPEMs
        #[arg(long, default_value_t = 2)]
        nc: usize,
    },
    /// Generate a synthetic scene
    Scene {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        instances: usize,
        #[arg(long = "curved-fraction", default_value_t = 0.5)]
        curved_fraction: f64,
        /// Force a near-touching pair
        #[arg(long)]
        adjacent: bool,
    },
    /// Build ground-truth bundles from annotation files
    Labelgen {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Kernel shrink ratio
        #[arg(long, default_value_t = 0.7)]
        r: f32,
        #[arg(long, default_value_t = 4)]
        stride: usize,
        /// Canvas size when neither an image nor the annotation gives one
        #[arg(long, default_value_t = 640)]
        width: usize,
        #[arg(long, default_value_t = 640)]
        height: usize,
    },
    /// Detect text from stored maps or from images through the network
    Infer {
        /// Map tensor file or directory of them
        #[arg(long, conflicts_with = "image")]
        maps: Option<PathBuf>,
        /// Image file or directory of them (needs --weights)
        #[arg(long, requires = "weights")]
        image: Option<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pa: PaArgs,
        /// Write an overlay PNG per input
        #[arg(long)]
        render: bool,
        /// Also write a PCA colouring of the similarity field
        #[arg(long = "render-sim")]
        render_sim: bool,
        /// Save the predicted maps next to the detections
        #[arg(long = "save-maps")]
        save_maps: bool,
    },
    /// Score detections against annotations
    Eval {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        iou: f32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Count multiply-accumulates of the network
    Flops {
        #[arg(long, default_value_t = 2)]
        nc: usize,
        #[arg(long, default_value_t = 640)]
        height: usize,
        #[arg(long, default_value_t = 640)]
        width: usize,
        /// Report totals for n_c = 0..=4 instead of one configuration
        #[arg(long)]
        sweep: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Time post-processing, optionally behind the network
    Bench {
        #[arg(long, conflicts_with = "images")]
        maps: Option<PathBuf>,
        #[arg(long, requires = "weights")]
        images: Option<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Run network and post-processing as a producer/consumer pipeline
        #[arg(long)]
        pipeline: bool,
        /// Measured passes after one warm-up pass
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[command(flatten)]
        pa: PaArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Optimise prediction maps on a synthetic scene, then detect and score
    Traintoy {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        instances: usize,
        #[arg(long = "curved-fraction", default_value_t = 0.5)]
        curved_fraction: f64,
        #[arg(long)]
        adjacent: bool,
        #[arg(long, default_value_t = 0.7)]
        r: f32,
        #[arg(long, default_value_t = pankit::synth::DEFAULT_STEPS)]
        steps: usize,
        #[arg(long, default_value_t = pankit::synth::DEFAULT_LR)]
        lr: f64,
        #[arg(long, default_value_t = 0.5)]
        iou: f32,
        #[command(flatten)]
        pa: PaArgs,
    },
    /// Print every loss term for stored maps and a ground-truth bundle
    LossDebug {
        #[arg(long)]
        maps: PathBuf,
        /// Ground-truth tensor (`<stem>.gt.ptns`)
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let threads = pankit::app::resolve_threads(cli.threads);
    pankit::app::configure_threads(threads);
    if let Err(e) = commands::run(cli.command, threads) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
