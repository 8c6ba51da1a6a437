use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use log::{info, warn};
use pankit::app::{
    bench_maps, bench_network, io, render, Artifact, BenchMode, RunManifest, TimingBreakdown, MANIFEST_FILE,
};
use pankit::eval::{match_dataset, summarize, DatasetReport, ImageReport, ScoredPolygon, DEFAULT_RESOLUTION};
use pankit::gt::{make_ground_truth, parse_ctw_lines, Annotation, GroundTruth};
use pankit::loss::{total_loss, LossValues};
use pankit::net::{model_flops, NetConfig, OUTPUT_STRIDE};
use pankit::pa::{detect, extract_instances, segment, Detections, PaConfig, TextInstance};
use pankit::synth::{gen_scene, initial_maps, train_toy, SceneConfig};
use pankit::tensor::{load_tensor, FlopsReport};
use pankit::{LossConfig, PredictionMaps, Tensor, Weights};
use serde::Serialize;

use crate::{Command, Format, PaArgs};

const IMAGE_SUFFIXES: [&str; 4] = [".png", ".pgm", ".ppm", ".pnm"];
const DETECTION_SUFFIX: &str = ".det.json";
const MAPS_SUFFIX: &str = ".ptns";

pub fn run(cmd: Command, threads: usize) -> Result<()> {
    match cmd {
        Command::InitWeights { out, seed, nc } => init_weights(&out, seed, nc),
        Command::Scene { out, seed, instances, curved_fraction, adjacent } => {
            scene(&out, seed, scene_config(instances, curved_fraction, adjacent))
        }
        Command::Labelgen { annotations, out, r, stride, width, height } => {
            labelgen(&annotations, &out, r, stride, (width, height))
        }
        Command::Infer { maps, image, weights, out, pa, render, render_sim, save_maps } => {
            let opts = InferOptions { pa: pa.config(), render, render_sim, save_maps };
            match (maps, image) {
                (Some(m), None) => infer_maps(&m, &out, &opts),
                (None, Some(i)) => infer_images(&i, weights.as_deref(), &out, &opts),
                _ => bail!("pass exactly one of --maps or --image"),
            }
        }
        Command::Eval { detections, annotations, iou, out, format } => {
            eval(&detections, &annotations, iou, out.as_deref(), format)
        }
        Command::Flops { nc, height, width, sweep, format } => flops(nc, height, width, sweep, format),
        Command::Bench { maps, images, weights, pipeline, reps, pa, out, format } => {
            let mode = if pipeline { BenchMode::Pipeline } else { BenchMode::Sequential };
            bench(maps.as_deref(), images.as_deref(), weights.as_deref(), mode, threads, reps, &pa, out.as_deref(), format)
        }
        Command::Traintoy { out, seed, instances, curved_fraction, adjacent, r, steps, lr, iou, pa } => {
            let scene_cfg = scene_config(instances, curved_fraction, adjacent);
            traintoy(&out, seed, &scene_cfg, r, steps, lr, iou, &pa)
        }
        Command::LossDebug { maps, gt, format } => loss_debug(&maps, &gt, format),
    }
}

fn scene_config(n_instances: usize, curved_fraction: f64, force_adjacent: bool) -> SceneConfig {
    SceneConfig { n_instances, curved_fraction, force_adjacent, ..SceneConfig::default() }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn finish(manifest: &RunManifest, dir: &Path) -> Result<()> {
    let path = manifest.write(dir)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn init_weights(out: &Path, seed: u64, nc: usize) -> Result<()> {
    let cfg = NetConfig { n_c: nc, ..NetConfig::default() };
    cfg.validate()?;
    let mut manifest = RunManifest::new("init-weights", &cfg, Some(seed))?;
    let t = Instant::now();
    let weights = Weights::random(&cfg, seed);
    weights.save(out, &cfg)?;
    manifest.stage("init", t.elapsed());
    manifest.output(out.join("manifest.json"));
    finish(&manifest, out)?;
    println!("{} parameter tensors written to {}", weights.len(), out.display());
    Ok(())
}

fn scene(out: &Path, seed: u64, cfg: SceneConfig) -> Result<()> {
    create_dir(out)?;
    let mut manifest = RunManifest::new("scene", &cfg, Some(seed))?;
    let t = Instant::now();
    let scene = gen_scene(seed, &cfg)?;
    manifest.stage("generate", t.elapsed());
    let path = out.join("scene.json");
    io::write_json(&path, &Artifact::new(&scene))?;
    manifest.output(&path);
    finish(&manifest, out)?;
    println!("{} polygons, adjacent pairs {:?}", scene.polygons.len(), scene.adjacent_pairs);
    Ok(())
}

/// Annotation files in `dir` keyed by stem: CTW text lines (`*.txt`) or
/// the native JSON form (`*.json`, excluding this tool's own artifacts).
fn annotation_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut files = io::list_with_suffix(dir, ".txt")?;
    files.extend(io::list_with_suffix(dir, ".json")?.into_iter().filter(|(stem, path)| {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        name != MANIFEST_FILE && !stem.ends_with(".gt") && !stem.ends_with(".det") && !stem.starts_with("eval")
    }));
    files.sort();
    Ok(files)
}

struct ParsedAnnotation {
    polygons: Vec<pankit::Polygon>,
    dims: Option<(usize, usize)>,
}

fn read_annotation(path: &Path) -> Result<ParsedAnnotation> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let a = Annotation::from_json(&text)?;
        Ok(ParsedAnnotation { polygons: a.polygons, dims: Some((a.width, a.height)) })
    } else {
        Ok(ParsedAnnotation { polygons: parse_ctw_lines(&text)?, dims: None })
    }
}

fn sibling_image(dir: &Path, stem: &str) -> Option<PathBuf> {
    IMAGE_SUFFIXES.iter().map(|s| dir.join(format!("{stem}{s}"))).find(|p| p.is_file())
}

#[derive(Serialize)]
struct LabelgenConfig {
    r: f32,
    stride: usize,
    default_width: usize,
    default_height: usize,
}

fn labelgen(dir: &Path, out: &Path, r: f32, stride: usize, default_dims: (usize, usize)) -> Result<()> {
    ensure!(r > 0.0 && r <= 1.0, "--r must lie in (0, 1]");
    ensure!(stride >= 1, "--stride must be ≥ 1");
    create_dir(out)?;
    let cfg = LabelgenConfig { r, stride, default_width: default_dims.0, default_height: default_dims.1 };
    let mut manifest = RunManifest::new("labelgen", &cfg, None)?;
    let t = Instant::now();
    let mut written = 0;
    for (stem, path) in annotation_files(dir)? {
        manifest.input(&path);
        let parsed = match read_annotation(&path) {
            Ok(p) => p,
            Err(e) => {
                warn!("skipping {}: {e:#}", path.display());
                manifest.skip(&path, format!("{e:#}"));
                continue;
            }
        };
        let image_dims = sibling_image(dir, &stem)
            .map(|p| image::image_dimensions(&p).map(|(w, h)| (w as usize, h as usize)))
            .transpose()?;
        let (width, height) = image_dims.or(parsed.dims).unwrap_or(default_dims);
        match make_ground_truth(&parsed.polygons, height, width, r, stride) {
            Ok(generated) => {
                let (tensor, sidecar) = io::save_gt_bundle(out, &stem, &generated, r, stride)?;
                manifest.output(tensor);
                manifest.output(sidecar);
                written += 1;
            }
            Err(e) => {
                warn!("skipping {}: {e}", path.display());
                manifest.skip(&path, e);
            }
        }
    }
    manifest.stage("labelgen", t.elapsed());
    finish(&manifest, out)?;
    println!("{written} ground-truth bundle(s), {} skipped", manifest.skipped.len());
    Ok(())
}

struct InferOptions {
    pa: PaConfig,
    render: bool,
    render_sim: bool,
    save_maps: bool,
}

/// A single file, or every file in a directory with one of `suffixes`.
fn collect_inputs(path: &Path, suffixes: &[&str]) -> Result<Vec<(String, PathBuf)>> {
    if path.is_dir() {
        let mut all = Vec::new();
        for s in suffixes {
            all.extend(io::list_with_suffix(path, s)?);
        }
        all.sort();
        return Ok(all);
    }
    ensure!(path.is_file(), "{} does not exist", path.display());
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let stem = suffixes.iter().find_map(|s| name.strip_suffix(s)).unwrap_or(name);
    Ok(vec![(stem.to_string(), path.to_path_buf())])
}

fn post_process(
    stem: &str,
    maps: &PredictionMaps,
    base: Option<&Tensor>,
    out: &Path,
    opts: &InferOptions,
    manifest: &mut RunManifest,
) -> Result<usize> {
    let t = Instant::now();
    let seg = segment(maps, &opts.pa)?;
    let instances: Vec<TextInstance> = extract_instances(&seg.labels, seg.height, seg.width, maps.text.data(), &opts.pa)?;
    manifest.stage("post", t.elapsed());
    let path = out.join(format!("{stem}{DETECTION_SUFFIX}"));
    io::write_json(&path, &Artifact::new(Detections::from(instances.as_slice())))?;
    manifest.output(&path);
    if opts.render {
        let t = Instant::now();
        let img = render::overlay(base, &seg, &instances, OUTPUT_STRIDE)?;
        let path = out.join(format!("{stem}.overlay.png"));
        img.save(&path).with_context(|| format!("writing {}", path.display()))?;
        manifest.output(&path);
        manifest.stage("render", t.elapsed());
    }
    if opts.render_sim {
        match render::render_similarity(maps, &seg.text, OUTPUT_STRIDE) {
            Ok(img) => {
                let path = out.join(format!("{stem}.sim.png"));
                img.save(&path).with_context(|| format!("writing {}", path.display()))?;
                manifest.output(&path);
            }
            Err(e) => warn!("{stem}: no similarity rendering ({e})"),
        }
    }
    if opts.save_maps {
        let path = out.join(format!("{stem}.maps{MAPS_SUFFIX}"));
        io::save_maps(&path, maps)?;
        manifest.output(&path);
    }
    Ok(instances.len())
}

fn infer_maps(input: &Path, out: &Path, opts: &InferOptions) -> Result<()> {
    opts.pa.validate()?;
    create_dir(out)?;
    let mut manifest = RunManifest::new("infer", &opts.pa, None)?;
    let inputs = collect_inputs(input, &[MAPS_SUFFIX])?;
    ensure!(!inputs.is_empty(), "no {MAPS_SUFFIX} files in {}", input.display());
    for (stem, path) in inputs {
        manifest.input(&path);
        let maps = io::load_maps(&path).with_context(|| format!("reading {}", path.display()))?;
        let n = post_process(&stem, &maps, None, out, opts, &mut manifest)?;
        println!("{stem}: {n} instance(s)");
    }
    finish(&manifest, out)
}

#[derive(Serialize)]
struct ImageInferConfig<'a> {
    pa: &'a PaConfig,
    net: &'a NetConfig,
    weights: String,
}

/// Loads an image and pads it to the network's divisibility requirement.
fn prepare_image(path: &Path) -> Result<Tensor> {
    let img = io::load_image(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(io::pad_to_multiple(&img, 32)?)
}

fn load_weights(dir: Option<&Path>) -> Result<(NetConfig, Weights)> {
    let dir = dir.context("--weights is required with image inputs")?;
    let (cfg, weights) = Weights::load(dir).with_context(|| format!("loading weights from {}", dir.display()))?;
    weights.check_complete(&cfg)?;
    Ok((cfg, weights))
}

fn net_for(cfg: &NetConfig, image: &Tensor) -> Result<NetConfig> {
    let (_, h, w) = image.chw()?;
    Ok(NetConfig { height: h, width: w, ..cfg.clone() })
}

fn infer_images(input: &Path, weights_dir: Option<&Path>, out: &Path, opts: &InferOptions) -> Result<()> {
    opts.pa.validate()?;
    let (net_cfg, weights) = load_weights(weights_dir)?;
    create_dir(out)?;
    let config = ImageInferConfig {
        pa: &opts.pa,
        net: &net_cfg,
        weights: weights_dir.unwrap_or(Path::new("")).display().to_string(),
    };
    let mut manifest = RunManifest::new("infer", &config, None)?;
    let inputs = collect_inputs(input, &IMAGE_SUFFIXES)?;
    ensure!(!inputs.is_empty(), "no images in {}", input.display());
    for (stem, path) in inputs {
        manifest.input(&path);
        let image = prepare_image(&path)?;
        let cfg = net_for(&net_cfg, &image)?;
        let net = pankit::Network::new(cfg, &weights)?;
        let (maps, timing) = net.forward_timed(&image)?;
        manifest.stage("backbone", timing.backbone);
        manifest.stage("head", timing.head);
        let n = post_process(&stem, &maps, Some(&image), out, opts, &mut manifest)?;
        println!("{stem}: {n} instance(s)");
    }
    finish(&manifest, out)
}

fn scored(detections: &Detections) -> Result<Vec<ScoredPolygon>> {
    detections
        .instances
        .iter()
        .map(|d| Ok(ScoredPolygon { polygon: d.to_polygon()?, score: d.score }))
        .collect()
}

#[derive(Serialize)]
struct EvalConfig {
    iou: f32,
    resolution: usize,
}

/// Pairs detection and annotation files by stem, scores each pair and
/// writes `eval.json` and `eval.txt`.
fn eval(detections: &Path, annotations: &Path, iou: f32, out: Option<&Path>, format: Format) -> Result<()> {
    ensure!(iou > 0.0 && iou < 1.0, "--iou must lie in (0, 1)");
    let out = out.unwrap_or(detections);
    create_dir(out)?;
    let cfg = EvalConfig { iou, resolution: DEFAULT_RESOLUTION };
    let mut manifest = RunManifest::new("eval", &cfg, None)?;
    let dets = io::list_with_suffix(detections, DETECTION_SUFFIX)?;
    let gts = annotation_files(annotations)?;
    let mut unmatched = Vec::new();
    let mut names = Vec::new();
    let mut items = Vec::new();
    for (stem, det_path) in &dets {
        let Some((_, gt_path)) = gts.iter().find(|(s, _)| s == stem) else {
            unmatched.push(det_path.display().to_string());
            continue;
        };
        manifest.input(det_path);
        manifest.input(gt_path);
        let d: Detections = io::read_json(det_path).with_context(|| format!("reading {}", det_path.display()))?;
        let g = read_annotation(gt_path).with_context(|| format!("reading {}", gt_path.display()))?;
        names.push(stem.clone());
        items.push((scored(&d)?, g.polygons));
    }
    for (stem, gt_path) in &gts {
        if !dets.iter().any(|(s, _)| s == stem) {
            unmatched.push(gt_path.display().to_string());
        }
    }
    for u in &unmatched {
        warn!("no counterpart for {u}; excluded");
    }
    ensure!(!items.is_empty(), "no detection/annotation pairs found");
    let t = Instant::now();
    let reports = match_dataset(&items, iou, DEFAULT_RESOLUTION);
    let total = summarize(&reports)?;
    manifest.stage("match", t.elapsed());
    let report = DatasetReport {
        iou_thresh: iou,
        images: names.into_iter().zip(reports).map(|(name, report)| ImageReport { name, report }).collect(),
        total,
        unmatched,
    };
    let json_path = out.join("eval.json");
    io::write_json(&json_path, &Artifact::new(&report))?;
    let text = report.to_text();
    let text_path = out.join("eval.txt");
    fs::write(&text_path, format!("{text}manifest: {MANIFEST_FILE}\n"))?;
    manifest.output(&json_path);
    manifest.output(&text_path);
    finish(&manifest, out)?;
    match format {
        Format::Text => print!("{text}"),
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

#[derive(Serialize)]
struct FlopsSummary {
    config: NetConfig,
    report: FlopsReport,
    /// Cost of one more FPEM, in GFLOPs.
    fpem_increment_gflops: f64,
}

#[derive(Serialize)]
struct FlopsSweep {
    height: usize,
    width: usize,
    n_c: Vec<usize>,
    total_gflops: Vec<f64>,
    increments_gflops: Vec<f64>,
}

fn flops(nc: usize, height: usize, width: usize, sweep: bool, format: Format) -> Result<()> {
    let cfg = NetConfig { n_c: nc, height, width, ..NetConfig::default() };
    cfg.validate()?;
    let total = |n_c: usize| model_flops(&NetConfig { n_c, ..cfg.clone() }).gflops();
    if sweep {
        let n_c: Vec<usize> = (0..=4).collect();
        let totals: Vec<f64> = n_c.iter().map(|&n| total(n)).collect();
        let increments: Vec<f64> = totals.windows(2).map(|w| w[1] - w[0]).collect();
        match format {
            Format::Json => {
                let s = FlopsSweep { height, width, n_c, total_gflops: totals, increments_gflops: increments };
                println!("{}", serde_json::to_string_pretty(&s)?);
            }
            Format::Text => {
                println!("{:>4} {:>10} {:>10}", "n_c", "GFLOPs", "Δ");
                for (i, t) in totals.iter().enumerate() {
                    let delta = if i == 0 { String::new() } else { format!("{:.4}", increments[i - 1]) };
                    println!("{:>4} {:>10.4} {:>10}", i, t, delta);
                }
            }
        }
        return Ok(());
    }
    let report = model_flops(&cfg);
    let increment = total(nc + 1) - total(nc);
    match format {
        Format::Json => {
            let s = FlopsSummary { config: cfg, report, fpem_increment_gflops: increment };
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
        Format::Text => {
            println!("{:<28} {:>16} {:>14}", "layer", "output", "MFLOPs");
            for e in &report.entries {
                let shape = format!("{}×{}×{}", e.output[0], e.output[1], e.output[2]);
                println!("{:<28} {:>16} {:>14.3}", e.name, shape, e.macs as f64 * 1e-6);
            }
            println!("total {:.4} GFLOPs at {height}×{width}×3, n_c = {nc}", report.gflops());
            println!("per-FPEM increment {:.4} GFLOPs", increment);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchConfig<'a> {
    pa: &'a PaConfig,
    mode: BenchMode,
    threads: usize,
    repetitions: usize,
}

#[allow(clippy::too_many_arguments)]
fn bench(
    maps: Option<&Path>,
    images: Option<&Path>,
    weights_dir: Option<&Path>,
    mode: BenchMode,
    threads: usize,
    reps: usize,
    pa: &PaArgs,
    out: Option<&Path>,
    format: Format,
) -> Result<()> {
    let pa = pa.config();
    pa.validate()?;
    ensure!(reps >= 1, "--reps must be ≥ 1");
    let cfg = BenchConfig { pa: &pa, mode, threads, repetitions: reps };
    let mut manifest = RunManifest::new("bench", &cfg, None)?;
    let report: TimingBreakdown = match (maps, images) {
        (Some(dir), None) => {
            let inputs = collect_inputs(dir, &[MAPS_SUFFIX])?;
            let loaded = inputs
                .iter()
                .map(|(_, p)| {
                    manifest.input(p);
                    io::load_maps(p).with_context(|| format!("reading {}", p.display()))
                })
                .collect::<Result<Vec<_>>>()?;
            bench_maps(&loaded, &pa, mode, threads, reps)?
        }
        (None, Some(dir)) => {
            let (net_cfg, weights) = load_weights(weights_dir)?;
            let inputs = collect_inputs(dir, &IMAGE_SUFFIXES)?;
            let loaded = inputs
                .iter()
                .map(|(_, p)| {
                    manifest.input(p);
                    prepare_image(p)
                })
                .collect::<Result<Vec<_>>>()?;
            let first = loaded.first().context("no images to benchmark")?;
            let cfg = net_for(&net_cfg, first)?;
            ensure!(
                loaded.iter().all(|i| i.shape() == first.shape()),
                "benchmark images must share one size"
            );
            let net = pankit::Network::new(cfg, &weights)?;
            bench_network(&net, &loaded, &pa, mode, threads, reps)?
        }
        _ => bail!("pass exactly one of --maps or --images"),
    };
    manifest.stages_ms.insert("wall_clock_per_pass".into(), report.wall_clock_ms);
    if let Some(out) = out {
        create_dir(out)?;
        let path = out.join("bench.json");
        io::write_json(&path, &Artifact::new(&report))?;
        manifest.output(&path);
        finish(&manifest, out)?;
    }
    match format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

#[derive(Serialize)]
struct TrainToyConfig<'a> {
    scene: &'a SceneConfig,
    loss: LossConfig,
    r: f32,
    steps: usize,
    lr: f64,
    iou: f32,
    pa: PaConfig,
}

#[allow(clippy::too_many_arguments)]
fn traintoy(
    out: &Path,
    seed: u64,
    scene_cfg: &SceneConfig,
    r: f32,
    steps: usize,
    lr: f64,
    iou: f32,
    pa: &PaArgs,
) -> Result<()> {
    let pa = pa.config();
    pa.validate()?;
    ensure!(r > 0.0 && r <= 1.0, "--r must lie in (0, 1]");
    create_dir(out)?;
    let loss = LossConfig::default();
    let cfg = TrainToyConfig { scene: scene_cfg, loss, r, steps, lr, iou, pa: pa.clone() };
    let mut manifest = RunManifest::new("traintoy", &cfg, Some(seed))?;

    let t = Instant::now();
    let scene = gen_scene(seed, scene_cfg)?;
    manifest.stage("scene", t.elapsed());
    let scene_path = out.join("scene.json");
    io::write_json(&scene_path, &Artifact::new(&scene))?;
    manifest.output(&scene_path);
    let generated = make_ground_truth(&scene.polygons, scene.height, scene.width, r, OUTPUT_STRIDE)?;
    let (gt_tensor, gt_info) = io::save_gt_bundle(out, "scene", &generated, r, OUTPUT_STRIDE)?;
    manifest.output(gt_tensor);
    manifest.output(gt_info);

    let maps_path = out.join("maps.ptns");
    if steps == 0 {
        let gt: &GroundTruth = &generated.gt;
        io::save_maps(&maps_path, &initial_maps(gt.height, gt.width, scene.seed))?;
        manifest.output(&maps_path);
        finish(&manifest, out)?;
        println!("initial maps written to {}", maps_path.display());
        return Ok(());
    }

    let t = Instant::now();
    let run = train_toy(&scene, r as f64, &loss, steps, lr)?;
    manifest.stage("train", t.elapsed());
    let csv_path = out.join("loss.csv");
    let mut csv = Vec::new();
    run.write_csv(&mut csv)?;
    fs::write(&csv_path, csv)?;
    manifest.output(&csv_path);
    io::save_maps(&maps_path, &run.maps)?;
    manifest.output(&maps_path);

    let t = Instant::now();
    let instances = detect(&run.maps, &pa)?;
    manifest.stage("post", t.elapsed());
    let dets = Detections::from(instances.as_slice());
    let det_path = out.join(format!("scene{DETECTION_SUFFIX}"));
    io::write_json(&det_path, &Artifact::new(&dets))?;
    manifest.output(&det_path);

    let t = Instant::now();
    let report = pankit::eval::match_detections(&scored(&dets)?, &scene.polygons, iou, DEFAULT_RESOLUTION);
    manifest.stage("eval", t.elapsed());
    let dataset = DatasetReport {
        iou_thresh: iou,
        images: vec![ImageReport { name: "scene".into(), report: report.clone() }],
        total: report.clone(),
        unmatched: Vec::new(),
    };
    let eval_path = out.join("eval.json");
    io::write_json(&eval_path, &Artifact::new(&dataset))?;
    let text_path = out.join("eval.txt");
    fs::write(&text_path, format!("{}manifest: {MANIFEST_FILE}\n", dataset.to_text()))?;
    manifest.output(&eval_path);
    manifest.output(&text_path);
    finish(&manifest, out)?;

    println!(
        "loss {:.6} -> {:.6} over {steps} steps; {} detected / {} ground truth; P {:.4} R {:.4} F {:.4}",
        run.initial_loss(),
        run.final_loss(),
        instances.len(),
        scene.polygons.len(),
        report.precision,
        report.recall,
        report.fmeasure
    );
    Ok(())
}

#[derive(Serialize)]
struct LossDump {
    config: LossConfig,
    n_instances: usize,
    #[serde(flatten)]
    values: LossValues,
}

fn loss_debug(maps: &Path, gt: &Path, format: Format) -> Result<()> {
    let maps = io::load_maps(maps).with_context(|| format!("reading {}", maps.display()))?;
    let gt = GroundTruth::from_tensor(&load_tensor(gt).with_context(|| format!("reading {}", gt.display()))?)?;
    let config = LossConfig::default();
    let values = total_loss(&maps, &gt, &config)?.values();
    let dump = LossDump { config, n_instances: gt.n_instances, values };
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&dump)?),
        Format::Text => println!(
            "total {:.6}  l_tex {:.6}  l_ker {:.6}  l_agg {:.6}  l_dis {:.6}",
            values.total, values.l_tex, values.l_ker, values.l_agg, values.l_dis
        ),
    }
    Ok(())
}
