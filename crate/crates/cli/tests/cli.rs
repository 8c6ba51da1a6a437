use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pankit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pankit"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = pankit(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn flops_sweep_is_arithmetic_and_json_round_trips() {
    let out = ok(&["flops", "--sweep", "--format", "json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let totals: Vec<f64> = v["total_gflops"].as_array().unwrap().iter().map(|t| t.as_f64().unwrap()).collect();
    assert_eq!(totals.len(), 5);
    let steps: Vec<f64> = totals.windows(2).map(|w| w[1] - w[0]).collect();
    for d in &steps {
        assert!((d - steps[0]).abs() < 1e-9, "{steps:?}");
    }
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(again, v);

    let text = ok(&["flops", "--nc", "1"]);
    assert!(text.contains("per-FPEM increment"));
    assert!(text.contains("fpem0.") && !text.contains("fpem1."));
}

#[test]
fn traintoy_zero_steps_writes_initial_maps_only() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["traintoy", "--seed", "2", "--steps", "0", "--out", s(dir.path())]);
    assert!(dir.path().join("maps.ptns").is_file());
    assert!(dir.path().join("scene.json").is_file());
    assert!(!dir.path().join("loss.csv").exists());
    assert!(!dir.path().join("scene.det.json").exists());
    let m = json(&dir.path().join("pankit-run.json"));
    assert_eq!(m["subcommand"], "traintoy");
    assert_eq!(m["seed"], 2);
}

#[test]
fn traintoy_is_deterministic_and_reports_f_measure() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = |d: &Path| {
        ["traintoy", "--seed", "1", "--instances", "3", "--adjacent", "--steps", "300", "--out"]
            .iter()
            .map(|x| x.to_string())
            .chain([s(d).to_string()])
            .collect::<Vec<_>>()
    };
    let run = |d: &Path| {
        let a = args(d);
        ok(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let out = run(a.path());
    run(b.path());
    assert!(out.contains(" F "), "{out}");
    let csv = fs::read_to_string(a.path().join("loss.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(b.path().join("loss.csv")).unwrap());
    assert_eq!(csv.lines().count(), 302);
    assert!(csv.starts_with("step,total,l_tex,l_ker,l_agg,l_dis\n"));
    for name in ["scene.json", "scene.det.json", "eval.json"] {
        assert_eq!(json(&a.path().join(name))["manifest"], "pankit-run.json", "{name}");
    }
    let eval = json(&a.path().join("eval.json"));
    assert!(eval["total"]["fmeasure"].is_number());
    assert_eq!(eval["images"].as_array().unwrap().len(), 1);
}

#[test]
fn labelgen_reads_ctw_lines_skips_malformed_and_accepts_empty() {
    let ann = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    // a 14-point band, 28 integers
    let band = "40,40,80,36,120,34,160,34,200,36,240,40,280,44,280,84,240,80,200,76,160,74,120,74,80,76,40,80";
    fs::write(ann.path().join("a.txt"), format!("{band}\n")).unwrap();
    fs::write(ann.path().join("b.txt"), "").unwrap();
    fs::write(ann.path().join("c.txt"), "1,2,3\n").unwrap();
    ok(&["labelgen", "--annotations", s(ann.path()), "--out", s(out.path()), "--width", "320", "--height", "128"]);

    let a = json(&out.path().join("a.gt.json"));
    assert_eq!(a["n_instances"], 1);
    assert_eq!((a["width"].as_u64(), a["height"].as_u64()), (Some(80), Some(32)));
    assert_eq!(a["shrink_ratio"].as_f64().unwrap() as f32, 0.7);
    assert_eq!(a["manifest"], "pankit-run.json");
    assert_eq!(json(&out.path().join("b.gt.json"))["n_instances"], 0);
    assert!(!out.path().join("c.gt.ptns").exists());

    let m = json(&out.path().join("pankit-run.json"));
    let skipped = m["skipped"].as_array().unwrap();
    assert_eq!(skipped.len(), 1);
    assert!(skipped[0]["path"].as_str().unwrap().ends_with("c.txt"));
}

#[test]
fn infer_from_maps_renders_rgb_overlays_and_eval_scores_it() {
    let work = tempfile::tempdir().unwrap();
    let toy = work.path().join("toy");
    ok(&["traintoy", "--seed", "4", "--instances", "2", "--steps", "1500", "--out", s(&toy)]);

    let det_dir = work.path().join("det");
    ok(&["infer", "--maps", s(&toy.join("maps.ptns")), "--out", s(&det_dir), "--render", "--render-sim"]);
    let dets = json(&det_dir.join("maps.det.json"));
    assert_eq!(dets["manifest"], "pankit-run.json");
    for inst in dets["instances"].as_array().unwrap() {
        assert!(inst["polygon"].as_array().unwrap().len() >= 3);
        assert!(inst["score"].is_number());
        for key in ["cx", "cy", "w", "h", "angle_deg"] {
            assert!(inst["rect"][key].is_number(), "{key}");
        }
    }
    // PNG colour type 2 is 8-bit truecolour RGB
    for png in ["maps.overlay.png", "maps.sim.png"] {
        let bytes = fs::read(det_dir.join(png)).unwrap();
        assert_eq!(&bytes[1..4], b"PNG");
        assert_eq!((bytes[24], bytes[25]), (8, 2), "{png}");
    }

    // the toy run's own detections, paired by stem with its scene
    let ann = work.path().join("ann");
    fs::create_dir(&ann).unwrap();
    fs::copy(toy.join("scene.json"), ann.join("scene.json")).unwrap();
    fs::copy(toy.join("scene.det.json"), det_dir.join("scene.det.json")).unwrap();
    let report_dir = work.path().join("report");
    let text = ok(&[
        "eval", "--detections", s(&det_dir), "--annotations", s(&ann), "--out", s(&report_dir),
    ]);
    assert!(text.contains("TOTAL"));
    let report = json(&report_dir.join("eval.json"));
    assert_eq!(report["iou_thresh"].as_f64().unwrap(), 0.5);
    assert_eq!(report["images"].as_array().unwrap().len(), 1);
    assert_eq!(report["unmatched"].as_array().unwrap().len(), 1, "maps.det.json has no annotation");
    assert!(report_dir.join("eval.txt").is_file());
    assert!(report_dir.join("pankit-run.json").is_file());
}

#[test]
fn eval_of_perfect_detections_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let square = "[[10,10],[60,10],[60,40],[10,40]]";
    fs::write(
        dir.path().join("img.json"),
        format!(r#"{{"polygons":[{{"points":{square},"ignore":false}}],"width":100,"height":100}}"#),
    )
    .unwrap();
    fs::write(dir.path().join("img.det.json"), format!(r#"{{"instances":[{{"polygon":{square},"score":0.9}}]}}"#))
        .unwrap();
    let out = ok(&["eval", "--detections", s(dir.path()), "--annotations", s(dir.path()), "--format", "json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["total"]["fmeasure"].as_f64().unwrap(), 1.0);
    assert_eq!(v["total"]["tp"], 1);
}

#[test]
fn bench_rejects_a_single_input() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["traintoy", "--seed", "0", "--steps", "0", "--out", s(dir.path())]);
    let out = pankit(&["bench", "--maps", s(&dir.path().join("maps.ptns"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("≥ 10"));
}

#[test]
fn bench_runs_both_modes_on_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let toy = dir.path().join("toy");
    ok(&["traintoy", "--seed", "0", "--steps", "0", "--out", s(&toy)]);
    let maps = dir.path().join("maps");
    fs::create_dir(&maps).unwrap();
    for i in 0..10 {
        fs::copy(toy.join("maps.ptns"), maps.join(format!("m{i}.ptns"))).unwrap();
    }
    for extra in [&[][..], &["--pipeline", "--threads", "2"][..]] {
        let mut args = vec!["bench", "--maps", s(&maps), "--reps", "3", "--format", "json"];
        args.extend_from_slice(extra);
        let v: Value = serde_json::from_str(&ok(&args)).unwrap();
        assert_eq!(v["images"], 10);
        assert_eq!(v["repetitions"], 3);
        assert!(v["fps"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn infer_without_weights_is_a_clear_error() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("x.pgm");
    fs::write(&img, b"P5\n4 4\n255\n0123456789abcdef").unwrap();
    let out = pankit(&[
        "infer", "--image", s(&img), "--weights", s(&dir.path().join("none")), "--out", s(&dir.path().join("o")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("init-weights"));
}

#[test]
fn infer_from_an_image_runs_the_network() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("w");
    ok(&["init-weights", "--out", s(&weights), "--seed", "7", "--nc", "1"]);
    assert!(weights.join("manifest.json").is_file());
    // 40×24 grey image, padded to 64×32 internally
    let mut pgm = b"P5\n40 24\n255\n".to_vec();
    pgm.extend((0..40 * 24).map(|i| (i % 251) as u8));
    let img = dir.path().join("g.pgm");
    fs::write(&img, pgm).unwrap();
    let out = dir.path().join("o");
    ok(&["infer", "--image", s(&img), "--weights", s(&weights), "--out", s(&out), "--save-maps"]);
    assert!(json(&out.join("g.det.json"))["instances"].is_array());
    assert!(out.join("g.maps.ptns").is_file());
    let m = json(&out.join("pankit-run.json"));
    assert!(m["stages_ms"]["backbone"].is_number());
}

#[test]
fn loss_debug_dumps_every_term() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["traintoy", "--seed", "3", "--steps", "0", "--out", s(dir.path())]);
    let out = ok(&["loss-debug", "--maps", s(&dir.path().join("maps.ptns")), "--gt", s(&dir.path().join("scene.gt.ptns"))]);
    let v: Value = serde_json::from_str(&out).unwrap();
    for key in ["total", "l_tex", "l_ker", "l_agg", "l_dis"] {
        assert!(v[key].as_f64().unwrap().is_finite(), "{key}");
    }
    assert!(v["config"]["delta_dis"].is_number());
}
