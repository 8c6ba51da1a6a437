use super::io::*;
use super::render::*;
use super::*;
use crate::gt::{make_ground_truth, Polygon};
use crate::net::{PredictionMaps, SIM_DIM};
use crate::pa::{detect, segment, Detections, PaConfig};
use crate::synth::{gen_scene, perfect_maps, SceneConfig};
use crate::tensor::Tensor;

fn scene_maps(seed: u64) -> PredictionMaps<f32> {
    let scene = gen_scene(seed, &SceneConfig::default()).unwrap();
    let gt = make_ground_truth(&scene.polygons, 640, 640, 0.7f32, 4).unwrap().gt;
    perfect_maps(&gt, 4.0)
}

#[test]
fn maps_and_gt_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let maps = scene_maps(1);
    save_maps(dir.path().join("m.ptns"), &maps).unwrap();
    assert_eq!(load_maps(dir.path().join("m.ptns")).unwrap(), maps);

    let polys = [Polygon::rect(8.0f32, 8.0, 48.0, 48.0).unwrap()];
    let generated = make_ground_truth(&polys, 64, 64, 0.7, 4).unwrap();
    save_gt_bundle(dir.path(), "img_1", &generated, 0.7, 4).unwrap();
    let (gt, info) = load_gt_bundle(dir.path(), "img_1").unwrap();
    assert_eq!(gt, generated.gt);
    assert_eq!((info.n_instances, info.stride), (1, 4));
    let sidecar: serde_json::Value = read_json(dir.path().join("img_1.gt.json")).unwrap();
    assert_eq!(sidecar["manifest"], MANIFEST_FILE);
}

#[test]
fn pgm_images_load_grey_and_pad() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.pgm");
    let mut bytes = b"P5\n3 2\n255\n".to_vec();
    bytes.extend_from_slice(&[0, 51, 102, 153, 204, 255]);
    std::fs::write(&path, bytes).unwrap();
    let t = load_image(&path).unwrap();
    assert_eq!(t.shape(), &[3, 2, 3]);
    assert_eq!(t.at3(2, 1, 2), 1.0);
    assert!((t.at3(0, 0, 1) - 0.2).abs() < 1e-6);
    let p = pad_to_multiple(&t, 32).unwrap();
    assert_eq!(p.shape(), &[3, 32, 32]);
    assert_eq!(p.at3(1, 1, 2), 1.0);
    assert_eq!(p.at3(1, 5, 5), 0.0);
}

#[test]
fn manifest_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = RunManifest::new("infer", &PaConfig::default(), Some(3)).unwrap();
    m.input("a.ptns");
    m.output("a.json");
    m.skip("bad.txt", "malformed");
    m.stage("post", std::time::Duration::from_millis(3));
    m.stage("post", std::time::Duration::from_millis(2));
    let path = m.write(dir.path()).unwrap();
    let back: RunManifest = read_json(&path).unwrap();
    assert_eq!(back, m);
    assert!((back.stages_ms["post"] - 5.0).abs() < 1e-9);
    assert_eq!(back.config["d"], 6.0);

    let body = Artifact::new(Detections::default());
    let json = serde_json::to_value(&body).unwrap();
    assert_eq!(json, serde_json::json!({"manifest": MANIFEST_FILE, "instances": []}));
    let plain: Detections = serde_json::from_value(json).unwrap();
    assert!(plain.instances.is_empty());
}

#[test]
fn overlay_is_image_sized_and_read_only() {
    let maps = scene_maps(2);
    let cfg = PaConfig::default();
    let seg = segment(&maps, &cfg).unwrap();
    let found = detect(&maps, &cfg).unwrap();
    let before = serde_json::to_string(&Detections::from(found.as_slice())).unwrap();
    let img = overlay(None, &seg, &found, 4).unwrap();
    assert_eq!((img.width(), img.height()), (640, 640));
    assert_eq!(serde_json::to_string(&Detections::from(found.as_slice())).unwrap(), before);
    let sim = render_similarity(&maps, &seg.text, 4).unwrap();
    assert_eq!((sim.width(), sim.height()), (640, 640));
    assert_eq!(image::DynamicImage::ImageRgb8(sim).color().channel_count(), 3);
}

#[test]
fn pca_orders_axes_and_fixes_signs() {
    let (h, w) = (4, 8);
    // variance 4 along channel 2, 1 along channel 0, none elsewhere
    let sim = Tensor::from_fn(&[SIM_DIM, h, w], |i| {
        let (c, p) = (i / (h * w), i % (h * w));
        let s = if p % 2 == 0 { 1.0 } else { -1.0 };
        let t = if (p / 2) % 2 == 0 { 1.0 } else { -1.0 };
        match c {
            2 => 2.0 * s,
            0 => t,
            _ => 5.0,
        }
    });
    let (mean, axes, values) = similarity_pca(&sim, &vec![true; h * w]).unwrap();
    assert!((mean[3] - 5.0).abs() < 1e-12);
    assert!((values[0] - 4.0).abs() < 1e-9 && (values[1] - 1.0).abs() < 1e-9);
    assert!((axes[0][2] - 1.0).abs() < 1e-9);
    assert!((axes[1][0] - 1.0).abs() < 1e-9);
    for a in &axes {
        let lead = a.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        assert!(lead > 0.0);
    }
    assert!(similarity_pca(&sim, &vec![false; h * w]).is_err());
}

#[test]
fn bench_modes_and_preconditions() {
    let maps: Vec<_> = (0..10).map(|s| scene_maps(s % 3)).collect();
    let cfg = PaConfig::default();
    assert!(bench_maps(&maps[..1], &cfg, BenchMode::Sequential, 1, 1).is_err());
    let seq = bench_maps(&maps, &cfg, BenchMode::Sequential, 1, 1).unwrap();
    let pipe = bench_maps(&maps, &cfg, BenchMode::Pipeline, 2, 1).unwrap();
    for t in [&seq, &pipe] {
        assert_eq!(t.per_image.len(), 10);
        let m = &t.mean;
        assert!(m.total_ms + 1e-9 >= m.backbone_ms + m.head_ms + m.post_ms);
        assert!(t.fps > 0.0);
    }
    assert!(seq.to_text().contains("FPS"));
}

#[test]
fn thread_resolution_prefers_flag() {
    assert_eq!(resolve_threads(Some(3)), 3);
    assert!(resolve_threads(None) >= 1);
}
