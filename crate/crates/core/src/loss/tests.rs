use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fixture::random_fixture;
use super::*;
use crate::net::SIM_DIM;
use crate::tensor::finite_diff_grad;

fn field(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> Tensor<f64> {
    Tensor::from_fn(&[SIM_DIM, h, w], |i| f(i / (h * w), i % (h * w)))
}

/// Max per-element relative error; entries where both sides are below
/// `floor` are compared absolutely against `floor · tol`.
fn rel_err(a: &Tensor<f64>, b: &Tensor<f64>, floor: f64) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

#[test]
fn kernel_mean_cases() {
    let f = field(2, 3, |c, p| (c * 10 + p) as f64);
    assert_eq!(kernel_mean(&f, &[4]).unwrap(), [4.0, 14.0, 24.0, 34.0]);
    assert_eq!(kernel_mean(&f, &[1, 2]).unwrap(), [1.5, 11.5, 21.5, 31.5]);
    assert!(kernel_mean(&f, &[]).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = Tensor::from_fn(&[SIM_DIM, 8, 8], |_| rng.gen_range(-4.0..4.0));
    let pix: Vec<usize> = (0..20).map(|i| (i * 7) % 64).collect();
    let m = kernel_mean(&f, &pix).unwrap();
    for c in 0..SIM_DIM {
        let mut s = 0.0f64;
        for &p in &pix {
            s += f.data()[c * 64 + p];
        }
        assert!((m[c] - s / 20.0).abs() < 1e-12);
    }
}

#[test]
fn agg_fixed_points() {
    // pixel 0 is the kernel at the origin; pixel 1 sits 1.5 away
    let f = field(1, 2, |c, p| if c == 0 && p == 1 { 1.5 } else { 0.0 });
    let inst = [InstancePixels { text: vec![1], kernel: vec![0] }];
    let (v, _) = loss_agg(&f, &inst, 0.5).unwrap();
    assert!((v - std::f64::consts::LN_2).abs() < 1e-6);

    let inst = [InstancePixels { text: vec![0, 1], kernel: vec![0, 1] }];
    let same = field(1, 2, |c, _| c as f64);
    let (v, g) = loss_agg(&same, &inst, 0.5).unwrap();
    assert_eq!(v, 0.0);
    assert!(g.data().iter().all(|&x| x == 0.0));

    // within δ_agg of the mean: filtered out
    let near = field(1, 2, |c, p| if c == 0 && p == 1 { 0.4 } else { 0.0 });
    let inst = [InstancePixels { text: vec![1], kernel: vec![0] }];
    assert_eq!(loss_agg(&near, &inst, 0.5).unwrap().0, 0.0);
    assert_eq!(loss_agg(&near, &[], 0.5).unwrap().0, 0.0);
}

#[test]
fn dis_fixed_points() {
    let one = [InstancePixels { text: vec![0], kernel: vec![0] }];
    let f = field(1, 2, |c, p| (c + p) as f64);
    assert_eq!(loss_dis(&f, &one, 3.0).unwrap().0, 0.0);

    let two = [InstancePixels { text: vec![0], kernel: vec![0] }, InstancePixels { text: vec![1], kernel: vec![1] }];
    let apart = field(1, 2, |c, p| if c == 0 && p == 1 { 3.0 } else { 0.0 });
    assert_eq!(loss_dis(&apart, &two, 3.0).unwrap().0, 0.0);

    let same = field(1, 2, |c, _| c as f64);
    let (v, g) = loss_dis(&same, &two, 3.0).unwrap();
    assert!((v - 10f64.ln()).abs() < 1e-6);
    assert!(g.data().iter().all(|&x| x == 0.0));
}

#[test]
fn dice_fixed_points() {
    let g = [1.0, 0.0, 1.0, 1.0, 0.0f64];
    let all = [true; 5];
    assert_eq!(dice_loss(&g, &g, &all).unwrap().0, 0.0);
    assert_eq!(dice_loss(&[1.0; 5], &[0.0; 5], &all).unwrap().0, 1.0);
    // n = 4 ones each, overlapping on 2
    let p = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0f64];
    let t = [0.0, 0.0, 1.0, 1.0, 1.0, 1.0f64];
    assert!((dice_loss(&p, &t, &[true; 6]).unwrap().0 - 0.5).abs() < 1e-6);
    let (v, d) = dice_loss(&p, &t, &[false; 6]).unwrap();
    assert_eq!(v, 0.0);
    assert!(d.iter().all(|&x| x == 0.0));
    assert!(dice_loss(&p, &t, &[true; 5]).is_err());
}

#[test]
fn dice_gradient_vs_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = Tensor::from_fn(&[40], |_| rng.gen_range(0.05..0.95));
    let t: Vec<f64> = (0..40).map(|i| if i % 3 == 0 { 1.0 } else { 0.0 }).collect();
    let mask: Vec<bool> = (0..40).map(|i| i % 7 != 0).collect();
    let (_, analytic) = dice_loss(p.data(), &t, &mask).unwrap();
    let numeric = finite_diff_grad(|x| dice_loss(x.data(), &t, &mask).unwrap().0, &p, 1e-3).unwrap();
    let analytic = Tensor::new(vec![40], analytic).unwrap();
    assert!(rel_err(&analytic, &numeric, 1e-6) < 1e-4);
}

#[test]
fn ohem_counts() {
    let n = 110;
    let positives: Vec<bool> = (0..n).map(|i| i < 10).collect();
    let scores: Vec<f64> = (0..n).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
    let ignore = vec![false; n];
    let m = ohem_mask(&scores, &positives, &ignore, 3);
    assert_eq!(m.iter().filter(|&&v| v).count(), 40);

    // sort-based oracle: the kept negatives are the top 30 by (score desc, index asc)
    let mut neg: Vec<usize> = (10..n).collect();
    neg.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    for (rank, &i) in neg.iter().enumerate() {
        assert_eq!(m[i], rank < 30, "pixel {i}");
    }

    let few: Vec<bool> = (0..20).map(|i| i < 10).collect();
    let m = ohem_mask(&scores[..20], &few, &vec![false; 20], 3);
    assert!(m.iter().all(|&v| v));

    let none = vec![false; 8];
    let mut ig = vec![false; 8];
    ig[3] = true;
    let m = ohem_mask(&scores[..8], &none, &ig, 3);
    assert_eq!(m.iter().filter(|&&v| v).count(), 7);
    assert!(!m[3]);
}

#[test]
fn ohem_ties_resolve_in_scan_order() {
    let scores = vec![0.5f64; 12];
    let positives: Vec<bool> = (0..12).map(|i| i == 11).collect();
    let m = ohem_mask(&scores, &positives, &vec![false; 12], 3);
    assert_eq!(m, (0..12).map(|i| i < 3 || i == 11).collect::<Vec<_>>());
}

fn perfect(gt: &GroundTruth, clamp: f64) -> PredictionMaps<f64> {
    let (h, w) = (gt.height, gt.width);
    let bin = |l: &[u32]| Tensor::new(vec![1, h, w], l.iter().map(|&v| if v > 0 { 1.0 - clamp } else { clamp }).collect()).unwrap();
    let sim = Tensor::from_fn(&[SIM_DIM, h, w], |i| {
        let (c, p) = (i / (h * w), i % (h * w));
        let l = gt.instance_labels[p];
        if c == 0 { 5.0 * l as f64 } else { 0.0 }
    });
    PredictionMaps::new(bin(&gt.instance_labels), bin(&gt.kernel_labels), sim).unwrap()
}

#[test]
fn perfect_prediction_has_zero_loss() {
    let cfg = LossConfig::<f64>::default();
    let (_, gt) = random_fixture::<f64>(1, &cfg);
    let b = total_loss(&perfect(&gt, 0.0), &gt, &cfg).unwrap();
    assert!(b.total.abs() < 1e-12, "{:?}", b.values());
}

#[test]
fn total_combines_components() {
    let cfg = LossConfig::<f64>::default();
    let (maps, gt) = random_fixture::<f64>(3, &cfg);
    let b = total_loss(&maps, &gt, &cfg).unwrap();
    assert_eq!(b.total, b.l_tex + 0.5 * b.l_ker + 0.25 * (b.l_agg + b.l_dis));
    for v in [b.l_tex, b.l_ker, b.l_agg, b.l_dis] {
        assert!(v.is_finite() && v >= 0.0);
    }
}

#[test]
fn gradients_match_finite_differences() {
    let cfg = LossConfig::<f64>::default();
    for seed in 0..3 {
        let (maps, gt) = random_fixture::<f64>(seed, &cfg);
        let mask = text_ohem_mask(&maps, &gt, cfg.ohem_ratio).unwrap();
        let b = total_loss_with_mask(&maps, &gt, &cfg, &mask).unwrap();
        let eps = 1e-3;
        let num_text = finite_diff_grad(
            |t| total_loss_with_mask(&PredictionMaps { text: t.clone(), ..maps.clone() }, &gt, &cfg, &mask).unwrap().total,
            &maps.text,
            eps,
        )
        .unwrap();
        let num_ker = finite_diff_grad(
            |t| total_loss_with_mask(&PredictionMaps { kernel: t.clone(), ..maps.clone() }, &gt, &cfg, &mask).unwrap().total,
            &maps.kernel,
            eps,
        )
        .unwrap();
        let num_sim = finite_diff_grad(
            |t| total_loss_with_mask(&PredictionMaps { sim: t.clone(), ..maps.clone() }, &gt, &cfg, &mask).unwrap().total,
            &maps.sim,
            eps,
        )
        .unwrap();
        assert!(rel_err(&b.grad_text, &num_text, 1e-6) < 1e-4);
        assert!(rel_err(&b.grad_kernel, &num_ker, 1e-6) < 1e-4);
        assert!(rel_err(&b.grad_sim, &num_sim, 1e-6) < 1e-4);
    }
}

#[test]
fn gradient_support() {
    let cfg = LossConfig::<f64>::default();
    let (maps, gt) = random_fixture::<f64>(4, &cfg);
    let mask = text_ohem_mask(&maps, &gt, cfg.ohem_ratio).unwrap();
    let b = total_loss_with_mask(&maps, &gt, &cfg, &mask).unwrap();
    let plane = gt.height * gt.width;
    for p in 0..plane {
        let text = gt.instance_labels[p] > 0 && !gt.ignore[p];
        if !text {
            assert_eq!(b.grad_kernel.data()[p], 0.0);
            for c in 0..SIM_DIM {
                assert_eq!(b.grad_sim.data()[c * plane + p], 0.0);
            }
        }
        if !mask[p] {
            assert_eq!(b.grad_text.data()[p], 0.0);
        }
    }
}

#[test]
fn l_dis_single_instance_and_non_negative() {
    let cfg = LossConfig::<f64>::default();
    let (maps, mut gt) = random_fixture::<f64>(5, &cfg);
    for l in gt.instance_labels.iter_mut().chain(gt.kernel_labels.iter_mut()) {
        if *l > 1 {
            *l = 0;
        }
    }
    gt.n_instances = 1;
    let b = total_loss(&maps, &gt, &cfg).unwrap();
    assert_eq!(b.l_dis, 0.0);
    assert!(b.l_agg > 0.0);
}

fn rotate(sim: &Tensor<f64>, angles: &[f64; 3]) -> Tensor<f64> {
    // Givens rotations in the (0,1), (1,2), (2,3) planes
    let plane = sim.shape()[1] * sim.shape()[2];
    let mut out = sim.clone();
    for (k, &a) in angles.iter().enumerate() {
        let (s, c) = a.sin_cos();
        let d = out.data_mut();
        for p in 0..plane {
            let (x, y) = (d[k * plane + p], d[(k + 1) * plane + p]);
            d[k * plane + p] = c * x - s * y;
            d[(k + 1) * plane + p] = s * x + c * y;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn embedding_losses_rotation_invariant(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
        let cfg = LossConfig::<f64>::default();
        let (maps, gt) = random_fixture::<f64>(seed, &cfg);
        let inst = InstancePixels::from_ground_truth(&gt);
        let rotated = rotate(&maps.sim, &[a, b, c]);
        let (agg0, _) = loss_agg(&maps.sim, &inst, 0.5).unwrap();
        let (agg1, _) = loss_agg(&rotated, &inst, 0.5).unwrap();
        let (dis0, _) = loss_dis(&maps.sim, &inst, 3.0).unwrap();
        let (dis1, _) = loss_dis(&rotated, &inst, 3.0).unwrap();
        prop_assert!((agg0 - agg1).abs() < 1e-9);
        prop_assert!((dis0 - dis1).abs() < 1e-9);
    }

    #[test]
    fn components_finite_and_non_negative(seed in 0u64..10_000) {
        let cfg = LossConfig::<f32>::default();
        let (maps, gt) = random_fixture::<f32>(seed, &cfg);
        let b = total_loss(&maps, &gt, &cfg).unwrap();
        for v in [b.l_tex, b.l_ker, b.l_agg, b.l_dis, b.total] {
            prop_assert!(v.is_finite() && v >= 0.0);
        }
    }
}
