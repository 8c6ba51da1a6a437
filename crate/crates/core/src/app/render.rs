//! Overlay and similarity-field rendering. Rendering only reads its
//! inputs; detections are never modified.

use image::{Rgb, RgbImage};
use nalgebra::{Matrix4, SymmetricEigen, Vector4};

use crate::error::{Error, Result};
use crate::net::{PredictionMaps, SIM_DIM};
use crate::pa::{Segmentation, TextInstance};
use crate::tensor::Tensor;

const PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
];
const TEXT_TINT: [u8; 3] = [0, 200, 255];
const KERNEL_EDGE: [u8; 3] = [255, 255, 255];

fn blend(px: &mut Rgb<u8>, c: [u8; 3], alpha: f32) {
    for k in 0..3 {
        px.0[k] = (px.0[k] as f32 * (1.0 - alpha) + c[k] as f32 * alpha).round() as u8;
    }
}

fn draw_line(img: &mut RgbImage, a: [f32; 2], b: [f32; 2], c: [u8; 3]) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (mut x0, mut y0) = (a[0].round() as i64, a[1].round() as i64);
    let (x1, y1) = (b[0].round() as i64, b[1].round() as i64);
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let mut err = dx + dy;
    loop {
        if (0..w).contains(&x0) && (0..h).contains(&y0) {
            img.put_pixel(x0 as u32, y0 as u32, Rgb(c));
        }
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

/// Image-resolution overlay: text tinted, kernel borders outlined, and
/// instance polygons drawn in palette colours. `base` is a 3×H×W image in
/// [0, 1]; without it the background is dark grey.
pub fn overlay(base: Option<&Tensor<f32>>, seg: &Segmentation, instances: &[TextInstance], stride: usize) -> Result<RgbImage> {
    let (gh, gw) = (seg.height, seg.width);
    let (h, w) = (gh * stride, gw * stride);
    let mut img = RgbImage::from_pixel(w as u32, h as u32, Rgb([32, 32, 32]));
    if let Some(b) = base {
        let (c, bh, bw) = b.chw()?;
        if c != 3 {
            return Err(Error::Shape(format!("base image has {c} channels")));
        }
        for y in 0..h.min(bh) {
            for x in 0..w.min(bw) {
                let px = |ch: usize| (b.data()[ch * bh * bw + y * bw + x].clamp(0.0, 1.0) * 255.0).round() as u8;
                img.put_pixel(x as u32, y as u32, Rgb([px(0), px(1), px(2)]));
            }
        }
    }
    let cell = |gy: usize, gx: usize| (gy * stride..(gy + 1) * stride).flat_map(move |y| (gx * stride..(gx + 1) * stride).map(move |x| (x as u32, y as u32)));
    for gy in 0..gh {
        for gx in 0..gw {
            let i = gy * gw + gx;
            if seg.text[i] {
                for (x, y) in cell(gy, gx) {
                    blend(img.get_pixel_mut(x, y), TEXT_TINT, 0.35);
                }
            }
            let k = seg.kernel_labels[i];
            let border = k > 0
                && [(0isize, -1isize), (0, 1), (-1, 0), (1, 0)].iter().any(|&(dy, dx)| {
                    let (ny, nx) = (gy as isize + dy, gx as isize + dx);
                    ny < 0 || nx < 0 || ny >= gh as isize || nx >= gw as isize || seg.kernel_labels[ny as usize * gw + nx as usize] != k
                });
            if border {
                for (x, y) in cell(gy, gx) {
                    img.put_pixel(x, y, Rgb(KERNEL_EDGE));
                }
            }
        }
    }
    for (n, inst) in instances.iter().enumerate() {
        let c = PALETTE[n % PALETTE.len()];
        let pts = inst.polygon.points();
        for i in 0..pts.len() {
            draw_line(&mut img, pts[i], pts[(i + 1) % pts.len()], c);
        }
    }
    Ok(img)
}

/// Principal axes of the similarity vectors over `mask` pixels, largest
/// variance first, each signed so its largest-magnitude loading is
/// positive.
pub fn similarity_pca(sim: &Tensor<f32>, mask: &[bool]) -> Result<(Vector4<f64>, [Vector4<f64>; SIM_DIM], [f64; SIM_DIM])> {
    let (c, h, w) = sim.chw()?;
    let plane = h * w;
    if c != SIM_DIM || mask.len() != plane {
        return Err(Error::Shape(format!("similarity {:?} with mask of {}", sim.shape(), mask.len())));
    }
    let at = |p: usize| Vector4::from_fn(|k, _| sim.data()[k * plane + p] as f64);
    let pixels: Vec<usize> = (0..plane).filter(|&p| mask[p]).collect();
    if pixels.is_empty() {
        return Err(Error::InvalidArgument("no pixels to project".into()));
    }
    let n = pixels.len() as f64;
    let mean = pixels.iter().map(|&p| at(p)).sum::<Vector4<f64>>() / n;
    let mut cov = Matrix4::<f64>::zeros();
    for &p in &pixels {
        let d = at(p) - mean;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..SIM_DIM).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let axes = std::array::from_fn(|i| {
        let v: Vector4<f64> = eig.eigenvectors.column(order[i]).into();
        let lead = v.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs()).then(b.total_cmp(a))).unwrap_or(1.0);
        if lead < 0.0 {
            -v
        } else {
            v
        }
    });
    let values = std::array::from_fn(|i| eig.eigenvalues[order[i]]);
    Ok((mean, axes, values))
}

/// Projects text-region similarity vectors onto their first three
/// principal axes and maps each axis to one colour channel, stretched to
/// the full 8-bit range. Non-text pixels are black. Output is at map
/// resolution scaled by `stride`.
pub fn render_similarity(maps: &PredictionMaps<f32>, text: &[bool], stride: usize) -> Result<RgbImage> {
    let (gh, gw) = maps.dims();
    let plane = gh * gw;
    let (mean, axes, _) = similarity_pca(&maps.sim, text)?;
    let proj: Vec<[f64; 3]> = (0..plane)
        .map(|p| {
            let v = Vector4::from_fn(|k, _| maps.sim.data()[k * plane + p] as f64) - mean;
            [axes[0].dot(&v), axes[1].dot(&v), axes[2].dot(&v)]
        })
        .collect();
    let mut lo = [f64::MAX; 3];
    let mut hi = [f64::MIN; 3];
    for p in (0..plane).filter(|&p| text[p]) {
        for k in 0..3 {
            lo[k] = lo[k].min(proj[p][k]);
            hi[k] = hi[k].max(proj[p][k]);
        }
    }
    let s = stride.max(1) as u32;
    Ok(RgbImage::from_fn(gw as u32 * s, gh as u32 * s, |x, y| {
        let p = (y / s) as usize * gw + (x / s) as usize;
        if !text[p] {
            return Rgb([0, 0, 0]);
        }
        let ch = |k: usize| {
            let span = hi[k] - lo[k];
            if span > 0.0 {
                ((proj[p][k] - lo[k]) / span * 255.0).round() as u8
            } else {
                128
            }
        };
        Rgb([ch(0), ch(1), ch(2)])
    }))
}
