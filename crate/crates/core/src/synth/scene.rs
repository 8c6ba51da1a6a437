use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gt::{distance_to_background, rasterize, segments_intersect, Annotation, Point, Polygon};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub height: usize,
    pub width: usize,
    pub n_instances: usize,
    /// Probability that an instance is a curved band rather than a quad.
    pub curved_fraction: f64,
    /// Place the first two instances 1–3 px apart.
    pub force_adjacent: bool,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig { height: 640, width: 640, n_instances: 3, curved_fraction: 0.5, force_adjacent: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub polygons: Vec<Polygon<f32>>,
    /// Whether the generator placed near-touching pairs.
    pub adjacent: bool,
    pub adjacent_pairs: Vec<(usize, usize)>,
}

impl Scene {
    pub fn annotation(&self) -> Annotation {
        Annotation { polygons: self.polygons.clone(), width: self.width, height: self.height }
    }
}

/// Gap between unrelated instances, in image pixels.
const MIN_GAP: f64 = 8.0;
/// Boundary gap aimed for between a forced adjacent pair.
const ADJACENT_GAP: f64 = 2.0;
const BORDER: f64 = 8.0;
const ATTEMPTS: usize = 400;

/// Minimum distance between two polygon boundaries; 0 when they
/// intersect or one contains the other.
pub fn polygon_distance(a: &Polygon<f32>, b: &Polygon<f32>) -> f64 {
    let edges = |p: &Polygon<f32>| -> Vec<(Point<f64>, Point<f64>)> {
        let pts = p.points();
        (0..pts.len())
            .map(|i| {
                let (u, v) = (pts[i], pts[(i + 1) % pts.len()]);
                ([u[0] as f64, u[1] as f64], [v[0] as f64, v[1] as f64])
            })
            .collect()
    };
    let (ea, eb) = (edges(a), edges(b));
    let mut best = f64::MAX;
    for &(p, q) in &ea {
        for &(r, s) in &eb {
            if segments_intersect(p, q, r, s) {
                return 0.0;
            }
            best = best.min(point_segment(p, r, s)).min(point_segment(q, r, s));
            best = best.min(point_segment(r, p, q)).min(point_segment(s, p, q));
        }
    }
    if contains(a, b.points()[0]) || contains(b, a.points()[0]) {
        return 0.0;
    }
    best
}

fn point_segment(p: Point<f64>, a: Point<f64>, b: Point<f64>) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

fn contains(poly: &Polygon<f32>, q: Point<f32>) -> bool {
    let pts = poly.points();
    let mut inside = false;
    for i in 0..pts.len() {
        let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
        if (a[1] > q[1]) != (b[1] > q[1]) && q[0] < a[0] + (q[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]) {
            inside = !inside;
        }
    }
    inside
}

/// Gap between the scale-1 rasterisations of `a` and `b`, measured with a
/// distance transform as (nearest pixel-centre distance − 1). Overlapping
/// rasters give −1; gaps beyond the crop margin are clipped to it.
pub fn raster_gap(a: &Polygon<f32>, b: &Polygon<f32>) -> f64 {
    const MARGIN: f32 = 16.0;
    let (ax0, ay0, ax1, ay1) = a.bounds();
    let (bx0, by0, bx1, by1) = b.bounds();
    let (x0, y0) = ((ax0.min(bx0) - MARGIN).floor(), (ay0.min(by0) - MARGIN).floor());
    let (x1, y1) = (ax1.max(bx1) + MARGIN, ay1.max(by1) + MARGIN);
    let (w, h) = ((x1 - x0).ceil() as usize, (y1 - y0).ceil() as usize);
    let ra = rasterize(a.translated(-x0, -y0).points(), h, w, 1.0);
    let rb = rasterize(b.translated(-x0, -y0).points(), h, w, 1.0);
    let not_a: Vec<bool> = ra.iter().map(|&v| !v).collect();
    let dist = distance_to_background(&not_a, h, w);
    let nearest = rb.iter().zip(&dist).filter(|(&inb, _)| inb).map(|(_, &d)| d).fold(f64::MAX, f64::min);
    (nearest - 1.0).min(MARGIN as f64 - 1.0)
}

/// A shape with its baseline direction, before placement checks.
struct Shape {
    poly: Polygon<f32>,
    /// Unit normal to the baseline; adjacent copies shift along it.
    normal: [f64; 2],
    thickness: f64,
}

fn quad(rng: &mut ChaCha8Rng, origin: [f64; 2]) -> Result<Shape> {
    let len = rng.gen_range(120.0..300.0);
    let t = rng.gen_range(28.0..44.0);
    let theta: f64 = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-30.0f64..30.0).to_radians() };
    let u = [theta.cos(), theta.sin()];
    let n = [-u[1], u[0]];
    let at = |a: f64, b: f64| [(origin[0] + a * u[0] + b * n[0]) as f32, (origin[1] + a * u[1] + b * n[1]) as f32];
    let poly = Polygon::new(vec![at(0.0, 0.0), at(len, 0.0), at(len, t), at(0.0, t)], false)?;
    Ok(Shape { poly, normal: n, thickness: t })
}

/// Sine-displaced ribbon sampled at 7 stations per side (a 14-gon).
fn band(rng: &mut ChaCha8Rng, origin: [f64; 2]) -> Result<Shape> {
    let len = rng.gen_range(180.0..360.0);
    let t = rng.gen_range(28.0..44.0);
    let theta: f64 = rng.gen_range(-20.0f64..20.0).to_radians();
    let periods = rng.gen_range(0.4..1.0);
    let k = 2.0 * PI * periods / len;
    // keep the centreline's radius of curvature above the thickness
    let amp = rng.gen_range(8.0..28.0f64).min(1.0 / (t * k * k));
    let phase = rng.gen_range(0.0..2.0 * PI);
    let u = [theta.cos(), theta.sin()];
    let n = [-u[1], u[0]];
    let (mut top, mut bottom) = (Vec::new(), Vec::new());
    for i in 0..7 {
        let s = len * i as f64 / 6.0;
        let off = amp * (k * s + phase).sin();
        let slope = amp * k * (k * s + phase).cos();
        let c = [origin[0] + s * u[0] + off * n[0], origin[1] + s * u[1] + off * n[1]];
        // local normal of the displaced centreline
        let tan = [u[0] + slope * n[0], u[1] + slope * n[1]];
        let tl = (tan[0] * tan[0] + tan[1] * tan[1]).sqrt();
        let ln = [-tan[1] / tl, tan[0] / tl];
        let h = t / 2.0;
        top.push([(c[0] - h * ln[0]) as f32, (c[1] - h * ln[1]) as f32]);
        bottom.push([(c[0] + h * ln[0]) as f32, (c[1] + h * ln[1]) as f32]);
    }
    bottom.reverse();
    top.extend(bottom);
    let poly = Polygon::new(top, false)?;
    Ok(Shape { poly, normal: n, thickness: t + 2.0 * amp })
}

fn inside_canvas(p: &Polygon<f32>, h: usize, w: usize) -> bool {
    let (x0, y0, x1, y1) = p.bounds();
    x0 as f64 >= BORDER && y0 as f64 >= BORDER && x1 as f64 <= w as f64 - BORDER && y1 as f64 <= h as f64 - BORDER
}

/// Copy of `base` shifted along its normal until the boundary gap is
/// close to [`ADJACENT_GAP`], accepted only if the raster gap is in [1, 3].
fn adjacent_copy(base: &Shape) -> Option<Polygon<f32>> {
    let mut shift = base.thickness + ADJACENT_GAP;
    for _ in 0..12 {
        let cand = base.poly.translated((shift * base.normal[0]) as f32, (shift * base.normal[1]) as f32);
        let gap = polygon_distance(&base.poly, &cand);
        if (gap - ADJACENT_GAP).abs() < 0.05 {
            let rg = raster_gap(&base.poly, &cand);
            return (1.0..=3.0).contains(&rg).then_some(cand);
        }
        shift += ADJACENT_GAP - gap.min(ADJACENT_GAP * 4.0);
    }
    None
}

/// Deterministic scene generation. Placement is by rejection sampling;
/// when space runs out the scene keeps fewer instances and logs a warning.
pub fn gen_scene(seed: u64, cfg: &SceneConfig) -> Result<Scene> {
    if cfg.height < 64 || cfg.width < 64 {
        return Err(Error::InvalidArgument(format!("canvas {}×{} is below 64×64", cfg.height, cfg.width)));
    }
    if cfg.n_instances == 0 {
        return Err(Error::InvalidArgument("n_instances must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = (cfg.height, cfg.width);
    let mut polygons: Vec<Polygon<f32>> = Vec::new();
    let mut pairs = Vec::new();
    let clear = |p: &Polygon<f32>, placed: &[Polygon<f32>]| {
        inside_canvas(p, h, w) && placed.iter().all(|q| polygon_distance(p, q) >= MIN_GAP)
    };
    let mut remaining = cfg.n_instances;
    if cfg.force_adjacent && cfg.n_instances >= 2 {
        let placed = (0..ATTEMPTS).find_map(|_| {
            let origin = [rng.gen_range(0.0..w as f64 * 0.6), rng.gen_range(0.0..h as f64 * 0.8)];
            let shape = if rng.gen_bool(cfg.curved_fraction.clamp(0.0, 1.0)) { band(&mut rng, origin) } else { quad(&mut rng, origin) }.ok()?;
            if !inside_canvas(&shape.poly, h, w) {
                return None;
            }
            let partner = adjacent_copy(&shape)?;
            inside_canvas(&partner, h, w).then_some((shape.poly, partner))
        });
        if let Some((a, b)) = placed {
            polygons.push(a);
            polygons.push(b);
            pairs.push((0, 1));
            remaining -= 2;
        } else {
            log::warn!("seed {seed}: could not place an adjacent pair");
        }
    }
    for _ in 0..remaining {
        let placed = (0..ATTEMPTS).find_map(|_| {
            let origin = [rng.gen_range(0.0..w as f64 * 0.8), rng.gen_range(0.0..h as f64 * 0.9)];
            let shape = if rng.gen_bool(cfg.curved_fraction.clamp(0.0, 1.0)) { band(&mut rng, origin) } else { quad(&mut rng, origin) }.ok()?;
            clear(&shape.poly, &polygons).then_some(shape.poly)
        });
        match placed {
            Some(p) => polygons.push(p),
            None => {
                log::warn!("seed {seed}: placed {} of {} instances", polygons.len(), cfg.n_instances);
                break;
            }
        }
    }
    if polygons.is_empty() {
        return Err(Error::InvalidArgument(format!("seed {seed}: no instance fits the canvas")));
    }
    Ok(Scene { seed, height: h, width: w, polygons, adjacent: !pairs.is_empty(), adjacent_pairs: pairs })
}
