use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gt::{rasterize, Polygon};

/// Rotated rectangle: `w` runs along `angle_deg` ∈ [0, 90) measured from
/// the +x axis towards +y (image orientation), `h` across it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatedRect {
    pub cx: f32,
    pub cy: f32,
    pub w: f32,
    pub h: f32,
    pub angle_deg: f32,
}

impl RotatedRect {
    pub fn area(&self) -> f32 {
        self.w * self.h
    }

    pub fn scaled(&self, s: f64) -> Self {
        let s = s as f32;
        RotatedRect { cx: self.cx * s, cy: self.cy * s, w: self.w * s, h: self.h * s, ..*self }
    }

    /// Corners in order around the rectangle.
    pub fn corners(&self) -> [[f32; 2]; 4] {
        let (s, c) = (self.angle_deg as f64).to_radians().sin_cos();
        let (hw, hh) = (self.w as f64 / 2.0, self.h as f64 / 2.0);
        let at = |a: f64, b: f64| {
            [(self.cx as f64 + a * c - b * s) as f32, (self.cy as f64 + a * s + b * c) as f32]
        };
        [at(-hw, -hh), at(hw, -hh), at(hw, hh), at(-hw, hh)]
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone-chain convex hull without collinear points.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Minimum-area rectangle enclosing `points`, found by evaluating every
/// hull edge orientation. Degenerate inputs give zero-size rectangles.
pub fn min_area_rect(points: &[[f64; 2]]) -> RotatedRect {
    let hull = convex_hull(points);
    match hull.len() {
        0 => return RotatedRect { cx: 0.0, cy: 0.0, w: 0.0, h: 0.0, angle_deg: 0.0 },
        1 => return RotatedRect { cx: hull[0][0] as f32, cy: hull[0][1] as f32, w: 0.0, h: 0.0, angle_deg: 0.0 },
        _ => {}
    }
    // (area, angle in [0, 90), extent along angle, extent across, centre)
    let mut best: Option<(f64, f64, f64, f64, [f64; 2])> = None;
    for i in 0..hull.len() {
        let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let u = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
        let n = [-u[1], u[0]];
        let (mut u_lo, mut u_hi, mut n_lo, mut n_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &hull {
            let pu = p[0] * u[0] + p[1] * u[1];
            let pn = p[0] * n[0] + p[1] * n[1];
            u_lo = u_lo.min(pu);
            u_hi = u_hi.max(pu);
            n_lo = n_lo.min(pn);
            n_hi = n_hi.max(pn);
        }
        let (mu, mn) = ((u_lo + u_hi) / 2.0, (n_lo + n_hi) / 2.0);
        let centre = [mu * u[0] + mn * n[0], mu * u[1] + mn * n[1]];
        let (mut along, mut across) = (u_hi - u_lo, n_hi - n_lo);
        let mut angle = u[1].atan2(u[0]).to_degrees().rem_euclid(180.0);
        if angle >= 90.0 {
            angle -= 90.0;
            std::mem::swap(&mut along, &mut across);
        }
        // snap float noise so axis-aligned sets report exactly 0°
        if angle > 90.0 - 1e-9 {
            angle = 0.0;
            std::mem::swap(&mut along, &mut across);
        }
        if angle < 1e-9 {
            angle = 0.0;
        }
        let area = along * across;
        let better = match best {
            None => true,
            Some((ba, bang, ..)) => {
                let tol = 1e-9 * ba.max(1.0);
                area < ba - tol || (area <= ba + tol && angle < bang)
            }
        };
        if better {
            best = Some((area, angle, along, across, centre));
        }
    }
    let (_, angle, w, h, c) = best.expect("hull has edges");
    RotatedRect { cx: c[0] as f32, cy: c[1] as f32, w: w as f32, h: h as f32, angle_deg: angle as f32 }
}

const MAX_DEVIATION: f64 = 0.5;

/// Outer boundary of a 4-connected pixel set, traced along pixel edges
/// with the set on the right (clockwise on screen) and decimated to a
/// maximum deviation of half a pixel. Coordinates are in grid units;
/// holes are ignored.
pub fn trace_contour(pixels: &[usize], height: usize, width: usize) -> Result<Polygon<f32>> {
    let Some(&first) = pixels.iter().min() else {
        return Err(Error::InvalidArgument("empty pixel set".into()));
    };
    if first >= height * width || pixels.iter().any(|&p| p >= height * width) {
        return Err(Error::Shape(format!("pixel index out of {height}×{width}")));
    }
    let mut inside = vec![false; height * width];
    pixels.iter().for_each(|&p| inside[p] = true);
    let at = |x: isize, y: isize| {
        x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height && inside[y as usize * width + x as usize]
    };
    const STEP: [(isize, isize); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)]; // E, S, W, N
    // pixels ahead-left / ahead-right of a vertex for each heading, as
    // offsets from the vertex to the pixel's top-left corner
    const AHEAD: [[(isize, isize); 2]; 4] = [
        [(0, -1), (0, 0)],
        [(0, 0), (-1, 0)],
        [(-1, 0), (-1, -1)],
        [(-1, -1), (0, -1)],
    ];
    let start = ((first % width) as isize, (first / width) as isize);
    let (mut v, mut dir) = (start, 0usize);
    let mut corners = vec![[v.0 as f64, v.1 as f64]];
    loop {
        v = (v.0 + STEP[dir].0, v.1 + STEP[dir].1);
        if v == start {
            break;
        }
        let [l, r] = AHEAD[dir];
        let new_dir = if at(v.0 + l.0, v.1 + l.1) {
            (dir + 3) % 4
        } else if at(v.0 + r.0, v.1 + r.1) {
            dir
        } else {
            (dir + 1) % 4
        };
        if new_dir != dir {
            corners.push([v.0 as f64, v.1 as f64]);
            dir = new_dir;
        }
    }
    let full = to_polygon(&corners)?;
    let reduced = decimate_closed(&corners, MAX_DEVIATION);
    if reduced.len() < corners.len() {
        if let Ok(poly) = to_polygon(&reduced) {
            let mask = rasterize(poly.points(), height, width, 1.0);
            if pixels.iter().all(|&p| mask[p]) {
                return Ok(poly);
            }
        }
    }
    Ok(full)
}

fn to_polygon(points: &[[f64; 2]]) -> Result<Polygon<f32>> {
    Polygon::new(points.iter().map(|p| [p[0] as f32, p[1] as f32]).collect(), false)
}

pub(super) fn seg_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

fn douglas_peucker(pts: &[[f64; 2]], tol: f64, out: &mut Vec<[f64; 2]>) {
    let (a, b) = (pts[0], pts[pts.len() - 1]);
    let far = (1..pts.len() - 1)
        .map(|i| (i, seg_distance(pts[i], a, b)))
        .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)));
    match far {
        Some((i, dist)) if dist > tol => {
            douglas_peucker(&pts[..=i], tol, out);
            douglas_peucker(&pts[i..], tol, out);
        }
        _ => out.push(a),
    }
}

/// Splits the ring at its first vertex and the vertex farthest from it,
/// then simplifies both chains.
pub(super) fn decimate_closed(ring: &[[f64; 2]], tol: f64) -> Vec<[f64; 2]> {
    if ring.len() <= 4 {
        return ring.to_vec();
    }
    let o = ring[0];
    let k = (1..ring.len())
        .max_by(|&i, &j| {
            let di = (ring[i][0] - o[0]).powi(2) + (ring[i][1] - o[1]).powi(2);
            let dj = (ring[j][0] - o[0]).powi(2) + (ring[j][1] - o[1]).powi(2);
            di.total_cmp(&dj).then(j.cmp(&i))
        })
        .expect("ring has > 4 vertices");
    let mut closed = ring.to_vec();
    closed.push(o);
    let mut out = Vec::new();
    douglas_peucker(&closed[..=k], tol, &mut out);
    douglas_peucker(&closed[k..], tol, &mut out);
    out
}
