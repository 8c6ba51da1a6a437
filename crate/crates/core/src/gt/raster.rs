use super::polygon::Point;
use crate::num::Scalar;

/// Even-odd scanline fill sampled at pixel centres `(x + 0.5, y + 0.5)`,
/// after multiplying vertices by `scale`. Returns an `h×w` row-major mask.
pub fn rasterize<T: Scalar>(points: &[Point<T>], h: usize, w: usize, scale: T) -> Vec<bool> {
    let mut mask = vec![false; h * w];
    fill_spans(points, h, w, scale.as_f64(), |y, x0, x1| {
        mask[y * w + x0..y * w + x1].iter_mut().for_each(|m| *m = true);
    });
    mask
}

/// Calls `span(y, x_start, x_end)` for every run of inside pixels.
fn fill_spans<T: Scalar>(
    points: &[Point<T>],
    h: usize,
    w: usize,
    scale: f64,
    mut span: impl FnMut(usize, usize, usize),
) {
    if points.len() < 3 {
        log::warn!("degenerate polygon with {} vertices rasterised as empty", points.len());
        return;
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0].as_f64() * scale, p[1].as_f64() * scale)).collect();
    let n = pts.len();
    let (y_lo, y_hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let row_start = ((y_lo - 0.5).ceil().max(0.0)) as usize;
    let row_end = ((y_hi - 0.5).floor().min(h as f64 - 1.0)) as isize;
    let mut xs: Vec<f64> = Vec::with_capacity(8);
    for y in row_start..=row_end.max(-1) as usize {
        if row_end < 0 {
            break;
        }
        let yc = y as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (x0, y0) = pts[i];
            let (x1, y1) = pts[(i + 1) % n];
            if (y0 > yc) != (y1 > yc) {
                xs.push(x0 + (yc - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        for pair in xs.chunks_exact(2) {
            // pixel x is inside iff xa <= x + 0.5 < xb
            let start = (pair[0] - 0.5).ceil().max(0.0);
            let end = (pair[1] - 0.5).ceil().min(w as f64);
            if end > start {
                span(y, start as usize, end as usize);
            }
        }
    }
}
