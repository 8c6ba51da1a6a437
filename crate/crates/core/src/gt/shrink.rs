//! Kernel generation by raster-domain shrinking.

use crate::error::{Error, Result};
use crate::num::Scalar;

use super::Polygon;

/// Shrink offset `A·(1 − r²)/L` for a polygon of area `A` and perimeter `L`.
pub fn shrink_offset<T: Scalar>(poly: &Polygon<T>, r: T) -> Result<T> {
    if !(r > T::zero() && r <= T::one()) {
        return Err(Error::InvalidArgument(format!("shrink ratio {r} outside (0, 1]")));
    }
    let perimeter = poly.perimeter();
    if perimeter == T::zero() {
        return Err(Error::Polygon("zero perimeter".into()));
    }
    Ok(poly.area() * (T::one() - r * r) / perimeter)
}

/// 1-D squared distance transform of a sampled function: lower envelope
/// of the parabolas rooted at the finite samples.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let mut finite = f.iter().enumerate().filter(|(_, x)| x.is_finite()).map(|(i, _)| i);
    let Some(first) = finite.next() else {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    };
    let key = |q: usize| f[q] + (q * q) as f64;
    let mut k = 0usize;
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in finite {
        let mut s;
        loop {
            let p = v[k];
            s = (key(q) - key(p)) / (2.0 * (q as f64 - p as f64));
            // z[0] = -inf stops the walk at k = 0
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        *o = (q as f64 - p as f64).powi(2) + f[p];
    }
}

/// Euclidean distance from each pixel centre to the nearest background
/// pixel centre, where everything outside the grid counts as background.
/// Background pixels get 0.
pub fn distance_to_background(mask: &[bool], h: usize, w: usize) -> Vec<f64> {
    // pad by one pixel of background on each side
    let (ph, pw) = (h + 2, w + 2);
    let mut grid = vec![0.0f64; ph * pw];
    for y in 0..h {
        for x in 0..w {
            if mask[y * w + x] {
                grid[(y + 1) * pw + x + 1] = f64::INFINITY;
            }
        }
    }
    let n = ph.max(pw);
    let (mut f, mut out) = (vec![0.0; n], vec![0.0; n]);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 1]);
    for x in 0..pw {
        for y in 0..ph {
            f[y] = grid[y * pw + x];
        }
        edt_1d(&f[..ph], &mut out[..ph], &mut v, &mut z);
        for y in 0..ph {
            grid[y * pw + x] = out[y];
        }
    }
    for y in 0..ph {
        f[..pw].copy_from_slice(&grid[y * pw..(y + 1) * pw]);
        edt_1d(&f[..pw], &mut out[..pw], &mut v, &mut z);
        grid[y * pw..(y + 1) * pw].copy_from_slice(&out[..pw]);
    }
    let mut dist = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            dist[y * w + x] = grid[(y + 1) * pw + x + 1].sqrt();
        }
    }
    dist
}

/// Erode a mask by `d` pixels: keep pixels whose distance to the region
/// boundary (half a pixel short of the nearest background centre) exceeds
/// `d`.
pub fn shrink_mask(mask: &[bool], h: usize, w: usize, d: f64) -> Vec<bool> {
    if d <= 0.0 {
        return mask.to_vec();
    }
    distance_to_background(mask, h, w)
        .into_iter()
        .map(|dt| dt - 0.5 > d)
        .collect()
}
