use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;

pub type Point<T> = [T; 2];

/// Simple annotation polygon, normalised to positive signed area.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolygon<T>", into = "RawPolygon<T>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct Polygon<T: Scalar = f32> {
    points: Vec<Point<T>>,
    ignore: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawPolygon<T> {
    points: Vec<Point<T>>,
    #[serde(default)]
    ignore: bool,
}

impl<T: Scalar> TryFrom<RawPolygon<T>> for Polygon<T> {
    type Error = Error;
    fn try_from(raw: RawPolygon<T>) -> Result<Self> {
        Polygon::new(raw.points, raw.ignore)
    }
}

impl<T: Scalar> From<Polygon<T>> for RawPolygon<T> {
    fn from(p: Polygon<T>) -> Self {
        RawPolygon { points: p.points, ignore: p.ignore }
    }
}

impl<T: Scalar> Polygon<T> {
    /// Validates vertex count, finiteness, simplicity and non-zero area;
    /// reverses clockwise input.
    pub fn new(mut points: Vec<Point<T>>, ignore: bool) -> Result<Self> {
        points.dedup();
        while points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        if points.len() < 3 {
            return Err(Error::Polygon(format!("{} vertices, need ≥ 3", points.len())));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Polygon("non-finite vertex".into()));
        }
        if let Some((a, b)) = first_self_intersection(&points) {
            return Err(Error::Polygon(format!("edges {a} and {b} intersect")));
        }
        let area = signed_area(&points);
        if area == T::zero() {
            return Err(Error::Polygon("zero area".into()));
        }
        if area < T::zero() {
            points.reverse();
        }
        Ok(Self { points, ignore })
    }

    pub fn rect(x0: T, y0: T, x1: T, y1: T) -> Result<Self> {
        Self::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]], false)
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    pub fn ignore(&self) -> bool {
        self.ignore
    }

    pub fn with_ignore(mut self, ignore: bool) -> Self {
        self.ignore = ignore;
        self
    }

    pub fn area(&self) -> T {
        signed_area(&self.points).abs()
    }

    pub fn perimeter(&self) -> T {
        perimeter(&self.points)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { points: self.points.iter().map(|&[x, y]| [x * s, y * s]).collect(), ignore: self.ignore }
    }

    pub fn translated(&self, dx: T, dy: T) -> Self {
        Self { points: self.points.iter().map(|&[x, y]| [x + dx, y + dy]).collect(), ignore: self.ignore }
    }

    /// `(min_x, min_y, max_x, max_y)`.
    pub fn bounds(&self) -> (T, T, T, T) {
        bounds(&self.points)
    }

    pub fn cast<U: Scalar>(&self) -> Polygon<U> {
        Polygon {
            points: self.points.iter().map(|&[x, y]| [U::lit(x.as_f64()), U::lit(y.as_f64())]).collect(),
            ignore: self.ignore,
        }
    }
}

pub fn bounds<T: Scalar>(points: &[Point<T>]) -> (T, T, T, T) {
    points.iter().fold(
        (T::infinity(), T::infinity(), T::neg_infinity(), T::neg_infinity()),
        |(a, b, c, d), &[x, y]| (a.min(x), b.min(y), c.max(x), d.max(y)),
    )
}

/// Shoelace signed area.
pub fn signed_area<T: Scalar>(points: &[Point<T>]) -> T {
    let n = points.len();
    let mut acc = T::zero();
    for i in 0..n {
        let [x0, y0] = points[i];
        let [x1, y1] = points[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    acc / T::lit(2.0)
}

pub fn perimeter<T: Scalar>(points: &[Point<T>]) -> T {
    let n = points.len();
    (0..n)
        .map(|i| {
            let [x0, y0] = points[i];
            let [x1, y1] = points[(i + 1) % n];
            (x1 - x0).hypot(y1 - y0)
        })
        .sum()
}

fn orient<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>) -> T {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment<T: Scalar>(a: Point<T>, b: Point<T>, p: Point<T>) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>, d: Point<T>) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    let z = T::zero();
    if ((o1 > z && o2 < z) || (o1 < z && o2 > z)) && ((o3 > z && o4 < z) || (o3 < z && o4 > z)) {
        return true;
    }
    (o1 == z && on_segment(a, b, c))
        || (o2 == z && on_segment(a, b, d))
        || (o3 == z && on_segment(c, d, a))
        || (o4 == z && on_segment(c, d, b))
}

fn first_self_intersection<T: Scalar>(points: &[Point<T>]) -> Option<(usize, usize)> {
    let n = points.len();
    let edge = |i: usize| (points[i], points[(i + 1) % n]);
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = edge(i);
            let (c, d) = edge(j);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // shared vertex; reject only a collinear fold-back
                let (p, q, r) = if j == i + 1 { (a, b, d) } else { (c, d, b) };
                let dot = (q[0] - p[0]) * (r[0] - q[0]) + (q[1] - p[1]) * (r[1] - q[1]);
                if orient(p, q, r) == T::zero() && dot < T::zero() {
                    return Some((i, j));
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}
