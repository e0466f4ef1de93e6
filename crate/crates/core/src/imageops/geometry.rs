use serde::{Deserialize, Serialize};

use super::{BinaryMask, ImageOpsError};

pub type Point2 = [f64; 2];

/// Simple polygon with positive shoelace area, implicitly closed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Polygon2D {
    vertices: Vec<Point2>,
}

impl TryFrom<Vec<Point2>> for Polygon2D {
    type Error = ImageOpsError;

    fn try_from(v: Vec<Point2>) -> Result<Self, Self::Error> {
        Polygon2D::new(v)
    }
}

impl From<Polygon2D> for Vec<Point2> {
    fn from(p: Polygon2D) -> Self {
        p.vertices
    }
}

impl Polygon2D {
    /// Validates and normalizes orientation. Clockwise input is reversed.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self, ImageOpsError> {
        if vertices.len() < 3 {
            return Err(ImageOpsError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(ImageOpsError::NonFinite);
        }
        let area = signed_area(&vertices);
        if area.abs() < 1e-12 {
            return Err(ImageOpsError::DegeneratePolygon);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        if !is_simple(&vertices) {
            return Err(ImageOpsError::SelfIntersecting);
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn bounds(&self) -> (Point2, Point2) {
        bounds(&self.vertices)
    }

    /// Even-odd rule. Points exactly on an edge may land on either side.
    pub fn contains(&self, p: Point2) -> bool {
        point_in_polygon(&self.vertices, p)
    }

    /// Applies `f` to each vertex. Orientation-reversing maps (reflections)
    /// are normalized back to positive area.
    pub fn map(&self, f: impl Fn(Point2) -> Point2) -> Result<Polygon2D, ImageOpsError> {
        Polygon2D::new(self.vertices.iter().map(|&p| f(p)).collect())
    }

    /// Foreground at every pixel center (integer coordinates) the polygon contains.
    pub fn rasterize(&self, width: usize, height: usize) -> BinaryMask {
        let mut mask = BinaryMask::new(width, height);
        let n = self.vertices.len();
        let mut xs = Vec::new();
        for y in 0..height {
            let py = y as f64;
            xs.clear();
            for i in 0..n {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                if (a[1] > py) != (b[1] > py) {
                    xs.push(a[0] + (py - a[1]) / (b[1] - a[1]) * (b[0] - a[0]));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let x0 = pair[0].ceil().max(0.0);
                let x1 = pair[1].min(width as f64 - 1.0);
                let mut x = x0;
                while x <= x1 {
                    // Strict on the right edge so shared edges are not doubled.
                    if x < pair[1] {
                        mask.set(x as usize, y, true);
                    }
                    x += 1.0;
                }
            }
        }
        mask
    }
}

pub fn signed_area(pts: &[Point2]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s
}

pub fn bounds(pts: &[Point2]) -> (Point2, Point2) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

pub fn point_in_polygon(pts: &[Point2], p: Point2) -> bool {
    let n = pts.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = pts[i];
        let b = pts[j];
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0] {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Distance from `p` to the closest polygon edge.
pub fn distance_to_boundary(pts: &[Point2], p: Point2) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| segment_distance(pts[i], pts[(i + 1) % n], p))
        .fold(f64::INFINITY, f64::min)
}

pub fn segment_distance(a: Point2, b: Point2, p: Point2) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    robust::orient2d(
        robust::Coord { x: a[0], y: a[1] },
        robust::Coord { x: b[0], y: b[1] },
        robust::Coord { x: c[0], y: c[1] },
    )
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn is_simple(pts: &[Point2]) -> bool {
    let n = pts.len();
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        if a == b {
            return false;
        }
        for j in i + 1..n {
            // Adjacent edges share a vertex by construction.
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let c = pts[j];
            let d = pts[(j + 1) % n];
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    // Adjacent edges folding back onto each other.
    for i in 0..n {
        let a = pts[(i + n - 1) % n];
        let b = pts[i];
        let c = pts[(i + 1) % n];
        if orient(a, b, c) == 0.0 {
            let ab = [b[0] - a[0], b[1] - a[1]];
            let bc = [c[0] - b[0], c[1] - b[1]];
            if ab[0] * bc[0] + ab[1] * bc[1] < 0.0 {
                return false;
            }
        }
    }
    true
}

/// Andrew's monotone chain. Returns the hull counter-clockwise (positive
/// shoelace area) without collinear points.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let floor = if pass == 0 { 0 } else { hull.len() - 1 };
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev().skip(1))
        };
        for &p in iter {
            while hull.len() >= floor + 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
    }
    hull.pop();
    hull
}

/// Rectangle with arbitrary orientation. `half_extents[0]` runs along
/// `angle`, `half_extents[1]` perpendicular to it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedRect {
    pub center: Point2,
    pub half_extents: [f64; 2],
    /// Radians, normalized to `[0, π/2)`.
    pub angle: f64,
}

impl OrientedRect {
    pub fn area(&self) -> f64 {
        4.0 * self.half_extents[0] * self.half_extents[1]
    }

    pub fn corners(&self) -> [Point2; 4] {
        let (s, c) = self.angle.sin_cos();
        let u = [c * self.half_extents[0], s * self.half_extents[0]];
        let v = [-s * self.half_extents[1], c * self.half_extents[1]];
        let [cx, cy] = self.center;
        [
            [cx - u[0] - v[0], cy - u[1] - v[1]],
            [cx + u[0] - v[0], cy + u[1] - v[1]],
            [cx + u[0] + v[0], cy + u[1] + v[1]],
            [cx - u[0] + v[0], cy - u[1] + v[1]],
        ]
    }

    /// True if `p` lies inside the rectangle grown by `tol` on every side.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        let (s, c) = self.angle.sin_cos();
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        let a = d[0] * c + d[1] * s;
        let b = -d[0] * s + d[1] * c;
        a.abs() <= self.half_extents[0] + tol && b.abs() <= self.half_extents[1] + tol
    }
}

/// Minimum-area enclosing rectangle by rotating calipers over the convex hull.
pub fn min_area_rect(poly: &Polygon2D) -> OrientedRect {
    let hull = convex_hull(poly.vertices());
    let n = hull.len();
    debug_assert!(n >= 3, "valid polygons have a 2-D hull");

    let dot = |a: Point2, b: Point2| a[0] * b[0] + a[1] * b[1];
    // Calipers: `right` maximizes projection on the edge direction, `top`
    // the normal, `left` minimizes the edge direction. The bottom caliper
    // is the edge itself.
    let mut right = 0;
    let mut top = 0;
    let mut left = 0;
    let mut best: Option<(f64, OrientedRect)> = None;
    for i in 0..n {
        let p0 = hull[i];
        let p1 = hull[(i + 1) % n];
        let len = ((p1[0] - p0[0]).powi(2) + (p1[1] - p0[1]).powi(2)).sqrt();
        let u = [(p1[0] - p0[0]) / len, (p1[1] - p0[1]) / len];
        let v = [-u[1], u[0]];
        if i == 0 {
            right = (0..n).max_by(|&a, &b| dot(hull[a], u).total_cmp(&dot(hull[b], u))).unwrap();
            top = (0..n).max_by(|&a, &b| dot(hull[a], v).total_cmp(&dot(hull[b], v))).unwrap();
            left = (0..n).min_by(|&a, &b| dot(hull[a], u).total_cmp(&dot(hull[b], u))).unwrap();
        } else {
            // Each extreme moves forward monotonically as the edge rotates.
            for _ in 0..n {
                if dot(hull[(right + 1) % n], u) > dot(hull[right], u) {
                    right = (right + 1) % n;
                } else {
                    break;
                }
            }
            for _ in 0..n {
                if dot(hull[(top + 1) % n], v) > dot(hull[top], v) {
                    top = (top + 1) % n;
                } else {
                    break;
                }
            }
            for _ in 0..n {
                if dot(hull[(left + 1) % n], u) < dot(hull[left], u) {
                    left = (left + 1) % n;
                } else {
                    break;
                }
            }
        }
        let umin = dot(hull[left], u);
        let umax = dot(hull[right], u);
        let vmin = dot(p0, v);
        let vmax = dot(hull[top], v);
        let area = (umax - umin) * (vmax - vmin);
        if best.as_ref().is_none_or(|(a, _)| area < *a - 1e-12 * a.abs()) {
            let cu = 0.5 * (umin + umax);
            let cv = 0.5 * (vmin + vmax);
            let center = [cu * u[0] + cv * v[0], cu * u[1] + cv * v[1]];
            let rect = normalize_rect(center, [0.5 * (umax - umin), 0.5 * (vmax - vmin)], u[1].atan2(u[0]));
            best = Some((area, rect));
        }
    }
    best.expect("hull has at least one edge").1
}

fn normalize_rect(center: Point2, mut half: [f64; 2], angle: f64) -> OrientedRect {
    use std::f64::consts::FRAC_PI_2;
    let mut a = angle.rem_euclid(std::f64::consts::PI);
    if a >= FRAC_PI_2 {
        a -= FRAC_PI_2;
        half.swap(0, 1);
    }
    // Angles a hair below π/2 are the same rectangle at 0.
    if FRAC_PI_2 - a < 1e-12 {
        a = 0.0;
        half.swap(0, 1);
    }
    OrientedRect {
        center,
        half_extents: half,
        angle: a,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rotate(pts: &[Point2], angle: f64) -> Vec<Point2> {
        let (s, c) = angle.sin_cos();
        pts.iter().map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]]).collect()
    }

    /// Brute-force sweep: bounding-box area of the hull at every 0.1°.
    fn sweep_min_area(pts: &[Point2]) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..900 {
            let a = (k as f64 * 0.1).to_radians();
            let (lo, hi) = bounds(&rotate(pts, -a));
            let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
            if area < best.0 {
                best = (area, a);
            }
        }
        best
    }

    #[test]
    fn collinear_polygon_rejected() {
        let err = Polygon2D::new(vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap_err();
        assert!(matches!(err, ImageOpsError::DegeneratePolygon));
    }

    #[test]
    fn bowtie_rejected() {
        let err = Polygon2D::new(vec![[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, ImageOpsError::SelfIntersecting));
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let p = Polygon2D::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!((p.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_square_rect() {
        let sq = Polygon2D::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let r = min_area_rect(&sq);
        assert!((r.center[0] - 0.5).abs() < 1e-12 && (r.center[1] - 0.5).abs() < 1e-12);
        assert!((r.half_extents[0] - 0.5).abs() < 1e-12 && (r.half_extents[1] - 0.5).abs() < 1e-12);
        assert!(r.angle.abs() < 1e-12);
    }

    #[test]
    fn rotated_square_matches_sweep() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let rot = rotate(&sq, 30f64.to_radians());
        let r = min_area_rect(&Polygon2D::new(rot.clone()).unwrap());
        assert!((r.area() - 1.0).abs() < 1e-6);
        assert!((r.half_extents[0] - 0.5).abs() < 1e-9);
        let deg = r.angle.to_degrees().rem_euclid(90.0);
        assert!((deg - 30.0).abs() < 1e-6, "angle {deg}");
        let (sweep_area, sweep_angle) = sweep_min_area(&rot);
        assert!((sweep_area - 1.0).abs() < 1e-6);
        assert!((sweep_angle.to_degrees() - 30.0).abs() < 0.11);
    }

    #[test]
    fn rect_encloses_and_beats_bbox() {
        let pts = vec![[0.0, 0.0], [4.0, 1.0], [5.0, 3.0], [2.0, 4.5], [0.5, 2.0]];
        let poly = Polygon2D::new(pts.clone()).unwrap();
        let r = min_area_rect(&poly);
        for &p in &pts {
            assert!(r.contains(p, 1e-9));
        }
        let (lo, hi) = poly.bounds();
        assert!(r.area() <= (hi[0] - lo[0]) * (hi[1] - lo[1]) + 1e-9);
        assert!(r.angle >= 0.0 && r.angle < PI / 2.0);
    }

    #[test]
    fn rasterized_square_area() {
        let sq = Polygon2D::new(vec![[-0.5, -0.5], [9.5, -0.5], [9.5, 9.5], [-0.5, 9.5]]).unwrap();
        let m = sq.rasterize(12, 12);
        assert_eq!(m.count(), 100);
    }
}
