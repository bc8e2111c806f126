//! Planar geometry primitives: quadrilaterals, polygons, oriented boxes,
//! homographies, polygon IoU, and minimum-area enclosing rectangles.
//!
//! All coordinates are image-style (y down). Quadrilaterals and polygons are
//! stored with clockwise-on-screen winding, which makes the shoelace sum
//! positive under this axis convention.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Errors from the geometry kernels.
#[derive(Debug, Error)]
pub enum GeometryError {
    /// Fewer than 3 points, or all points collinear.
    #[error("degenerate input: need >= 3 non-collinear points")]
    DegenerateInput,
    /// A polygon with (near-)zero area where a proper one is required.
    #[error("degenerate polygon: zero area")]
    DegeneratePolygon,
    /// The linear system for a homography fit is rank-deficient.
    #[error("singular system: homography solve is rank-deficient")]
    SingularSystem,
}

/// A 2D point in pixel coordinates.
///
/// Serializes as a `[x, y]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    #[inline]
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    #[inline]
    pub fn scale(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(deserializer)?;
        Ok(Point { x, y })
    }
}

/// Signed area of a polygon by the shoelace formula.
///
/// Positive for clockwise-on-screen winding under the y-down convention.
pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        acc += points[i].cross(points[j]);
    }
    acc / 2.0
}

/// Diagonal length of the axis-aligned bounding box of `points`.
pub fn bbox_diagonal(points: &[Point]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        min_x = min_x.min(p.x);
        max_x = max_x.max(p.x);
        min_y = min_y.min(p.y);
        max_y = max_y.max(p.y);
    }
    (max_x - min_x).hypot(max_y - min_y)
}

/// A quadrilateral with corners in clockwise-on-screen order starting
/// top-left. The shoelace sum over the corners is positive.
///
/// Serializes as `[[x,y], [x,y], [x,y], [x,y]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Quad {
    pub corners: [Point; 4],
}

impl Quad {
    /// Builds a quad, checking winding and non-self-intersection.
    pub fn new(corners: [Point; 4]) -> Result<Self, GeometryError> {
        let q = Quad { corners };
        if !q.is_simple_clockwise() {
            return Err(GeometryError::DegeneratePolygon);
        }
        Ok(q)
    }

    /// The unit square `(0,0)-(1,0)-(1,1)-(0,1)`.
    pub fn unit_square() -> Self {
        Quad {
            corners: [
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0),
            ],
        }
    }

    /// Centroid of the four corners.
    pub fn center(&self) -> Point {
        let s = self.corners[0] + self.corners[1] + self.corners[2] + self.corners[3];
        s.scale(0.25)
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.corners)
    }

    /// Mean of the two diagonal lengths. Used as the character "diagonal
    /// length" when computing link thickness.
    pub fn diagonal(&self) -> f64 {
        let d1 = self.corners[0].distance(self.corners[2]);
        let d2 = self.corners[1].distance(self.corners[3]);
        0.5 * (d1 + d2)
    }

    /// Reading-direction angle: the averaged direction of the top and bottom
    /// edges, measured from the +x axis.
    pub fn baseline_angle(&self) -> f64 {
        let top = self.corners[1] - self.corners[0];
        let bottom = self.corners[2] - self.corners[3];
        let d = top + bottom;
        d.y.atan2(d.x)
    }

    /// True if the winding is positive and opposite edges do not cross.
    pub fn is_simple_clockwise(&self) -> bool {
        let c = &self.corners;
        if !c.iter().all(|p| p.is_finite()) {
            return false;
        }
        let diag = bbox_diagonal(c);
        if self.signed_area() <= 1e-12 * diag * diag {
            return false;
        }
        !segments_cross(c[0], c[1], c[2], c[3]) && !segments_cross(c[1], c[2], c[3], c[0])
    }

    /// Point-in-quad test (boundary counts as inside). Valid for convex
    /// quads with the stated winding.
    pub fn contains(&self, p: Point) -> bool {
        let c = &self.corners;
        (0..4).all(|i| {
            let a = c[i];
            let b = c[(i + 1) % 4];
            (b - a).cross(p - a) >= 0.0
        })
    }
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

/// Rotated rectangle: center, side lengths, and the angle of the width axis.
///
/// Canonical form: `theta` lies in `(-pi/2, pi/2]` and `width >= height`.
/// When `width == height` exactly, the representative with `theta` closest
/// to zero is chosen (the positive one if both candidates tie in magnitude).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Point,
    pub width: f64,
    pub height: f64,
    pub theta: f64,
}

/// Wraps an angle into `(-pi/2, pi/2]`.
pub fn normalize_half_turn(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(PI); // [0, pi)
    if a > FRAC_PI_2 {
        a -= PI;
    }
    a
}

impl OrientedBox {
    /// Builds a box in canonical form.
    pub fn new(center: Point, width: f64, height: f64, theta: f64) -> Self {
        let (mut w, mut h) = (width, height);
        let mut t = normalize_half_turn(theta);
        if w < h {
            std::mem::swap(&mut w, &mut h);
            t = normalize_half_turn(t + FRAC_PI_2);
        }
        if w == h {
            let alt = normalize_half_turn(t + FRAC_PI_2);
            if alt.abs() < t.abs() || (alt.abs() == t.abs() && alt > t) {
                t = alt;
            }
        }
        OrientedBox {
            center,
            width: w,
            height: h,
            theta: t,
        }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Corner points, clockwise on screen starting top-left (for theta = 0,
    /// "top" is the smaller-y edge).
    pub fn corners(&self) -> [Point; 4] {
        let u = Point::new(self.theta.cos(), self.theta.sin());
        let v = Point::new(-self.theta.sin(), self.theta.cos());
        let hw = self.width / 2.0;
        let hh = self.height / 2.0;
        let c = self.center;
        [
            c - u.scale(hw) - v.scale(hh),
            c + u.scale(hw) - v.scale(hh),
            c + u.scale(hw) + v.scale(hh),
            c - u.scale(hw) + v.scale(hh),
        ]
    }

    /// True if `p` lies inside the box inflated by `tol` on every side.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let d = p - self.center;
        let u = Point::new(self.theta.cos(), self.theta.sin());
        let v = Point::new(-self.theta.sin(), self.theta.cos());
        d.dot(u).abs() <= self.width / 2.0 + tol && d.dot(v).abs() <= self.height / 2.0 + tol
    }
}

/// Curved-text boundary: `top[i]` pairs with `bottom[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextPolygon {
    pub top: Vec<Point>,
    pub bottom: Vec<Point>,
}

impl TextPolygon {
    /// Builds a polygon, requiring `K >= 2` index-aligned pairs.
    pub fn new(top: Vec<Point>, bottom: Vec<Point>) -> Result<Self, GeometryError> {
        if top.len() != bottom.len() || top.len() < 2 {
            return Err(GeometryError::DegenerateInput);
        }
        Ok(TextPolygon { top, bottom })
    }

    /// Number of paired control stations.
    pub fn stations(&self) -> usize {
        self.top.len()
    }

    /// Midpoints of the top/bottom pairs.
    pub fn pair_centers(&self) -> Vec<Point> {
        self.top
            .iter()
            .zip(&self.bottom)
            .map(|(t, b)| (*t + *b).scale(0.5))
            .collect()
    }

    /// Distances between the top/bottom pairs.
    pub fn pair_heights(&self) -> Vec<f64> {
        self.top
            .iter()
            .zip(&self.bottom)
            .map(|(t, b)| t.distance(*b))
            .collect()
    }

    /// Closed outline: top points left-to-right, then bottom points reversed.
    pub fn ring(&self) -> Vec<Point> {
        let mut ring = self.top.clone();
        ring.extend(self.bottom.iter().rev().copied());
        ring
    }
}

/// 3x3 projective transform with `|det| > 1e-12`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    pub matrix: [[f64; 3]; 3],
}

impl Homography {
    pub fn identity() -> Self {
        Homography {
            matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    fn det(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Applies the transform with perspective division.
    pub fn apply(&self, p: Point) -> Point {
        let m = &self.matrix;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        Point::new(
            (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
        )
    }

    pub fn inverse(&self) -> Result<Homography, GeometryError> {
        let m = nalgebra::Matrix3::from_fn(|r, c| self.matrix[r][c]);
        let inv = m.try_inverse().ok_or(GeometryError::SingularSystem)?;
        let h = Homography {
            matrix: [
                [inv[(0, 0)], inv[(0, 1)], inv[(0, 2)]],
                [inv[(1, 0)], inv[(1, 1)], inv[(1, 2)]],
                [inv[(2, 0)], inv[(2, 1)], inv[(2, 2)]],
            ],
        };
        if h.det().abs() <= 1e-12 {
            return Err(GeometryError::SingularSystem);
        }
        Ok(h)
    }
}

/// Fits the homography mapping the corners of `src` onto `dst` (direct
/// linear transform, normalized so the bottom-right entry is 1).
pub fn quad_homography(src: &Quad, dst: &Quad) -> Result<Homography, GeometryError> {
    let mut a = nalgebra::SMatrix::<f64, 8, 8>::zeros();
    let mut rhs = nalgebra::SVector::<f64, 8>::zeros();
    for i in 0..4 {
        let s = src.corners[i];
        let d = dst.corners[i];
        let r = 2 * i;
        a[(r, 0)] = s.x;
        a[(r, 1)] = s.y;
        a[(r, 2)] = 1.0;
        a[(r, 6)] = -s.x * d.x;
        a[(r, 7)] = -s.y * d.x;
        rhs[r] = d.x;
        a[(r + 1, 3)] = s.x;
        a[(r + 1, 4)] = s.y;
        a[(r + 1, 5)] = 1.0;
        a[(r + 1, 6)] = -s.x * d.y;
        a[(r + 1, 7)] = -s.y * d.y;
        rhs[r + 1] = d.y;
    }
    let h = a
        .full_piv_lu()
        .solve(&rhs)
        .ok_or(GeometryError::SingularSystem)?;
    let hom = Homography {
        matrix: [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]],
    };
    if hom.det().abs() <= 1e-12 {
        return Err(GeometryError::SingularSystem);
    }
    Ok(hom)
}

/// Convex hull by Andrew's monotone chain, counter-clockwise under y-down
/// (i.e. positive shoelace order). Collinear points on the hull are dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * n);
    // Lower then upper chain; `cross <= 0` keeps only strict turns.
    for &p in pts.iter() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if (b - a).cross(p - a) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if (b - a).cross(p - a) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Minimum-area rotated rectangle enclosing `points` (rotating calipers over
/// the convex hull).
///
/// Returns [`GeometryError::DegenerateInput`] for fewer than 3 points or an
/// all-collinear cloud (hull area below `1e-9 * diag^2`).
pub fn min_area_rect(points: &[Point]) -> Result<OrientedBox, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::DegenerateInput);
    }
    let hull = convex_hull(points);
    let diag = bbox_diagonal(points);
    if hull.len() < 3 || signed_area(&hull).abs() < 1e-9 * diag * diag {
        return Err(GeometryError::DegenerateInput);
    }
    let origin = hull[0];
    let mut best: Option<(f64, Point, f64, f64, f64)> = None; // area, center, w, h, theta
    let n = hull.len();
    for i in 0..n {
        let e = hull[(i + 1) % n] - hull[i];
        let len = e.norm();
        if len == 0.0 {
            continue;
        }
        let u = Point::new(e.x / len, e.y / len);
        let v = Point::new(-u.y, u.x);
        let (mut min_u, mut max_u) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min_v, mut max_v) = (f64::INFINITY, f64::NEG_INFINITY);
        for &p in &hull {
            let d = p - origin;
            let pu = d.dot(u);
            let pv = d.dot(v);
            min_u = min_u.min(pu);
            max_u = max_u.max(pu);
            min_v = min_v.min(pv);
            max_v = max_v.max(pv);
        }
        let w = max_u - min_u;
        let h = max_v - min_v;
        let area = w * h;
        if best.is_none_or(|(a, ..)| area < a) {
            let cu = (min_u + max_u) / 2.0;
            let cv = (min_v + max_v) / 2.0;
            let center = origin + u.scale(cu) + v.scale(cv);
            best = Some((area, center, w, h, u.y.atan2(u.x)));
        }
    }
    let (_, center, w, h, theta) = best.ok_or(GeometryError::DegenerateInput)?;
    Ok(OrientedBox::new(center, w, h, theta))
}

fn is_convex(points: &[Point]) -> bool {
    let n = points.len();
    let diag = bbox_diagonal(points);
    let eps = 1e-12 * diag * diag;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let c = points[(i + 2) % n];
        if (b - a).cross(c - b) < -eps {
            return false;
        }
    }
    true
}

/// Clips `subject` against a convex, positively wound `clip` polygon
/// (Sutherland-Hodgman).
fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut output = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let edge = b - a;
        let input = std::mem::take(&mut output);
        let inside = |p: Point| edge.cross(p - a) >= 0.0;
        for j in 0..input.len() {
            let cur = input[j];
            let next = input[(j + 1) % input.len()];
            let cur_in = inside(cur);
            let next_in = inside(next);
            if cur_in {
                output.push(cur);
            }
            if cur_in != next_in {
                let dc = edge.cross(cur - a);
                let dn = edge.cross(next - a);
                let t = dc / (dc - dn);
                output.push(cur + (next - cur).scale(t));
            }
        }
    }
    output
}

/// Ear-clipping triangulation of a simple, positively wound polygon.
fn triangulate(points: &[Point]) -> Vec<[Point; 3]> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    let mut tris = Vec::new();
    let diag = bbox_diagonal(points);
    let eps = 1e-12 * diag * diag;
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let ia = idx[(k + m - 1) % m];
            let ib = idx[k];
            let ic = idx[(k + 1) % m];
            let (a, b, c) = (points[ia], points[ib], points[ic]);
            let cross = (b - a).cross(c - b);
            if cross <= eps {
                continue; // reflex or flat corner
            }
            let blocked = idx.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                point_in_triangle_inclusive(points[j], a, b, c, eps)
            });
            if blocked {
                continue;
            }
            tris.push([a, b, c]);
            idx.remove(k);
            clipped = true;
            break;
        }
        if !clipped {
            // Numerically stuck (should not happen for simple input);
            // drop the flattest corner and continue.
            let mut flattest = 0;
            let mut best = f64::INFINITY;
            for k in 0..idx.len() {
                let m = idx.len();
                let a = points[idx[(k + m - 1) % m]];
                let b = points[idx[k]];
                let c = points[idx[(k + 1) % m]];
                let cr = (b - a).cross(c - b).abs();
                if cr < best {
                    best = cr;
                    flattest = k;
                }
            }
            idx.remove(flattest);
        }
    }
    if idx.len() == 3 {
        tris.push([points[idx[0]], points[idx[1]], points[idx[2]]]);
    }
    tris
}

// Inclusive containment: boundary points block an ear too, otherwise a
// reflex vertex sitting exactly on a candidate diagonal slips through and
// the triangulation covers the notch.
fn point_in_triangle_inclusive(p: Point, a: Point, b: Point, c: Point, eps: f64) -> bool {
    let d1 = (b - a).cross(p - a);
    let d2 = (c - b).cross(p - b);
    let d3 = (a - c).cross(p - c);
    d1 >= -eps && d2 >= -eps && d3 >= -eps
}

fn oriented_positive(points: &[Point]) -> Vec<Point> {
    if signed_area(points) < 0.0 {
        points.iter().rev().copied().collect()
    } else {
        points.to_vec()
    }
}

fn intersection_area(a: &[Point], b: &[Point]) -> f64 {
    if is_convex(a) && is_convex(b) {
        return signed_area(&clip_convex(a, b)).abs();
    }
    let tris_a = triangulate(a);
    let tris_b = triangulate(b);
    let mut total = 0.0;
    for ta in &tris_a {
        for tb in &tris_b {
            total += signed_area(&clip_convex(&ta[..], &tb[..])).abs();
        }
    }
    total
}

/// Intersection-over-union of two simple polygons by exact polygon clipping.
///
/// Convex pairs are clipped directly; general polygons are ear-clipped into
/// triangles and intersected pairwise.
pub fn polygon_iou(a: &[Point], b: &[Point]) -> Result<f64, GeometryError> {
    let area = |p: &[Point]| -> Result<f64, GeometryError> {
        if p.len() < 3 {
            return Err(GeometryError::DegeneratePolygon);
        }
        let s = signed_area(p).abs();
        let diag = bbox_diagonal(p);
        if s <= 1e-12 * diag * diag || s == 0.0 {
            return Err(GeometryError::DegeneratePolygon);
        }
        Ok(s)
    };
    let area_a = area(a)?;
    let area_b = area(b)?;
    let pa = oriented_positive(a);
    let pb = oriented_positive(b);
    let inter = intersection_area(&pa, &pb).min(area_a).min(area_b);
    let union = area_a + area_b - inter;
    Ok((inter / union).clamp(0.0, 1.0))
}
