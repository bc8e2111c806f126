//! Score-map post-processing: thresholding, connected-component labeling,
//! blob-to-box conversion with pixel-wise orientation estimation, and
//! curved-text polygon extraction along the blob centerline.

use crate::geometry::{min_area_rect, normalize_half_turn, OrientedBox, Point, TextPolygon};
use crate::gtgen::DetectorMaps;
use crate::rastermap::{BinaryMap, ScoreMap};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Post-processing errors.
#[derive(Debug, Error)]
pub enum PostprocError {
    /// Both accumulated orientation sums are (near-)zero.
    #[error("orientation undefined: accumulated sums below 1e-9")]
    OrientationUndefined,
    /// A blob is too thin to support a centerline polygon.
    #[error("skeleton failure: blob thinner than 2 pixels everywhere")]
    SkeletonFailure,
}

/// One 8-connected component of a binary map.
#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    /// 1-based label in row-major first-pixel order.
    pub label: usize,
    /// Member pixels as `(x, y)`.
    pub pixels: Vec<(usize, usize)>,
    /// Inclusive bounding rectangle `(min_x, min_y, max_x, max_y)`.
    pub bbox: (usize, usize, usize, usize),
}

impl Blob {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }
}

/// Post-processing knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostprocConfig {
    /// Region binarization threshold.
    pub region_threshold: f64,
    /// Link binarization threshold.
    pub link_threshold: f64,
    /// Blobs with fewer pixels are dropped.
    pub min_blob_area: usize,
    /// Fraction of the box's short side added on every side of an extracted
    /// box (and the matching scale-up of polygon extents). Compensates the
    /// shrinkage of a thresholded Gaussian support relative to the full
    /// character box: with the sigma = 0.25 unit-square Gaussian cut at 0.4,
    /// the support half-extent is 0.25 * sqrt(2 ln 2.5) ~ 0.338 of the box
    /// against a true 0.5, which this default pads back.
    pub expand_ratio: f64,
}

impl Default for PostprocConfig {
    fn default() -> Self {
        PostprocConfig {
            region_threshold: 0.4,
            link_threshold: 0.4,
            min_blob_area: 10,
            expand_ratio: 0.24,
        }
    }
}

/// Sets a bit wherever `map >= threshold`.
pub fn binarize(map: &ScoreMap, threshold: f64) -> BinaryMap {
    let mut out = BinaryMap::new(map.width(), map.height());
    for y in 0..map.height() {
        for x in 0..map.width() {
            out.set(x, y, map.get(x, y) >= threshold);
        }
    }
    out
}

/// Maximal 8-connected components, labeled in row-major order of each
/// component's first pixel.
pub fn connected_components(binary: &BinaryMap) -> Vec<Blob> {
    let (w, h) = (binary.width(), binary.height());
    let mut seen = vec![false; w * h];
    let mut blobs = Vec::new();
    let mut stack = Vec::new();
    for y0 in 0..h {
        for x0 in 0..w {
            if !binary.get(x0, y0) || seen[y0 * w + x0] {
                continue;
            }
            let label = blobs.len() + 1;
            let mut pixels = Vec::new();
            let (mut min_x, mut min_y, mut max_x, mut max_y) = (x0, y0, x0, y0);
            seen[y0 * w + x0] = true;
            stack.push((x0, y0));
            while let Some((x, y)) = stack.pop() {
                pixels.push((x, y));
                min_x = min_x.min(x);
                max_x = max_x.max(x);
                min_y = min_y.min(y);
                max_y = max_y.max(y);
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let nx = x as i64 + dx;
                        let ny = y as i64 + dy;
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if binary.get(nx, ny) && !seen[ny * w + nx] {
                            seen[ny * w + nx] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            blobs.push(Blob {
                label,
                pixels,
                bbox: (min_x, min_y, max_x, max_y),
            });
        }
    }
    blobs
}

/// Orientation of a blob by the pixel-wise averaging scheme: the arctangent
/// of the region-weighted accumulated sine and cosine deviations from the
/// neutral 0.5 encoding. Result lies in `(-pi, pi]`.
pub fn estimate_orientation(
    region: &ScoreMap,
    sin: &ScoreMap,
    cos: &ScoreMap,
    blob: &Blob,
) -> Result<f64, PostprocError> {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, y) in &blob.pixels {
        let w = region.get(x, y);
        num += w * (sin.get(x, y) - 0.5);
        den += w * (cos.get(x, y) - 0.5);
    }
    if num.abs() < 1e-9 && den.abs() < 1e-9 {
        return Err(PostprocError::OrientationUndefined);
    }
    Ok(num.atan2(den))
}

/// Corner points of every pixel cell in the blob (pixel `(x, y)` covers the
/// unit square centered on its coordinates). Using cells rather than centers
/// keeps single-pixel-thick blobs non-degenerate.
fn blob_cell_corners(blob: &Blob) -> Vec<Point> {
    let mut pts = Vec::with_capacity(blob.pixels.len() * 4);
    for &(x, y) in &blob.pixels {
        let (fx, fy) = (x as f64, y as f64);
        pts.push(Point::new(fx - 0.5, fy - 0.5));
        pts.push(Point::new(fx + 0.5, fy - 0.5));
        pts.push(Point::new(fx + 0.5, fy + 0.5));
        pts.push(Point::new(fx - 0.5, fy + 0.5));
    }
    pts
}

/// Smallest rectangle at a fixed orientation enclosing `points`.
fn oriented_extent_box(points: &[Point], theta: f64) -> OrientedBox {
    let u = Point::new(theta.cos(), theta.sin());
    let v = Point::new(-theta.sin(), theta.cos());
    let (mut min_u, mut max_u) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_v, mut max_v) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        let pu = p.dot(u);
        let pv = p.dot(v);
        min_u = min_u.min(pu);
        max_u = max_u.max(pu);
        min_v = min_v.min(pv);
        max_v = max_v.max(pv);
    }
    let cu = (min_u + max_u) / 2.0;
    let cv = (min_v + max_v) / 2.0;
    let center = u.scale(cu) + v.scale(cv);
    OrientedBox::new(center, max_u - min_u, max_v - min_v, theta)
}

fn union_binary(maps: &DetectorMaps, cfg: &PostprocConfig) -> BinaryMap {
    binarize(&maps.region, cfg.region_threshold).union(&binarize(&maps.link, cfg.link_threshold))
}

/// Text boxes from detector maps: blobs of the combined region/link binary
/// map, each enclosed by a minimum rectangle whose orientation is replaced
/// by [`estimate_orientation`] when defined, padded by the configured
/// expansion ratio.
pub fn extract_boxes(maps: &DetectorMaps, cfg: &PostprocConfig) -> Vec<OrientedBox> {
    let binary = union_binary(maps, cfg);
    let mut boxes = Vec::new();
    for blob in connected_components(&binary) {
        if blob.area() < cfg.min_blob_area {
            continue;
        }
        let pts = blob_cell_corners(&blob);
        let Ok(base) = min_area_rect(&pts) else {
            continue;
        };
        let fitted = match estimate_orientation(&maps.region, &maps.sin, &maps.cos, &blob) {
            Ok(theta) => oriented_extent_box(&pts, normalize_half_turn(theta)),
            Err(_) => base,
        };
        let pad = cfg.expand_ratio * fitted.height;
        boxes.push(OrientedBox::new(
            fitted.center,
            fitted.width + 2.0 * pad,
            fitted.height + 2.0 * pad,
            fitted.theta,
        ));
    }
    boxes
}

/// Zhang-Suen morphological thinning restricted to a bounding window.
fn thin(binary: &BinaryMap, bbox: (usize, usize, usize, usize)) -> BinaryMap {
    let (x0, y0, x1, y1) = bbox;
    let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
    let mut grid = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            grid[y * w + x] = binary.get(x + x0, y + y0);
        }
    }
    let at = |g: &[bool], x: i64, y: i64| -> bool {
        x >= 0 && y >= 0 && x < w as i64 && y < h as i64 && g[y as usize * w + x as usize]
    };
    let mut changed = true;
    while changed {
        changed = false;
        for pass in 0..2 {
            let mut kill = Vec::new();
            for y in 0..h as i64 {
                for x in 0..w as i64 {
                    if !at(&grid, x, y) {
                        continue;
                    }
                    // Neighbors clockwise from north: p2..p9.
                    let n = [
                        at(&grid, x, y - 1),
                        at(&grid, x + 1, y - 1),
                        at(&grid, x + 1, y),
                        at(&grid, x + 1, y + 1),
                        at(&grid, x, y + 1),
                        at(&grid, x - 1, y + 1),
                        at(&grid, x - 1, y),
                        at(&grid, x - 1, y - 1),
                    ];
                    let b = n.iter().filter(|v| **v).count();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&i| !n[i] && n[(i + 1) % 8]).count();
                    if a != 1 {
                        continue;
                    }
                    let cond = if pass == 0 {
                        !(n[0] && n[2] && n[4]) && !(n[2] && n[4] && n[6])
                    } else {
                        !(n[0] && n[2] && n[6]) && !(n[0] && n[4] && n[6])
                    };
                    if cond {
                        kill.push((x as usize, y as usize));
                    }
                }
            }
            if !kill.is_empty() {
                changed = true;
                for (x, y) in kill {
                    grid[y * w + x] = false;
                }
            }
        }
    }
    let mut out = BinaryMap::new(binary.width(), binary.height());
    for y in 0..h {
        for x in 0..w {
            if grid[y * w + x] {
                out.set(x + x0, y + y0, true);
            }
        }
    }
    out
}

/// Longest geodesic path through an 8-connected pixel set: BFS to the
/// farthest pixel, then BFS back with parent tracking.
fn longest_path(pixels: &[(usize, usize)]) -> Vec<(usize, usize)> {
    if pixels.is_empty() {
        return Vec::new();
    }
    use std::collections::{HashMap, VecDeque};
    let set: std::collections::HashSet<(usize, usize)> = pixels.iter().copied().collect();
    let bfs = |start: (usize, usize)| -> (Vec<(usize, usize)>, (usize, usize)) {
        let mut dist: HashMap<(usize, usize), usize> = HashMap::new();
        let mut parent: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        let mut queue = VecDeque::new();
        dist.insert(start, 0);
        queue.push_back(start);
        let mut far = (start, 0usize);
        while let Some(p) = queue.pop_front() {
            let d = dist[&p];
            if d > far.1 || (d == far.1 && p < far.0) {
                far = (p, d);
            }
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = p.0 as i64 + dx;
                    let ny = p.1 as i64 + dy;
                    if nx < 0 || ny < 0 {
                        continue;
                    }
                    let q = (nx as usize, ny as usize);
                    if set.contains(&q) && !dist.contains_key(&q) {
                        dist.insert(q, d + 1);
                        parent.insert(q, p);
                        queue.push_back(q);
                    }
                }
            }
        }
        let mut path = vec![far.0];
        let mut cur = far.0;
        while let Some(&p) = parent.get(&cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        (path, far.0)
    };
    let seed = *pixels.iter().min().unwrap();
    let (_, end_a) = bfs(seed);
    let (path, _) = bfs(end_a);
    path
}

/// Arc-length resampling of a polyline to `k` evenly spaced stations.
pub(crate) fn resample_polyline(points: &[Point], k: usize) -> Vec<Point> {
    assert!(k >= 2 && !points.is_empty());
    if points.len() == 1 {
        return vec![points[0]; k];
    }
    let mut cum = vec![0.0];
    for w in points.windows(2) {
        cum.push(cum.last().unwrap() + w[0].distance(w[1]));
    }
    let total = *cum.last().unwrap();
    if total == 0.0 {
        return vec![points[0]; k];
    }
    let mut out = Vec::with_capacity(k);
    let mut seg = 0usize;
    for i in 0..k {
        let target = total * i as f64 / (k - 1) as f64;
        while seg + 1 < cum.len() - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span == 0.0 {
            0.0
        } else {
            (target - cum[seg]) / span
        };
        out.push(points[seg] + (points[seg + 1] - points[seg]).scale(t));
    }
    out
}

fn support_at(binary: &BinaryMap, p: Point) -> bool {
    let x = p.x.round();
    let y = p.y.round();
    if x < 0.0 || y < 0.0 || x >= binary.width() as f64 || y >= binary.height() as f64 {
        return false;
    }
    binary.get(x as usize, y as usize)
}

/// Extracts a `k`-station polygon for one blob: thin to a skeleton, trace
/// the longest path, resample, and march perpendicular to the local tangent
/// until the support ends.
fn blob_polygon(
    blob: &Blob,
    binary: &BinaryMap,
    cfg: &PostprocConfig,
    k: usize,
) -> Result<TextPolygon, PostprocError> {
    // Thinning is local (3x3), and distinct 8-connected components are never
    // adjacent, so thinning the whole window and filtering by membership is
    // equivalent to thinning the blob alone.
    let skeleton = thin(binary, blob.bbox);
    let skel_pixels: Vec<(usize, usize)> = blob
        .pixels
        .iter()
        .copied()
        .filter(|&(x, y)| skeleton.get(x, y))
        .collect();
    let path = longest_path(&skel_pixels);
    if path.len() < 2 {
        return Err(PostprocError::SkeletonFailure);
    }
    let mut polyline: Vec<Point> = path
        .iter()
        .map(|&(x, y)| Point::new(x as f64, y as f64))
        .collect();
    // Canonical direction: predominantly increasing x (ties: increasing y).
    let first = polyline[0];
    let last = *polyline.last().unwrap();
    if (last.x, last.y) < (first.x, first.y) {
        polyline.reverse();
    }
    // Thinning erodes the extremities, so the skeleton stops short of the
    // word ends; extend both ends along the local tangent while the support
    // persists.
    let (bx0, by0, bx1, by1) = blob.bbox;
    let max_march = ((bx1 - bx0 + 2).max(by1 - by0 + 2)) as f64;
    let tangent_window = polyline.len().min(6) - 1;
    if tangent_window >= 1 {
        let extend = |from: Point, toward: Point| -> Option<Point> {
            let d = toward - from;
            let len = d.norm();
            if len == 0.0 {
                return None;
            }
            let dir = Point::new(d.x / len, d.y / len);
            let mut s = 0.5;
            let mut lastp = None;
            while s <= max_march {
                let p = from + dir.scale(s);
                if !support_at(binary, p) {
                    break;
                }
                lastp = Some(p);
                s += 0.5;
            }
            lastp
        };
        let head = extend(
            polyline[0],
            polyline[0] + (polyline[0] - polyline[tangent_window]),
        );
        let n = polyline.len();
        let tail = extend(
            polyline[n - 1],
            polyline[n - 1] + (polyline[n - 1] - polyline[n - 1 - tangent_window]),
        );
        if let Some(p) = head {
            polyline.insert(0, p);
        }
        if let Some(p) = tail {
            polyline.push(p);
        }
    }
    let stations = resample_polyline(&polyline, k);
    let spacing = {
        let total: f64 = polyline.windows(2).map(|w| w[0].distance(w[1])).sum();
        total / (k - 1) as f64
    };
    let mut top = Vec::with_capacity(k);
    let mut bottom = Vec::with_capacity(k);
    let mut max_thickness = 0.0f64;
    for i in 0..k {
        let prev = stations[i.saturating_sub(1)];
        let next = stations[(i + 1).min(k - 1)];
        let d = next - prev;
        let len = d.norm();
        let dir = if len == 0.0 {
            Point::new(1.0, 0.0)
        } else {
            Point::new(d.x / len, d.y / len)
        };
        let up = Point::new(dir.y, -dir.x);
        // Take the widest support within a small tangential window so the
        // polygon tracks character extents rather than inter-character dips.
        let mut e_up = 0.0f64;
        let mut e_down = 0.0f64;
        let window = (spacing / 2.0).max(0.5);
        let mut off = -window;
        while off <= window + 1e-9 {
            let base = stations[i] + dir.scale(off);
            if support_at(binary, base) {
                let mut s = 0.0;
                while s < max_march && support_at(binary, base + up.scale(s + 0.25)) {
                    s += 0.25;
                }
                e_up = e_up.max(s);
                let mut s = 0.0;
                while s < max_march && support_at(binary, base - up.scale(s + 0.25)) {
                    s += 0.25;
                }
                e_down = e_down.max(s);
            }
            off += window.max(0.5) / 2.0;
        }
        max_thickness = max_thickness.max(e_up + e_down + 1.0);
        // Pad extents the same way extracted boxes are padded.
        let pad = cfg.expand_ratio * (e_up + e_down + 1.0);
        top.push(stations[i] + up.scale(e_up + 0.5 + pad));
        bottom.push(stations[i] - up.scale(e_down + 0.5 + pad));
    }
    if max_thickness < 2.0 {
        return Err(PostprocError::SkeletonFailure);
    }
    Ok(TextPolygon { top, bottom })
}

/// Curved-text polygons from region and link maps: one `k`-station polygon
/// per sufficiently large blob.
pub fn extract_polygons(
    region: &ScoreMap,
    link: &ScoreMap,
    cfg: &PostprocConfig,
    k: usize,
) -> Result<Vec<TextPolygon>, PostprocError> {
    assert!(k >= 2, "need at least 2 stations");
    let binary = binarize(region, cfg.region_threshold).union(&binarize(link, cfg.link_threshold));
    let mut polygons = Vec::new();
    for blob in connected_components(&binary) {
        if blob.area() < cfg.min_blob_area {
            continue;
        }
        polygons.push(blob_polygon(&blob, &binary, cfg, k)?);
    }
    Ok(polygons)
}
