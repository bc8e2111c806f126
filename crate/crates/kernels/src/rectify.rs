//! Thin-plate-spline rectification: TPS fitting and backward warping, the
//! 20-control-point initialization, iterative refinement against score maps,
//! and 2D polynomial smoothing of the final boundary polygon.

use crate::geometry::{OrientedBox, Point, TextPolygon};
use crate::gtgen::DetectorMaps;
use crate::postproc::resample_polyline;
use crate::rastermap::ScoreMap;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Rectification errors.
#[derive(Debug, Error)]
pub enum RectifyError {
    /// Degenerate control-point configuration (collinear or coincident).
    #[error("singular system: degenerate control-point configuration")]
    SingularSystem,
    /// Rank-deficient polynomial fit.
    #[error("ill-conditioned polynomial fit")]
    IllConditioned,
    /// No region mass under any column band of the warped map.
    #[error("empty region: no mass under any column band")]
    EmptyRegion,
}

/// Number of paired control stations (10 top + 10 bottom).
pub const STATIONS: usize = 10;

/// Region-support cutoff as a fraction of the local peak when re-estimating
/// control points; exp(-2) is the region Gaussian's value at the character
/// box edge, so the support recovers the full box extent.
const SUPPORT_RATIO: f64 = 0.135;

/// Regularization used for the refinement fits inside
/// [`iterative_rectify`]; exact-interpolation callers pass 0.
pub const REFINE_REG: f64 = 1e-6;

#[inline]
fn kernel(r2: f64) -> f64 {
    if r2 == 0.0 {
        0.0
    } else {
        r2 * r2.ln()
    }
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    center: Point,
    scale: f64,
}

impl Frame {
    fn fit(points: &[Point]) -> Result<Frame, RectifyError> {
        let n = points.len() as f64;
        let mut c = Point::new(0.0, 0.0);
        for p in points {
            c = c + *p;
        }
        let center = c.scale(1.0 / n);
        let ms: f64 = points
            .iter()
            .map(|p| {
                let d = *p - center;
                d.dot(d)
            })
            .sum::<f64>()
            / n;
        let scale = (ms / 2.0).sqrt();
        if scale.is_nan() || scale <= 1e-9 {
            return Err(RectifyError::SingularSystem);
        }
        Ok(Frame { center, scale })
    }

    #[inline]
    fn localize(&self, p: Point) -> Point {
        (p - self.center).scale(1.0 / self.scale)
    }

    #[inline]
    fn globalize(&self, p: Point) -> Point {
        self.center + p.scale(self.scale)
    }
}

/// A fitted thin-plate-spline map from source to destination coordinates.
///
/// The kernel is `U(r) = r^2 ln(r^2)` with `U(0) = 0`, applied in an
/// internally normalized frame (centered, RMS-radius sqrt(2)) to keep the
/// bordered system well conditioned. The kernel weights satisfy the side
/// conditions `sum w = sum w*x = sum w*y = 0`.
#[derive(Debug, Clone)]
pub struct TpsTransform {
    source: Vec<Point>,
    local_source: Vec<Point>,
    src_frame: Frame,
    dst_frame: Frame,
    /// Affine part per output dimension: `[c, cx, cy]` in the local frame.
    affine: [[f64; 3]; 2],
    /// Kernel weights per control point, `(wx, wy)` in the local frame.
    weights: Vec<(f64, f64)>,
    regularization: f64,
}

impl TpsTransform {
    /// The source control points in world coordinates.
    pub fn source_points(&self) -> &[Point] {
        &self.source
    }

    /// Kernel weights per control point (normalized frame).
    pub fn kernel_weights(&self) -> &[(f64, f64)] {
        &self.weights
    }

    /// Affine coefficients per output dimension (normalized frame).
    pub fn affine_part(&self) -> [[f64; 3]; 2] {
        self.affine
    }

    pub fn regularization(&self) -> f64 {
        self.regularization
    }

    /// Evaluates the transform at `p`.
    pub fn apply(&self, p: Point) -> Point {
        let q = self.src_frame.localize(p);
        let mut out = [0.0f64; 2];
        for (slot, a) in out.iter_mut().zip(&self.affine) {
            *slot = a[0] + a[1] * q.x + a[2] * q.y;
        }
        for (c, w) in self.local_source.iter().zip(&self.weights) {
            let d = q - *c;
            let u = kernel(d.dot(d));
            out[0] += w.0 * u;
            out[1] += w.1 * u;
        }
        self.dst_frame.globalize(Point::new(out[0], out[1]))
    }
}

/// Fits the TPS interpolating `src[i] -> dst[i]`. With `reg = 0` the fit
/// interpolates exactly; positive `reg` is added to the kernel diagonal and
/// relaxes the interpolation for noisy targets.
pub fn tps_fit(src: &[Point], dst: &[Point], reg: f64) -> Result<TpsTransform, RectifyError> {
    if src.len() != dst.len() || src.len() < 3 {
        return Err(RectifyError::SingularSystem);
    }
    let n = src.len();
    let src_frame = Frame::fit(src)?;
    let dst_frame = Frame::fit(dst).unwrap_or(Frame {
        center: dst[0],
        scale: 1.0,
    });
    let ls: Vec<Point> = src.iter().map(|p| src_frame.localize(*p)).collect();
    let ld: Vec<Point> = dst.iter().map(|p| dst_frame.localize(*p)).collect();
    let dim = n + 3;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            let d = ls[i] - ls[j];
            a[(i, j)] = kernel(d.dot(d)) + if i == j { reg } else { 0.0 };
        }
        a[(i, n)] = 1.0;
        a[(i, n + 1)] = ls[i].x;
        a[(i, n + 2)] = ls[i].y;
        a[(n, i)] = 1.0;
        a[(n + 1, i)] = ls[i].x;
        a[(n + 2, i)] = ls[i].y;
    }
    let mut bx = DVector::<f64>::zeros(dim);
    let mut by = DVector::<f64>::zeros(dim);
    for i in 0..n {
        bx[i] = ld[i].x;
        by[i] = ld[i].y;
    }
    let lu = a.full_piv_lu();
    let sx = lu.solve(&bx).ok_or(RectifyError::SingularSystem)?;
    let sy = lu.solve(&by).ok_or(RectifyError::SingularSystem)?;
    if sx.iter().any(|v| !v.is_finite()) || sy.iter().any(|v| !v.is_finite()) {
        return Err(RectifyError::SingularSystem);
    }
    let weights: Vec<(f64, f64)> = (0..n).map(|i| (sx[i], sy[i])).collect();
    let affine = [[sx[n], sx[n + 1], sx[n + 2]], [sy[n], sy[n + 1], sy[n + 2]]];
    let t = TpsTransform {
        source: src.to_vec(),
        local_source: ls,
        src_frame,
        dst_frame,
        affine,
        weights,
        regularization: reg,
    };
    if reg == 0.0 {
        // An exact fit that fails to interpolate means the system was
        // numerically singular even though the LU produced finite output.
        let worst = src
            .iter()
            .zip(dst)
            .map(|(s, d)| t.apply(*s).distance(*d))
            .fold(0.0f64, f64::max);
        if worst > 1e-6 * dst_frame.scale.max(1.0) {
            return Err(RectifyError::SingularSystem);
        }
    }
    Ok(t)
}

/// Backward warp: `out(p) = map.sample_bilinear(t(p))` over an
/// `out_w x out_h` grid, so `t` maps output coordinates into the input map.
pub fn tps_warp(map: &ScoreMap, t: &TpsTransform, out_w: usize, out_h: usize) -> ScoreMap {
    assert!(out_w > 0 && out_h > 0, "output dims must be positive");
    ScoreMap::from_fn(out_w, out_h, |x, y| {
        let src = t.apply(Point::new(x as f64, y as f64));
        map.sample_bilinear(src.x, src.y)
    })
}

/// The 20 paired control points bounding a text instance: 10 along the top
/// boundary, 10 along the bottom, index-paired.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPointSet {
    pub top: [Point; STATIONS],
    pub bottom: [Point; STATIONS],
}

impl ControlPointSet {
    /// Equally spaced points along the top and bottom edges of a box.
    pub fn from_box(b: &OrientedBox) -> Self {
        let corners = b.corners();
        let mut top = [Point::default(); STATIONS];
        let mut bottom = [Point::default(); STATIONS];
        for (i, (t_slot, b_slot)) in top.iter_mut().zip(bottom.iter_mut()).enumerate() {
            let t = i as f64 / (STATIONS - 1) as f64;
            *t_slot = corners[0] + (corners[1] - corners[0]).scale(t);
            *b_slot = corners[3] + (corners[2] - corners[3]).scale(t);
        }
        ControlPointSet { top, bottom }
    }

    /// Control points from a text polygon. A 10-station polygon is taken
    /// verbatim; other station counts are resampled by arc length.
    pub fn from_polygon(p: &TextPolygon) -> Self {
        let (top_pts, bottom_pts) = if p.stations() == STATIONS {
            (p.top.clone(), p.bottom.clone())
        } else {
            (
                resample_polyline(&p.top, STATIONS),
                resample_polyline(&p.bottom, STATIONS),
            )
        };
        let mut top = [Point::default(); STATIONS];
        let mut bottom = [Point::default(); STATIONS];
        top.copy_from_slice(&top_pts);
        bottom.copy_from_slice(&bottom_pts);
        ControlPointSet { top, bottom }
    }

    /// All 20 points, top stations first.
    pub fn all_points(&self) -> Vec<Point> {
        self.top.iter().chain(self.bottom.iter()).copied().collect()
    }

    pub fn to_polygon(&self) -> TextPolygon {
        TextPolygon {
            top: self.top.to_vec(),
            bottom: self.bottom.to_vec(),
        }
    }

    /// Midpoints of the paired stations.
    pub fn centers(&self) -> Vec<Point> {
        self.top
            .iter()
            .zip(&self.bottom)
            .map(|(t, b)| (*t + *b).scale(0.5))
            .collect()
    }

    pub fn mean_height(&self) -> f64 {
        self.top
            .iter()
            .zip(&self.bottom)
            .map(|(t, b)| t.distance(*b))
            .sum::<f64>()
            / STATIONS as f64
    }

    pub fn arc_length(&self) -> f64 {
        self.centers().windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

/// Canonical rectified grid for a control-point set: height 64, width
/// proportional to the aspect ratio, clamped to `[64, 512]`.
fn canonical_grid(cps: &ControlPointSet) -> Result<(usize, usize), RectifyError> {
    let h = cps.mean_height();
    if h.is_nan() || h <= 1e-6 {
        return Err(RectifyError::EmptyRegion);
    }
    let aspect = cps.arc_length() / h;
    let w = (64.0 * aspect).round().clamp(64.0, 512.0) as usize;
    Ok((w, 64))
}

fn canonical_lattice(w: usize, h: usize) -> ControlPointSet {
    let mut top = [Point::default(); STATIONS];
    let mut bottom = [Point::default(); STATIONS];
    for i in 0..STATIONS {
        let x = i as f64 * (w - 1) as f64 / (STATIONS - 1) as f64;
        top[i] = Point::new(x, 0.0);
        bottom[i] = Point::new(x, (h - 1) as f64);
    }
    ControlPointSet { top, bottom }
}

/// One rectification pass: the transform mapping canonical coordinates into
/// the image, and the maps warped onto the canonical grid.
fn warp_to_canonical(
    maps: &DetectorMaps,
    cps: &ControlPointSet,
) -> Result<(DetectorMaps, TpsTransform, usize, usize), RectifyError> {
    let (w, h) = canonical_grid(cps)?;
    let lattice = canonical_lattice(w, h);
    let t = tps_fit(&lattice.all_points(), &cps.all_points(), REFINE_REG)?;
    let rectified = DetectorMaps::new(
        tps_warp(&maps.region, &t, w, h),
        tps_warp(&maps.link, &t, w, h),
        tps_warp(&maps.sin, &t, w, h),
        tps_warp(&maps.cos, &t, w, h),
    );
    Ok((rectified, t, w, h))
}

/// Iterative TPS rectification. Each iteration warps the original maps onto
/// the canonical horizontal grid with the current control points as the TPS
/// destinations, re-estimates the text band from the warped region map
/// (per-column support edges smoothed by a mass-weighted cubic), and
/// rebuilds the control pairs in input coordinates perpendicular to the
/// mapped centerline. Returns the final warped maps and the final control
/// points in input-image coordinates.
pub fn iterative_rectify(
    maps: &DetectorMaps,
    cps: &ControlPointSet,
    iters: usize,
) -> Result<(DetectorMaps, ControlPointSet), RectifyError> {
    assert!(iters >= 1, "need at least one iteration");
    let mut current = cps.clone();
    let mut last_maps = None;
    for _ in 0..iters {
        let (rect, t, w, h) = warp_to_canonical(maps, &current)?;
        let spacing = (w - 1) as f64 / (STATIONS - 1) as f64;
        // Per-column support edges of the warped region, weighted by column
        // mass (gap columns between characters carry almost none).
        let mut cols: Vec<(f64, f64, f64, f64)> = Vec::new(); // x, mass, top, bottom
        for x in 0..w {
            let mut col_mass = 0.0;
            let mut col_peak = 0.0f64;
            for y in 0..h {
                let r = rect.region.get(x, y);
                col_mass += r;
                col_peak = col_peak.max(r);
            }
            if col_mass < 1e-6 {
                continue;
            }
            let cut = SUPPORT_RATIO * col_peak;
            if let Some((y_min, y_max)) = column_support(&rect.region, x, cut) {
                cols.push((x as f64, col_mass, y_min, y_max));
            }
        }
        if cols.is_empty() {
            return Err(RectifyError::EmptyRegion);
        }
        // Smooth the noisy per-column edges with one weighted cubic along
        // the width (raw band estimates zigzag between characters and the
        // next warp rings between stations). A degenerate fit keeps the
        // previous control points.
        let top_fit = fit_edge_curve(&cols, |c| c.2, w);
        let bottom_fit = fit_edge_curve(&cols, |c| c.3, w);
        if let (Some(top_fit), Some(bottom_fit)) = (top_fit, bottom_fit) {
            // Map the smoothed centerline back to the image and rebuild the
            // pairs perpendicular to it there. Mapping both edge endpoints
            // directly would keep whatever shear the current warp has; the
            // perpendicular construction is what straightens rotated
            // characters at the curve's ends.
            let mut centers = [Point::default(); STATIONS];
            let mut axes = [Point::default(); STATIONS];
            let mut half_up = [0.0f64; STATIONS];
            let mut half_down = [0.0f64; STATIONS];
            for i in 0..STATIONS {
                let x_i = i as f64 * spacing;
                let mu = 0.5 * (top_fit(x_i) + bottom_fit(x_i));
                centers[i] = t.apply(Point::new(x_i, mu));
                let above = t.apply(Point::new(x_i, mu - 1.0));
                let below = t.apply(Point::new(x_i, mu + 1.0));
                axes[i] = above - below; // image of 2 canonical rows, upward
                half_up[i] = mu - top_fit(x_i) + 0.5;
                half_down[i] = bottom_fit(x_i) - mu + 0.5;
            }
            let mut updated = current.clone();
            for i in 0..STATIONS {
                let prev = centers[i.saturating_sub(1)];
                let nextc = centers[(i + 1).min(STATIONS - 1)];
                let tan = nextc - prev;
                let len = tan.norm();
                if len == 0.0 {
                    continue;
                }
                let tan = tan.scale(1.0 / len);
                let mut normal = Point::new(tan.y, -tan.x);
                if normal.dot(axes[i]) < 0.0 {
                    normal = normal.scale(-1.0);
                }
                // Image distance per canonical row along the perpendicular.
                let row_scale = normal.dot(axes[i]).abs() / 2.0;
                if row_scale <= 0.0 {
                    continue;
                }
                updated.top[i] = centers[i] + normal.scale(half_up[i] * row_scale);
                updated.bottom[i] = centers[i] - normal.scale(half_down[i] * row_scale);
            }
            current = updated;
        }
        last_maps = Some(rect);
    }
    Ok((last_maps.unwrap(), current))
}

/// Weighted cubic least-squares fit of one support edge along the width;
/// returns an evaluator, or `None` when the system is degenerate.
fn fit_edge_curve(
    cols: &[(f64, f64, f64, f64)],
    pick: impl Fn(&(f64, f64, f64, f64)) -> f64,
    width: usize,
) -> Option<impl Fn(f64) -> f64> {
    let degree = 3.min(cols.len() - 1);
    let half = (width - 1) as f64 / 2.0;
    let m = cols.len();
    let mut vand = DMatrix::<f64>::zeros(m, degree + 1);
    let mut rhs = DVector::<f64>::zeros(m);
    for (i, col) in cols.iter().enumerate() {
        let sqrt_w = col.1.sqrt();
        let xn = (col.0 - half) / half.max(1.0);
        let mut pow = 1.0;
        for j in 0..=degree {
            vand[(i, j)] = sqrt_w * pow;
            pow *= xn;
        }
        rhs[i] = sqrt_w * pick(col);
    }
    let svd = vand.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if smax <= 0.0 || svd.singular_values.iter().any(|s| *s < 1e-10 * smax) {
        return None;
    }
    let coeffs = svd.solve(&rhs, 1e-12).ok()?;
    let coeffs: Vec<f64> = coeffs.iter().copied().collect();
    Some(move |x: f64| {
        let xn = (x - half) / half.max(1.0);
        let mut acc = 0.0;
        let mut pow = 1.0;
        for c in &coeffs {
            acc += c * pow;
            pow *= xn;
        }
        acc
    })
}

/// Sub-pixel support interval of one column: the outermost crossings of the
/// cut level, linearly interpolated between rows.
fn column_support(region: &ScoreMap, x: usize, cut: f64) -> Option<(f64, f64)> {
    let h = region.height();
    let mut first = None;
    let mut last = None;
    for y in 0..h {
        if region.get(x, y) >= cut {
            if first.is_none() {
                first = Some(y);
            }
            last = Some(y);
        }
    }
    let (first, last) = (first?, last?);
    let y_min = if first == 0 {
        0.0
    } else {
        let below = region.get(x, first - 1);
        let above = region.get(x, first);
        (first - 1) as f64 + (cut - below) / (above - below)
    };
    let y_max = if last == h - 1 {
        (h - 1) as f64
    } else {
        let inner = region.get(x, last);
        let outer = region.get(x, last + 1);
        last as f64 + (inner - cut) / (inner - outer)
    };
    Some((y_min, y_max))
}

/// Straightness metric of a rectified region map: the spread of the
/// per-column mass centroid, relative to the mean support height. Columns
/// carrying less than a quarter of the strongest column's mass are ignored
/// (inter-character gaps and warp tails have centroids but no signal).
/// Returns `None` when no column carries mass.
pub fn centerline_deviation(region: &ScoreMap) -> Option<f64> {
    let (w, h) = (region.width(), region.height());
    let column = |x: usize| -> (f64, f64, f64) {
        let mut mass = 0.0;
        let mut moment = 0.0;
        let mut peak = 0.0f64;
        for y in 0..h {
            let r = region.get(x, y);
            mass += r;
            moment += r * y as f64;
            peak = peak.max(r);
        }
        (mass, moment, peak)
    };
    let max_mass = (0..w).map(|x| column(x).0).fold(0.0f64, f64::max);
    if max_mass < 1e-6 {
        return None;
    }
    let mut centroids = Vec::new();
    let mut heights = Vec::new();
    for x in 0..w {
        let (mass, moment, peak) = column(x);
        if mass < 0.25 * max_mass {
            continue;
        }
        centroids.push(moment / mass);
        let cut = SUPPORT_RATIO * peak;
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for y in 0..h {
            if region.get(x, y) >= cut {
                y_min = y_min.min(y as f64);
                y_max = y_max.max(y as f64);
            }
        }
        heights.push((y_max - y_min + 1.0).max(1.0));
    }
    if centroids.len() < 2 {
        return None;
    }
    let mean = centroids.iter().sum::<f64>() / centroids.len() as f64;
    let dev = centroids
        .iter()
        .map(|c| (c - mean).abs())
        .fold(0.0f64, f64::max);
    let height = heights.iter().sum::<f64>() / heights.len() as f64;
    Some(dev / height)
}

/// Least-squares polynomial `y(x)` fit of degree `degree` in the
/// box-aligned frame, applied separately to the top and bottom stations;
/// returns the polygon resampled on the fitted curves.
pub fn smooth_polygon(cps: &ControlPointSet, degree: usize) -> Result<TextPolygon, RectifyError> {
    assert!((1..STATIONS).contains(&degree), "degree out of range");
    let centers = cps.centers();
    let n = centers.len() as f64;
    let mut mean = Point::new(0.0, 0.0);
    for c in &centers {
        mean = mean + *c;
    }
    let mean = mean.scale(1.0 / n);
    // Principal direction of the pair centers defines the frame's x axis.
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for c in &centers {
        let d = *c - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let phi = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let u = Point::new(phi.cos(), phi.sin());
    let v = Point::new(-phi.sin(), phi.cos());
    let to_frame = |p: Point| {
        let d = p - mean;
        Point::new(d.dot(u), d.dot(v))
    };
    let from_frame = |p: Point| mean + u.scale(p.x) + v.scale(p.y);

    let fit_curve = |pts: &[Point]| -> Result<Vec<Point>, RectifyError> {
        let local: Vec<Point> = pts.iter().map(|p| to_frame(*p)).collect();
        let min_x = local.iter().fold(f64::INFINITY, |a, p| a.min(p.x));
        let max_x = local.iter().fold(f64::NEG_INFINITY, |a, p| a.max(p.x));
        let span = max_x - min_x;
        if span.is_nan() || span <= 1e-9 {
            return Err(RectifyError::IllConditioned);
        }
        // Scale x into [-1, 1] to keep the Vandermonde columns comparable.
        let half = (max_x - min_x) / 2.0;
        let mid = (min_x + max_x) / 2.0;
        let m = local.len();
        let mut vand = DMatrix::<f64>::zeros(m, degree + 1);
        let mut rhs = DVector::<f64>::zeros(m);
        for (i, p) in local.iter().enumerate() {
            let xn = (p.x - mid) / half;
            let mut pow = 1.0;
            for j in 0..=degree {
                vand[(i, j)] = pow;
                pow *= xn;
            }
            rhs[i] = p.y;
        }
        let svd = vand.svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        if svd
            .singular_values
            .iter()
            .any(|s| *s < 1e-10 * smax.max(1.0))
        {
            return Err(RectifyError::IllConditioned);
        }
        let coeffs = svd
            .solve(&rhs, 1e-12)
            .map_err(|_| RectifyError::IllConditioned)?;
        let eval = |x: f64| -> f64 {
            let xn = (x - mid) / half;
            let mut acc = 0.0;
            let mut pow = 1.0;
            for j in 0..=degree {
                acc += coeffs[j] * pow;
                pow *= xn;
            }
            acc
        };
        Ok((0..STATIONS)
            .map(|i| {
                let x = min_x + (max_x - min_x) * i as f64 / (STATIONS - 1) as f64;
                from_frame(Point::new(x, eval(x)))
            })
            .collect())
    };

    let top = fit_curve(&cps.top)?;
    let bottom = fit_curve(&cps.bottom)?;
    Ok(TextPolygon { top, bottom })
}
