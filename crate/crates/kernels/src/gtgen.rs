//! Ground-truth detector maps from character-level annotations: warped
//! region Gaussians, center-line link strokes, orientation channels, and the
//! variable-width polyline ground truth for link refinement.

use crate::geometry::{convex_hull, quad_homography, Point, Quad, TextPolygon};
use crate::rastermap::ScoreMap;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Annotation validation errors.
#[derive(Debug, Error)]
pub enum AnnotationError {
    /// A character's stored angle disagrees with its quad geometry.
    #[error("character angle {theta} inconsistent with quad baseline {derived}")]
    InconsistentAngle { theta: f64, derived: f64 },
    /// A character quad is degenerate or wrongly wound.
    #[error("invalid character quad")]
    InvalidQuad,
    /// A word carries no characters.
    #[error("word {0:?} has no characters")]
    EmptyWord(String),
}

fn wrap_pi(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// A character box: quadrilateral plus the upward angle of the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharBox {
    pub quad: Quad,
    pub theta: f64,
}

impl CharBox {
    /// Builds a character box, requiring `theta` to agree with the quad's
    /// baseline direction within 1e-6.
    pub fn new(quad: Quad, theta: f64) -> Result<Self, AnnotationError> {
        let derived = quad.baseline_angle();
        if wrap_pi(theta - derived).abs() > 1e-6 {
            return Err(AnnotationError::InconsistentAngle { theta, derived });
        }
        Ok(CharBox { quad, theta })
    }

    /// Builds a character box with the angle derived from the quad.
    pub fn from_quad(quad: Quad) -> Self {
        let theta = quad.baseline_angle();
        CharBox { quad, theta }
    }

    pub fn center(&self) -> Point {
        self.quad.center()
    }
}

/// A word: transcription, ordered characters, optional curved boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordAnnotation {
    pub transcription: String,
    pub chars: Vec<CharBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polygon: Option<TextPolygon>,
}

impl WordAnnotation {
    /// Convex hull of all character corners.
    pub fn hull(&self) -> Vec<Point> {
        let corners: Vec<Point> = self
            .chars
            .iter()
            .flat_map(|c| c.quad.corners.iter().copied())
            .collect();
        convex_hull(&corners)
    }

    /// Circular mean of the character angles.
    pub fn mean_angle(&self) -> f64 {
        let (mut s, mut c) = (0.0, 0.0);
        for ch in &self.chars {
            s += ch.theta.sin();
            c += ch.theta.cos();
        }
        s.atan2(c)
    }
}

/// Four-channel detector output: region, link, and the two orientation
/// encodings. All channels share dimensions and live in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorMaps {
    pub region: ScoreMap,
    pub link: ScoreMap,
    pub sin: ScoreMap,
    pub cos: ScoreMap,
}

impl DetectorMaps {
    pub fn new(region: ScoreMap, link: ScoreMap, sin: ScoreMap, cos: ScoreMap) -> Self {
        assert!(
            region.same_shape(&link) && region.same_shape(&sin) && region.same_shape(&cos),
            "detector channels must share dimensions"
        );
        DetectorMaps {
            region,
            link,
            sin,
            cos,
        }
    }

    pub fn width(&self) -> usize {
        self.region.width()
    }

    pub fn height(&self) -> usize {
        self.region.height()
    }

    /// Channel order used by the CRMAP1 bundle: region, link, sin, cos.
    pub fn channels(&self) -> [&ScoreMap; 4] {
        [&self.region, &self.link, &self.sin, &self.cos]
    }

    /// Rebuilds from a 4-channel bundle in the order of [`Self::channels`].
    pub fn from_channels(mut maps: Vec<ScoreMap>) -> Option<Self> {
        if maps.len() != 4 {
            return None;
        }
        let cos = maps.pop().unwrap();
        let sin = maps.pop().unwrap();
        let link = maps.pop().unwrap();
        let region = maps.pop().unwrap();
        if !(region.same_shape(&link) && region.same_shape(&sin) && region.same_shape(&cos)) {
            return None;
        }
        Some(DetectorMaps {
            region,
            link,
            sin,
            cos,
        })
    }
}

/// Ground-truth generation knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtConfig {
    /// Link thickness scaling coefficient.
    pub alpha: f64,
    /// Peak value of the per-character region Gaussian.
    pub gaussian_peak: f64,
    /// Gaussian radius as a fraction of the unit square; sigma is half this,
    /// so the default 0.5 puts ~0.135 at the edge midpoints of the box.
    pub gaussian_radius_ratio: f64,
}

impl Default for GtConfig {
    fn default() -> Self {
        GtConfig {
            alpha: 0.1,
            gaussian_peak: 1.0,
            gaussian_radius_ratio: 0.5,
        }
    }
}

/// Full annotation for one image; the on-disk JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub width: usize,
    pub height: usize,
    pub words: Vec<WordAnnotation>,
}

impl Annotation {
    /// Checks the structural invariants of every word and character.
    pub fn validate(&self) -> Result<(), AnnotationError> {
        for word in &self.words {
            if word.chars.is_empty() {
                return Err(AnnotationError::EmptyWord(word.transcription.clone()));
            }
            for ch in &word.chars {
                if !ch.quad.is_simple_clockwise() {
                    return Err(AnnotationError::InvalidQuad);
                }
                CharBox::new(ch.quad, ch.theta)?;
            }
        }
        Ok(())
    }

    /// Renders all four ground-truth channels.
    pub fn render(&self, cfg: &GtConfig) -> DetectorMaps {
        let chars: Vec<CharBox> = self.words.iter().flat_map(|w| w.chars.clone()).collect();
        let region = region_gt(&chars, self.width, self.height, cfg);
        let link = link_gt(&self.words, self.width, self.height, cfg);
        let (sin, cos) = orientation_gt(&self.words, self.width, self.height);
        DetectorMaps::new(region, link, sin, cos)
    }
}

/// Region ground truth: an isotropic Gaussian on the unit square, warped by
/// the unit-square-to-quad homography per character and max-composited.
/// Off-image parts are clipped; degenerate quads contribute nothing.
pub fn region_gt(chars: &[CharBox], width: usize, height: usize, cfg: &GtConfig) -> ScoreMap {
    let mut map = ScoreMap::zeros(width, height);
    let sigma = cfg.gaussian_radius_ratio / 2.0;
    let inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    let unit = Quad::unit_square();
    for ch in chars {
        let Ok(h) = quad_homography(&unit, &ch.quad) else {
            continue;
        };
        let Ok(inv) = h.inverse() else { continue };
        let corners = &ch.quad.corners;
        let min_x = corners.iter().fold(f64::INFINITY, |a, p| a.min(p.x));
        let max_x = corners.iter().fold(f64::NEG_INFINITY, |a, p| a.max(p.x));
        let min_y = corners.iter().fold(f64::INFINITY, |a, p| a.min(p.y));
        let max_y = corners.iter().fold(f64::NEG_INFINITY, |a, p| a.max(p.y));
        let x0 = min_x.floor().max(0.0) as usize;
        let x1 = max_x.ceil().min((width - 1) as f64) as usize;
        let y0 = min_y.floor().max(0.0) as usize;
        let y1 = max_y.ceil().min((height - 1) as f64) as usize;
        if min_x > (width - 1) as f64 || min_y > (height - 1) as f64 || max_x < 0.0 || max_y < 0.0 {
            continue;
        }
        for y in y0..=y1 {
            for x in x0..=x1 {
                let uv = inv.apply(Point::new(x as f64, y as f64));
                // Tolerate roundoff for pixels exactly on the quad boundary.
                const EDGE_EPS: f64 = 1e-9;
                if !(-EDGE_EPS..=1.0 + EDGE_EPS).contains(&uv.x)
                    || !(-EDGE_EPS..=1.0 + EDGE_EPS).contains(&uv.y)
                {
                    continue;
                }
                let du = uv.x.clamp(0.0, 1.0) - 0.5;
                let dv = uv.y.clamp(0.0, 1.0) - 0.5;
                let g = cfg.gaussian_peak * (-(du * du + dv * dv) * inv_two_sigma2).exp();
                let cur = map.get(x, y);
                if g > cur {
                    map.set(x, y, g.clamp(0.0, 1.0));
                }
            }
        }
    }
    map
}

/// Link stroke thickness between two characters with diagonal lengths `d1`
/// and `d2`: `max((d1 + d2) / 2 * alpha, 1)`.
#[inline]
pub fn link_thickness(d1: f64, d2: f64, alpha: f64) -> f64 {
    ((d1 + d2) / 2.0 * alpha).max(1.0)
}

/// Link ground truth: a center-line segment of value 1 between each pair of
/// adjacent characters within a word. Single-character words contribute
/// nothing, and no links cross word boundaries.
pub fn link_gt(words: &[WordAnnotation], width: usize, height: usize, cfg: &GtConfig) -> ScoreMap {
    let mut map = ScoreMap::zeros(width, height);
    for word in words {
        for pair in word.chars.windows(2) {
            let t = link_thickness(pair[0].quad.diagonal(), pair[1].quad.diagonal(), cfg.alpha);
            map.stroke_segment(pair[0].center(), pair[1].center(), t, 1.0);
        }
    }
    map
}

#[inline]
fn encode_angle(theta: f64) -> (f64, f64) {
    ((theta.sin() + 1.0) * 0.5, (theta.cos() + 1.0) * 0.5)
}

fn point_in_hull(hull: &[Point], p: Point) -> bool {
    let n = hull.len();
    if n < 3 {
        return false;
    }
    (0..n).all(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        (b - a).cross(p - a) >= 0.0
    })
}

/// Orientation ground truth. Inside each character quad the channels hold
/// that character's angle encoding `(sin theta + 1)/2`, `(cos theta + 1)/2`;
/// word-hull pixels outside every quad take the word's mean angle; everything
/// else stays at the neutral 0.5 (angle undefined, loss-neutral since the
/// region weight vanishes there).
pub fn orientation_gt(
    words: &[WordAnnotation],
    width: usize,
    height: usize,
) -> (ScoreMap, ScoreMap) {
    let mut sin_map = ScoreMap::filled(width, height, 0.5);
    let mut cos_map = ScoreMap::filled(width, height, 0.5);
    for word in words {
        if word.chars.is_empty() {
            continue;
        }
        let hull = word.hull();
        if hull.len() < 3 {
            continue;
        }
        let mean = encode_angle(word.mean_angle());
        let per_char: Vec<(f64, f64)> = word.chars.iter().map(|c| encode_angle(c.theta)).collect();
        let min_x = hull.iter().fold(f64::INFINITY, |a, p| a.min(p.x));
        let max_x = hull.iter().fold(f64::NEG_INFINITY, |a, p| a.max(p.x));
        let min_y = hull.iter().fold(f64::INFINITY, |a, p| a.min(p.y));
        let max_y = hull.iter().fold(f64::NEG_INFINITY, |a, p| a.max(p.y));
        if min_x > (width - 1) as f64 || min_y > (height - 1) as f64 || max_x < 0.0 || max_y < 0.0 {
            continue;
        }
        let x0 = min_x.floor().max(0.0) as usize;
        let x1 = max_x.ceil().min((width - 1) as f64) as usize;
        let y0 = min_y.floor().max(0.0) as usize;
        let y1 = max_y.ceil().min((height - 1) as f64) as usize;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let p = Point::new(x as f64, y as f64);
                if !point_in_hull(&hull, p) {
                    continue;
                }
                let enc = word
                    .chars
                    .iter()
                    .position(|c| c.quad.contains(p))
                    .map_or(mean, |i| per_char[i]);
                sin_map.set(x, y, enc.0);
                cos_map.set(x, y, enc.1);
            }
        }
    }
    (sin_map, cos_map)
}

/// Link-refinement ground truth from polygon annotations: consecutive
/// pair-center segments with thickness proportional to the local pair
/// heights, `max(beta * (h_i + h_{i+1}) / 2, 1)`.
pub fn linkrefiner_gt(
    polygons: &[TextPolygon],
    width: usize,
    height: usize,
    beta: f64,
) -> ScoreMap {
    let mut map = ScoreMap::zeros(width, height);
    for poly in polygons {
        let centers = poly.pair_centers();
        let heights = poly.pair_heights();
        for i in 0..centers.len().saturating_sub(1) {
            let t = (beta * (heights[i] + heights[i + 1]) / 2.0).max(1.0);
            map.stroke_segment(centers[i], centers[i + 1], t, 1.0);
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn square_quad(cx: f64, cy: f64, side: f64) -> Quad {
        let h = side / 2.0;
        Quad::new([
            Point::new(cx - h, cy - h),
            Point::new(cx + h, cy - h),
            Point::new(cx + h, cy + h),
            Point::new(cx - h, cy + h),
        ])
        .unwrap()
    }

    fn rotated_quad(cx: f64, cy: f64, side: f64, theta: f64) -> Quad {
        let u = Point::new(theta.cos(), theta.sin()).scale(side / 2.0);
        let v = Point::new(-theta.sin(), theta.cos()).scale(side / 2.0);
        let c = Point::new(cx, cy);
        Quad::new([c - u - v, c + u - v, c + u + v, c - u + v]).unwrap()
    }

    fn one_word(chars: Vec<CharBox>) -> WordAnnotation {
        WordAnnotation {
            transcription: "x".repeat(chars.len()),
            chars,
            polygon: None,
        }
    }

    #[test]
    fn charbox_angle_consistency_is_enforced() {
        let q = square_quad(10.0, 10.0, 8.0);
        assert!(CharBox::new(q, 0.0).is_ok());
        assert!(matches!(
            CharBox::new(q, 0.3),
            Err(AnnotationError::InconsistentAngle { .. })
        ));
        let r = rotated_quad(10.0, 10.0, 8.0, 0.7);
        assert!(CharBox::new(r, 0.7).is_ok());
        assert_relative_eq!(CharBox::from_quad(r).theta, 0.7, epsilon = 1e-9);
    }

    #[test]
    fn region_single_square_peaks_at_center() {
        let chars = vec![CharBox::from_quad(square_quad(20.0, 20.0, 16.0))];
        let map = region_gt(&chars, 40, 40, &GtConfig::default());
        let mut best = (0, 0, f64::NEG_INFINITY);
        for y in 0..40 {
            for x in 0..40 {
                if map.get(x, y) > best.2 {
                    best = (x, y, map.get(x, y));
                }
            }
        }
        assert_eq!((best.0, best.1), (20, 20));
        assert_relative_eq!(best.2, 1.0, epsilon = 1e-12);
        // Value at the quad edge midpoint is exp(-2) with the default sigma.
        assert_relative_eq!(map.get(28, 20), (-2.0f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn region_no_chars_is_all_zero() {
        let map = region_gt(&[], 16, 16, &GtConfig::default());
        assert!(map.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn region_overlap_matches_per_pixel_oracle() {
        // Axis-aligned quads so the oracle can evaluate the warped Gaussians
        // in closed form, independent of the homography code.
        let q1 = square_quad(14.0, 16.0, 12.0);
        let q2 = square_quad(20.0, 16.0, 16.0);
        let chars = vec![CharBox::from_quad(q1), CharBox::from_quad(q2)];
        let cfg = GtConfig::default();
        let map = region_gt(&chars, 40, 32, &cfg);
        let sigma = cfg.gaussian_radius_ratio / 2.0;
        let eval = |cx: f64, cy: f64, side: f64, x: f64, y: f64| -> f64 {
            let u = (x - (cx - side / 2.0)) / side;
            let v = (y - (cy - side / 2.0)) / side;
            if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
                return 0.0;
            }
            (-((u - 0.5).powi(2) + (v - 0.5).powi(2)) / (2.0 * sigma * sigma)).exp()
        };
        for y in 0..32 {
            for x in 0..40 {
                let a = eval(14.0, 16.0, 12.0, x as f64, y as f64);
                let b = eval(20.0, 16.0, 16.0, x as f64, y as f64);
                assert_relative_eq!(map.get(x, y), a.max(b), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn link_thickness_formula_cases() {
        assert_eq!(link_thickness(20.0, 20.0, 0.1), 2.0);
        assert_eq!(link_thickness(4.0, 4.0, 0.1), 1.0);
    }

    #[test]
    fn separate_single_char_words_draw_no_links() {
        let words = vec![
            one_word(vec![CharBox::from_quad(square_quad(8.0, 8.0, 6.0))]),
            one_word(vec![CharBox::from_quad(square_quad(24.0, 8.0, 6.0))]),
        ];
        let map = link_gt(&words, 32, 16, &GtConfig::default());
        assert!(map.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn link_painted_between_adjacent_centers() {
        let words = vec![one_word(vec![
            CharBox::from_quad(square_quad(10.0, 10.0, 10.0)),
            CharBox::from_quad(square_quad(22.0, 10.0, 10.0)),
        ])];
        let map = link_gt(&words, 32, 20, &GtConfig::default());
        assert_eq!(map.get(16, 10), 1.0);
        assert_eq!(map.get(16, 16), 0.0);
    }

    #[test]
    fn orientation_encoding_examples() {
        let mk = |theta: f64| {
            vec![one_word(vec![CharBox::from_quad(rotated_quad(
                16.0, 16.0, 12.0, theta,
            ))])]
        };
        let (s, c) = orientation_gt(&mk(0.0), 32, 32);
        assert_relative_eq!(c.get(16, 16), 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.get(16, 16), 0.5, epsilon = 1e-12);
        let (s, c) = orientation_gt(&mk(FRAC_PI_2), 32, 32);
        assert_relative_eq!(c.get(16, 16), 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.get(16, 16), 1.0, epsilon = 1e-12);
        let (s, c) = orientation_gt(&mk(FRAC_PI_2 / 2.0), 32, 32);
        let expect = (0.5f64.sqrt() + 1.0) / 2.0;
        assert_relative_eq!(c.get(16, 16), expect, epsilon = 1e-12);
        assert_relative_eq!(s.get(16, 16), expect, epsilon = 1e-12);
        // Background stays at the neutral value.
        assert_eq!(s.get(1, 1), 0.5);
        assert_eq!(c.get(1, 1), 0.5);
    }

    #[test]
    fn orientation_channels_lie_on_unit_circle_where_filled() {
        let words = vec![one_word(vec![
            CharBox::from_quad(rotated_quad(12.0, 16.0, 10.0, 0.4)),
            CharBox::from_quad(rotated_quad(24.0, 20.0, 10.0, 0.6)),
        ])];
        let (s, c) = orientation_gt(&words, 40, 40);
        for i in 0..s.len() {
            let sv = s.data()[i];
            let cv = c.data()[i];
            if sv == 0.5 && cv == 0.5 {
                continue;
            }
            let r = (2.0 * cv - 1.0).powi(2) + (2.0 * sv - 1.0).powi(2);
            assert_relative_eq!(r, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn linkrefiner_matches_polyline_distance_oracle() {
        let poly = TextPolygon::new(
            vec![
                Point::new(6.0, 4.0),
                Point::new(16.0, 4.0),
                Point::new(26.0, 8.0),
            ],
            vec![
                Point::new(6.0, 14.0),
                Point::new(16.0, 14.0),
                Point::new(26.0, 18.0),
            ],
        )
        .unwrap();
        let beta = 0.3;
        let map = linkrefiner_gt(std::slice::from_ref(&poly), 32, 24, beta);
        let centers = poly.pair_centers();
        let heights = poly.pair_heights();
        for y in 0..24 {
            for x in 0..32 {
                let p = Point::new(x as f64, y as f64);
                let mut painted = false;
                for i in 0..centers.len() - 1 {
                    let t = (beta * (heights[i] + heights[i + 1]) / 2.0).max(1.0);
                    let seg = centers[i + 1] - centers[i];
                    let s = ((p - centers[i]).dot(seg) / seg.dot(seg)).clamp(0.0, 1.0);
                    if p.distance(centers[i] + seg.scale(s)) <= t / 2.0 {
                        painted = true;
                    }
                }
                assert_eq!(map.get(x, y) > 0.0, painted, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn linkrefiner_k2_thickness_and_degenerate_disc() {
        // Pair heights 10 and 10 with beta 0.3: one segment of thickness 3.
        let poly = TextPolygon::new(
            vec![Point::new(8.0, 5.0), Point::new(24.0, 5.0)],
            vec![Point::new(8.0, 15.0), Point::new(24.0, 15.0)],
        )
        .unwrap();
        let map = linkrefiner_gt(&[poly], 32, 20, 0.3);
        assert_eq!(map.get(16, 10), 1.0);
        assert_eq!(map.get(16, 11), 1.0); // within 1.5 of the center line
        assert_eq!(map.get(16, 12), 0.0); // outside thickness 3
                                          // All control points coincident: a disc of diameter 1 (clamp).
        let dot = TextPolygon::new(
            vec![Point::new(10.0, 10.0); 2],
            vec![Point::new(10.0, 10.0); 2],
        )
        .unwrap();
        let map = linkrefiner_gt(&[dot], 20, 20, 0.3);
        assert_eq!(map.data().iter().filter(|v| **v > 0.0).count(), 1);
        assert_eq!(map.get(10, 10), 1.0);
    }

    #[test]
    fn render_produces_values_in_unit_range() {
        let ann = Annotation {
            width: 48,
            height: 32,
            words: vec![one_word(vec![
                CharBox::from_quad(square_quad(12.0, 16.0, 10.0)),
                CharBox::from_quad(square_quad(24.0, 16.0, 10.0)),
            ])],
        };
        ann.validate().unwrap();
        let maps = ann.render(&GtConfig::default());
        for ch in maps.channels() {
            assert!(ch.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn annotation_json_schema_round_trip() {
        let ann = Annotation {
            width: 64,
            height: 32,
            words: vec![WordAnnotation {
                transcription: "ab".into(),
                chars: vec![
                    CharBox::from_quad(square_quad(10.0, 16.0, 8.0)),
                    CharBox::from_quad(square_quad(20.0, 16.0, 8.0)),
                ],
                polygon: Some(
                    TextPolygon::new(
                        vec![Point::new(6.0, 12.0), Point::new(24.0, 12.0)],
                        vec![Point::new(6.0, 20.0), Point::new(24.0, 20.0)],
                    )
                    .unwrap(),
                ),
            }],
        };
        let json = serde_json::to_string(&ann).unwrap();
        assert!(json.starts_with(r#"{"width":64,"height":32,"words":"#));
        assert!(json.contains(r#""quad":[[6.0,12.0]"#) || json.contains(r#""transcription":"ab""#));
        let back: Annotation = serde_json::from_str(&json).unwrap();
        assert_eq!(ann, back);
    }

    proptest! {
        #[test]
        fn thickness_scales_linearly_above_clamp(
            d1 in 5.0f64..200.0,
            d2 in 5.0f64..200.0,
            alpha in 0.05f64..0.5,
        ) {
            prop_assume!((d1 + d2) / 2.0 * alpha >= 1.0);
            let t = link_thickness(d1, d2, alpha);
            let t2 = link_thickness(2.0 * d1, 2.0 * d2, alpha);
            prop_assert!((t2 - 2.0 * t).abs() < 1e-12);
        }

        #[test]
        fn region_argmax_near_centroid(cx in 14.0f64..18.0, cy in 14.0f64..18.0, theta in -1.0f64..1.0) {
            let chars = vec![CharBox::from_quad(rotated_quad(cx, cy, 11.0, theta))];
            let map = region_gt(&chars, 32, 32, &GtConfig::default());
            let mut best = (0usize, 0usize, f64::NEG_INFINITY);
            for y in 0..32 {
                for x in 0..32 {
                    if map.get(x, y) > best.2 {
                        best = (x, y, map.get(x, y));
                    }
                }
            }
            let c = Point::new(cx, cy);
            prop_assert!(Point::new(best.0 as f64, best.1 as f64).distance(c) <= 1.0 + 1e-9);
        }
    }
}
