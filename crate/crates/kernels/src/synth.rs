//! Deterministic synthetic-scene generator: annotations plus perfect
//! detector maps, so the whole pipeline runs round-trip with no network.
//!
//! All randomness flows through [`SplitMix64`], a counter-based generator
//! fully specified here so other-language reimplementations reproduce the
//! exact same scenes from the same seed.

use crate::geometry::{Point, Quad, TextPolygon};
use crate::gtgen::{Annotation, CharBox, DetectorMaps, GtConfig, WordAnnotation};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Scene generation errors.
#[derive(Debug, Error)]
pub enum SynthError {
    /// Rejection sampling could not place a word after 1000 attempts.
    #[error("placement failure: could not place word {word_index} in 1000 attempts")]
    PlacementFailure { word_index: usize },
}

/// SplitMix64: `state += 0x9E3779B97F4A7C15` per draw, output finalized with
/// `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
/// z *= 0x94D049BB133111EB; z ^= z >> 31` (wrapping arithmetic).
///
/// `next_f64` takes the top 53 bits over 2^53, giving uniforms in `[0, 1)`.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform in `0..n`.
    pub fn next_usize(&mut self, n: usize) -> usize {
        assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box-Muller (one draw pair per sample).
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_f64().max(1e-300);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

/// Word layout families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Horizontal,
    Rotated { min_theta: f64, max_theta: f64 },
    Arc { min_radius: f64, max_radius: f64 },
}

/// Scene generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub n_words: usize,
    /// Characters per word, inclusive range.
    pub word_len: (usize, usize),
    /// Character side length range `[min, max)`.
    pub char_size: (f64, f64),
    pub layouts: Vec<Layout>,
    pub seed: u64,
    /// Additive truncated Gaussian noise applied to the rendered maps.
    pub noise_sigma: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            width: 384,
            height: 288,
            n_words: 4,
            word_len: (2, 5),
            char_size: (12.0, 20.0),
            layouts: vec![
                Layout::Horizontal,
                Layout::Rotated {
                    min_theta: -1.0,
                    max_theta: 1.0,
                },
                Layout::Arc {
                    min_radius: 45.0,
                    max_radius: 110.0,
                },
            ],
            seed: 0,
            noise_sigma: 0.0,
        }
    }
}

/// A generated scene: the config echo, the word annotations, and the
/// rendered detector maps (exactly the ground-truth render when
/// `noise_sigma` is zero).
#[derive(Debug, Clone)]
pub struct Scene {
    pub config: SceneConfig,
    pub words: Vec<WordAnnotation>,
    pub maps: DetectorMaps,
}

impl Scene {
    /// The scene as an annotation document (the on-disk JSON schema).
    pub fn annotation(&self) -> Annotation {
        Annotation {
            width: self.config.width,
            height: self.config.height,
            words: self.words.clone(),
        }
    }
}

const CHARSET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
const PLACEMENT_ATTEMPTS: usize = 1000;

fn rotated_square(center: Point, side: f64, theta: f64) -> Quad {
    let u = Point::new(theta.cos(), theta.sin()).scale(side / 2.0);
    let v = Point::new(-theta.sin(), theta.cos()).scale(side / 2.0);
    Quad {
        corners: [
            center - u - v,
            center + u - v,
            center + u + v,
            center - u + v,
        ],
    }
}

struct WordGeometry {
    chars: Vec<CharBox>,
    polygon: TextPolygon,
}

/// Lays out `n` characters of side `side` for the chosen layout, centered
/// near the origin; the caller translates the result into place.
fn layout_word(layout: Layout, n: usize, side: f64, rng: &mut SplitMix64) -> WordGeometry {
    let advance = side * 1.25;
    match layout {
        Layout::Horizontal => straight_word(n, side, 0.0),
        Layout::Rotated {
            min_theta,
            max_theta,
        } => {
            let theta = rng.next_range(min_theta, max_theta);
            straight_word(n, side, theta)
        }
        Layout::Arc {
            min_radius,
            max_radius,
        } => {
            let radius = rng.next_range(min_radius.max(advance), max_radius.max(advance * 2.0));
            let dpsi = advance / radius;
            let chars: Vec<CharBox> = (0..n)
                .map(|i| {
                    let psi = -FRAC_PI_2 + (i as f64 - (n as f64 - 1.0) / 2.0) * dpsi;
                    let pos = Point::new(radius * psi.cos(), radius * psi.sin());
                    // Tangent of the counter-clockwise parameterization.
                    let theta = psi + FRAC_PI_2;
                    CharBox {
                        quad: rotated_square(pos, side, theta),
                        theta,
                    }
                })
                .collect();
            let half_span = (n as f64 - 1.0) / 2.0 * dpsi + (side / 2.0) / radius;
            let station = |i: usize, r: f64| {
                let t = i as f64 / 9.0;
                let psi = -FRAC_PI_2 - half_span + 2.0 * half_span * t;
                Point::new(r * psi.cos(), r * psi.sin())
            };
            let top = (0..10).map(|i| station(i, radius + side / 2.0)).collect();
            let bottom = (0..10).map(|i| station(i, radius - side / 2.0)).collect();
            WordGeometry {
                chars,
                polygon: TextPolygon { top, bottom },
            }
        }
    }
}

fn straight_word(n: usize, side: f64, theta: f64) -> WordGeometry {
    let advance = side * 1.25;
    let dir = Point::new(theta.cos(), theta.sin());
    let up = Point::new(theta.sin(), -theta.cos()).scale(side / 2.0);
    let start = -(n as f64 - 1.0) / 2.0 * advance;
    let chars: Vec<CharBox> = (0..n)
        .map(|i| {
            let pos = dir.scale(start + i as f64 * advance);
            CharBox {
                quad: rotated_square(pos, side, theta),
                theta,
            }
        })
        .collect();
    let half_w = (n as f64 - 1.0) / 2.0 * advance + side / 2.0;
    let station = |i: usize, sign: f64| {
        let t = i as f64 / 9.0;
        dir.scale(-half_w + 2.0 * half_w * t) + up.scale(sign)
    };
    let top = (0..10).map(|i| station(i, 1.0)).collect();
    let bottom = (0..10).map(|i| station(i, -1.0)).collect();
    WordGeometry {
        chars,
        polygon: TextPolygon { top, bottom },
    }
}

fn translate_word(geometry: &WordGeometry, offset: Point) -> WordGeometry {
    let chars = geometry
        .chars
        .iter()
        .map(|c| CharBox {
            quad: Quad {
                corners: [
                    c.quad.corners[0] + offset,
                    c.quad.corners[1] + offset,
                    c.quad.corners[2] + offset,
                    c.quad.corners[3] + offset,
                ],
            },
            theta: c.theta,
        })
        .collect();
    let shift = |pts: &[Point]| pts.iter().map(|p| *p + offset).collect();
    WordGeometry {
        chars,
        polygon: TextPolygon {
            top: shift(&geometry.polygon.top),
            bottom: shift(&geometry.polygon.bottom),
        },
    }
}

fn word_aabb(geometry: &WordGeometry) -> (f64, f64, f64, f64) {
    let mut pts: Vec<Point> = geometry
        .chars
        .iter()
        .flat_map(|c| c.quad.corners.iter().copied())
        .collect();
    pts.extend(geometry.polygon.top.iter().copied());
    pts.extend(geometry.polygon.bottom.iter().copied());
    let min_x = pts.iter().fold(f64::INFINITY, |a, p| a.min(p.x));
    let max_x = pts.iter().fold(f64::NEG_INFINITY, |a, p| a.max(p.x));
    let min_y = pts.iter().fold(f64::INFINITY, |a, p| a.min(p.y));
    let max_y = pts.iter().fold(f64::NEG_INFINITY, |a, p| a.max(p.y));
    (min_x, min_y, max_x, max_y)
}

fn aabbs_overlap(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64), gap: f64) -> bool {
    a.0 - gap < b.2 && b.0 - gap < a.2 && a.1 - gap < b.3 && b.1 - gap < a.3
}

/// Generates a deterministic scene: word transcriptions over `[a-z0-9]`,
/// layouts drawn from the configured set, placement by rejection sampling
/// with an inter-word gap of at least twice the maximum link thickness, and
/// maps rendered by the ground-truth generators plus optional clamped
/// Gaussian noise.
pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene, SynthError> {
    assert!(
        cfg.width > 0 && cfg.height > 0,
        "scene dims must be positive"
    );
    assert!(
        cfg.char_size.0 > 0.0 && cfg.char_size.1 >= cfg.char_size.0,
        "char size range must be nonempty"
    );
    assert!(!cfg.layouts.is_empty(), "need at least one layout");
    assert!(cfg.noise_sigma >= 0.0, "noise sigma must be nonnegative");
    assert!(
        cfg.word_len.0 >= 1 && cfg.word_len.1 >= cfg.word_len.0,
        "word length range must be nonempty"
    );
    let mut rng = SplitMix64::new(cfg.seed);
    let gt_cfg = GtConfig::default();
    // Inter-word separation: twice the largest possible link thickness,
    // plus a pixel so thresholded supports can never 8-connect.
    let max_diag = cfg.char_size.1 * std::f64::consts::SQRT_2;
    let gap = 2.0 * (gt_cfg.alpha * max_diag).max(1.0) + 2.0;

    let mut words: Vec<WordAnnotation> = Vec::new();
    let mut placed: Vec<(f64, f64, f64, f64)> = Vec::new();
    for word_index in 0..cfg.n_words {
        let n = cfg.word_len.0 + rng.next_usize(cfg.word_len.1 - cfg.word_len.0 + 1);
        let transcription: String = (0..n)
            .map(|_| CHARSET[rng.next_usize(CHARSET.len())] as char)
            .collect();
        let side = rng.next_range(cfg.char_size.0, cfg.char_size.1);
        let layout = cfg.layouts[rng.next_usize(cfg.layouts.len())];
        let base = layout_word(layout, n, side, &mut rng);
        // Sample offsets over the range that keeps the word in frame; an
        // empty range means the word cannot fit at all.
        let base_aabb = word_aabb(&base);
        let lo_x = 2.0 - base_aabb.0;
        let hi_x = cfg.width as f64 - 3.0 - base_aabb.2;
        let lo_y = 2.0 - base_aabb.1;
        let hi_y = cfg.height as f64 - 3.0 - base_aabb.3;
        if !(hi_x > lo_x && hi_y > lo_y) {
            return Err(SynthError::PlacementFailure { word_index });
        }
        let mut ok = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let cx = rng.next_range(lo_x, hi_x);
            let cy = rng.next_range(lo_y, hi_y);
            let candidate = translate_word(&base, Point::new(cx, cy));
            let aabb = word_aabb(&candidate);
            if placed.iter().all(|p| !aabbs_overlap(*p, aabb, gap)) {
                ok = Some((candidate, aabb));
                break;
            }
        }
        let (geometry, aabb) = ok.ok_or(SynthError::PlacementFailure { word_index })?;
        placed.push(aabb);
        words.push(WordAnnotation {
            transcription,
            chars: geometry.chars,
            polygon: Some(geometry.polygon),
        });
    }

    let annotation = Annotation {
        width: cfg.width,
        height: cfg.height,
        words: words.clone(),
    };
    let mut maps = annotation.render(&gt_cfg);
    if cfg.noise_sigma > 0.0 {
        for channel in [
            &mut maps.region,
            &mut maps.link,
            &mut maps.sin,
            &mut maps.cos,
        ] {
            for v in channel.data_mut() {
                *v = (*v + cfg.noise_sigma * rng.next_gaussian()).clamp(0.0, 1.0);
            }
        }
    }
    Ok(Scene {
        config: cfg.clone(),
        words,
        maps,
    })
}

/// Ground-truth character counts per word (the transcription lengths).
pub fn character_count_oracle(scene: &Scene) -> Vec<usize> {
    scene
        .words
        .iter()
        .map(|w| w.transcription.chars().count())
        .collect()
}
