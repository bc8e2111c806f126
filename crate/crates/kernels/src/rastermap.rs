//! 2D real-valued score-map grid: bilinear sampling, thick-segment drawing,
//! and the bit-exact CRMAP1 file format.
//!
//! Pixel `(i, j)` has its center at real coordinates `(i, j)` exactly; the
//! same convention is used by every geometry consumer. Maps are immutable in
//! spirit: drawing operations return a new map, and read-only maps are safe
//! to share across threads.

use crate::geometry::Point;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

/// CRMAP1 file errors.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: expected CRMAP1")]
    BadMagic,
    #[error("malformed header")]
    BadHeader,
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("truncated payload")]
    Truncated,
    #[error("trailing bytes after payload")]
    TrailingData,
}

/// Single-channel grid of real values, row-major.
///
/// Values carry score semantics in `[0, 1]` after any drawing operation;
/// arbitrary finite reals are allowed for intermediate numeric use (loss
/// gradients, log-probabilities).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScoreMap {
    /// All-zero map. Dimensions must be positive.
    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "map dimensions must be positive");
        ScoreMap {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    /// Constant-valued map.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "map dimensions must be positive");
        ScoreMap {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds a map from a per-pixel function of `(x, y)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "map dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        ScoreMap {
            width,
            height,
            data,
        }
    }

    /// Wraps an existing row-major buffer.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert!(width > 0 && height > 0, "map dimensions must be positive");
        assert_eq!(data.len(), width * height, "buffer length mismatch");
        ScoreMap {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &ScoreMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bilinear interpolation of the four neighboring pixel centers.
    /// Coordinates outside `[0, w-1] x [0, h-1]` return 0; a 1e-9 band
    /// around the boundary snaps inward so that transforms which are the
    /// identity up to roundoff sample the edge pixels instead of falling
    /// into the out-of-range rule.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        const EDGE_EPS: f64 = 1e-9;
        if !(-EDGE_EPS..=max_x + EDGE_EPS).contains(&x)
            || !(-EDGE_EPS..=max_y + EDGE_EPS).contains(&y)
        {
            return 0.0;
        }
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let x0 = x0 as usize;
        let y0 = y0 as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let v00 = self.get(x0, y0);
        let v10 = self.get(x1, y0);
        let v01 = self.get(x0, y1);
        let v11 = self.get(x1, y1);
        let top = v00 + (v10 - v00) * fx;
        let bot = v01 + (v11 - v01) * fx;
        top + (bot - top) * fy
    }

    /// Paints every pixel whose center lies within `thickness / 2` of the
    /// segment `p0p1` with `max(existing, value)`, clamped to `[0, 1]`, and
    /// returns the resulting map. A zero-length segment draws a disc of
    /// diameter `thickness`.
    pub fn draw_segment(&self, p0: Point, p1: Point, thickness: f64, value: f64) -> ScoreMap {
        let mut out = self.clone();
        out.stroke_segment(p0, p1, thickness, value);
        out
    }

    /// In-place variant of [`ScoreMap::draw_segment`] for builders.
    pub fn stroke_segment(&mut self, p0: Point, p1: Point, thickness: f64, value: f64) {
        let r = thickness / 2.0;
        let min_x = (p0.x.min(p1.x) - r).floor().max(0.0) as usize;
        let max_x = (p0.x.max(p1.x) + r).ceil().min((self.width - 1) as f64) as usize;
        let min_y = (p0.y.min(p1.y) - r).floor().max(0.0) as usize;
        let max_y = (p0.y.max(p1.y) + r).ceil().min((self.height - 1) as f64) as usize;
        if p0.x.min(p1.x) - r > (self.width - 1) as f64
            || p0.y.min(p1.y) - r > (self.height - 1) as f64
            || p0.x.max(p1.x) + r < 0.0
            || p0.y.max(p1.y) + r < 0.0
        {
            return;
        }
        let seg = p1 - p0;
        let len2 = seg.dot(seg);
        for y in min_y..=max_y {
            for x in min_x..=max_x {
                let p = Point::new(x as f64, y as f64);
                let d = if len2 == 0.0 {
                    p.distance(p0)
                } else {
                    let t = ((p - p0).dot(seg) / len2).clamp(0.0, 1.0);
                    p.distance(p0 + seg.scale(t))
                };
                if d <= r {
                    let cur = self.get(x, y);
                    self.set(x, y, cur.max(value).clamp(0.0, 1.0));
                }
            }
        }
    }
}

/// Binary mask with the same dimensions as its source map.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMap {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMap {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "map dimensions must be positive");
        BinaryMap {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Pixel-wise OR; panics on dimension mismatch.
    pub fn union(&self, other: &BinaryMap) -> BinaryMap {
        assert!(
            self.width == other.width && self.height == other.height,
            "dimension mismatch"
        );
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| *a || *b)
            .collect();
        BinaryMap {
            width: self.width,
            height: self.height,
            bits,
        }
    }
}

const MAGIC: &str = "CRMAP1";

/// Serializes a same-shaped channel bundle into the CRMAP1 byte layout:
/// ASCII header `CRMAP1 <width> <height> <channels>\n`, then each channel
/// row-major as little-endian IEEE-754 f32.
///
/// Values are quantized to f32 on encode; any bundle whose values are
/// f32-representable (everything produced by [`decode_map`]) round-trips
/// bit-exactly.
pub fn encode_map(maps: &[ScoreMap]) -> Result<Vec<u8>, FormatError> {
    let first = maps.first().ok_or(FormatError::DimensionMismatch)?;
    if !maps.iter().all(|m| m.same_shape(first)) {
        return Err(FormatError::DimensionMismatch);
    }
    let mut out = Vec::with_capacity(32 + 4 * maps.len() * first.len());
    out.extend_from_slice(
        format!(
            "{MAGIC} {} {} {}\n",
            first.width(),
            first.height(),
            maps.len()
        )
        .as_bytes(),
    );
    for m in maps {
        for v in m.data() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses a CRMAP1 byte buffer into its channels.
pub fn decode_map(bytes: &[u8]) -> Result<Vec<ScoreMap>, FormatError> {
    let newline = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or(FormatError::Truncated)?;
    let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| FormatError::BadHeader)?;
    let mut fields = header.split_ascii_whitespace();
    let magic = fields.next().ok_or(FormatError::BadHeader)?;
    if magic != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let mut next_usize = || -> Result<usize, FormatError> {
        fields
            .next()
            .ok_or(FormatError::BadHeader)?
            .parse::<usize>()
            .map_err(|_| FormatError::BadHeader)
    };
    let width = next_usize()?;
    let height = next_usize()?;
    let channels = next_usize()?;
    if width == 0 || height == 0 || channels == 0 {
        return Err(FormatError::DimensionMismatch);
    }
    let payload = &bytes[newline + 1..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .and_then(|n| n.checked_mul(4))
        .ok_or(FormatError::BadHeader)?;
    if payload.len() < expected {
        return Err(FormatError::Truncated);
    }
    if payload.len() > expected {
        return Err(FormatError::TrailingData);
    }
    let mut maps = Vec::with_capacity(channels);
    let plane = width * height;
    for c in 0..channels {
        let mut data = Vec::with_capacity(plane);
        for i in 0..plane {
            let off = (c * plane + i) * 4;
            let raw: [u8; 4] = payload[off..off + 4].try_into().unwrap();
            data.push(f32::from_le_bytes(raw) as f64);
        }
        maps.push(ScoreMap::from_vec(width, height, data));
    }
    Ok(maps)
}

/// Writes a channel bundle to `path` in CRMAP1 format.
pub fn write_map<P: AsRef<Path>>(maps: &[ScoreMap], path: P) -> Result<(), FormatError> {
    let bytes = encode_map(maps)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Reads a CRMAP1 channel bundle from `path`.
pub fn read_map<P: AsRef<Path>>(path: P) -> Result<Vec<ScoreMap>, FormatError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_map(&bytes)
}
