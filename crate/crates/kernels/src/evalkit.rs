//! Detection evaluation: greedy IoU matching with precision / recall /
//! H-mean, and the character-error-length diagnostic (detected
//! pseudo-character count versus transcription length).

use crate::geometry::{polygon_iou, Point};
use crate::gtgen::WordAnnotation;
use crate::postproc::{connected_components, Blob};
use crate::rastermap::{BinaryMap, ScoreMap};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Evaluation errors.
#[derive(Debug, Error)]
pub enum EvalError {
    /// No region mass inside the word hull.
    #[error("empty region: no mass inside the word hull")]
    EmptyRegion,
}

/// Matching result with the derived metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub hmean: f64,
    /// Accepted one-to-one matches as `(pred index, gt index, iou)`.
    pub matches: Vec<(usize, usize, f64)>,
}

/// Greedy one-to-one matching in descending IoU order (ties broken by
/// `(pred index, gt index)`); pairs at or above `iou_thr` are true
/// positives. Degenerate polygons contribute an IoU of zero. Empty inputs
/// give a precision or recall of zero, except that empty-vs-empty counts as
/// a perfect match.
pub fn match_detections(preds: &[Vec<Point>], gts: &[Vec<Point>], iou_thr: f64) -> EvalReport {
    if preds.is_empty() && gts.is_empty() {
        return EvalReport {
            precision: 1.0,
            recall: 1.0,
            hmean: 1.0,
            matches: Vec::new(),
        };
    }
    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(preds.len() * gts.len());
    for (p, pred) in preds.iter().enumerate() {
        for (g, gt) in gts.iter().enumerate() {
            let iou = polygon_iou(pred, gt).unwrap_or(0.0);
            if iou > 0.0 {
                pairs.push((p, g, iou));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let mut used_pred = vec![false; preds.len()];
    let mut used_gt = vec![false; gts.len()];
    let mut matches = Vec::new();
    for (p, g, iou) in pairs {
        if iou < iou_thr {
            break;
        }
        if used_pred[p] || used_gt[g] {
            continue;
        }
        used_pred[p] = true;
        used_gt[g] = true;
        matches.push((p, g, iou));
    }
    let tp = matches.len() as f64;
    let precision = if preds.is_empty() {
        0.0
    } else {
        tp / preds.len() as f64
    };
    let recall = if gts.is_empty() {
        0.0
    } else {
        tp / gts.len() as f64
    };
    let hmean = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    EvalReport {
        precision,
        recall,
        hmean,
        matches,
    }
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

/// Counts pseudo-character peaks of the region map inside the word hull
/// (components of the region binarized at half the local maximum) and
/// returns the absolute difference from `expected`.
pub fn character_error_length(
    region: &ScoreMap,
    word: &WordAnnotation,
    expected: usize,
) -> Result<usize, EvalError> {
    let hull = word.hull();
    if hull.len() < 3 {
        return Err(EvalError::EmptyRegion);
    }
    let min_x = hull
        .iter()
        .fold(f64::INFINITY, |a, p| a.min(p.x))
        .floor()
        .max(0.0) as usize;
    let max_x = hull
        .iter()
        .fold(f64::NEG_INFINITY, |a, p| a.max(p.x))
        .ceil()
        .min((region.width() - 1) as f64) as usize;
    let min_y = hull
        .iter()
        .fold(f64::INFINITY, |a, p| a.min(p.y))
        .floor()
        .max(0.0) as usize;
    let max_y = hull
        .iter()
        .fold(f64::NEG_INFINITY, |a, p| a.max(p.y))
        .ceil()
        .min((region.height() - 1) as f64) as usize;
    let mut local_max = 0.0f64;
    for y in min_y..=max_y {
        for x in min_x..=max_x {
            if point_in_hull(&hull, Point::new(x as f64, y as f64)) {
                local_max = local_max.max(region.get(x, y));
            }
        }
    }
    if local_max < 1e-12 {
        return Err(EvalError::EmptyRegion);
    }
    let cut = 0.5 * local_max;
    let mut mask = BinaryMap::new(region.width(), region.height());
    for y in min_y..=max_y {
        for x in min_x..=max_x {
            if region.get(x, y) >= cut && point_in_hull(&hull, Point::new(x as f64, y as f64)) {
                mask.set(x, y, true);
            }
        }
    }
    let count = connected_components(&mask).len();
    Ok(count.abs_diff(expected))
}

/// Pseudo-character blobs used by [`character_error_length`]; exposed for
/// diagnostics.
pub fn pseudo_character_blobs(region: &ScoreMap, word: &WordAnnotation) -> Vec<Blob> {
    let hull = word.hull();
    let mut mask = BinaryMap::new(region.width(), region.height());
    let mut local_max = 0.0f64;
    for y in 0..region.height() {
        for x in 0..region.width() {
            if point_in_hull(&hull, Point::new(x as f64, y as f64)) {
                local_max = local_max.max(region.get(x, y));
            }
        }
    }
    if local_max < 1e-12 {
        return Vec::new();
    }
    for y in 0..region.height() {
        for x in 0..region.width() {
            if region.get(x, y) >= 0.5 * local_max
                && point_in_hull(&hull, Point::new(x as f64, y as f64))
            {
                mask.set(x, y, true);
            }
        }
    }
    connected_components(&mask)
}
