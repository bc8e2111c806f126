//! Detection and recognition losses as pure map functionals with analytic
//! gradients, plus a central-difference gradient checker.
//!
//! The hard-negative selection in [`region_link_loss`] is the only
//! non-differentiable piece; its mask is treated as a constant during
//! gradient computation (the usual subgradient choice), and
//! [`ohem_mask`]/[`masked_mse`] expose the frozen-mask functional directly
//! so the checker can verify the differentiable part.

use crate::rastermap::{BinaryMap, ScoreMap};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Loss configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Weight of the orientation term in the combined detection loss.
    pub lambda_theta: f64,
    /// Hard-negative to positive ratio for the region/link loss.
    pub ohem_neg_pos_ratio: f64,
    /// Ground-truth value above which a pixel counts as positive.
    pub positive_threshold: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda_theta: 0.1,
            ohem_neg_pos_ratio: 3.0,
            positive_threshold: 0.1,
        }
    }
}

/// Per-step generation probabilities for one decoded word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbSequence {
    pub steps: Vec<f64>,
}

/// Loss evaluation errors.
#[derive(Debug, Error)]
pub enum LossError {
    /// The map holds no pixels at all.
    #[error("empty selection: map has no pixels")]
    EmptySelection,
    /// A probability outside `(0, 1]` (or a log-probability above 0).
    #[error("domain error: probability {0} outside (0, 1]")]
    DomainError(f64),
}

/// Compensated (Neumaier) summation; keeps the loss values accurate enough
/// for tight finite-difference comparisons.
fn sum_exact(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Online-hard-example-mining selection: every positive pixel
/// (`gt > positive_threshold`) plus the `ceil(ratio * |pos|)` negatives with
/// the largest squared error (all of them if fewer). Ties are broken by
/// pixel index for determinism.
pub fn ohem_mask(pred: &ScoreMap, gt: &ScoreMap, cfg: &LossConfig) -> Result<BinaryMap, LossError> {
    assert!(pred.same_shape(gt), "pred/gt dimension mismatch");
    if pred.is_empty() {
        return Err(LossError::EmptySelection);
    }
    let mut mask = BinaryMap::new(pred.width(), pred.height());
    let mut positives = 0usize;
    let mut negatives: Vec<(f64, usize)> = Vec::new();
    for i in 0..pred.len() {
        let g = gt.data()[i];
        if g > cfg.positive_threshold {
            positives += 1;
            mask.set(i % pred.width(), i / pred.width(), true);
        } else {
            let e = pred.data()[i] - g;
            negatives.push((e * e, i));
        }
    }
    let want = (cfg.ohem_neg_pos_ratio * positives as f64).ceil() as usize;
    let take = want.min(negatives.len());
    negatives.sort_unstable_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for &(_, i) in negatives.iter().take(take) {
        mask.set(i % pred.width(), i / pred.width(), true);
    }
    Ok(mask)
}

/// Mean squared error over the masked pixels, with its gradient
/// (`2 (pred - gt) / |selected|` on the mask, zero elsewhere). An empty mask
/// yields zero loss and zero gradient.
pub fn masked_mse(pred: &ScoreMap, gt: &ScoreMap, mask: &BinaryMap) -> (f64, ScoreMap) {
    assert!(pred.same_shape(gt), "pred/gt dimension mismatch");
    assert!(
        pred.width() == mask.width() && pred.height() == mask.height(),
        "mask dimension mismatch"
    );
    let selected: Vec<usize> = (0..pred.len())
        .filter(|i| mask.get(i % pred.width(), i / pred.width()))
        .collect();
    let mut grad = ScoreMap::zeros(pred.width(), pred.height());
    if selected.is_empty() {
        return (0.0, grad);
    }
    let n = selected.len() as f64;
    let value = sum_exact(selected.iter().map(|&i| {
        let d = pred.data()[i] - gt.data()[i];
        d * d
    })) / n;
    for &i in &selected {
        grad.data_mut()[i] = 2.0 * (pred.data()[i] - gt.data()[i]) / n;
    }
    (value, grad)
}

/// Region/link loss: OHEM selection followed by mean squared error over the
/// selected set. With no positive pixels the selection is empty and the loss
/// is zero by convention.
pub fn region_link_loss(
    pred: &ScoreMap,
    gt: &ScoreMap,
    cfg: &LossConfig,
) -> Result<(f64, ScoreMap), LossError> {
    let mask = ohem_mask(pred, gt, cfg)?;
    Ok(masked_mse(pred, gt, &mask))
}

/// Orientation loss: squared error of both angle channels, weighted by the
/// ground-truth region score and normalized by the total region mass
/// (guarded by `1e-8`, so an all-zero region yields zero).
///
/// Returns `(value, grad_sin, grad_cos)`.
pub fn orientation_loss(
    pred_sin: &ScoreMap,
    pred_cos: &ScoreMap,
    gt_sin: &ScoreMap,
    gt_cos: &ScoreMap,
    region_gt: &ScoreMap,
) -> (f64, ScoreMap, ScoreMap) {
    assert!(
        pred_sin.same_shape(pred_cos)
            && pred_sin.same_shape(gt_sin)
            && pred_sin.same_shape(gt_cos)
            && pred_sin.same_shape(region_gt),
        "orientation loss maps must share dimensions"
    );
    let mass = sum_exact(region_gt.data().iter().copied());
    let denom = mass.max(1e-8);
    let value = sum_exact((0..pred_sin.len()).map(|i| {
        let w = region_gt.data()[i];
        let ds = pred_sin.data()[i] - gt_sin.data()[i];
        let dc = pred_cos.data()[i] - gt_cos.data()[i];
        w * (ds * ds + dc * dc)
    })) / denom;
    let mut grad_sin = ScoreMap::zeros(pred_sin.width(), pred_sin.height());
    let mut grad_cos = ScoreMap::zeros(pred_sin.width(), pred_sin.height());
    for i in 0..pred_sin.len() {
        let w = region_gt.data()[i];
        grad_sin.data_mut()[i] = 2.0 * w * (pred_sin.data()[i] - gt_sin.data()[i]) / denom;
        grad_cos.data_mut()[i] = 2.0 * w * (pred_cos.data()[i] - gt_cos.data()[i]) / denom;
    }
    (value, grad_sin, grad_cos)
}

/// Combined detection loss `L_r + L_l + lambda * L_theta`.
#[inline]
pub fn detection_loss(region: f64, link: f64, theta: f64, cfg: &LossConfig) -> f64 {
    region + link + cfg.lambda_theta * theta
}

/// Recognition loss: negative log-likelihood of the per-step generation
/// probabilities, summed over sequences.
pub fn recognition_loss(seqs: &[ProbSequence]) -> Result<f64, LossError> {
    let mut total = 0.0;
    for seq in seqs {
        for &p in &seq.steps {
            if !(p > 0.0 && p <= 1.0) {
                return Err(LossError::DomainError(p));
            }
            total -= p.ln();
        }
    }
    Ok(total)
}

/// Recognition loss over log-probability inputs (one entry per decoding
/// step, rows are sequences): `-sum(entries)` with constant gradient `-1`.
pub fn recognition_loss_logprob(log_probs: &ScoreMap) -> Result<(f64, ScoreMap), LossError> {
    for &v in log_probs.data() {
        if v > 0.0 || v.is_nan() {
            return Err(LossError::DomainError(v.exp()));
        }
    }
    let value = -sum_exact(log_probs.data().iter().copied());
    let grad = ScoreMap::filled(log_probs.width(), log_probs.height(), -1.0);
    Ok((value, grad))
}

/// Compares the analytic gradient of `f` against central finite differences
/// at `point` and returns the maximum relative error, with denominator
/// `max(|analytic|, |numeric|, 1e-8)`.
///
/// The perturbed steps are re-measured from the stored values, so the check
/// is exact for quadratics up to floating-point roundoff.
pub fn grad_check<F>(f: F, point: &ScoreMap, step: f64) -> f64
where
    F: Fn(&ScoreMap) -> (f64, ScoreMap),
{
    assert!(step > 0.0, "step must be positive");
    let (_, analytic) = f(point);
    let mut worst = 0.0f64;
    for i in 0..point.len() {
        let x = point.data()[i];
        let mut plus = point.clone();
        plus.data_mut()[i] = x + step;
        let mut minus = point.clone();
        minus.data_mut()[i] = x - step;
        let h_plus = plus.data()[i] - x;
        let h_minus = x - minus.data()[i];
        let (vp, _) = f(&plus);
        let (vm, _) = f(&minus);
        let numeric = (vp - vm) / (h_plus + h_minus);
        let a = analytic.data()[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SplitMix64;
    use approx::assert_relative_eq;

    fn random_map(w: usize, h: usize, rng: &mut SplitMix64) -> ScoreMap {
        ScoreMap::from_fn(w, h, |_, _| rng.next_f64())
    }

    #[test]
    fn region_link_zero_when_pred_equals_gt() {
        let mut rng = SplitMix64::new(7);
        let gt = random_map(16, 16, &mut rng);
        let (v, g) = region_link_loss(&gt, &gt, &LossConfig::default()).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.data().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn region_link_single_positive_enumeration_oracle() {
        // One positive pixel with error 0.5; all negatives exact. The
        // selection is that positive plus ceil(3 * 1) = 3 zero-error
        // negatives, so the mean squared error is 0.25 / 4.
        let mut gt = ScoreMap::zeros(8, 8);
        gt.set(3, 3, 0.9);
        let mut pred = gt.clone();
        pred.set(3, 3, 0.4);
        let cfg = LossConfig::default();
        let (v, g) = region_link_loss(&pred, &gt, &cfg).unwrap();
        assert_relative_eq!(v, 0.0625, epsilon = 1e-15);
        assert_relative_eq!(g.get(3, 3), 2.0 * (0.4 - 0.9) / 4.0, epsilon = 1e-15);
        let mask = ohem_mask(&pred, &gt, &cfg).unwrap();
        assert_eq!(mask.count_ones(), 4);
        assert!(mask.get(3, 3));
    }

    #[test]
    fn region_link_no_positives_is_zero() {
        let gt = ScoreMap::zeros(8, 8);
        let mut pred = ScoreMap::zeros(8, 8);
        pred.set(1, 1, 0.8);
        let (v, g) = region_link_loss(&pred, &gt, &LossConfig::default()).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.data().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn ohem_takes_hardest_negatives_only() {
        let mut gt = ScoreMap::zeros(4, 4);
        gt.set(0, 0, 1.0); // one positive
        let mut pred = ScoreMap::zeros(4, 4);
        pred.set(0, 0, 1.0);
        pred.set(1, 0, 0.9); // hard negative
        pred.set(2, 0, 0.5);
        pred.set(3, 0, 0.4);
        pred.set(0, 1, 0.05); // easy negative, outside selection
        let cfg = LossConfig::default();
        let mask = ohem_mask(&pred, &gt, &cfg).unwrap();
        assert_eq!(mask.count_ones(), 4);
        assert!(mask.get(1, 0) && mask.get(2, 0) && mask.get(3, 0));
        assert!(!mask.get(0, 1));
        // Loss is invariant to predictions outside the frozen selection.
        let (v1, _) = masked_mse(&pred, &gt, &mask);
        let mut pred2 = pred.clone();
        pred2.set(0, 1, 0.0);
        pred2.set(3, 3, 0.09);
        let (v2, _) = masked_mse(&pred2, &gt, &mask);
        assert_eq!(v1, v2);
    }

    #[test]
    fn orientation_loss_examples() {
        let mut rng = SplitMix64::new(3);
        let s = random_map(8, 8, &mut rng);
        let c = random_map(8, 8, &mut rng);
        let r = random_map(8, 8, &mut rng);
        let (v, gs, gc) = orientation_loss(&s, &c, &s, &c, &r);
        assert_eq!(v, 0.0);
        assert!(gs.data().iter().chain(gc.data()).all(|x| *x == 0.0));

        // Zero region weight kills every term.
        let zero = ScoreMap::zeros(8, 8);
        let other = random_map(8, 8, &mut rng);
        let (v, _, _) = orientation_loss(&s, &c, &other, &other, &zero);
        assert_eq!(v, 0.0);

        // Single supported pixel: S_r = 1, dsin = 0.1, dcos = 0.2.
        let mut region = ScoreMap::zeros(4, 4);
        region.set(2, 2, 1.0);
        let gt_s = ScoreMap::filled(4, 4, 0.5);
        let gt_c = ScoreMap::filled(4, 4, 0.5);
        let mut ps = gt_s.clone();
        ps.set(2, 2, 0.6);
        let mut pc = gt_c.clone();
        pc.set(2, 2, 0.7);
        let (v, gs, gc) = orientation_loss(&ps, &pc, &gt_s, &gt_c, &region);
        assert_relative_eq!(v, 0.05, epsilon = 1e-12);
        assert_relative_eq!(gs.get(2, 2), 0.2, epsilon = 1e-12);
        assert_relative_eq!(gc.get(2, 2), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn orientation_loss_ignores_unsupported_pixels() {
        let mut rng = SplitMix64::new(11);
        let gt_s = random_map(8, 8, &mut rng);
        let gt_c = random_map(8, 8, &mut rng);
        let mut region = ScoreMap::zeros(8, 8);
        region.set(4, 4, 0.7);
        let ps = random_map(8, 8, &mut rng);
        let pc = random_map(8, 8, &mut rng);
        let (v1, _, _) = orientation_loss(&ps, &pc, &gt_s, &gt_c, &region);
        let mut ps2 = ps.clone();
        ps2.set(0, 0, 0.123);
        ps2.set(7, 7, 0.456);
        let (v2, _, _) = orientation_loss(&ps2, &pc, &gt_s, &gt_c, &region);
        assert_eq!(v1, v2);
    }

    #[test]
    fn detection_loss_arithmetic() {
        let cfg = LossConfig::default();
        assert_relative_eq!(detection_loss(1.0, 2.0, 3.0, &cfg), 3.3, epsilon = 1e-15);
        assert_relative_eq!(detection_loss(0.0, 0.0, 5.0, &cfg), 0.5, epsilon = 1e-15);
        let zero = LossConfig {
            lambda_theta: 0.0,
            ..cfg
        };
        assert_eq!(detection_loss(1.5, 2.5, 100.0, &zero), 4.0);
    }

    #[test]
    fn recognition_loss_examples() {
        let ones = ProbSequence {
            steps: vec![1.0, 1.0, 1.0],
        };
        assert_eq!(recognition_loss(&[ones]).unwrap(), 0.0);
        let seq = ProbSequence {
            steps: vec![0.5, 0.25],
        };
        let single = recognition_loss(std::slice::from_ref(&seq)).unwrap();
        assert_relative_eq!(single, 8.0f64.ln(), epsilon = 1e-12);
        let double = recognition_loss(&[seq.clone(), seq]).unwrap();
        assert_relative_eq!(double, 2.0 * single, epsilon = 1e-12);
        let bad = ProbSequence {
            steps: vec![0.5, 0.0],
        };
        assert!(matches!(
            recognition_loss(&[bad]),
            Err(LossError::DomainError(_))
        ));
        let over = ProbSequence { steps: vec![1.5] };
        assert!(matches!(
            recognition_loss(&[over]),
            Err(LossError::DomainError(_))
        ));
    }

    #[test]
    fn grad_check_quadratic_is_exact() {
        let mut rng = SplitMix64::new(21);
        let gt = random_map(32, 32, &mut rng);
        // Keep |pred - gt| bounded away from zero so every per-pixel
        // gradient is well-scaled for the relative comparison.
        let pred = ScoreMap::from_fn(32, 32, |x, y| {
            let sign = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
            gt.get(x, y) + sign * (0.1 + 0.8 * rng.next_f64())
        });
        let n = pred.len() as f64;
        let f = |m: &ScoreMap| {
            let value = m
                .data()
                .iter()
                .zip(gt.data())
                .map(|(p, g)| (p - g) * (p - g))
                .sum::<f64>()
                / n;
            let grad = ScoreMap::from_fn(m.width(), m.height(), |x, y| {
                2.0 * (m.get(x, y) - gt.get(x, y)) / n
            });
            (value, grad)
        };
        let err = grad_check(f, &pred, 1e-4);
        assert!(err < 1e-7, "quadratic grad check error {err}");
    }

    #[test]
    fn grad_check_orientation_loss() {
        let mut rng = SplitMix64::new(5);
        let gt_s = random_map(16, 16, &mut rng);
        let gt_c = random_map(16, 16, &mut rng);
        let region = random_map(16, 16, &mut rng);
        let pc = random_map(16, 16, &mut rng);
        let ps = random_map(16, 16, &mut rng);
        let f = |m: &ScoreMap| {
            let (v, gs, _) = orientation_loss(m, &pc, &gt_s, &gt_c, &region);
            (v, gs)
        };
        assert!(grad_check(f, &ps, 1e-4) < 1e-4);
        let g = |m: &ScoreMap| {
            let (v, _, gc) = orientation_loss(&ps, m, &gt_s, &gt_c, &region);
            (v, gc)
        };
        assert!(grad_check(g, &pc, 1e-4) < 1e-4);
    }

    #[test]
    fn grad_check_frozen_ohem_selection() {
        let mut rng = SplitMix64::new(13);
        let gt = ScoreMap::from_fn(16, 16, |_, _| {
            if rng.next_f64() < 0.2 {
                0.5 + 0.5 * rng.next_f64()
            } else {
                0.0
            }
        });
        let pred = random_map(16, 16, &mut rng);
        let mask = ohem_mask(&pred, &gt, &LossConfig::default()).unwrap();
        let f = |m: &ScoreMap| masked_mse(m, &gt, &mask);
        assert!(grad_check(f, &pred, 1e-4) < 1e-4);
    }

    #[test]
    fn grad_check_recognition_logprob() {
        let mut rng = SplitMix64::new(17);
        let logp = ScoreMap::from_fn(8, 4, |_, _| (0.05 + 0.9 * rng.next_f64()).ln());
        let f = |m: &ScoreMap| recognition_loss_logprob(m).unwrap();
        assert!(grad_check(f, &logp, 1e-4) < 1e-7);
        let (v, _) = recognition_loss_logprob(&logp).unwrap();
        assert!(v >= 0.0);
    }
}
