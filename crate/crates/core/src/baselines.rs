//! IoU-threshold detection metrics: accuracy, precision/recall/F1, AP and mAP.
//!
//! Per image and class, predictions are taken in descending confidence
//! (ties and missing confidences fall back to input order, missing last).
//! Each claims the unclaimed same-class target with the highest IoU among
//! those at or above the threshold and becomes a true positive; otherwise it
//! is a false positive. Unclaimed targets are false negatives. A class with
//! neither targets nor predictions in an image is one true negative.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::EvalError;
use crate::geometry::iou;
use crate::sample::{ClassId, Dataset, ImageSample};
use crate::stats::ConfusionCounts;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionOutcome {
    /// Index into the sample's predictions.
    pub prediction: usize,
    pub class: ClassId,
    pub confidence: Option<f64>,
    /// Target claimed by this prediction, if any.
    pub matched_target: Option<usize>,
}

impl PredictionOutcome {
    pub fn is_true_positive(&self) -> bool {
        self.matched_target.is_some()
    }
}

/// Thresholded matching of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdedOutcome {
    /// Indexed by class id.
    pub per_class: Vec<ConfusionCounts>,
    /// In processing order.
    pub predictions: Vec<PredictionOutcome>,
}

/// Interpolation of the precision-recall curve for AP.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ApInterpolation {
    /// Area under the monotone precision envelope at every recall step.
    #[default]
    AllPoint,
    /// Mean envelope precision at recall 0, 0.1, ..., 1.
    ElevenPoint,
}

fn check_threshold(t: f64) -> Result<(), EvalError> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(EvalError::Threshold(t))
    }
}

fn by_confidence(a: &Option<f64>, b: &Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => y.total_cmp(x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Greedy thresholded matching of one image at IoU threshold `t`.
pub fn threshold_match(sample: &ImageSample, num_classes: usize, t: f64) -> Result<ThresholdedOutcome, EvalError> {
    check_threshold(t)?;
    let mut order: Vec<usize> = (0..sample.predictions.len()).collect();
    order.sort_by(|&a, &b| by_confidence(&sample.predictions[a].confidence, &sample.predictions[b].confidence));

    let mut claimed = vec![false; sample.targets.len()];
    let mut per_class = vec![ConfusionCounts::default(); num_classes];
    let mut predictions = Vec::with_capacity(order.len());
    for p in order {
        let pred = &sample.predictions[p];
        let mut best: Option<(usize, f64)> = None;
        for (ti, target) in sample.targets.iter().enumerate() {
            if claimed[ti] || target.class != pred.class {
                continue;
            }
            let v = iou(&target.bbox, &pred.bbox);
            if v >= t && best.is_none_or(|(_, b)| v > b) {
                best = Some((ti, v));
            }
        }
        let counts = &mut per_class[pred.class.index()];
        if let Some((ti, _)) = best {
            claimed[ti] = true;
            counts.tp += 1;
        } else {
            counts.fp += 1;
        }
        predictions.push(PredictionOutcome {
            prediction: p,
            class: pred.class,
            confidence: pred.confidence,
            matched_target: best.map(|(ti, _)| ti),
        });
    }
    for (ti, target) in sample.targets.iter().enumerate() {
        if !claimed[ti] {
            per_class[target.class.index()].fn_ += 1;
        }
    }
    for (c, counts) in per_class.iter_mut().enumerate() {
        let present = sample.targets.iter().chain(&sample.predictions).any(|b| b.class.index() == c);
        if !present {
            counts.tn = 1;
        }
    }
    Ok(ThresholdedOutcome { per_class, predictions })
}

/// Confusion counts per class, summed over all images.
pub fn class_counts(dataset: &Dataset, t: f64) -> Result<Vec<ConfusionCounts>, EvalError> {
    if dataset.samples().is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut totals = vec![ConfusionCounts::default(); dataset.num_classes()];
    for s in dataset.samples() {
        let outcome = threshold_match(s, dataset.num_classes(), t)?;
        for (acc, c) in totals.iter_mut().zip(outcome.per_class) {
            *acc += c;
        }
    }
    Ok(totals)
}

/// Confusion counts pooled over all images and classes.
pub fn pooled_counts(dataset: &Dataset, t: f64) -> Result<ConfusionCounts, EvalError> {
    Ok(class_counts(dataset, t)?.into_iter().sum())
}

/// `(TP + TN) / (TP + TN + FP + FN)` pooled over images and classes.
pub fn acc_at_iou(dataset: &Dataset, t: f64) -> Result<f64, EvalError> {
    // every (image, class) cell contributes at least one count
    Ok(pooled_counts(dataset, t)?.accuracy().unwrap_or(0.0))
}

fn require_confidences(dataset: &Dataset) -> Result<(), EvalError> {
    for s in dataset.samples() {
        if s.predictions.iter().any(|p| p.confidence.is_none()) {
            return Err(EvalError::MissingConfidence(s.image_id.clone()));
        }
    }
    Ok(())
}

/// AP per class; `None` for classes without any target.
pub fn ap_per_class(dataset: &Dataset, t: f64, interpolation: ApInterpolation) -> Result<Vec<Option<f64>>, EvalError> {
    if dataset.samples().is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    require_confidences(dataset)?;
    let k = dataset.num_classes();
    let mut positives = vec![0usize; k];
    let mut scored: Vec<Vec<(f64, bool)>> = vec![Vec::new(); k];
    for s in dataset.samples() {
        for target in &s.targets {
            positives[target.class.index()] += 1;
        }
        for p in threshold_match(s, k, t)?.predictions {
            let conf = p.confidence.unwrap_or(0.0);
            scored[p.class.index()].push((conf, p.is_true_positive()));
        }
    }
    Ok(scored
        .into_iter()
        .zip(positives)
        .map(|(mut preds, npos)| {
            (npos > 0).then(|| {
                preds.sort_by(|a, b| b.0.total_cmp(&a.0));
                let curve = pr_curve(&preds, npos);
                match interpolation {
                    ApInterpolation::AllPoint => all_point_ap(&curve),
                    ApInterpolation::ElevenPoint => eleven_point_ap(&curve),
                }
            })
        })
        .collect())
}

/// `(recall, precision)` after each distinct confidence level, descending.
fn pr_curve(sorted: &[(f64, bool)], npos: usize) -> Vec<(f64, f64)> {
    let mut curve = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    for (i, &(conf, hit)) in sorted.iter().enumerate() {
        if hit {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_level = sorted.get(i + 1).is_none_or(|next| next.0 != conf);
        if last_of_level {
            curve.push((tp as f64 / npos as f64, tp as f64 / (tp + fp) as f64));
        }
    }
    curve
}

fn envelope(curve: &[(f64, f64)]) -> Vec<f64> {
    let mut env: Vec<f64> = curve.iter().map(|&(_, p)| p).collect();
    for i in (0..env.len().saturating_sub(1)).rev() {
        env[i] = env[i].max(env[i + 1]);
    }
    env
}

fn all_point_ap(curve: &[(f64, f64)]) -> f64 {
    let env = envelope(curve);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for (&(recall, _), &p) in curve.iter().zip(&env) {
        ap += (recall - prev_recall) * p;
        prev_recall = recall;
    }
    ap
}

fn eleven_point_ap(curve: &[(f64, f64)]) -> f64 {
    let env = envelope(curve);
    let sum: f64 = (0..=10)
        .map(|i| {
            let r = i as f64 / 10.0;
            curve.iter().zip(&env).find(|((recall, _), _)| *recall >= r).map_or(0.0, |(_, &p)| p)
        })
        .sum();
    sum / 11.0
}

/// AP for one class, or averaged over classes with at least one target when
/// `class` is `None`. Zero when no class has targets.
pub fn ap_at_iou(dataset: &Dataset, t: f64, class: Option<ClassId>, interpolation: ApInterpolation) -> Result<f64, EvalError> {
    let per_class = ap_per_class(dataset, t, interpolation)?;
    Ok(match class {
        Some(c) => per_class.get(c.index()).copied().flatten().unwrap_or(0.0),
        None => mean(per_class.iter().flatten().copied()).unwrap_or(0.0),
    })
}

/// Mean of [`ap_at_iou`] over `thresholds`.
pub fn map(dataset: &Dataset, thresholds: &[f64], interpolation: ApInterpolation) -> Result<f64, EvalError> {
    if thresholds.is_empty() {
        return Err(EvalError::NoThresholds);
    }
    let mut sum = 0.0;
    for &t in thresholds {
        sum += ap_at_iou(dataset, t, None, interpolation)?;
    }
    Ok(sum / thresholds.len() as f64)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| s / n as f64)
}

/// Evenly spaced thresholds `lo, lo + step, ..., hi` (inclusive), rounded to
/// ten decimals so that e.g. `0.1:0.7:0.1` yields exactly `0.3`, not
/// `0.30000000000000004`.
pub fn threshold_range(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, EvalError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(EvalError::NoThresholds);
    }
    check_threshold(lo)?;
    check_threshold(hi)?;
    if hi < lo {
        return Err(EvalError::NoThresholds);
    }
    let n = libm::floor((hi - lo) / step + 1e-9) as usize;
    Ok((0..=n).map(|i| libm::round((lo + i as f64 * step) * 1e10) / 1e10).collect())
}

/// Seven thresholds 0.1 to 0.7, the default for mAP.
pub fn default_map_thresholds() -> Vec<f64> {
    (1..=7).map(|i| i as f64 / 10.0).collect()
}

/// COCO's 0.5:0.05:0.95. Provided for comparison only.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}
