//! RoDeO sub-metrics, the over/under-prediction scaling and the summary score.
//!
//! Matching runs per image. Everything after it is pooled over the whole
//! dataset: sub-metric means run over all matched pairs, and the scaling
//! factor uses global counts of matched and unmatched boxes.

use alloc::vec::Vec;

use crate::error::EvalError;
use crate::geometry::{ciou, BBox};
use crate::matching::{classification_score, match_image, MatchResult};
use crate::sample::{ClassId, ImageSample};
use crate::stats::{mcc_binary, one_vs_rest};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RodeoScores {
    pub loc: f64,
    pub shape: f64,
    pub cls: f64,
    pub total: f64,
    pub n_matched: usize,
    pub n_unmatched_targets: usize,
    pub n_unmatched_predictions: usize,
}

impl RodeoScores {
    /// `|M| / (|M| + |U_t| + |U_p|)`, zero without any boxes.
    pub fn overunder_factor(&self) -> f64 {
        apply_overunder(1.0, self.n_matched, self.n_unmatched_targets, self.n_unmatched_predictions)
    }
}

/// Scores for one class. `has_support` is false when the class occurs in
/// neither targets nor predictions; all scores are zero then.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    pub class: ClassId,
    pub scores: RodeoScores,
    pub has_support: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodeoConfig {
    /// Weight of the gIoU term in the matching cost.
    pub shape_weight: f64,
}

impl Default for RodeoConfig {
    fn default() -> Self {
        Self { shape_weight: 1.0 }
    }
}

/// Localization score of one pair: 1 for aligned centers, exactly 0.5 at a
/// center offset of one target width (or height), Gaussian in between.
/// Offsets are normalized by the target box.
pub fn loc_score_pair(target: &BBox, prediction: &BBox) -> f64 {
    let dx = (target.x() - prediction.x()) / target.w();
    let dy = (target.y() - prediction.y()) / target.h();
    libm::exp(-(dx * dx + dy * dy) * core::f64::consts::LN_2)
}

/// Linear blend of a matched-pairs score with zero, weighted by the share of
/// matched boxes among all boxes.
pub fn apply_overunder(sub: f64, n_matched: usize, n_unmatched_targets: usize, n_unmatched_predictions: usize) -> f64 {
    let all = n_matched + n_unmatched_targets + n_unmatched_predictions;
    if all == 0 {
        return 0.0;
    }
    n_matched as f64 / all as f64 * sub
}

/// Harmonic mean of the three sub-metrics; zero when any of them is zero.
pub fn rodeo_total(loc: f64, shape: f64, cls: f64) -> f64 {
    if loc <= 0.0 || shape <= 0.0 || cls <= 0.0 {
        return 0.0;
    }
    let lo = loc.min(shape).min(cls);
    let hi = loc.max(shape).max(cls);
    (3.0 / (1.0 / loc + 1.0 / shape + 1.0 / cls)).clamp(lo, hi)
}

/// Un-scaled `(loc, shape, cls)` over every matched pair of the dataset.
/// All three are 0 when nothing is matched.
pub fn rodeo_matched(samples: &[(&ImageSample, &MatchResult)]) -> (f64, f64, f64) {
    let pairs: Vec<(&BBox, &BBox)> =
        samples.iter().flat_map(|(s, m)| m.matched.iter().map(move |&(t, p)| (&s.targets[t].bbox, &s.predictions[p].bbox))).collect();
    if pairs.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let labels: Vec<_> = samples.iter().flat_map(|(s, m)| m.label_pairs(&s.targets, &s.predictions)).collect();
    let (loc, shape) = pooled_means(&pairs);
    (loc, shape, classification_score(&labels))
}

fn pooled_means(pairs: &[(&BBox, &BBox)]) -> (f64, f64) {
    let n = pairs.len() as f64;
    let loc = pairs.iter().map(|(t, p)| loc_score_pair(t, p)).sum::<f64>() / n;
    let shape = pairs.iter().map(|(t, p)| ciou(t, p)).sum::<f64>() / n;
    (loc, shape)
}

fn finish(loc: f64, shape: f64, cls: f64, n_m: usize, n_ut: usize, n_up: usize) -> RodeoScores {
    let loc = apply_overunder(loc, n_m, n_ut, n_up);
    let shape = apply_overunder(shape, n_m, n_ut, n_up);
    let cls = apply_overunder(cls, n_m, n_ut, n_up);
    RodeoScores {
        loc,
        shape,
        cls,
        total: rodeo_total(loc, shape, cls),
        n_matched: n_m,
        n_unmatched_targets: n_ut,
        n_unmatched_predictions: n_up,
    }
}

/// Dataset matched once, ready for overall and per-class scoring.
#[derive(Debug, Clone)]
pub struct MatchedDataset<'a> {
    samples: &'a [ImageSample],
    matches: Vec<MatchResult>,
}

impl<'a> MatchedDataset<'a> {
    pub fn new(samples: &'a [ImageSample], config: RodeoConfig) -> Result<Self, EvalError> {
        if samples.is_empty() {
            return Err(EvalError::EmptyDataset);
        }
        let matches =
            samples.iter().map(|s| match_image(&s.targets, &s.predictions, config.shape_weight)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { samples, matches })
    }

    /// Wraps matches computed elsewhere, one per sample and in sample order.
    ///
    /// # Panics
    /// If the lengths differ.
    pub fn from_matches(samples: &'a [ImageSample], matches: Vec<MatchResult>) -> Result<Self, EvalError> {
        if samples.is_empty() {
            return Err(EvalError::EmptyDataset);
        }
        assert_eq!(samples.len(), matches.len(), "one match result per sample");
        Ok(Self { samples, matches })
    }

    pub fn matches(&self) -> &[MatchResult] {
        &self.matches
    }

    fn zipped(&self) -> impl Iterator<Item = (&'a ImageSample, &MatchResult)> + '_ {
        self.samples.iter().zip(&self.matches)
    }

    pub fn overall(&self) -> RodeoScores {
        let zipped: Vec<_> = self.zipped().collect();
        let (loc, shape, cls) = rodeo_matched(&zipped);
        let n_m = zipped.iter().map(|(_, m)| m.matched.len()).sum();
        let n_ut = zipped.iter().map(|(_, m)| m.unmatched_targets.len()).sum();
        let n_up = zipped.iter().map(|(_, m)| m.unmatched_predictions.len()).sum();
        finish(loc, shape, cls, n_m, n_ut, n_up)
    }

    /// Scores restricted to class `class`: localization and shape over pairs
    /// whose target has that class; classification as one-vs-rest agreement
    /// over all matched pairs; scaling by the class's own box counts.
    pub fn per_class(&self, class: ClassId) -> ClassScores {
        let has_support = self.samples.iter().any(|s| s.targets.iter().chain(&s.predictions).any(|b| b.class == class));
        if !has_support {
            return ClassScores { class, scores: RodeoScores::default(), has_support };
        }
        let mut geometry: Vec<(&BBox, &BBox)> = Vec::new();
        let mut labels = Vec::new();
        let (mut n_ut, mut n_up) = (0, 0);
        for (s, m) in self.zipped() {
            for &(t, p) in &m.matched {
                let (tb, pb) = (&s.targets[t], &s.predictions[p]);
                labels.push((tb.class, pb.class));
                if tb.class == class {
                    geometry.push((&tb.bbox, &pb.bbox));
                }
            }
            n_ut += m.unmatched_targets.iter().filter(|&&t| s.targets[t].class == class).count();
            n_up += m.unmatched_predictions.iter().filter(|&&p| s.predictions[p].class == class).count();
        }
        let n_m = geometry.len();
        let scores = if n_m == 0 {
            finish(0.0, 0.0, 0.0, 0, n_ut, n_up)
        } else {
            let (loc, shape) = pooled_means(&geometry);
            finish(loc, shape, one_vs_rest_score(&labels, class), n_m, n_ut, n_up)
        };
        ClassScores { class, scores, has_support }
    }
}

fn one_vs_rest_score(labels: &[(ClassId, ClassId)], class: ClassId) -> f64 {
    let counts = one_vs_rest(labels, class);
    if counts.fp == 0 && counts.fn_ == 0 {
        return 1.0;
    }
    mcc_binary(counts).max(0.0)
}

/// RoDeO over a dataset with default settings.
pub fn evaluate_rodeo(samples: &[ImageSample]) -> Result<RodeoScores, EvalError> {
    Ok(MatchedDataset::new(samples, RodeoConfig::default())?.overall())
}

/// RoDeO for one class with default settings.
pub fn evaluate_rodeo_per_class(samples: &[ImageSample], class: ClassId) -> Result<ClassScores, EvalError> {
    Ok(MatchedDataset::new(samples, RodeoConfig::default())?.per_class(class))
}
