//! One-to-one correspondence between target and predicted boxes of an image.
//!
//! The cost of pairing target `t` with prediction `p` is
//! `-[class(t) == class(p)] * w_cls - giou(t, p) * w_shape`. The class weight
//! is derived per image from how well a purely geometric pairing already
//! agrees on labels, so unreliable class predictions do not steer the
//! assignment.

use alloc::vec::Vec;

use crate::assignment::{self, CostMatrix};
use crate::error::MatchError;
use crate::geometry::giou;
use crate::sample::{ClassId, LabeledBox};
use crate::stats::mcc_multiclass;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchWeights {
    pub shape: f64,
    pub cls: f64,
}

impl MatchWeights {
    pub fn new(shape: f64, cls: f64) -> Result<Self, MatchError> {
        if !(shape.is_finite() && shape >= 0.0) {
            return Err(MatchError::ShapeWeight(shape));
        }
        if !(0.0..=1.0).contains(&cls) {
            return Err(MatchError::ClassWeight(cls));
        }
        Ok(Self { shape, cls })
    }
}

impl Default for MatchWeights {
    fn default() -> Self {
        Self { shape: 1.0, cls: 0.0 }
    }
}

/// Matched pairs plus the leftovers of either side, all index lists ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchResult {
    /// `(target_index, prediction_index)`, sorted by target index.
    pub matched: Vec<(usize, usize)>,
    pub unmatched_targets: Vec<usize>,
    pub unmatched_predictions: Vec<usize>,
}

impl MatchResult {
    fn from_pairs(n_targets: usize, n_predictions: usize, matched: Vec<(usize, usize)>) -> Self {
        let mut target_used = alloc::vec![false; n_targets];
        let mut pred_used = alloc::vec![false; n_predictions];
        for &(t, p) in &matched {
            target_used[t] = true;
            pred_used[p] = true;
        }
        let unused = |used: Vec<bool>| used.iter().enumerate().filter(|(_, &u)| !u).map(|(i, _)| i).collect();
        Self { matched, unmatched_targets: unused(target_used), unmatched_predictions: unused(pred_used) }
    }

    /// Label pairs `(target class, predicted class)` of the matched boxes.
    pub fn label_pairs(&self, targets: &[LabeledBox], predictions: &[LabeledBox]) -> Vec<(ClassId, ClassId)> {
        self.matched.iter().map(|&(t, p)| (targets[t].class, predictions[p].class)).collect()
    }
}

/// Pairwise assignment costs, rows are targets and columns predictions.
pub fn cost_matrix(targets: &[LabeledBox], predictions: &[LabeledBox], weights: MatchWeights) -> Result<CostMatrix, MatchError> {
    if targets.is_empty() || predictions.is_empty() {
        return Err(MatchError::EmptySide);
    }
    Ok(CostMatrix::from_fn(targets.len(), predictions.len(), |i, j| {
        let (t, p) = (&targets[i], &predictions[j]);
        let same = if t.class == p.class { 1.0 } else { 0.0 };
        -same * weights.cls - giou(&t.bbox, &p.bbox) * weights.shape
    }))
}

/// Classification agreement of label pairs: 1 when every pair agrees,
/// otherwise the multiclass correlation clamped at 0. Empty input gives 0.
///
/// The all-agree case is singled out because a correlation is undefined
/// when only one class occurs, yet such a pairing is perfectly classified.
pub fn classification_score(pairs: &[(ClassId, ClassId)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    if pairs.iter().all(|(t, p)| t == p) {
        return 1.0;
    }
    mcc_multiclass(pairs).map_or(0.0, |v| v.max(0.0))
}

/// Per-image class weight from a geometry-only preliminary assignment.
pub fn class_weight(targets: &[LabeledBox], predictions: &[LabeledBox]) -> f64 {
    match cost_matrix(targets, predictions, MatchWeights { shape: 1.0, cls: 0.0 }) {
        Ok(costs) => {
            let pairs = assignment::solve(&costs);
            let labels: Vec<_> = pairs.iter().map(|&(t, p)| (targets[t].class, predictions[p].class)).collect();
            classification_score(&labels)
        }
        Err(_) => 0.0,
    }
}

/// Optimal assignment for one image. Exactly `min(|targets|, |predictions|)`
/// pairs are formed; an empty side leaves the other side fully unmatched.
pub fn match_image(targets: &[LabeledBox], predictions: &[LabeledBox], shape_weight: f64) -> Result<MatchResult, MatchError> {
    let weights = MatchWeights::new(shape_weight, class_weight(targets, predictions))?;
    match_with_weights(targets, predictions, weights)
}

/// Optimal assignment under fixed weights.
pub fn match_with_weights(targets: &[LabeledBox], predictions: &[LabeledBox], weights: MatchWeights) -> Result<MatchResult, MatchError> {
    let pairs = match cost_matrix(targets, predictions, weights) {
        Ok(costs) => assignment::solve(&costs),
        Err(MatchError::EmptySide) => Vec::new(),
        Err(e) => return Err(e),
    };
    Ok(MatchResult::from_pairs(targets.len(), predictions.len(), pairs))
}
