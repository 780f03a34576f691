//! Confusion counts and the Matthews correlation coefficient.

use alloc::collections::BTreeMap;

use crate::error::StatsError;
use crate::sample::ClassId;

/// Binary confusion counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `(tp + tn) / total`, or `None` on an empty table.
    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> Option<f64> {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

impl core::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self { tp: self.tp + rhs.tp, fp: self.fp + rhs.fp, tn: self.tn + rhs.tn, fn_: self.fn_ + rhs.fn_ }
    }
}

impl core::ops::AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl core::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// `numerator / sqrt(d1 * d2)`, zero when the denominator vanishes.
///
/// Integer inputs keep the binary and multiclass forms bit-identical: at
/// two classes the multiclass terms are exactly 2x and 4x the binary ones,
/// and scaling by powers of two commutes with every rounding step below.
fn correlation(numerator: i128, d1: i128, d2: i128) -> f64 {
    if d1 == 0 || d2 == 0 {
        return 0.0;
    }
    let den = match d1.checked_mul(d2) {
        Some(d) => d as f64,
        None => d1 as f64 * d2 as f64,
    };
    (numerator as f64 / libm::sqrt(den)).clamp(-1.0, 1.0)
}

/// Binary MCC. Returns 0 when any marginal is empty.
pub fn mcc_binary(c: ConfusionCounts) -> f64 {
    let (tp, fp, tn, fn_) = (c.tp as i128, c.fp as i128, c.tn as i128, c.fn_ as i128);
    correlation(tp * tn - fp * fn_, (tp + fp) * (tn + fn_), (tp + fn_) * (tn + fp))
}

/// Multiclass correlation coefficient over `(target, predicted)` label pairs.
///
/// Computed from the K x K confusion matrix; reduces to [`mcc_binary`] for two
/// classes and returns 0 when either label marginal is concentrated on a
/// single class.
pub fn mcc_multiclass(pairs: &[(ClassId, ClassId)]) -> Result<f64, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::EmptyPairs);
    }
    // class -> (count as target, count as prediction)
    let mut marginals: BTreeMap<ClassId, (i128, i128)> = BTreeMap::new();
    let mut correct: i128 = 0;
    for &(t, p) in pairs {
        marginals.entry(t).or_default().0 += 1;
        marginals.entry(p).or_default().1 += 1;
        if t == p {
            correct += 1;
        }
    }
    let s = pairs.len() as i128;
    let (mut sum_tp, mut sum_tt, mut sum_pp) = (0i128, 0i128, 0i128);
    for &(t, p) in marginals.values() {
        sum_tp += t * p;
        sum_tt += t * t;
        sum_pp += p * p;
    }
    Ok(correlation(correct * s - sum_tp, s * s - sum_pp, s * s - sum_tt))
}

/// Binary counts for "is `positive`" over label pairs.
pub fn one_vs_rest(pairs: &[(ClassId, ClassId)], positive: ClassId) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for &(t, p) in pairs {
        match (t == positive, p == positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}
