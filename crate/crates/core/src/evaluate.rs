//! Full evaluation of a dataset: RoDeO and the threshold baselines, per class
//! and in total.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::baselines::{self, ApInterpolation};
use crate::error::EvalError;
use crate::rodeo::{MatchedDataset, RodeoConfig, RodeoScores};
use crate::sample::{ClassId, Dataset};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub rodeo: RodeoConfig,
    /// IoU thresholds reported as both acc@t and AP@t.
    pub thresholds: Vec<f64>,
    pub map_thresholds: Vec<f64>,
    pub interpolation: ApInterpolation,
    /// AP needs a confidence on every prediction; switch off for
    /// unscored predictions.
    pub average_precision: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            rodeo: RodeoConfig::default(),
            thresholds: alloc::vec![0.3],
            map_thresholds: baselines::default_map_thresholds(),
            interpolation: ApInterpolation::AllPoint,
            average_precision: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RowLabel {
    Class(ClassId),
    Total,
}

/// One report row. `ap` and `map` are `None` when AP is disabled, and per
/// class when the class has no target.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub label: RowLabel,
    /// False for a class without any box; its RoDeO scores are then absent.
    pub has_support: bool,
    pub rodeo: RodeoScores,
    pub acc: Vec<f64>,
    pub ap: Vec<Option<f64>>,
    pub map: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub thresholds: Vec<f64>,
    pub map_thresholds: Vec<f64>,
    pub classes: Vec<MetricRow>,
    pub total: MetricRow,
}

/// Short label for an IoU threshold: percent when whole, else the decimal.
pub fn threshold_label(t: f64) -> String {
    let pct = t * 100.0;
    let rounded = libm::round(pct);
    if libm::fabs(pct - rounded) < 1e-9 {
        format!("{}", rounded as i64)
    } else {
        format!("{t}")
    }
}

/// Inverse of [`threshold_label`]: a bare integer is a percentage, anything
/// with a decimal point a fraction.
pub fn parse_threshold_label(s: &str) -> Option<f64> {
    let v: f64 = s.parse().ok()?;
    let t = if s.contains('.') { v } else { v / 100.0 };
    (t > 0.0 && t <= 1.0).then_some(t)
}

fn mean_of(values: &[Option<f64>]) -> Option<f64> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

pub fn evaluate(dataset: &Dataset, config: &EvalConfig) -> Result<MetricReport, EvalError> {
    let matched = MatchedDataset::new(dataset.samples(), config.rodeo)?;
    evaluate_matched(dataset, &matched, config)
}

/// [`evaluate`] with the RoDeO assignment already done; `matched` must come
/// from `dataset`'s samples.
pub fn evaluate_matched(dataset: &Dataset, matched: &MatchedDataset<'_>, config: &EvalConfig) -> Result<MetricReport, EvalError> {
    let k = dataset.num_classes();
    if config.average_precision && config.map_thresholds.is_empty() {
        return Err(EvalError::NoThresholds);
    }

    // [threshold][class]
    let mut acc = Vec::with_capacity(config.thresholds.len());
    let mut ap = Vec::with_capacity(config.thresholds.len());
    for &t in &config.thresholds {
        acc.push(baselines::class_counts(dataset, t)?);
        ap.push(if config.average_precision { baselines::ap_per_class(dataset, t, config.interpolation)? } else { alloc::vec![None; k] });
    }
    let mut map_per_class: Vec<Vec<Option<f64>>> = alloc::vec![Vec::new(); k];
    let mut map_total = None;
    if config.average_precision {
        let mut totals = Vec::new();
        for &t in &config.map_thresholds {
            let per_class = baselines::ap_per_class(dataset, t, config.interpolation)?;
            totals.push(Some(mean_of(&per_class).unwrap_or(0.0)));
            for (c, v) in per_class.into_iter().enumerate() {
                map_per_class[c].push(v);
            }
        }
        map_total = mean_of(&totals);
    }

    let classes = dataset
        .classes()
        .map(|c| {
            let i = c.index();
            let scores = matched.per_class(c);
            MetricRow {
                label: RowLabel::Class(c),
                has_support: scores.has_support,
                rodeo: scores.scores,
                acc: acc.iter().map(|per| per[i].accuracy().unwrap_or(0.0)).collect(),
                ap: ap.iter().map(|per| per[i]).collect(),
                // a class without targets has no AP at any threshold
                map: if map_per_class[i].iter().all(Option::is_some) { mean_of(&map_per_class[i]) } else { None },
            }
        })
        .collect();
    let total = MetricRow {
        label: RowLabel::Total,
        has_support: true,
        rodeo: matched.overall(),
        acc: acc.iter().map(|per| per.iter().copied().sum::<crate::stats::ConfusionCounts>().accuracy().unwrap_or(0.0)).collect(),
        ap: ap.iter().map(|per| config.average_precision.then(|| mean_of(per).unwrap_or(0.0))).collect(),
        map: map_total,
    };
    Ok(MetricReport { thresholds: config.thresholds.clone(), map_thresholds: config.map_thresholds.clone(), classes, total })
}

impl MetricRow {
    /// `(name, value)` for every metric in the row; absent values skipped.
    pub fn metrics(&self, thresholds: &[f64]) -> Vec<(String, f64)> {
        let r = &self.rodeo;
        let mut out = Vec::new();
        if self.has_support {
            out.extend([
                (String::from("rodeo"), r.total),
                (String::from("rodeo_loc"), r.loc),
                (String::from("rodeo_shape"), r.shape),
                (String::from("rodeo_cls"), r.cls),
            ]);
        }
        for (t, v) in thresholds.iter().zip(&self.acc) {
            out.push((format!("acc@{}", threshold_label(*t)), *v));
        }
        for (t, v) in thresholds.iter().zip(&self.ap) {
            if let Some(v) = v {
                out.push((format!("ap@{}", threshold_label(*t)), *v));
            }
        }
        if let Some(m) = self.map {
            out.push((String::from("map"), m));
        }
        out
    }
}

impl MetricReport {
    /// Flat `row/metric -> value` map, rows named `total` and `class_<id>`.
    pub fn to_metric_map(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for row in self.classes.iter().chain(core::iter::once(&self.total)) {
            let prefix = match row.label {
                RowLabel::Class(c) => format!("class_{}", c.0),
                RowLabel::Total => String::from("total"),
            };
            for (name, v) in row.metrics(&self.thresholds) {
                out.insert(format!("{prefix}/{name}"), v);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corruption::oracle_predictions;
    use crate::geometry::BBox;
    use crate::sample::{ImageSample, LabeledBox};
    use alloc::vec;

    fn lb(x: f64, y: f64, class: u32) -> LabeledBox {
        LabeledBox::new(BBox::new(x, y, 10.0, 10.0).unwrap(), ClassId(class))
    }

    #[test]
    fn threshold_labels() {
        assert_eq!(threshold_label(0.3), "30");
        assert_eq!(threshold_label(0.5), "50");
        assert_eq!(threshold_label(0.425), "0.425");
        assert_eq!(parse_threshold_label("30"), Some(0.3));
        assert_eq!(parse_threshold_label("0.425"), Some(0.425));
        assert_eq!(parse_threshold_label("0"), None);
        assert_eq!(parse_threshold_label("x"), None);
    }

    #[test]
    fn oracle_report_is_perfect() {
        let t = vec![lb(10.0, 10.0, 0), lb(50.0, 50.0, 1)];
        let u = vec![lb(30.0, 30.0, 1)];
        let samples =
            vec![ImageSample::new("a", t.clone(), oracle_predictions(&t)), ImageSample::new("b", u.clone(), oracle_predictions(&u))];
        let ds = Dataset::new(3, samples).unwrap();
        let config = EvalConfig { thresholds: vec![0.3, 0.5], ..Default::default() };
        let report = evaluate(&ds, &config).unwrap();
        for (key, v) in report.to_metric_map() {
            assert_eq!(v, 1.0, "{key}");
        }
        // class 2 has no boxes anywhere
        let empty = &report.classes[2];
        assert!(!empty.has_support);
        assert!(!report.to_metric_map().contains_key("class_2/rodeo"));
        assert_eq!(empty.acc, vec![1.0, 1.0]);
        assert_eq!(empty.ap, vec![None, None]);
        assert_eq!(empty.map, None);
        assert!(report.to_metric_map().contains_key("total/acc@50"));
    }

    #[test]
    fn unscored_predictions_need_ap_disabled() {
        let t = vec![lb(10.0, 10.0, 0)];
        let ds = Dataset::new(1, vec![ImageSample::new("a", t.clone(), t)]).unwrap();
        assert_eq!(evaluate(&ds, &EvalConfig::default()), Err(EvalError::MissingConfidence("a".into())));
        let report = evaluate(&ds, &EvalConfig { average_precision: false, ..Default::default() }).unwrap();
        assert_eq!(report.total.map, None);
        assert_eq!(report.total.acc, vec![1.0]);
    }
}
