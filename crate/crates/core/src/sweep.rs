//! Metric sensitivity sweeps: evaluate selected metrics on corrupted oracles
//! over a grid of corruption settings, averaged over repeated runs.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::baselines::{self, ApInterpolation};
use crate::corruption::{corrupt_dataset, CorruptionSpec};
use crate::error::{EvalError, SweepError};
use crate::evaluate::{parse_threshold_label, threshold_label};
use crate::rodeo::{MatchedDataset, RodeoConfig};
use crate::sample::Dataset;

/// A scalar dataset-level metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Rodeo,
    RodeoLoc,
    RodeoShape,
    RodeoCls,
    /// `|M| / (|M| + |U^t| + |U^p|)`, the over/under-prediction scaling.
    OverUnderFactor,
    AccAt(f64),
    ApAt(f64),
    Map,
}

impl Metric {
    fn needs_matching(self) -> bool {
        matches!(self, Self::Rodeo | Self::RodeoLoc | Self::RodeoShape | Self::RodeoCls | Self::OverUnderFactor)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Rodeo => f.write_str("rodeo"),
            Self::RodeoLoc => f.write_str("rodeo_loc"),
            Self::RodeoShape => f.write_str("rodeo_shape"),
            Self::RodeoCls => f.write_str("rodeo_cls"),
            Self::OverUnderFactor => f.write_str("rodeo_overunder"),
            Self::AccAt(t) => write!(f, "acc@{}", threshold_label(*t)),
            Self::ApAt(t) => write!(f, "ap@{}", threshold_label(*t)),
            Self::Map => f.write_str("map"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMetric(pub String);

impl fmt::Display for UnknownMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown metric `{}` (expected rodeo, rodeo_loc, rodeo_shape, rodeo_cls, rodeo_overunder, acc@<t>, ap@<t> or map)",
            self.0
        )
    }
}

impl FromStr for Metric {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let metric = match s {
            "rodeo" => Some(Self::Rodeo),
            "rodeo_loc" => Some(Self::RodeoLoc),
            "rodeo_shape" => Some(Self::RodeoShape),
            "rodeo_cls" => Some(Self::RodeoCls),
            "rodeo_overunder" => Some(Self::OverUnderFactor),
            "map" => Some(Self::Map),
            _ => {
                if let Some(t) = s.strip_prefix("acc@") {
                    parse_threshold_label(t).map(Self::AccAt)
                } else if let Some(t) = s.strip_prefix("ap@") {
                    parse_threshold_label(t).map(Self::ApAt)
                } else {
                    None
                }
            }
        };
        metric.ok_or_else(|| UnknownMetric(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub metrics: Vec<Metric>,
    pub runs: usize,
    pub map_thresholds: Vec<f64>,
    pub interpolation: ApInterpolation,
    pub rodeo: RodeoConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            metrics: alloc::vec![
                Metric::Rodeo,
                Metric::RodeoLoc,
                Metric::RodeoShape,
                Metric::RodeoCls,
                Metric::AccAt(0.5),
                Metric::ApAt(0.5),
                Metric::Map
            ],
            runs: 5,
            map_thresholds: baselines::default_map_thresholds(),
            interpolation: ApInterpolation::AllPoint,
            rodeo: RodeoConfig::default(),
        }
    }
}

/// Mean and spread of one metric at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Index into the grid.
    pub point: usize,
    pub spec: CorruptionSpec,
    pub metric: Metric,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
    pub runs: usize,
}

/// Evaluates `metrics` on one dataset, in order.
pub fn evaluate_metrics(dataset: &Dataset, config: &SweepConfig) -> Result<Vec<f64>, EvalError> {
    let rodeo = if config.metrics.iter().any(|m| m.needs_matching()) {
        Some(MatchedDataset::new(dataset.samples(), config.rodeo)?.overall())
    } else {
        None
    };
    config
        .metrics
        .iter()
        .map(|m| {
            Ok(match *m {
                Metric::Rodeo => rodeo.as_ref().map_or(0.0, |r| r.total),
                Metric::RodeoLoc => rodeo.as_ref().map_or(0.0, |r| r.loc),
                Metric::RodeoShape => rodeo.as_ref().map_or(0.0, |r| r.shape),
                Metric::RodeoCls => rodeo.as_ref().map_or(0.0, |r| r.cls),
                Metric::OverUnderFactor => rodeo.as_ref().map_or(0.0, |r| r.overunder_factor()),
                Metric::AccAt(t) => baselines::acc_at_iou(dataset, t)?,
                Metric::ApAt(t) => baselines::ap_at_iou(dataset, t, None, config.interpolation)?,
                Metric::Map => baselines::map(dataset, &config.map_thresholds, config.interpolation)?,
            })
        })
        .collect()
}

/// Metric values for run `run` of a grid point, seeded `spec.seed + run`.
pub fn run_point(dataset: &Dataset, spec: &CorruptionSpec, run: usize, config: &SweepConfig) -> Result<Vec<f64>, SweepError> {
    let seeded = CorruptionSpec { seed: spec.seed.wrapping_add(run as u64), ..*spec };
    let corrupted = corrupt_dataset(dataset, &seeded)?;
    Ok(evaluate_metrics(&corrupted, config)?)
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, libm::sqrt(var))
}

/// Rows of one grid point from its per-run metric vectors.
pub fn summarize(point: usize, spec: &CorruptionSpec, metrics: &[Metric], runs: &[Vec<f64>]) -> Vec<SweepRow> {
    metrics
        .iter()
        .enumerate()
        .map(|(i, &metric)| {
            let values: Vec<f64> = runs.iter().map(|r| r[i]).collect();
            let (mean, std) = mean_std(&values);
            SweepRow { point, spec: *spec, metric, mean, std, runs: runs.len() }
        })
        .collect()
}

pub fn validate(grid: &[CorruptionSpec], config: &SweepConfig) -> Result<(), SweepError> {
    if grid.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    if config.runs == 0 {
        return Err(SweepError::NoRuns);
    }
    if config.metrics.is_empty() {
        return Err(SweepError::NoMetrics);
    }
    for spec in grid {
        spec.validate()?;
    }
    Ok(())
}

/// Sequential sweep; rows ordered by grid point, then metric.
pub fn run_sweep(dataset: &Dataset, grid: &[CorruptionSpec], config: &SweepConfig) -> Result<Vec<SweepRow>, SweepError> {
    validate(grid, config)?;
    let mut rows = Vec::with_capacity(grid.len() * config.metrics.len());
    for (point, spec) in grid.iter().enumerate() {
        let runs = (0..config.runs).map(|r| run_point(dataset, spec, r, config)).collect::<Result<Vec<_>, _>>()?;
        rows.extend(summarize(point, spec, &config.metrics, &runs));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{synthetic_dataset, SyntheticConfig};
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn metric_names_round_trip() {
        for m in [
            Metric::Rodeo,
            Metric::RodeoLoc,
            Metric::RodeoShape,
            Metric::RodeoCls,
            Metric::OverUnderFactor,
            Metric::AccAt(0.5),
            Metric::ApAt(0.3),
            Metric::ApAt(0.425),
            Metric::Map,
        ] {
            assert_eq!(m.to_string().parse::<Metric>(), Ok(m));
        }
        assert!("acc@".parse::<Metric>().is_err());
        assert!("f1".parse::<Metric>().is_err());
    }

    #[test]
    fn mean_and_sample_std() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - libm::sqrt(5.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn identity_point_is_perfect_and_deterministic() {
        let ds = synthetic_dataset(&SyntheticConfig { images: 20, ..Default::default() }, 3);
        let config = SweepConfig { runs: 2, ..Default::default() };
        let rows = run_sweep(&ds, &[CorruptionSpec::default()], &config).unwrap();
        assert_eq!(rows.len(), config.metrics.len());
        for r in &rows {
            assert_eq!((r.mean, r.std), (1.0, 0.0), "{}", r.metric);
        }
        let noisy = CorruptionSpec { sigma_pos: 0.3, p_cls_confuse: 0.2, seed: 11, ..Default::default() };
        assert_eq!(run_sweep(&ds, &[noisy], &config).unwrap(), run_sweep(&ds, &[noisy], &config).unwrap());
    }

    #[test]
    fn position_noise_lowers_localization() {
        let ds = synthetic_dataset(&SyntheticConfig { images: 100, ..Default::default() }, 5);
        let grid: Vec<_> = [0.0, 0.5, 1.0].iter().map(|&s| CorruptionSpec { sigma_pos: s, ..Default::default() }).collect();
        let config = SweepConfig { metrics: vec![Metric::RodeoLoc], runs: 3, ..Default::default() };
        let rows = run_sweep(&ds, &grid, &config).unwrap();
        assert!(rows[0].mean > rows[1].mean && rows[1].mean > rows[2].mean);
    }

    #[test]
    fn sweep_errors() {
        let ds = synthetic_dataset(&SyntheticConfig { images: 2, ..Default::default() }, 0);
        let config = SweepConfig::default();
        assert_eq!(run_sweep(&ds, &[], &config), Err(SweepError::EmptyGrid));
        let zero = SweepConfig { runs: 0, ..config.clone() };
        assert_eq!(run_sweep(&ds, &[CorruptionSpec::default()], &zero), Err(SweepError::NoRuns));
        let bad = CorruptionSpec { p_overpred: 2.0, ..Default::default() };
        assert!(matches!(run_sweep(&ds, &[bad], &config), Err(SweepError::Corruption(_))));
    }
}
