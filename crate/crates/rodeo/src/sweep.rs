//! Sweep grid files, parallel execution and the sweep table formats.
//!
//! A grid file is JSON:
//!
//! ```json
//! {
//!   "seed": 7,
//!   "runs": 5,
//!   "metrics": ["rodeo", "acc@50", "ap@50"],
//!   "base": {"sigma_pos": 0.5},
//!   "axes": [{"parameter": "p_underpred", "values": [0, 0.25, 0.5, 0.75, 1]}]
//! }
//! ```
//!
//! Grid points are the cartesian product of the axes, the first axis varying
//! slowest, applied on top of `base`.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use rodeo_core::baselines::{threshold_range, ApInterpolation};
use rodeo_core::corruption::CorruptionSpec;
use rodeo_core::sweep::{run_point, summarize, validate, Metric, SweepConfig, SweepRow};
use rodeo_core::{Dataset, SweepError};
use serde::{de, Deserialize, Deserializer};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    SigmaPos,
    PosBias,
    SigmaShape,
    SigmaSize,
    SigmaRatio,
    PUnderpred,
    POverpred,
    ExpectedDuplications,
    PClsConfuse,
    RandomBoxSize,
}

impl Parameter {
    pub const ALL: [Parameter; 10] = [
        Self::SigmaPos,
        Self::PosBias,
        Self::SigmaShape,
        Self::SigmaSize,
        Self::SigmaRatio,
        Self::PUnderpred,
        Self::POverpred,
        Self::ExpectedDuplications,
        Self::PClsConfuse,
        Self::RandomBoxSize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SigmaPos => "sigma_pos",
            Self::PosBias => "pos_bias",
            Self::SigmaShape => "sigma_shape",
            Self::SigmaSize => "sigma_size",
            Self::SigmaRatio => "sigma_ratio",
            Self::PUnderpred => "p_underpred",
            Self::POverpred => "p_overpred",
            Self::ExpectedDuplications => "expected_duplications",
            Self::PClsConfuse => "p_cls_confuse",
            Self::RandomBoxSize => "random_box_size",
        }
    }

    pub fn set(self, spec: &mut CorruptionSpec, v: f64) {
        match self {
            Self::SigmaPos => spec.sigma_pos = v,
            Self::PosBias => spec.pos_bias = v,
            Self::SigmaShape => spec.sigma_shape = v,
            Self::SigmaSize => spec.sigma_size = v,
            Self::SigmaRatio => spec.sigma_ratio = v,
            Self::PUnderpred => spec.p_underpred = v,
            Self::POverpred => spec.p_overpred = v,
            Self::ExpectedDuplications => spec.expected_duplications = v,
            Self::PClsConfuse => spec.p_cls_confuse = v,
            Self::RandomBoxSize => spec.random_box_size = Some(v),
        }
    }

    /// Value in `spec`; `None` only for an unset random box size.
    pub fn get(self, spec: &CorruptionSpec) -> Option<f64> {
        Some(match self {
            Self::SigmaPos => spec.sigma_pos,
            Self::PosBias => spec.pos_bias,
            Self::SigmaShape => spec.sigma_shape,
            Self::SigmaSize => spec.sigma_size,
            Self::SigmaRatio => spec.sigma_ratio,
            Self::PUnderpred => spec.p_underpred,
            Self::POverpred => spec.p_overpred,
            Self::ExpectedDuplications => spec.expected_duplications,
            Self::PClsConfuse => spec.p_cls_confuse,
            Self::RandomBoxSize => return spec.random_box_size,
        })
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

struct MetricName(Metric);

impl<'de> Deserialize<'de> for MetricName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map(MetricName).map_err(de::Error::custom)
    }
}

fn default_runs() -> usize {
    5
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_runs")]
    runs: usize,
    #[serde(default)]
    metrics: Option<Vec<MetricName>>,
    /// `"lo:hi:step"`
    #[serde(default)]
    map_thresholds: Option<String>,
    #[serde(default)]
    eleven_point: bool,
    #[serde(default)]
    base: BTreeMap<String, f64>,
    #[serde(default)]
    axes: Vec<RawAxis>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    parameter: Parameter,
    values: Vec<f64>,
}

#[derive(Debug, Error)]
#[error("{file}: at `{key}`: {message}")]
pub struct GridError {
    pub file: String,
    pub key: String,
    pub message: String,
}

/// Parsed grid: points in order plus what to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub axes: Vec<Parameter>,
    pub points: Vec<CorruptionSpec>,
    pub config: SweepConfig,
}

/// `"lo:hi:step"` to an inclusive threshold list.
pub fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(format!("expected lo:hi:step, got `{s}`"));
    };
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    threshold_range(num(lo)?, num(hi)?, num(step)?).map_err(|e| e.to_string())
}

pub fn parse_grid(file: &str, text: &str) -> Result<Grid, GridError> {
    let err = |key: String, message: String| GridError { file: file.into(), key, message };
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawGrid = serde_path_to_error::deserialize(de).map_err(|e| err(e.path().to_string(), e.into_inner().to_string()))?;

    let mut base = CorruptionSpec { seed: raw.seed, ..Default::default() };
    for (name, &v) in &raw.base {
        let key = format!("base.{name}");
        let p = Parameter::ALL.iter().find(|p| p.name() == name).ok_or_else(|| err(key.clone(), format!("unknown parameter `{name}`")))?;
        p.set(&mut base, v);
        check(*p, v).map_err(|m| err(key, m))?;
    }
    for (i, axis) in raw.axes.iter().enumerate() {
        if axis.values.is_empty() {
            return Err(err(format!("axes[{i}].values"), "axis has no values".into()));
        }
        for (j, &v) in axis.values.iter().enumerate() {
            check(axis.parameter, v).map_err(|m| err(format!("axes[{i}].values[{j}]"), m))?;
        }
    }
    if raw.runs == 0 {
        return Err(err("runs".into(), "number of runs must be at least 1".into()));
    }
    let mut config = SweepConfig { runs: raw.runs, ..Default::default() };
    if let Some(m) = raw.metrics {
        if m.is_empty() {
            return Err(err("metrics".into(), "no metrics selected".into()));
        }
        config.metrics = m.into_iter().map(|m| m.0).collect();
    }
    if let Some(r) = raw.map_thresholds {
        config.map_thresholds = parse_range(&r).map_err(|m| err("map_thresholds".into(), m))?;
    }
    if raw.eleven_point {
        config.interpolation = ApInterpolation::ElevenPoint;
    }

    let mut points = vec![base];
    for axis in &raw.axes {
        points = points
            .iter()
            .flat_map(|p| {
                axis.values.iter().map(move |&v| {
                    let mut q = *p;
                    axis.parameter.set(&mut q, v);
                    q
                })
            })
            .collect();
    }
    Ok(Grid { axes: raw.axes.iter().map(|a| a.parameter).collect(), points, config })
}

fn check(p: Parameter, v: f64) -> Result<(), String> {
    let mut spec = CorruptionSpec::default();
    p.set(&mut spec, v);
    spec.validate().map_err(|e| e.to_string())
}

/// Runs every (grid point, run) pair on the rayon pool. Output is identical
/// to [`rodeo_core::sweep::run_sweep`] for any number of workers.
pub fn par_run_sweep(dataset: &Dataset, grid: &[CorruptionSpec], config: &SweepConfig) -> Result<Vec<SweepRow>, SweepError> {
    validate(grid, config)?;
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|p| (0..config.runs).map(move |r| (p, r))).collect();
    let values = jobs.par_iter().map(|&(p, r)| run_point(dataset, &grid[p], r, config)).collect::<Result<Vec<_>, _>>()?;
    Ok(values
        .chunks(config.runs)
        .zip(grid)
        .enumerate()
        .flat_map(|(point, (runs, spec))| summarize(point, spec, &config.metrics, runs))
        .collect())
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Sweep table: one row per grid point and metric, columns
/// `<axes...>,metric,mean,std,runs`.
pub fn render_sweep_table(rows: &[SweepRow], axes: &[Parameter]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = axes.iter().map(|a| a.name().to_string()).collect();
    header.extend(["metric", "mean", "std", "runs"].map(String::from));
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut rec: Vec<String> = axes.iter().map(|a| cell(a.get(&r.spec))).collect();
        rec.extend([r.metric.to_string(), r.mean.to_string(), r.std.to_string(), r.runs.to_string()]);
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Per-axis marginals: for every axis value and metric, the mean, minimum
/// and maximum of the grid-point means sharing that value.
pub fn render_summary(rows: &[SweepRow], axes: &[Parameter]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["parameter", "value", "metric", "mean", "min", "max", "points"]).expect("in-memory write");
    for &axis in axes {
        // keyed by first appearance to keep the grid order
        let mut groups: Vec<(String, String, Vec<f64>)> = Vec::new();
        for r in rows {
            let (value, metric) = (cell(axis.get(&r.spec)), r.metric.to_string());
            match groups.iter_mut().find(|g| g.0 == value && g.1 == metric) {
                Some(g) => g.2.push(r.mean),
                None => groups.push((value, metric, vec![r.mean])),
            }
        }
        for (value, metric, means) in groups {
            let mean = means.iter().sum::<f64>() / means.len() as f64;
            let min = means.iter().copied().fold(f64::INFINITY, f64::min);
            let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            w.write_record([
                axis.name().to_string(),
                value,
                metric,
                mean.to_string(),
                min.to_string(),
                max.to_string(),
                means.len().to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Sweep table held as text cells, so reshaping is lossless.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepTable {
    pub parameters: Vec<String>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub values: Vec<String>,
    pub metric: String,
    pub mean: String,
    pub std: String,
    pub runs: String,
}

const STAT_COLUMNS: [&str; 4] = ["metric", "mean", "std", "runs"];
const LONG_HEADER: [&str; 7] = ["point", "parameter", "value", "metric", "mean", "std", "runs"];

pub fn parse_sweep_table(text: &str) -> Result<SweepTable, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    let n = header.len();
    if n < 4 || header[n - 4..] != STAT_COLUMNS {
        return Err(format!("expected the last columns to be {}", STAT_COLUMNS.join(",")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let cells: Vec<String> = rec.iter().map(String::from).collect();
        rows.push(TableRow {
            values: cells[..n - 4].to_vec(),
            metric: cells[n - 4].clone(),
            mean: cells[n - 3].clone(),
            std: cells[n - 2].clone(),
            runs: cells[n - 1].clone(),
        });
    }
    Ok(SweepTable { parameters: header[..n - 4].to_vec(), rows })
}

/// Long format: one row per grid point, metric and parameter, columns
/// `point,parameter,value,metric,mean,std,runs`. Without parameters the
/// parameter and value cells stay empty.
pub fn to_long(table: &SweepTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(LONG_HEADER).expect("in-memory write");
    let mut points: Vec<&Vec<String>> = Vec::new();
    for row in &table.rows {
        let point = points.iter().position(|p| **p == row.values).unwrap_or_else(|| {
            points.push(&row.values);
            points.len() - 1
        });
        let stats = [row.metric.as_str(), &row.mean, &row.std, &row.runs];
        if table.parameters.is_empty() {
            let mut rec = vec![point.to_string(), String::new(), String::new()];
            rec.extend(stats.iter().map(|s| s.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        for (name, value) in table.parameters.iter().zip(&row.values) {
            let mut rec = vec![point.to_string(), name.clone(), value.clone()];
            rec.extend(stats.iter().map(|s| s.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Writes a [`SweepTable`] back in the sweep table layout.
pub fn render_table(table: &SweepTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = table.parameters.clone();
    header.extend(STAT_COLUMNS.map(String::from));
    w.write_record(&header).expect("in-memory write");
    for row in &table.rows {
        let mut rec = row.values.clone();
        rec.extend([row.metric.clone(), row.mean.clone(), row.std.clone(), row.runs.clone()]);
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Inverse of [`to_long`].
pub fn from_long(text: &str) -> Result<SweepTable, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    if header != LONG_HEADER {
        return Err(format!("expected header {}", LONG_HEADER.join(",")));
    }
    let mut parameters: Vec<String> = Vec::new();
    let mut rows: Vec<((String, String), TableRow)> = Vec::new();
    for rec in r.records() {
        let c: Vec<String> = rec.map_err(|e| e.to_string())?.iter().map(String::from).collect();
        let key = (c[0].clone(), c[3].clone());
        let row = match rows.iter_mut().find(|(k, _)| *k == key) {
            Some((_, row)) => row,
            None => {
                let row = TableRow { values: Vec::new(), metric: c[3].clone(), mean: c[4].clone(), std: c[5].clone(), runs: c[6].clone() };
                rows.push((key, row));
                &mut rows.last_mut().expect("just pushed").1
            }
        };
        if !c[1].is_empty() {
            if !parameters.contains(&c[1]) {
                parameters.push(c[1].clone());
            }
            row.values.push(c[2].clone());
        }
    }
    Ok(SweepTable { parameters, rows: rows.into_iter().map(|(_, r)| r).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_cartesian_first_axis_slowest() {
        let g = parse_grid(
            "g.json",
            r#"{"seed": 3, "base": {"sigma_pos": 0.5},
                "axes": [{"parameter": "p_underpred", "values": [0, 1]},
                         {"parameter": "expected_duplications", "values": [0, 2, 4]}]}"#,
        )
        .unwrap();
        assert_eq!(g.points.len(), 6);
        let pairs: Vec<_> = g.points.iter().map(|p| (p.p_underpred, p.expected_duplications)).collect();
        assert_eq!(pairs, vec![(0.0, 0.0), (0.0, 2.0), (0.0, 4.0), (1.0, 0.0), (1.0, 2.0), (1.0, 4.0)]);
        assert!(g.points.iter().all(|p| p.sigma_pos == 0.5 && p.seed == 3));
        assert_eq!(g.config.runs, 5);
    }

    #[test]
    fn grid_errors_name_the_key() {
        let e = parse_grid("g.json", r#"{"axes": [{"parameter": "p_underpred", "values": [0, 1.5]}]}"#).unwrap_err();
        assert_eq!(e.key, "axes[0].values[1]");
        let e = parse_grid("g.json", r#"{"axes": [{"parameter": "sigma", "values": [0]}]}"#).unwrap_err();
        assert_eq!(e.key, "axes[0].parameter");
        let e = parse_grid("g.json", r#"{"metrics": ["rodeo", "f1"]}"#).unwrap_err();
        assert_eq!(e.key, "metrics[1]");
        let e = parse_grid("g.json", r#"{"base": {"sigma_pos": -1}}"#).unwrap_err();
        assert_eq!(e.key, "base.sigma_pos");
        let e = parse_grid("g.json", r#"{"bogus": 1}"#).unwrap_err();
        assert!(e.message.contains("bogus"));
        assert!(e.to_string().starts_with("g.json: at `"));
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0.1:0.7:0.1").unwrap(), vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]);
        assert!(parse_range("0.1:0.7").is_err());
        assert!(parse_range("0.5:0.1:0.1").is_err());
    }
}
