//! Dataset files.
//!
//! Three on-disk formats hold either the targets or the predictions of a
//! dataset:
//!
//! * `canonical-json`: `{"schema_version", "classes", "images": [{"image_id",
//!   "width"?, "height"?, "boxes": [{"class", "x", "y", "w", "h",
//!   "confidence"?}]}]}` with center-format boxes and class names.
//! * `coco-corner-json`: COCO-style `images`, `annotations` and `categories`;
//!   `bbox` is `[x_min, y_min, w, h]`, `score` the optional confidence.
//! * `csv`: one box per row, header `image_id,class,x,y,w,h,confidence` plus
//!   optional `width,height`. A row with an empty class declares an image
//!   without boxes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rodeo_core::{BBox, ClassId, Dataset, EvalError, ImageSample, ImageSize, LabeledBox};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    CanonicalJson,
    CocoCornerJson,
    Csv,
}

impl Format {
    /// `csv` for a `.csv` extension, canonical JSON otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::CanonicalJson,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "canonical-json" | "json" => Ok(Self::CanonicalJson),
            "coco-corner-json" | "coco" => Ok(Self::CocoCornerJson),
            "csv" => Ok(Self::Csv),
            _ => Err(format!("unknown format `{s}` (expected canonical-json, coco-corner-json or csv)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CanonicalJson => "canonical-json",
            Self::CocoCornerJson => "coco-corner-json",
            Self::Csv => "csv",
        })
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: at `{field}`: {message}")]
    Json { path: String, field: String, message: String },
    #[error("{path}: line {line}{}: {message}", field.as_ref().map(|f| format!(", field `{f}`")).unwrap_or_default())]
    Csv { path: String, line: u64, field: Option<String>, message: String },
    #[error("{path}: {record}: {message}")]
    Record { path: String, record: String, message: String },
    #[error("{path}: {record}: unknown class `{class}`; vocabulary is [{}]", vocabulary.join(", "))]
    UnknownClass { path: String, record: String, class: String, vocabulary: Vec<String> },
    #[error("{path}: unsupported schema version `{found}` (expected {SCHEMA_VERSION})")]
    Schema { path: String, found: String },
    #[error("{path}: class `{class}` is listed twice")]
    DuplicateClass { path: String, class: String },
    #[error("{path}: image `{image_id}` appears more than once")]
    DuplicateImage { path: String, image_id: String },
    #[error("class vocabularies differ: targets [{}], predictions [{}]", targets.join(", "), predictions.join(", "))]
    VocabularyMismatch { targets: Vec<String>, predictions: Vec<String> },
    #[error("predictions reference image `{0}`, which is missing from the targets")]
    OrphanPrediction(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One image of a targets or predictions file.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub image_id: String,
    pub image_size: Option<ImageSize>,
    pub boxes: Vec<LabeledBox>,
}

/// Parsed and validated file: class names indexed by [`ClassId`].
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub classes: Vec<String>,
    pub images: Vec<ImageRecord>,
}

impl DatasetFile {
    /// Targets of a dataset as a file.
    pub fn targets_of(dataset: &Dataset, classes: Vec<String>) -> Self {
        Self::from_samples(dataset, classes, |s| &s.targets)
    }

    /// Predictions of a dataset as a file.
    pub fn predictions_of(dataset: &Dataset, classes: Vec<String>) -> Self {
        Self::from_samples(dataset, classes, |s| &s.predictions)
    }

    fn from_samples(dataset: &Dataset, classes: Vec<String>, side: impl Fn(&ImageSample) -> &Vec<LabeledBox>) -> Self {
        let images = dataset
            .samples()
            .iter()
            .map(|s| ImageRecord { image_id: s.image_id.clone(), image_size: s.image_size, boxes: side(s).clone() })
            .collect();
        Self { classes, images }
    }
}

/// `class_0`, `class_1`, ...
pub fn default_class_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("class_{i}")).collect()
}

struct Validator<'a> {
    path: &'a str,
    classes: &'a [String],
    index: HashMap<&'a str, u32>,
}

impl<'a> Validator<'a> {
    fn new(path: &'a str, classes: &'a [String]) -> Result<Self, DataError> {
        let mut index = HashMap::new();
        for (i, c) in classes.iter().enumerate() {
            if index.insert(c.as_str(), i as u32).is_some() {
                return Err(DataError::DuplicateClass { path: path.into(), class: c.clone() });
            }
        }
        Ok(Self { path, classes, index })
    }

    fn record_error(&self, record: &str, message: impl fmt::Display) -> DataError {
        DataError::Record { path: self.path.into(), record: record.into(), message: message.to_string() }
    }

    fn class(&self, record: &str, name: &str) -> Result<ClassId, DataError> {
        self.index.get(name).map(|&i| ClassId(i)).ok_or_else(|| DataError::UnknownClass {
            path: self.path.into(),
            record: record.into(),
            class: name.into(),
            vocabulary: self.classes.to_vec(),
        })
    }

    fn labeled(
        &self,
        record: &str,
        bbox: Result<BBox, rodeo_core::GeometryError>,
        class: &str,
        confidence: Option<f64>,
    ) -> Result<LabeledBox, DataError> {
        let bbox = bbox.map_err(|e| self.record_error(record, e))?;
        let class = self.class(record, class)?;
        if let Some(c) = confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(self.record_error(record, format_args!("confidence {c} is outside [0, 1]")));
            }
        }
        Ok(LabeledBox { bbox, class, confidence })
    }

    fn size(&self, record: &str, width: Option<f64>, height: Option<f64>) -> Result<Option<ImageSize>, DataError> {
        match (width, height) {
            (None, None) => Ok(None),
            (Some(w), Some(h)) if w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite() => Ok(Some(ImageSize { width: w, height: h })),
            (Some(_), Some(_)) => Err(self.record_error(record, "image width and height must be positive")),
            _ => Err(self.record_error(record, "image width and height must be given together")),
        }
    }
}

fn check_unique(path: &str, images: &[ImageRecord]) -> Result<(), DataError> {
    let mut seen = BTreeSet::new();
    for im in images {
        if !seen.insert(im.image_id.as_str()) {
            return Err(DataError::DuplicateImage { path: path.into(), image_id: im.image_id.clone() });
        }
    }
    Ok(())
}

fn check_vocabulary(file: &[String], expected: Option<&[String]>) -> Result<(), DataError> {
    match expected {
        Some(v) if v != file => Err(DataError::VocabularyMismatch { targets: v.to_vec(), predictions: file.to_vec() }),
        _ => Ok(()),
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &str, text: &str) -> Result<T, DataError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| DataError::Json {
        path: path.into(),
        field: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CanonicalDoc {
    schema_version: String,
    classes: Vec<String>,
    images: Vec<CanonicalImage>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CanonicalImage {
    image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<f64>,
    #[serde(default)]
    boxes: Vec<CanonicalBox>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CanonicalBox {
    class: String,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    confidence: Option<f64>,
}

fn read_canonical(path: &str, text: &str, vocab: Option<&[String]>) -> Result<DatasetFile, DataError> {
    let doc: CanonicalDoc = parse_json(path, text)?;
    if doc.schema_version.split('.').next() != Some("1") {
        return Err(DataError::Schema { path: path.into(), found: doc.schema_version });
    }
    check_vocabulary(&doc.classes, vocab)?;
    let v = Validator::new(path, &doc.classes)?;
    let mut images = Vec::with_capacity(doc.images.len());
    for (i, im) in doc.images.iter().enumerate() {
        let record = format!("images[{i}]");
        let image_size = v.size(&record, im.width, im.height)?;
        let boxes = im
            .boxes
            .iter()
            .enumerate()
            .map(|(j, b)| v.labeled(&format!("{record}.boxes[{j}]"), BBox::new(b.x, b.y, b.w, b.h), &b.class, b.confidence))
            .collect::<Result<_, _>>()?;
        images.push(ImageRecord { image_id: im.image_id.clone(), image_size, boxes });
    }
    check_unique(path, &images)?;
    Ok(DatasetFile { classes: doc.classes, images })
}

fn write_canonical(file: &DatasetFile) -> String {
    let doc = CanonicalDoc {
        schema_version: SCHEMA_VERSION.into(),
        classes: file.classes.clone(),
        images: file
            .images
            .iter()
            .map(|im| CanonicalImage {
                image_id: im.image_id.clone(),
                width: im.image_size.map(|s| s.width),
                height: im.image_size.map(|s| s.height),
                boxes: im
                    .boxes
                    .iter()
                    .map(|b| CanonicalBox {
                        class: file.classes[b.class.index()].clone(),
                        x: b.bbox.x(),
                        y: b.bbox.y(),
                        w: b.bbox.w(),
                        h: b.bbox.h(),
                        confidence: b.confidence,
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

#[derive(Serialize, Deserialize, Clone, PartialEq, Eq, Hash)]
#[serde(untagged)]
enum CocoId {
    Int(u64),
    Str(String),
}

impl CocoId {
    fn into_string(self) -> String {
        match self {
            Self::Int(i) => i.to_string(),
            Self::Str(s) => s,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CocoDoc {
    images: Vec<CocoImage>,
    #[serde(default)]
    annotations: Vec<CocoAnnotation>,
    categories: Vec<CocoCategory>,
}

#[derive(Serialize, Deserialize)]
struct CocoImage {
    id: CocoId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct CocoAnnotation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<u64>,
    image_id: CocoId,
    category_id: u64,
    bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct CocoCategory {
    id: u64,
    name: String,
}

fn read_coco(path: &str, text: &str, vocab: Option<&[String]>) -> Result<DatasetFile, DataError> {
    let doc: CocoDoc = parse_json(path, text)?;
    let mut categories: Vec<&CocoCategory> = doc.categories.iter().collect();
    categories.sort_by_key(|c| c.id);
    let classes: Vec<String> = categories.iter().map(|c| c.name.clone()).collect();
    check_vocabulary(&classes, vocab)?;
    let v = Validator::new(path, &classes)?;
    let name_of: BTreeMap<u64, &str> = categories.iter().map(|c| (c.id, c.name.as_str())).collect();

    let mut images = Vec::with_capacity(doc.images.len());
    let mut position = HashMap::new();
    for (i, im) in doc.images.into_iter().enumerate() {
        let record = format!("images[{i}]");
        let image_size = v.size(&record, im.width, im.height)?;
        let image_id = im.id.into_string();
        if position.insert(image_id.clone(), images.len()).is_some() {
            return Err(DataError::DuplicateImage { path: path.into(), image_id });
        }
        images.push(ImageRecord { image_id, image_size, boxes: Vec::new() });
    }
    for (i, a) in doc.annotations.into_iter().enumerate() {
        let record = format!("annotations[{i}]");
        let class = name_of.get(&a.category_id).copied().ok_or_else(|| DataError::UnknownClass {
            path: path.into(),
            record: record.clone(),
            class: format!("category_id {}", a.category_id),
            vocabulary: classes.clone(),
        })?;
        let [x_min, y_min, w, h] = a.bbox;
        let b = v.labeled(&record, BBox::from_corner(x_min, y_min, w, h), class, a.score)?;
        let image_id = a.image_id.into_string();
        let &slot = position
            .get(&image_id)
            .ok_or_else(|| v.record_error(&record, format_args!("image `{image_id}` is not listed under images")))?;
        images[slot].boxes.push(b);
    }
    Ok(DatasetFile { classes, images })
}

fn write_coco(file: &DatasetFile) -> String {
    let mut annotations = Vec::new();
    for im in &file.images {
        for b in &im.boxes {
            annotations.push(CocoAnnotation {
                id: Some(annotations.len() as u64 + 1),
                image_id: CocoId::Str(im.image_id.clone()),
                category_id: b.class.0 as u64 + 1,
                bbox: [b.bbox.x_min(), b.bbox.y_min(), b.bbox.w(), b.bbox.h()],
                score: b.confidence,
            });
        }
    }
    let doc = CocoDoc {
        images: file
            .images
            .iter()
            .map(|im| CocoImage {
                id: CocoId::Str(im.image_id.clone()),
                width: im.image_size.map(|s| s.width),
                height: im.image_size.map(|s| s.height),
            })
            .collect(),
        annotations,
        categories: file.classes.iter().enumerate().map(|(i, name)| CocoCategory { id: i as u64 + 1, name: name.clone() }).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    image_id: String,
    class: String,
    x: Option<f64>,
    y: Option<f64>,
    w: Option<f64>,
    h: Option<f64>,
    #[serde(default)]
    confidence: Option<f64>,
    #[serde(default)]
    width: Option<f64>,
    #[serde(default)]
    height: Option<f64>,
}

fn csv_error(path: &str, headers: &csv::StringRecord, line: u64, e: csv::Error) -> DataError {
    let line = e.position().map_or(line, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => DataError::Csv {
            path: path.into(),
            line,
            field: err.field().and_then(|i| headers.get(i as usize)).map(str::to_owned),
            message: err.kind().to_string(),
        },
        _ => DataError::Csv { path: path.into(), line, field: None, message: e.to_string() },
    }
}

fn read_csv(path: &str, text: &str, vocab: Option<&[String]>) -> Result<DatasetFile, DataError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_error(path, &csv::StringRecord::new(), 1, e))?.clone();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, &headers, 0, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let row: CsvRow = record.deserialize(Some(&headers)).map_err(|e| csv_error(path, &headers, line, e))?;
        rows.push((line, row));
    }

    let classes = match vocab {
        Some(v) => v.to_vec(),
        None => {
            rows.iter().filter(|(_, r)| !r.class.is_empty()).map(|(_, r)| r.class.clone()).collect::<BTreeSet<_>>().into_iter().collect()
        }
    };
    let v = Validator::new(path, &classes)?;
    let mut images: Vec<ImageRecord> = Vec::new();
    let mut position: HashMap<String, usize> = HashMap::new();
    for (line, r) in rows {
        let record = format!("line {line}");
        let image_size = v.size(&record, r.width, r.height)?;
        let slot = *position.entry(r.image_id.clone()).or_insert_with(|| {
            images.push(ImageRecord { image_id: r.image_id.clone(), image_size: None, boxes: Vec::new() });
            images.len() - 1
        });
        let image = &mut images[slot];
        match (image.image_size, image_size) {
            (None, s) => image.image_size = s,
            (Some(a), Some(b)) if a != b => return Err(v.record_error(&record, "image size differs from an earlier row")),
            _ => {}
        }
        if r.class.is_empty() {
            if r.x.is_some() || r.y.is_some() || r.w.is_some() || r.h.is_some() || r.confidence.is_some() {
                return Err(v.record_error(&record, "box fields given without a class"));
            }
            continue;
        }
        let coord = |value: Option<f64>, name: &str| {
            value.ok_or_else(|| DataError::Csv { path: path.into(), line, field: Some(name.into()), message: "missing value".into() })
        };
        let bbox = BBox::new(coord(r.x, "x")?, coord(r.y, "y")?, coord(r.w, "w")?, coord(r.h, "h")?);
        image.boxes.push(v.labeled(&record, bbox, &r.class, r.confidence)?);
    }
    Ok(DatasetFile { classes, images })
}

fn write_csv(file: &DatasetFile) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let size = |im: &ImageRecord| (im.image_size.map(|s| s.width), im.image_size.map(|s| s.height));
    for im in &file.images {
        let (width, height) = size(im);
        if im.boxes.is_empty() {
            let row = CsvRow {
                image_id: im.image_id.clone(),
                class: String::new(),
                x: None,
                y: None,
                w: None,
                h: None,
                confidence: None,
                width,
                height,
            };
            writer.serialize(row).expect("in-memory write");
        }
        for b in &im.boxes {
            writer
                .serialize(CsvRow {
                    image_id: im.image_id.clone(),
                    class: file.classes[b.class.index()].clone(),
                    x: Some(b.bbox.x()),
                    y: Some(b.bbox.y()),
                    w: Some(b.bbox.w()),
                    h: Some(b.bbox.h()),
                    confidence: b.confidence,
                    width,
                    height,
                })
                .expect("in-memory write");
        }
    }
    if file.images.is_empty() {
        writer.write_record(["image_id", "class", "x", "y", "w", "h", "confidence", "width", "height"]).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
}

/// Parses a dataset file held in memory. `path` only labels errors. With
/// `vocab`, classes must resolve against it: CSV adopts it, JSON formats
/// must declare exactly it.
pub fn parse_dataset(path: &str, text: &str, format: Format, vocab: Option<&[String]>) -> Result<DatasetFile, DataError> {
    match format {
        Format::CanonicalJson => read_canonical(path, text, vocab),
        Format::CocoCornerJson => read_coco(path, text, vocab),
        Format::Csv => read_csv(path, text, vocab),
    }
}

pub fn load_dataset(path: &Path, format: Format, vocab: Option<&[String]>) -> Result<DatasetFile, DataError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| DataError::Io { path: name.clone(), source })?;
    parse_dataset(&name, &text, format, vocab)
}

pub fn render_dataset(file: &DatasetFile, format: Format) -> String {
    match format {
        Format::CanonicalJson => write_canonical(file),
        Format::CocoCornerJson => write_coco(file),
        Format::Csv => write_csv(file),
    }
}

pub fn save_dataset(file: &DatasetFile, path: &Path, format: Format) -> Result<(), DataError> {
    fs::write(path, render_dataset(file, format)).map_err(|source| DataError::Io { path: path.display().to_string(), source })
}

/// Joins targets and predictions on the image id. Images without a
/// predictions entry get no predictions; image sizes come from the targets
/// file unless only the predictions carry them.
pub fn pair_datasets(targets: &DatasetFile, predictions: &DatasetFile) -> Result<Dataset, DataError> {
    if targets.classes != predictions.classes {
        return Err(DataError::VocabularyMismatch { targets: targets.classes.clone(), predictions: predictions.classes.clone() });
    }
    let mut by_id: HashMap<&str, &ImageRecord> = predictions.images.iter().map(|im| (im.image_id.as_str(), im)).collect();
    let samples = targets
        .images
        .iter()
        .map(|t| {
            let p = by_id.remove(t.image_id.as_str());
            ImageSample {
                image_id: t.image_id.clone(),
                image_size: t.image_size.or(p.and_then(|p| p.image_size)),
                targets: t.boxes.clone(),
                predictions: p.map(|p| p.boxes.clone()).unwrap_or_default(),
            }
        })
        .collect();
    if let Some(orphan) = predictions.images.iter().find(|im| by_id.contains_key(im.image_id.as_str())) {
        return Err(DataError::OrphanPrediction(orphan.image_id.clone()));
    }
    Ok(Dataset::new(targets.classes.len(), samples)?)
}
