use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("box coordinates must be finite")]
    NonFinite,
    #[error("box extent must be positive, got w={w}, h={h}")]
    NonPositiveExtent { w: f64, h: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("cannot compute a correlation over an empty label set")]
    EmptyPairs,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("cost matrix needs at least one target and one prediction")]
    EmptySide,
    #[error("class weight must lie in [0, 1], got {0}")]
    ClassWeight(f64),
    #[error("shape weight must be non-negative and finite, got {0}")]
    ShapeWeight(f64),
}

/// Errors raised while building or evaluating a dataset.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("dataset contains no images")]
    EmptyDataset,
    #[error("dataset declares no classes")]
    NoClasses,
    #[error("image `{image_id}`: class {class} is outside the vocabulary of {num_classes} classes")]
    UnknownClass { image_id: String, class: u32, num_classes: usize },
    #[error("image `{image_id}`: confidence {value} is outside [0, 1]")]
    Confidence { image_id: String, value: f64 },
    #[error("image id `{0}` appears more than once")]
    DuplicateImage(String),
    #[error("image `{0}`: average precision needs a confidence on every prediction")]
    MissingConfidence(String),
    #[error("IoU threshold must lie in (0, 1], got {0}")]
    Threshold(f64),
    #[error("threshold list is empty")]
    NoThresholds,
    #[error("image `{0}`: image size must be positive")]
    ImageSize(String),
    #[error(transparent)]
    Match(#[from] MatchError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorruptionError {
    #[error("corruption parameter `{name}` is out of range: {value}")]
    Parameter { name: &'static str, value: f64 },
    #[error("image `{0}` has no image size, which random box placement needs")]
    MissingImageSize(String),
    #[error("random box does not fit into image `{0}`")]
    BoxTooLarge(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("number of runs must be at least 1")]
    NoRuns,
    #[error("no metrics selected")]
    NoMetrics,
    #[error(transparent)]
    Corruption(#[from] CorruptionError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
