#![no_std]
//! Detection-outcome metrics for object detection.
//!
//! Boxes are center-format `(x, y, w, h)`. [`rodeo`] scores a dataset by
//! optimal one-to-one assignment of predictions to targets; [`baselines`]
//! provides IoU-threshold accuracy and average precision; [`corruption`]
//! generates oracle predictions for sensitivity studies driven by [`sweep`].

extern crate alloc;

pub mod assignment;
pub mod baselines;
pub mod corruption;
pub mod error;
pub mod evaluate;
pub mod geometry;
pub mod matching;
pub mod rodeo;
pub mod sample;
pub mod stats;
pub mod sweep;
pub mod synthetic;

pub use error::{CorruptionError, EvalError, GeometryError, MatchError, StatsError, SweepError};
pub use geometry::BBox;
pub use sample::{ClassId, Dataset, ImageSample, ImageSize, LabeledBox};
