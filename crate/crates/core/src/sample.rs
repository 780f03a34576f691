//! Labeled boxes, per-image samples and datasets.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::EvalError;
use crate::geometry::BBox;

/// Index into a class vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledBox {
    pub bbox: BBox,
    pub class: ClassId,
    pub confidence: Option<f64>,
}

impl LabeledBox {
    pub fn new(bbox: BBox, class: ClassId) -> Self {
        Self { bbox, class, confidence: None }
    }

    pub fn with_confidence(self, confidence: f64) -> Self {
        Self { confidence: Some(confidence), ..self }
    }
}

/// Image extent in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSize {
    pub width: f64,
    pub height: f64,
}

/// Target and predicted boxes of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSample {
    pub image_id: String,
    pub image_size: Option<ImageSize>,
    pub targets: Vec<LabeledBox>,
    pub predictions: Vec<LabeledBox>,
}

impl ImageSample {
    pub fn new(image_id: impl Into<String>, targets: Vec<LabeledBox>, predictions: Vec<LabeledBox>) -> Self {
        Self { image_id: image_id.into(), image_size: None, targets, predictions }
    }

    pub fn with_image_size(self, width: f64, height: f64) -> Self {
        Self { image_size: Some(ImageSize { width, height }), ..self }
    }

    /// Classes with at least one target box, ascending.
    pub fn positive_classes(&self) -> BTreeSet<ClassId> {
        self.targets.iter().map(|b| b.class).collect()
    }
}

/// Samples together with the size of their class vocabulary.
///
/// Construction checks that image ids are unique, every class id is in the
/// vocabulary and confidences lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    num_classes: usize,
    samples: Vec<ImageSample>,
}

impl Dataset {
    pub fn new(num_classes: usize, samples: Vec<ImageSample>) -> Result<Self, EvalError> {
        if num_classes == 0 {
            return Err(EvalError::NoClasses);
        }
        let mut seen = BTreeSet::new();
        for s in &samples {
            if !seen.insert(s.image_id.as_str()) {
                return Err(EvalError::DuplicateImage(s.image_id.clone()));
            }
            if let Some(size) = s.image_size {
                if !(size.width > 0.0 && size.height > 0.0 && size.width.is_finite() && size.height.is_finite()) {
                    return Err(EvalError::ImageSize(s.image_id.clone()));
                }
            }
            for b in s.targets.iter().chain(&s.predictions) {
                if b.class.index() >= num_classes {
                    return Err(EvalError::UnknownClass { image_id: s.image_id.clone(), class: b.class.0, num_classes });
                }
                if let Some(c) = b.confidence {
                    if !(0.0..=1.0).contains(&c) {
                        return Err(EvalError::Confidence { image_id: s.image_id.clone(), value: c });
                    }
                }
            }
        }
        Ok(Self { num_classes, samples })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn samples(&self) -> &[ImageSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<ImageSample> {
        self.samples
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> {
        (0..self.num_classes as u32).map(ClassId)
    }

    /// Same targets and vocabulary, predictions replaced per image.
    pub(crate) fn with_predictions(&self, predictions: Vec<Vec<LabeledBox>>) -> Self {
        let samples = self.samples.iter().zip(predictions).map(|(s, p)| ImageSample { predictions: p, ..s.clone() }).collect();
        Self { num_classes: self.num_classes, samples }
    }
}
