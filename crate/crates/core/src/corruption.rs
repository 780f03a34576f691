//! Oracle models: predictions generated from the ground truth by
//! parameterized random corruption.
//!
//! Box-level operations act on a single [`BBox`]. Sample-level operations act
//! on the predictions of an [`ImageSample`] and leave its targets alone.
//! [`corrupt_sample`] starts from the targets and composes the active
//! operations in a fixed order:
//!
//! 1. class level: drop classes, add classes (or random class-oracle boxes),
//!    confuse classes;
//! 2. box duplication;
//! 3. geometry: position bias, position noise, shape, size, aspect ratio.
//!
//! Randomness comes from one ChaCha stream per image, keyed by the seed and
//! the image id, so results do not depend on image order or scheduling.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};

use crate::error::CorruptionError;
use crate::geometry::BBox;
use crate::sample::{ClassId, Dataset, ImageSample, LabeledBox};

/// Position noise applied alongside class underprediction and box duplication.
pub const COMPANION_SIGMA_POS: f64 = 0.5;

/// Relative width and height of boxes added for overpredicted classes.
pub const OVERPREDICTED_BOX_SIZE: f64 = 0.25;

/// Parameters of the composed corruption. The default is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionSpec {
    pub sigma_pos: f64,
    pub pos_bias: f64,
    pub sigma_shape: f64,
    pub sigma_size: f64,
    pub sigma_ratio: f64,
    pub p_underpred: f64,
    pub p_overpred: f64,
    pub expected_duplications: f64,
    pub p_cls_confuse: f64,
    /// Switches to the class oracle: one random square box of this relative
    /// side per positive class instead of the target boxes.
    pub random_box_size: Option<f64>,
    pub seed: u64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        Self {
            sigma_pos: 0.0,
            pos_bias: 0.0,
            sigma_shape: 0.0,
            sigma_size: 0.0,
            sigma_ratio: 0.0,
            p_underpred: 0.0,
            p_overpred: 0.0,
            expected_duplications: 0.0,
            p_cls_confuse: 0.0,
            random_box_size: None,
            seed: 0,
        }
    }
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<(), CorruptionError> {
        let non_negative = [
            ("sigma_pos", self.sigma_pos),
            ("pos_bias", self.pos_bias),
            ("sigma_shape", self.sigma_shape),
            ("sigma_size", self.sigma_size),
            ("sigma_ratio", self.sigma_ratio),
            ("expected_duplications", self.expected_duplications),
        ];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(CorruptionError::Parameter { name, value });
            }
        }
        let probabilities = [("p_underpred", self.p_underpred), ("p_overpred", self.p_overpred), ("p_cls_confuse", self.p_cls_confuse)];
        for (name, value) in probabilities {
            if !(0.0..=1.0).contains(&value) {
                return Err(CorruptionError::Parameter { name, value });
            }
        }
        if let Some(s) = self.random_box_size {
            if !(s > 0.0 && s <= 1.0) {
                return Err(CorruptionError::Parameter { name: "random_box_size", value: s });
            }
        }
        Ok(())
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `x ~ N(x, (w * sigma)^2)`, `y ~ N(y, (h * sigma)^2)`.
pub fn corrupt_position<R: Rng + ?Sized>(b: &BBox, sigma: f64, rng: &mut R) -> BBox {
    if sigma == 0.0 {
        return *b;
    }
    let dx = b.w() * sigma * normal(rng);
    let dy = b.h() * sigma * normal(rng);
    b.translated(dx, dy).unwrap_or(*b)
}

/// Offset by `magnitude` in a uniformly random direction, each component
/// divided by the box extent along that axis.
pub fn corrupt_position_bias<R: Rng + ?Sized>(b: &BBox, magnitude: f64, rng: &mut R) -> BBox {
    if magnitude == 0.0 {
        return *b;
    }
    let phi = rng.random_range(0.0..core::f64::consts::TAU);
    let dx = magnitude * libm::cos(phi) / b.w();
    let dy = magnitude * libm::sin(phi) / b.h();
    b.translated(dx, dy).unwrap_or(*b)
}

/// Independent lognormal factors on width and height.
pub fn corrupt_shape<R: Rng + ?Sized>(b: &BBox, sigma: f64, rng: &mut R) -> BBox {
    if sigma == 0.0 {
        return *b;
    }
    let w = b.w() * libm::exp(sigma * normal(rng));
    let h = b.h() * libm::exp(sigma * normal(rng));
    b.with_size(w, h).unwrap_or(*b)
}

/// One lognormal factor applied to both width and height.
pub fn corrupt_size<R: Rng + ?Sized>(b: &BBox, sigma: f64, rng: &mut R) -> BBox {
    if sigma == 0.0 {
        return *b;
    }
    let s = libm::exp(sigma * normal(rng));
    b.with_size(s * b.w(), s * b.h()).unwrap_or(*b)
}

/// Lognormal change of the aspect ratio `w / h` at constant area.
pub fn corrupt_ratio<R: Rng + ?Sized>(b: &BBox, sigma: f64, rng: &mut R) -> BBox {
    if sigma == 0.0 {
        return *b;
    }
    let area = b.area();
    let ratio = b.w() / b.h() * libm::exp(sigma * normal(rng));
    b.with_size(libm::sqrt(area * ratio), libm::sqrt(area / ratio)).unwrap_or(*b)
}

fn map_predictions(sample: &ImageSample, mut f: impl FnMut(&LabeledBox) -> LabeledBox) -> ImageSample {
    ImageSample { predictions: sample.predictions.iter().map(&mut f).collect(), ..sample.clone() }
}

fn reposition<R: Rng + ?Sized>(sample: &ImageSample, sigma: f64, rng: &mut R) -> ImageSample {
    map_predictions(sample, |b| LabeledBox { bbox: corrupt_position(&b.bbox, sigma, rng), ..*b })
}

/// Targets as predictions, confidence 1 unless the target carries one.
pub fn oracle_predictions(targets: &[LabeledBox]) -> Vec<LabeledBox> {
    targets.iter().map(|t| LabeledBox { confidence: Some(t.confidence.unwrap_or(1.0)), ..*t }).collect()
}

/// Drops every predicted box of a class with probability `p`, decided once
/// per class present in the predictions.
pub fn drop_classes<R: Rng + ?Sized>(sample: &ImageSample, p: f64, rng: &mut R) -> ImageSample {
    if p == 0.0 {
        return sample.clone();
    }
    let mut keep: BTreeMap<ClassId, bool> = BTreeMap::new();
    for b in &sample.predictions {
        keep.entry(b.class).or_insert(false);
    }
    for k in keep.values_mut() {
        *k = !rng.random_bool(p);
    }
    ImageSample { predictions: sample.predictions.iter().filter(|b| keep[&b.class]).copied().collect(), ..sample.clone() }
}

/// Class underprediction: [`drop_classes`], then position noise
/// ([`COMPANION_SIGMA_POS`]) on the surviving boxes.
pub fn underpredict<R: Rng + ?Sized>(sample: &ImageSample, p: f64, rng: &mut R) -> ImageSample {
    let dropped = drop_classes(sample, p, rng);
    reposition(&dropped, COMPANION_SIGMA_POS, rng)
}

fn image_extent(sample: &ImageSample) -> Result<(f64, f64), CorruptionError> {
    sample.image_size.map(|s| (s.width, s.height)).ok_or_else(|| CorruptionError::MissingImageSize(sample.image_id.clone()))
}

/// Box of the given size with a uniformly random center keeping it inside
/// the image.
fn random_box<R: Rng + ?Sized>(sample: &ImageSample, w: f64, h: f64, rng: &mut R) -> Result<BBox, CorruptionError> {
    let (iw, ih) = image_extent(sample)?;
    if w > iw || h > ih {
        return Err(CorruptionError::BoxTooLarge(sample.image_id.clone()));
    }
    let mut coord = |len: f64, extent: f64| {
        let (lo, hi) = (len / 2.0, extent - len / 2.0);
        if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        }
    };
    let x = coord(w, iw);
    let y = coord(h, ih);
    Ok(BBox::new(x, y, w, h)?)
}

/// Classes of the vocabulary without any target in this image.
fn negative_classes(sample: &ImageSample, num_classes: usize) -> Vec<ClassId> {
    let positive = sample.positive_classes();
    (0..num_classes as u32).map(ClassId).filter(|c| !positive.contains(c)).collect()
}

/// Class overprediction: each negative class turns positive with
/// probability `p` and gets one box of a quarter of the image extent.
pub fn overpredict_class<R: Rng + ?Sized>(
    sample: &ImageSample,
    num_classes: usize,
    p: f64,
    rng: &mut R,
) -> Result<ImageSample, CorruptionError> {
    if p == 0.0 {
        return Ok(sample.clone());
    }
    let mut out = sample.clone();
    for class in negative_classes(sample, num_classes) {
        if rng.random_bool(p) {
            let (iw, ih) = image_extent(sample)?;
            let bbox = random_box(sample, OVERPREDICTED_BOX_SIZE * iw, OVERPREDICTED_BOX_SIZE * ih, rng)?;
            out.predictions.push(LabeledBox::new(bbox, class).with_confidence(1.0));
        }
    }
    Ok(out)
}

/// Appends `D` copies of every predicted box, `D` geometric on `{0, 1, ...}`
/// with mean `expected`. Copies follow their original.
pub fn duplicate_boxes<R: Rng + ?Sized>(sample: &ImageSample, expected: f64, rng: &mut R) -> ImageSample {
    if expected == 0.0 {
        return sample.clone();
    }
    let dist = Geometric::new(1.0 / (1.0 + expected)).expect("success probability in (0, 1]");
    let mut predictions = Vec::with_capacity(sample.predictions.len());
    for b in &sample.predictions {
        let copies = dist.sample(rng);
        for _ in 0..=copies {
            predictions.push(*b);
        }
    }
    ImageSample { predictions, ..sample.clone() }
}

/// Box overprediction: [`duplicate_boxes`], then independent position noise
/// ([`COMPANION_SIGMA_POS`]) on originals and copies.
pub fn overpredict_boxes<R: Rng + ?Sized>(sample: &ImageSample, expected: f64, rng: &mut R) -> ImageSample {
    let duplicated = duplicate_boxes(sample, expected, rng);
    reposition(&duplicated, COMPANION_SIGMA_POS, rng)
}

/// Selects each vocabulary class with probability `p` and relabels predicted
/// boxes through a uniformly random permutation of the selected classes.
pub fn confuse_classes<R: Rng + ?Sized>(sample: &ImageSample, num_classes: usize, p: f64, rng: &mut R) -> ImageSample {
    if p == 0.0 {
        return sample.clone();
    }
    let selected: Vec<ClassId> = (0..num_classes as u32).map(ClassId).filter(|_| rng.random_bool(p)).collect();
    let mut shuffled = selected.clone();
    shuffled.shuffle(rng);
    let mapping: BTreeMap<ClassId, ClassId> = selected.into_iter().zip(shuffled).collect();
    map_predictions(sample, |b| LabeledBox { class: mapping.get(&b.class).copied().unwrap_or(b.class), ..*b })
}

/// Class oracle with randomly placed boxes: the positive classes (targets
/// plus negatives flipped with probability `p_overpred`) each get one square
/// box of side `size * min(width, height)`. Target geometry is ignored.
pub fn class_oracle_random_boxes<R: Rng + ?Sized>(
    sample: &ImageSample,
    num_classes: usize,
    p_overpred: f64,
    size: f64,
    rng: &mut R,
) -> Result<ImageSample, CorruptionError> {
    if !(size > 0.0 && size <= 1.0) {
        return Err(CorruptionError::Parameter { name: "random_box_size", value: size });
    }
    let (iw, ih) = image_extent(sample)?;
    let side = size * iw.min(ih);
    let mut classes: Vec<ClassId> = sample.positive_classes().into_iter().collect();
    for c in negative_classes(sample, num_classes) {
        if p_overpred > 0.0 && rng.random_bool(p_overpred) {
            classes.push(c);
        }
    }
    classes.sort_unstable();
    let mut predictions = Vec::with_capacity(classes.len());
    for class in classes {
        predictions.push(LabeledBox::new(random_box(sample, side, side, rng)?, class).with_confidence(1.0));
    }
    Ok(ImageSample { predictions, ..sample.clone() })
}

/// Applies the full composed corruption to one image, starting from its
/// targets. Existing predictions are discarded.
pub fn corrupt_sample<R: Rng + ?Sized>(
    sample: &ImageSample,
    num_classes: usize,
    spec: &CorruptionSpec,
    rng: &mut R,
) -> Result<ImageSample, CorruptionError> {
    let mut s = ImageSample { predictions: oracle_predictions(&sample.targets), ..sample.clone() };
    match spec.random_box_size {
        Some(size) => s = class_oracle_random_boxes(&s, num_classes, spec.p_overpred, size, rng)?,
        None => {
            s = drop_classes(&s, spec.p_underpred, rng);
            s = overpredict_class(&s, num_classes, spec.p_overpred, rng)?;
        }
    }
    s = confuse_classes(&s, num_classes, spec.p_cls_confuse, rng);
    s = duplicate_boxes(&s, spec.expected_duplications, rng);
    Ok(map_predictions(&s, |b| {
        let mut bbox = corrupt_position_bias(&b.bbox, spec.pos_bias, rng);
        bbox = corrupt_position(&bbox, spec.sigma_pos, rng);
        bbox = corrupt_shape(&bbox, spec.sigma_shape, rng);
        bbox = corrupt_size(&bbox, spec.sigma_size, rng);
        bbox = corrupt_ratio(&bbox, spec.sigma_ratio, rng);
        LabeledBox { bbox, ..*b }
    }))
}

/// 64-bit FNV-1a of the image id, used as the ChaCha stream number.
fn stream_of(image_id: &str) -> u64 {
    image_id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Generator for one image, determined by `seed` and the image id alone.
pub fn image_rng(seed: u64, image_id: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_of(image_id));
    rng
}

/// Replaces every image's predictions with a corrupted oracle, seeded by
/// `spec.seed`.
pub fn corrupt_dataset(dataset: &Dataset, spec: &CorruptionSpec) -> Result<Dataset, CorruptionError> {
    spec.validate()?;
    let predictions = dataset
        .samples()
        .iter()
        .map(|s| {
            let mut rng = image_rng(spec.seed, &s.image_id);
            corrupt_sample(s, dataset.num_classes(), spec, &mut rng).map(|c| c.predictions)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(dataset.with_predictions(predictions))
}
