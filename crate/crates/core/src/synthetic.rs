//! Randomly generated ground truth for simulation studies.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::BBox;
use crate::sample::{ClassId, Dataset, ImageSample, LabeledBox};

/// Class-balanced ground truth: every class is positive in an image with the
/// same probability, and every image has at least one box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub images: usize,
    pub num_classes: usize,
    pub p_positive: f64,
    pub max_boxes_per_class: usize,
    pub image_width: f64,
    pub image_height: f64,
    /// Box extent relative to the image, drawn uniformly per axis.
    pub min_box_size: f64,
    pub max_box_size: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            images: 200,
            num_classes: 8,
            p_positive: 0.2,
            max_boxes_per_class: 2,
            image_width: 1024.0,
            image_height: 1024.0,
            min_box_size: 0.05,
            max_box_size: 0.4,
        }
    }
}

fn random_target(config: &SyntheticConfig, class: ClassId, rng: &mut ChaCha8Rng) -> LabeledBox {
    let (iw, ih) = (config.image_width, config.image_height);
    let w = iw * rng.random_range(config.min_box_size..=config.max_box_size);
    let h = ih * rng.random_range(config.min_box_size..=config.max_box_size);
    let x = rng.random_range(w / 2.0..=iw - w / 2.0);
    let y = rng.random_range(h / 2.0..=ih - h / 2.0);
    LabeledBox::new(BBox::new(x, y, w, h).expect("positive extent"), class)
}

/// Targets only; predictions are left empty.
///
/// # Panics
/// On a configuration without images or classes, or box sizes outside `(0, 1]`.
pub fn synthetic_dataset(config: &SyntheticConfig, seed: u64) -> Dataset {
    assert!(config.images > 0 && config.num_classes > 0 && config.max_boxes_per_class > 0);
    assert!(0.0 < config.min_box_size && config.min_box_size <= config.max_box_size && config.max_box_size <= 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = config.num_classes as u32;
    let samples: Vec<_> = (0..config.images)
        .map(|i| {
            let mut positive: Vec<ClassId> = (0..k).map(ClassId).filter(|_| rng.random_bool(config.p_positive)).collect();
            if positive.is_empty() {
                positive.push(ClassId(rng.random_range(0..k)));
            }
            let mut targets = Vec::new();
            for class in positive {
                for _ in 0..rng.random_range(1..=config.max_boxes_per_class) {
                    targets.push(random_target(config, class, &mut rng));
                }
            }
            ImageSample::new(format!("img_{i:05}"), targets, Vec::new()).with_image_size(config.image_width, config.image_height)
        })
        .collect();
    Dataset::new(config.num_classes, samples).expect("generated dataset is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_of_generated_data() {
        let config = SyntheticConfig { images: 3000, ..Default::default() };
        let ds = synthetic_dataset(&config, 1);
        assert_eq!(ds.samples().len(), 3000);
        let mut per_class = [0usize; 8];
        for s in ds.samples() {
            assert!(!s.targets.is_empty());
            for t in &s.targets {
                per_class[t.class.index()] += 1;
                assert!(t.bbox.x_min() >= 0.0 && t.bbox.x_max() <= 1024.0);
                assert!(t.bbox.y_min() >= 0.0 && t.bbox.y_max() <= 1024.0);
            }
        }
        let mean = per_class.iter().sum::<usize>() as f64 / 8.0;
        assert!(per_class.iter().all(|&n| (n as f64 - mean).abs() < 0.1 * mean), "{per_class:?}");
        assert_eq!(ds, synthetic_dataset(&config, 1));
    }
}
