use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rodeo_core::rodeo::{evaluate_rodeo, rodeo_total, MatchedDataset, RodeoConfig};
use rodeo_core::{BBox, ClassId, ImageSample, LabeledBox};

fn random_box(rng: &mut ChaCha8Rng, classes: u32) -> LabeledBox {
    let b = BBox::new(rng.random_range(0.0..200.0), rng.random_range(0.0..200.0), rng.random_range(5.0..60.0), rng.random_range(5.0..60.0))
        .unwrap();
    LabeledBox::new(b, ClassId(rng.random_range(0..classes)))
}

fn random_samples(rng: &mut ChaCha8Rng, images: usize) -> Vec<ImageSample> {
    (0..images)
        .map(|i| {
            let nt = rng.random_range(0..5);
            let np = rng.random_range(0..6);
            let t = (0..nt).map(|_| random_box(rng, 3)).collect();
            let p = (0..np).map(|_| random_box(rng, 3)).collect();
            ImageSample::new(format!("im{i}"), t, p)
        })
        .collect()
}

#[test]
fn order_of_images_and_boxes_is_irrelevant() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let samples = random_samples(&mut rng, 12);
        let base = evaluate_rodeo(&samples).unwrap();
        let mut shuffled = samples.clone();
        shuffled.shuffle(&mut rng);
        for s in &mut shuffled {
            s.targets.shuffle(&mut rng);
            s.predictions.shuffle(&mut rng);
        }
        let other = evaluate_rodeo(&shuffled).unwrap();
        for (a, b) in [(base.loc, other.loc), (base.shape, other.shape), (base.cls, other.cls), (base.total, other.total)] {
            assert!((a - b).abs() <= 1e-12, "{base:?} vs {other:?}");
        }
        assert_eq!(
            (base.n_matched, base.n_unmatched_targets, base.n_unmatched_predictions),
            (other.n_matched, other.n_unmatched_targets, other.n_unmatched_predictions)
        );
    }
}

#[test]
fn extra_unmatched_prediction_never_helps() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    for _ in 0..300 {
        let mut samples = random_samples(&mut rng, 6);
        let base = evaluate_rodeo(&samples).unwrap();
        let i = rng.random_range(0..samples.len());
        let far = LabeledBox::new(BBox::new(1e5, 1e5, 10.0, 10.0).unwrap(), ClassId(rng.random_range(0..3)));
        samples[i].predictions.push(far);
        let matched = MatchedDataset::new(&samples, RodeoConfig::default()).unwrap();
        let extra = samples[i].predictions.len() - 1;
        if !matched.matches()[i].unmatched_predictions.contains(&extra) {
            continue;
        }
        checked += 1;
        let more = matched.overall();
        assert!(more.total <= base.total);
        if base.total > 0.0 {
            assert!(more.total < base.total);
        }
    }
    assert!(checked > 100);
}

#[test]
fn single_class_rows_equal_overall() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let samples: Vec<_> = random_samples(&mut rng, 8)
            .into_iter()
            .map(|mut s| {
                for b in s.targets.iter_mut().chain(s.predictions.iter_mut()) {
                    b.class = ClassId(0);
                }
                s
            })
            .collect();
        let matched = MatchedDataset::new(&samples, RodeoConfig::default()).unwrap();
        let overall = matched.overall();
        let row = matched.per_class(ClassId(0));
        if overall.n_matched + overall.n_unmatched_targets + overall.n_unmatched_predictions > 0 {
            assert_eq!(row.scores, overall);
        }
    }
}

proptest! {
    #[test]
    fn harmonic_mean_bounds(a in 1e-9..=1.0f64, b in 1e-9..=1.0f64, c in 1e-9..=1.0f64) {
        let h = rodeo_total(a, b, c);
        prop_assert!(h >= a.min(b).min(c) && h <= a.max(b).max(c));
        prop_assert_eq!(rodeo_total(0.0, b, c), 0.0);
        prop_assert_eq!(rodeo_total(a, 0.0, c), 0.0);
        prop_assert_eq!(rodeo_total(a, b, 0.0), 0.0);
    }

    #[test]
    fn harmonic_mean_increases(a in 1e-3..0.99f64, b in 1e-3..0.99f64, c in 1e-3..0.99f64, d in 1e-3..0.01f64) {
        let h = rodeo_total(a, b, c);
        prop_assert!(rodeo_total(a + d, b, c) > h);
        prop_assert!(rodeo_total(a, b + d, c) > h);
        prop_assert!(rodeo_total(a, b, c + d) > h);
    }
}
