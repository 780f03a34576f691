//! File formats, parallel evaluation and the `rodeo` command-line tool on
//! top of [`rodeo_core`].

pub mod cli;
pub mod io;
pub mod report;
pub mod sweep;

use rayon::prelude::*;
use rodeo_core::evaluate::{evaluate_matched, EvalConfig, MetricReport};
use rodeo_core::matching::match_image;
use rodeo_core::rodeo::MatchedDataset;
use rodeo_core::{Dataset, EvalError};

/// [`rodeo_core::evaluate::evaluate`] with the per-image assignments spread
/// over the rayon pool. The result does not depend on the number of workers.
pub fn par_evaluate(dataset: &Dataset, config: &EvalConfig) -> Result<MetricReport, EvalError> {
    let samples = dataset.samples();
    let matches =
        samples.par_iter().map(|s| match_image(&s.targets, &s.predictions, config.rodeo.shape_weight)).collect::<Result<Vec<_>, _>>()?;
    let matched = MatchedDataset::from_matches(samples, matches)?;
    evaluate_matched(dataset, &matched, config)
}
