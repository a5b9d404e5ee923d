use std::collections::BTreeMap;

use ndarray::Array2;
use rayon::prelude::*;

use crate::bdci::SegmentCategory;
use crate::error::{Error, Result};
use crate::nn::bundle::CategorySummary;
use crate::nn::train::train_arrays;
use crate::nn::{BundleMetadata, ModelBundle, TrainConfig, TrainReport};
use crate::synth::{derive_seed, SegmentSampleRecord};

/// Trains the seven category networks on `records`.
///
/// Targets are mapped through `config.head`, matching how the bundle is
/// evaluated; with a per-sample affine head the loss is still the Gaussian
/// NLL of the segment integral up to a constant.
///
/// Each category gets its own seed derived from `config.seed`, so the result
/// is deterministic and independent of how categories are scheduled.
pub fn train_bundle(
    records: &[SegmentSampleRecord],
    config: &TrainConfig,
    corpus_hash: &str,
) -> Result<(ModelBundle, BTreeMap<SegmentCategory, TrainReport>)> {
    config.validate()?;
    let mut grouped: BTreeMap<SegmentCategory, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        if r.input.len() != r.category.input_dim() {
            return Err(Error::DimensionMismatch { expected: r.category.input_dim(), got: r.input.len() });
        }
        let e = grouped.entry(r.category).or_default();
        e.0.extend_from_slice(&r.input);
        let (offset, scale) = config.head.offset_scale(r.category, &r.input);
        e.1.push((r.target_norm - offset) / scale);
    }
    if let Some(c) = SegmentCategory::ALL.into_iter().find(|c| !grouped.contains_key(c)) {
        return Err(Error::MissingCategory(c.to_string()));
    }
    let trained = SegmentCategory::ALL
        .into_par_iter()
        .map(|c| {
            let (flat, targets) = &grouped[&c];
            let x = Array2::from_shape_vec((targets.len(), c.input_dim()), flat.clone())
                .expect("rows have the category width");
            let cfg = TrainConfig { seed: derive_seed(config.seed, c.index() as u64), ..config.clone() };
            train_arrays(&x, targets, &cfg).map(|(m, r)| (c, m, r))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut meta = BundleMetadata::new(config.seed, corpus_hash, config.clone());
    let mut models = BTreeMap::new();
    let mut reports = BTreeMap::new();
    for (c, m, r) in trained {
        meta.categories.push(CategorySummary::new(c, &r));
        models.insert(c, m);
        reports.insert(c, r);
    }
    Ok((ModelBundle::new(models, meta)?, reports))
}
