use std::collections::BTreeMap;

use super::{
    estimate_scale, fidelity_errors, mle_from_depths, mle_reconstruct, normalize_depths, DepthVector, Likelihood,
    MleOptions, ReconstructionResult, ResampleMode,
};
use crate::error::{Error, Result};
use crate::hom::{isolate_joint_depth, MultiSetting};
use crate::sim::Dataset;

/// Depth vector of a dataset in counts, corrected for the relative
/// efficiency of each setting and normalized by the basis sum when the frame
/// has an orthonormal basis with a positive sum.
pub fn dataset_depths(dataset: &Dataset) -> Result<DepthVector> {
    let raw = if dataset.frame.parties() == 1 {
        single_party_depths(dataset)?
    } else {
        multipartite_depths(dataset)?
    };
    Ok(match estimate_scale(&raw) {
        Ok(scale) => normalize_depths(&raw, scale)?,
        Err(_) => raw,
    })
}

fn single_party_depths(dataset: &Dataset) -> Result<DepthVector> {
    let params = &dataset.setup.params[0];
    let values = dataset
        .frame
        .settings()
        .iter()
        .map(|s| {
            let rec = dataset
                .records
                .iter()
                .find(|r| r.label() == Some(s.label.as_str()))
                .ok_or_else(|| Error::Missing(format!("record for setting {}", s.label)))?;
            Ok(rec.depth_counts / params.relative_efficiency(&s.label)?)
        })
        .collect::<Result<Vec<_>>>()?;
    DepthVector::from_ordered(&dataset.frame, &values)
}

/// Fully interfering depth of every joint setting, isolated by the
/// alternating sum over the measured configurations. Each count is first
/// divided by the relative efficiency of its zero-delay parties.
pub fn multipartite_depths(dataset: &Dataset) -> Result<DepthVector> {
    let mut measured = BTreeMap::new();
    for rec in &dataset.records {
        let setting = rec.setting();
        let rel = dataset.setup.relative_efficiency(&setting)?;
        measured.insert(setting, rec.c_zero / rel);
    }
    let local = dataset.frame.local_settings();
    let values = dataset
        .frame
        .settings()
        .iter()
        .map(|s| {
            let full = MultiSetting::new(s.parties.iter().map(|&i| Some(local[i].label.clone())).collect());
            isolate_joint_depth(&full, &measured)
        })
        .collect::<Result<Vec<_>>>()?;
    DepthVector::from_ordered(&dataset.frame, &values)
}

/// Maximum-likelihood reconstruction of the state behind `dataset`.
pub fn reconstruct(dataset: &Dataset, opts: &MleOptions) -> Result<ReconstructionResult> {
    match opts.likelihood {
        Likelihood::Counts if dataset.frame.parties() == 1 => mle_reconstruct(dataset, opts),
        _ => mle_from_depths(&dataset_depths(dataset)?, opts),
    }
}

/// [`reconstruct`] plus resampled standard errors of the fidelities.
pub fn reconstruct_with_errors(
    dataset: &Dataset,
    opts: &MleOptions,
    n_resamples: usize,
    seed: u64,
) -> Result<ReconstructionResult> {
    let mut result = reconstruct(dataset, opts)?;
    if n_resamples > 1 {
        let errs = fidelity_errors(dataset, opts, n_resamples, seed, ResampleMode::Poisson)?;
        result.stderr_fidelities = Some(errs.std);
    }
    Ok(result)
}
