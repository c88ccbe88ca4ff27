use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{reconstruct, MleOptions};
use crate::error::{Error, Result};
use crate::sim::{poisson, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMode {
    /// Redraw every count from a Poisson distribution with the observed mean.
    #[default]
    Poisson,
    /// Reuse the counts unchanged.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityErrors {
    pub mean: BTreeMap<String, f64>,
    /// Sample standard deviation over the successful resamples.
    pub std: BTreeMap<String, f64>,
    pub resamples: usize,
    /// Resamples whose reconstruction failed.
    pub failures: usize,
}

/// Copy of `dataset` with Poisson-redrawn counts, stream `index` of `seed`.
pub fn resample_dataset(dataset: &Dataset, seed: u64, index: u64, mode: ResampleMode) -> Dataset {
    let mut out = dataset.clone();
    if mode == ResampleMode::Identity {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    for rec in &mut out.records {
        rec.c_zero = poisson(rec.c_zero, &mut rng);
        for c in &mut rec.c_far {
            *c = poisson(*c, &mut rng);
        }
        if !rec.c_far.is_empty() {
            rec.depth_counts = rec.far_mean() - rec.c_zero;
        }
    }
    out
}

/// Fidelity spread over `n_resamples` reconstructions of resampled data.
pub fn fidelity_errors(
    dataset: &Dataset,
    opts: &MleOptions,
    n_resamples: usize,
    seed: u64,
    mode: ResampleMode,
) -> Result<FidelityErrors> {
    if n_resamples < 2 {
        return Err(Error::invalid("resamples", "at least two are needed"));
    }
    let opts = MleOptions {
        record_trace: false,
        ..opts.clone()
    };
    let outcomes: Vec<_> = (0..n_resamples as u64)
        .into_par_iter()
        .map(|i| reconstruct(&resample_dataset(dataset, seed, i, mode), &opts).map(|r| r.fidelities))
        .collect();
    let ok: Vec<_> = outcomes.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failures = outcomes.len() - ok.len();
    if ok.len() < 2 {
        return Err(outcomes
            .into_iter()
            .find_map(|r| r.err())
            .unwrap_or_else(|| Error::invalid("resamples", "fewer than two succeeded")));
    }
    let mut mean = BTreeMap::new();
    let mut std = BTreeMap::new();
    for label in ok[0].keys() {
        let xs: Vec<f64> = ok.iter().map(|f| f[label]).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        mean.insert(label.clone(), m);
        std.insert(label.clone(), var.sqrt());
    }
    Ok(FidelityErrors {
        mean,
        std,
        resamples: ok.len(),
        failures,
    })
}
