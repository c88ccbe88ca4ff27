//! Projective-measurement tomography with direct photon counting, as a
//! baseline for the interference-based reconstruction.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{mle_from_depths, DepthVector, MleOptions, ReconstructionResult};
use crate::error::{Error, Result};
use crate::quantum::{projection_probability, DensityMatrix, ProbeFrame};
use crate::sim::poisson;

/// Poisson counts with mean `counts_per_setting * <k|rho|k>` for every
/// setting of `frame`.
pub fn conventional_counts(
    rho: &DensityMatrix,
    frame: &ProbeFrame,
    counts_per_setting: f64,
    seed: u64,
) -> Result<BTreeMap<String, f64>> {
    if !(counts_per_setting.is_finite() && counts_per_setting >= 0.0) {
        return Err(Error::invalid("counts_per_setting", "must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    frame
        .settings()
        .iter()
        .map(|s| {
            let p = projection_probability(rho, &s.ket)?.clamp(0.0, 1.0);
            Ok((s.label.clone(), poisson(counts_per_setting * p, &mut rng)))
        })
        .collect()
}

/// Maximum-likelihood state from projective counts keyed by setting label.
pub fn reconstruct_conventional(
    frame: &ProbeFrame,
    counts: &BTreeMap<String, f64>,
    opts: &MleOptions,
) -> Result<ReconstructionResult> {
    mle_from_depths(&DepthVector::from_values(frame, counts)?, opts)
}

/// Simulates and reconstructs conventional tomography of `rho`.
pub fn conventional_qst(
    rho: &DensityMatrix,
    frame: &ProbeFrame,
    counts_per_setting: f64,
    seed: u64,
    opts: &MleOptions,
) -> Result<ReconstructionResult> {
    let counts = conventional_counts(rho, frame, counts_per_setting, seed)?;
    reconstruct_conventional(frame, &counts, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{build_probe_frame, make_qubit_ket, FrameKind};

    #[test]
    fn high_count_reconstruction() {
        let frame = build_probe_frame(2, 1, FrameKind::Qubit6).unwrap();
        let rho = DensityMatrix::from_pure(&make_qubit_ket("L").unwrap());
        let res = conventional_qst(&rho, &frame, 1e5, 4, &MleOptions::default()).unwrap();
        assert!(res.fidelity("L").unwrap() > 0.995);
    }

    #[test]
    fn counts_are_reproducible() {
        let frame = build_probe_frame(2, 1, FrameKind::Qubit4).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let a = conventional_counts(&rho, &frame, 1000.0, 9).unwrap();
        assert_eq!(a, conventional_counts(&rho, &frame, 1000.0, 9).unwrap());
        assert_eq!(a.len(), 4);
    }
}
