mod common;

use common::*;
use homqst::sim::run_experiment;
use homqst::tomography::{
    conventional_qst, dataset_depths, fidelity_errors, linear_inversion, mle_from_depths, reconstruct,
    reconstruct_conventional, resample_dataset, DepthFlag, DepthVector, Likelihood, ResampleMode,
};
use homqst::{
    build_probe_frame, fidelity_to_ket, make_qubit_ket, state_fidelity, AcquisitionConfig, DensityMatrix,
    ExperimentParams, FrameKind, MleOptions, MultiPartiteSetup, NegativeStrategy, SamplingMode, SourceModel,
    StateVector,
};
use num_complex::Complex64 as C64;

fn hsps_setup(eta: f64) -> MultiPartiteSetup {
    let target = SourceModel::heralded(0.01, 0.211).unwrap();
    let probe = SourceModel::heralded(0.00694, 0.355).unwrap();
    MultiPartiteSetup::uniform(1, &target, &probe, &measured_params().with_overlap(0.901).with_eta(eta)).unwrap()
}

#[test]
fn noiseless_single_qubit_round_trips_with_both_likelihoods() {
    let frame = qubit6();
    let mut acq = AcquisitionConfig::new(1e7, 100.0, 1.5, 1);
    acq.dark_rate = 3.0;
    let mixed = pure("R").mix(&pure("H"), 0.35).unwrap();
    let mut states: Vec<(String, DensityMatrix)> = QUBIT_LABELS.iter().map(|l| (l.to_string(), pure(l))).collect();
    states.push(("mixed".into(), mixed));
    for (name, rho) in states {
        let ds = run_experiment(&rho, &frame, &hsps_setup(0.02), &acq, SamplingMode::Expected).unwrap();
        for lk in [Likelihood::Counts, Likelihood::Depths] {
            for s in [NegativeStrategy::Zero, NegativeStrategy::Drop] {
                let res = reconstruct(&ds, &MleOptions::default().with_likelihood(lk).with_strategy(s)).unwrap();
                let f = state_fidelity(&res.rho, &rho).unwrap();
                assert!(f >= 1.0 - 1e-8, "{name} {lk:?} {s}: fidelity {f}");
                assert!(res.rho.eigenvalues()[0] >= -1e-9);
            }
        }
    }
}

#[test]
fn qutrit_mub_round_trip() {
    let frame = build_probe_frame(3, 1, FrameKind::MubFull).unwrap();
    let ket = StateVector::normalized(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-0.5, 0.0)]).unwrap();
    let rho = DensityMatrix::from_pure(&ket);
    let labels: Vec<String> = frame.local_settings().iter().map(|s| s.label.clone()).collect();
    let source = SourceModel::heralded(0.01, 0.1).unwrap();
    let setup = MultiPartiteSetup::uniform(1, &source, &source, &ExperimentParams::ideal(&labels).with_eta(0.1)).unwrap();
    let ds = run_experiment(&rho, &frame, &setup, &AcquisitionConfig::new(1e7, 10.0, 1.0, 2), SamplingMode::Expected).unwrap();
    let res = reconstruct(&ds, &MleOptions::default()).unwrap();
    assert!(state_fidelity(&res.rho, &rho).unwrap() >= 1.0 - 1e-8);
}

#[test]
fn scale_recovered_from_horizontal_and_vertical_depths() {
    let frame = qubit6();
    let acq = AcquisitionConfig::new(1e7, 100.0, 1.5, 1);
    let rho = pure("D").mix(&pure("V"), 0.8).unwrap();
    let ds = run_experiment(&rho, &frame, &hsps_setup(0.02), &acq, SamplingMode::Expected).unwrap();
    let depths = dataset_depths(&ds).unwrap();
    for e in &depths.entries {
        assert!((e.value - fidelity_to_ket(&rho, &e.ket).unwrap()).abs() < 1e-9, "{}", e.label);
    }
}

#[test]
fn measured_hsps_row() {
    let frame = qubit6();
    let dv = DepthVector::from_values(&frame, &depth_map(&measured_depths()[0].1)).unwrap();
    let raw = linear_inversion(&dv).unwrap();
    assert!(raw.expectation(&make_qubit_ket("D").unwrap()).unwrap() > 1.0);
    assert!(raw.eigenvalues()[0] < 0.0);

    let drop = mle_from_depths(&dv, &MleOptions::default().with_strategy(NegativeStrategy::Drop)).unwrap();
    assert_eq!(drop.depths.active().count(), 5);
    assert_eq!(drop.depths.get("A").unwrap().flag, DepthFlag::Dropped);
    let zero = mle_from_depths(&dv, &MleOptions::default().with_strategy(NegativeStrategy::Zero)).unwrap();
    assert_eq!(zero.depths.get("A").unwrap().flag, DepthFlag::Zeroed);
    assert!((drop.fidelity("D").unwrap() - zero.fidelity("D").unwrap()).abs() < 0.01);
}

#[test]
fn conventional_baselines() {
    let frame = qubit6();
    let d = conventional_qst(&pure("D"), &frame, 1e4, 3, &MleOptions::default()).unwrap();
    assert!(d.fidelity("D").unwrap() >= 0.99);
    let mixed = conventional_qst(&DensityMatrix::maximally_mixed(2), &frame, 1e5, 3, &MleOptions::default()).unwrap();
    for l in QUBIT_LABELS {
        assert!((mixed.fidelity(l).unwrap() - 0.5).abs() < 0.02, "{l}");
    }

    // single-count rates of a four-setting measurement
    let four = build_probe_frame(2, 1, FrameKind::Qubit4).unwrap();
    let counts = [("H", 10885.0), ("V", 8417.0), ("D", 18969.0), ("R", 9910.0)]
        .into_iter()
        .map(|(l, c)| (l.to_string(), c))
        .collect();
    let r = reconstruct_conventional(&four, &counts, &MleOptions::default()).unwrap();
    assert!((r.fidelity("D").unwrap() - 0.983).abs() < 0.002);
}

#[test]
fn identity_resampling_has_zero_spread() {
    let ds = run_experiment(&pure("D"), &qubit6(), &hsps_setup(0.0195), &AcquisitionConfig::new(1e7, 30.0, 1.5, 4), SamplingMode::Expected).unwrap();
    let errs = fidelity_errors(&ds, &MleOptions::default(), 4, 0, ResampleMode::Identity).unwrap();
    assert!(errs.std.values().all(|&s| s == 0.0));
    assert_eq!(errs.failures, 0);
    assert!(fidelity_errors(&ds, &MleOptions::default(), 1, 0, ResampleMode::Poisson).is_err());
}

#[test]
fn resampling_is_seeded() {
    let ds = run_experiment(&pure("L"), &qubit6(), &hsps_setup(0.0195), &AcquisitionConfig::new(1e7, 30.0, 1.5, 4), SamplingMode::Poisson).unwrap();
    assert_eq!(resample_dataset(&ds, 3, 1, ResampleMode::Poisson), resample_dataset(&ds, 3, 1, ResampleMode::Poisson));
    assert_ne!(resample_dataset(&ds, 3, 1, ResampleMode::Poisson), resample_dataset(&ds, 3, 2, ResampleMode::Poisson));
    let opts = MleOptions::default();
    let a = fidelity_errors(&ds, &opts, 20, 9, ResampleMode::Poisson).unwrap();
    let b = fidelity_errors(&ds, &opts, 20, 9, ResampleMode::Poisson).unwrap();
    assert_eq!(a, b);
}

#[test]
fn spread_shrinks_with_counts() {
    // mixed target keeps the estimate away from the boundary, where the
    // spread follows the inverse square root of the counts
    let rho = pure("D").mix(&DensityMatrix::maximally_mixed(2), 0.6).unwrap();
    let mut stds = Vec::new();
    for time in [1e2, 1e3, 1e4, 1e5] {
        let acq = AcquisitionConfig::new(1e7, time, 1.5, 11);
        let ds = run_experiment(&rho, &qubit6(), &hsps_setup(0.0195), &acq, SamplingMode::Expected).unwrap();
        let errs = fidelity_errors(&ds, &MleOptions::default(), 60, 5, ResampleMode::Poisson).unwrap();
        stds.push(errs.std["D"]);
    }
    for w in stds.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 10f64.sqrt()).abs() < 1.2, "std ratio {ratio} over one decade ({stds:?})");
    }
    let slope = (stds[3] / stds[0]).log10() / 3.0;
    assert!((slope + 0.5).abs() < 0.1, "log-log slope {slope}");
}

#[test]
fn estimate_approaches_truth_with_integration_time() {
    let rho = pure("R").mix(&pure("D"), 0.7).unwrap();
    let mut infid = Vec::new();
    for time in [1e2, 1e4, 1e6] {
        let acq = AcquisitionConfig::new(1e7, time, 1.5, 21);
        let ds = run_experiment(&rho, &qubit6(), &hsps_setup(0.0195), &acq, SamplingMode::Poisson).unwrap();
        let r = reconstruct(&ds, &MleOptions::default()).unwrap();
        infid.push(1.0 - state_fidelity(&r.rho, &rho).unwrap());
    }
    assert!(infid[2] < 1e-4, "{infid:?}");
    assert!(infid[2] < infid[0], "{infid:?}");
}
