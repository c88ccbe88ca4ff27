//! Fixtures shared by the benchmarks.

use homqst::{
    build_probe_frame, make_qubit_ket, AcquisitionConfig, DensityMatrix, ExperimentParams, FrameKind,
    MultiPartiteSetup, ProbeFrame, SourceModel,
};

/// `n`-qubit product of `|D>` states with a qubit-6 frame and heralded sources.
pub fn qubit_fixture(n: usize) -> (DensityMatrix, ProbeFrame, MultiPartiteSetup, AcquisitionConfig) {
    let d = DensityMatrix::from_pure(&make_qubit_ket("D").expect("D is a qubit label"));
    let rho = (1..n).fold(d.clone(), |acc, _| acc.tensor(&d));
    let frame = build_probe_frame(2, n, FrameKind::Qubit6).expect("qubit-6 frame");
    let source = SourceModel::heralded(0.01, 0.2).expect("valid source");
    let params = ExperimentParams::ideal(&["H", "V", "D", "A", "R", "L"]).with_overlap(0.9);
    let setup = MultiPartiteSetup::uniform(n, &source, &source, &params).expect("valid setup");
    let acq = AcquisitionConfig::new(1e7, 30.0, 1.5, 1);
    (rho, frame, setup, acq)
}
