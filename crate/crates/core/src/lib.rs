//! Quantum state tomography of photonic qudits through Hong-Ou-Mandel
//! interference with a set of known probe states.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`]: kets, density matrices, probe frames and fidelities.
//! * [`sources`]: photon statistics of target and probe light.
//! * [`hom`]: closed-form coincidence probabilities and dip depths, for one
//!   interferometer and for `n` of them.
//! * [`sim`]: Poissonian count simulation of three-point dip measurements.
//! * [`tomography`]: depth normalization, linear inversion, diluted
//!   maximum-likelihood reconstruction and Monte Carlo error bars.

pub mod error;
pub mod hom;
pub mod quantum;
pub mod sim;
pub mod sources;
pub mod tomography;

pub use error::{Error, Result};
pub use hom::{
    coincidence_infinite_delay, coincidence_zero_delay, dip_depth, dip_observables, visibility,
    solve_overlap_from_visibility, DipObservables, ExperimentParams, MultiPartiteSetup, MultiSetting,
};
pub use quantum::{
    build_probe_frame, fidelity_to_ket, make_qubit_ket, projection_probability, state_fidelity,
    DensityMatrix, FrameKind, HermitianMatrix, ProbeFrame, StateVector,
};
pub use sim::{AcquisitionConfig, Dataset, MeasurementRecord, SamplingMode};
pub use sources::{CrossCorrelationRule, ProbeEnsemble, SourceKind, SourceModel};
pub use tomography::{MleOptions, NegativeStrategy, ReconstructionResult};
