//! Synthetic acquisition: dip lineshapes, Poissonian coincidence counts and
//! complete datasets for a probe frame.
//!
//! Every setting draws from its own ChaCha stream keyed by `(seed, setting
//! index)`, so datasets do not depend on the order in which settings are
//! simulated.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hom::{
    coincidence_infinite_delay_for, dip_depth, multi_coincidence_for_state, ExperimentParams,
    MultiPartiteSetup, MultiSetting,
};
use crate::quantum::{projection_probability, DensityMatrix, ProbeFrame, StateVector};
use crate::sources::SourceModel;

/// Far-delay points sit at this many coherence times from zero delay.
pub const FAR_DELAY_FACTOR: f64 = 5.0;
const MAX_MEAN: f64 = 1e15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    /// Pulses per second.
    pub repetition_rate: f64,
    /// Seconds per data point.
    pub integration_time: f64,
    /// Accidental coincidences per second, independent of delay.
    #[serde(default)]
    pub dark_rate: f64,
    /// Delays (ps) for dip scans.
    #[serde(default)]
    pub delay_grid: Vec<f64>,
    /// 1/e half-width of the dip (ps).
    pub coherence_time: f64,
    #[serde(default)]
    pub rng_seed: u64,
    /// Relative baseline slope per ps of delay.
    #[serde(default)]
    pub misalignment_drift: f64,
    /// Far-delay positions (ps); defaults to `±5` coherence times.
    #[serde(default)]
    pub far_delays: Option<Vec<f64>>,
}

impl AcquisitionConfig {
    pub fn new(repetition_rate: f64, integration_time: f64, coherence_time: f64, rng_seed: u64) -> Self {
        AcquisitionConfig {
            repetition_rate,
            integration_time,
            dark_rate: 0.0,
            delay_grid: Vec::new(),
            coherence_time,
            rng_seed,
            misalignment_drift: 0.0,
            far_delays: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.repetition_rate.is_finite() && self.repetition_rate > 0.0) {
            return Err(Error::invalid("repetition_rate", "must be positive"));
        }
        if !(self.integration_time.is_finite() && self.integration_time >= 0.0) {
            return Err(Error::invalid("integration_time", "must be non-negative"));
        }
        if !(self.coherence_time.is_finite() && self.coherence_time > 0.0) {
            return Err(Error::invalid("coherence_time", "must be positive"));
        }
        if !(self.dark_rate.is_finite() && self.dark_rate >= 0.0) {
            return Err(Error::invalid("dark_rate", "must be non-negative"));
        }
        if !self.misalignment_drift.is_finite() {
            return Err(Error::invalid("misalignment_drift", "must be finite"));
        }
        let far = self.far_delay_points();
        if far.is_empty() {
            return Err(Error::invalid("far_delays", "at least one far-delay point is needed"));
        }
        let min = FAR_DELAY_FACTOR * self.coherence_time;
        if let Some(bad) = far.iter().find(|t| t.abs() < min * (1.0 - 1e-12)) {
            return Err(Error::invalid(
                "far_delays",
                format!("{bad} ps lies inside the dip (needs |delay| >= {min} ps)"),
            ));
        }
        Ok(())
    }

    pub fn far_delay_points(&self) -> Vec<f64> {
        match &self.far_delays {
            Some(v) => v.clone(),
            None => {
                let t = FAR_DELAY_FACTOR * self.coherence_time;
                vec![-t, t]
            }
        }
    }

    /// Baseline tilt factor at `delay`.
    fn tilt(&self, delay: f64) -> f64 {
        (1.0 + self.misalignment_drift * delay).max(0.0)
    }

    fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(index);
        rng
    }
}

/// Poisson draws, or their expectations as an infinite-statistics surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    Poisson,
    Expected,
}

/// Gaussian dip `P(t) = p_inf - depth * exp(-t^2 / tau_c^2)`.
pub fn dip_profile(depth: f64, p_inf: f64, delay: f64, coherence_time: f64) -> f64 {
    p_inf - depth * (-(delay / coherence_time).powi(2)).exp()
}

/// Draws coincidences with mean `(probability * rate + dark_rate) * time`.
pub fn sample_counts<R: rand::Rng + ?Sized>(
    probability: f64,
    config: &AcquisitionConfig,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<f64> {
    if !(probability.is_finite() && probability >= 0.0) {
        return Err(Error::invalid("probability", format!("{probability} per pulse")));
    }
    let mean = (probability * config.repetition_rate + config.dark_rate) * config.integration_time;
    draw(mean, mode, rng)
}

fn draw<R: rand::Rng + ?Sized>(mean: f64, mode: SamplingMode, rng: &mut R) -> Result<f64> {
    if !(mean.is_finite() && mean <= MAX_MEAN) {
        return Err(Error::CountOverflow(mean));
    }
    Ok(match mode {
        SamplingMode::Expected => mean,
        SamplingMode::Poisson => poisson(mean, rng),
    })
}

pub(crate) fn poisson<R: rand::Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).map(|d| d.sample(rng)).unwrap_or(0.0)
}

/// Counts of one setting. Single-interferometer settings carry the
/// zero-delay count and the far-delay counts; multi-party settings carry a
/// single count in `c_zero` for the configuration named by `probe_labels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub probe_labels: Vec<Option<String>>,
    pub c_zero: f64,
    pub c_far: Vec<f64>,
    /// `mean(c_far) - c_zero`; may be negative.
    pub depth_counts: f64,
    pub integration_time: f64,
}

impl MeasurementRecord {
    pub fn setting(&self) -> MultiSetting {
        MultiSetting::new(self.probe_labels.clone())
    }

    /// Label of a single-interferometer record.
    pub fn label(&self) -> Option<&str> {
        match self.probe_labels.as_slice() {
            [Some(l)] => Some(l),
            _ => None,
        }
    }

    pub fn far_mean(&self) -> f64 {
        if self.c_far.is_empty() {
            0.0
        } else {
            self.c_far.iter().sum::<f64>() / self.c_far.len() as f64
        }
    }
}

/// One three-point measurement: zero delay plus the far-delay points.
#[allow(clippy::too_many_arguments)]
pub fn three_point_measurement<R: rand::Rng + ?Sized>(
    rho: &DensityMatrix,
    label: &str,
    ket: &StateVector,
    target: &SourceModel,
    probe: &SourceModel,
    params: &ExperimentParams,
    config: &AcquisitionConfig,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    config.validate()?;
    let rho_k = projection_probability(rho, ket)?.clamp(0.0, 1.0);
    let p_inf = coincidence_infinite_delay_for(label, target, probe, params)?;
    let depth = dip_depth(rho_k, label, target, probe, params)?;
    let at = |delay: f64| dip_profile(depth, p_inf, delay, config.coherence_time).max(0.0) * config.tilt(delay);

    let c_zero = sample_counts(at(0.0), config, mode, rng)?;
    let c_far = config
        .far_delay_points()
        .into_iter()
        .map(|d| sample_counts(at(d), config, mode, rng))
        .collect::<Result<Vec<_>>>()?;
    let mut rec = MeasurementRecord {
        probe_labels: vec![Some(label.to_string())],
        c_zero,
        c_far,
        depth_counts: 0.0,
        integration_time: config.integration_time,
    };
    rec.depth_counts = rec.far_mean() - rec.c_zero;
    Ok(rec)
}

/// Provenance of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    /// SHA-256 over the canonical JSON of every simulation input.
    pub config_hash: String,
}

/// All records of one simulated experiment together with its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub frame: ProbeFrame,
    pub setup: MultiPartiteSetup,
    pub acquisition: AcquisitionConfig,
    pub sampling: SamplingMode,
    pub records: Vec<MeasurementRecord>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn record(&self, setting: &MultiSetting) -> Option<&MeasurementRecord> {
        self.records.iter().find(|r| r.probe_labels == setting.labels)
    }

    /// Flat CSV: `setting,c_zero,c_far_1,c_far_2,depth,time`, preceded by a
    /// `#` line carrying the provenance.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# config_hash={} seed={}",
            self.provenance.config_hash, self.provenance.seed
        );
        out.push_str("setting,c_zero,c_far_1,c_far_2,depth,time\n");
        for r in &self.records {
            let far = |i: usize| r.c_far.get(i).map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.setting().display(),
                r.c_zero,
                far(0),
                far(1),
                r.depth_counts,
                r.integration_time
            );
        }
        out
    }
}

#[derive(Serialize)]
struct HashInputs<'a> {
    rho: &'a DensityMatrix,
    frame: &'a ProbeFrame,
    setup: &'a MultiPartiteSetup,
    acquisition: &'a AcquisitionConfig,
    sampling: SamplingMode,
}

/// Hex SHA-256 of the canonical JSON encoding of the simulation inputs.
pub fn input_hash(
    rho: &DensityMatrix,
    frame: &ProbeFrame,
    setup: &MultiPartiteSetup,
    acquisition: &AcquisitionConfig,
    sampling: SamplingMode,
) -> String {
    let inputs = HashInputs {
        rho,
        frame,
        setup,
        acquisition,
        sampling,
    };
    let bytes = serde_json::to_vec(&inputs).expect("simulation inputs serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Every configuration needed to reconstruct an `n`-party state: each party
/// either at large delay or at zero delay with one of the local probe states.
pub fn multi_party_settings(frame: &ProbeFrame) -> Vec<MultiSetting> {
    let n = frame.parties();
    let m = frame.local_settings().len();
    let mut out = Vec::with_capacity((m + 1).pow(n as u32));
    let mut idx = vec![0usize; n];
    loop {
        out.push(MultiSetting::new(
            idx.iter()
                .map(|&i| (i > 0).then(|| frame.local_settings()[i - 1].label.clone()))
                .collect(),
        ));
        let mut p = n;
        loop {
            if p == 0 {
                return out;
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] <= m {
                break;
            }
            idx[p] = 0;
        }
    }
}

/// Simulates the full measurement set for `frame`: one three-point record per
/// setting for a single party, every entry of [`multi_party_settings`]
/// otherwise.
pub fn run_experiment(
    rho: &DensityMatrix,
    frame: &ProbeFrame,
    setup: &MultiPartiteSetup,
    config: &AcquisitionConfig,
    mode: SamplingMode,
) -> Result<Dataset> {
    config.validate()?;
    setup.validate()?;
    if setup.parties() != frame.parties() {
        return Err(Error::DimensionMismatch {
            expected: frame.parties(),
            found: setup.parties(),
        });
    }
    if rho.dim() != frame.dim() {
        return Err(Error::DimensionMismatch {
            expected: frame.dim(),
            found: rho.dim(),
        });
    }

    let records = if frame.parties() == 1 {
        let (target, probe, params) = (&setup.targets[0], &setup.probes.parties[0], &setup.params[0]);
        frame
            .settings()
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let mut rng = config.stream(i as u64);
                three_point_measurement(rho, &s.label, &s.ket, target, probe, params, config, mode, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        multi_party_settings(frame)
            .into_par_iter()
            .enumerate()
            .map(|(i, setting)| {
                let mut rng = config.stream(i as u64);
                let p = multi_coincidence_for_state(setup, &setting, rho, frame)?.max(0.0);
                let c = sample_counts(p, config, mode, &mut rng)?;
                Ok(MeasurementRecord {
                    probe_labels: setting.labels,
                    c_zero: c,
                    c_far: Vec::new(),
                    depth_counts: 0.0,
                    integration_time: config.integration_time,
                })
            })
            .collect::<Result<Vec<_>>>()?
    };

    Ok(Dataset {
        frame: frame.clone(),
        setup: setup.clone(),
        acquisition: config.clone(),
        sampling: mode,
        records,
        provenance: Provenance {
            seed: config.rng_seed,
            config_hash: input_hash(rho, frame, setup, config, mode),
        },
    })
}

/// One point of a delay scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipScanPoint {
    pub delay_ps: f64,
    pub expected_probability: f64,
    pub sampled_counts: f64,
}

/// Scans the delay grid (default: 81 points over ±10 coherence times) for
/// the probe state `label`.
#[allow(clippy::too_many_arguments)]
pub fn dip_scan(
    rho: &DensityMatrix,
    label: &str,
    ket: &StateVector,
    target: &SourceModel,
    probe: &SourceModel,
    params: &ExperimentParams,
    config: &AcquisitionConfig,
    mode: SamplingMode,
) -> Result<Vec<DipScanPoint>> {
    config.validate()?;
    let rho_k = projection_probability(rho, ket)?.clamp(0.0, 1.0);
    let p_inf = coincidence_infinite_delay_for(label, target, probe, params)?;
    let depth = dip_depth(rho_k, label, target, probe, params)?;
    let grid = if config.delay_grid.is_empty() {
        let span = 10.0 * config.coherence_time;
        (0..81).map(|i| -span + 2.0 * span * i as f64 / 80.0).collect()
    } else {
        config.delay_grid.clone()
    };
    let mut rng = config.stream(u64::MAX);
    grid.into_iter()
        .map(|delay| {
            let p = dip_profile(depth, p_inf, delay, config.coherence_time).max(0.0) * config.tilt(delay);
            Ok(DipScanPoint {
                delay_ps: delay,
                expected_probability: p,
                sampled_counts: sample_counts(p, config, mode, &mut rng)?,
            })
        })
        .collect()
}

/// Scan as CSV with header `delay_ps,expected_probability,sampled_counts`.
pub fn dip_scan_csv(points: &[DipScanPoint]) -> String {
    let mut out = String::from("delay_ps,expected_probability,sampled_counts\n");
    for p in points {
        let _ = writeln!(out, "{},{:e},{}", p.delay_ps, p.expected_probability, p.sampled_counts);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{build_probe_frame, make_qubit_ket, FrameKind};
    use approx::assert_abs_diff_eq;

    fn ideal_setup(n: usize) -> MultiPartiteSetup {
        let s = SourceModel::heralded(0.01, 0.0).unwrap();
        MultiPartiteSetup::uniform(n, &s, &s, &ExperimentParams::ideal(&["H", "V", "D", "A", "R", "L"])).unwrap()
    }

    fn rho_d() -> DensityMatrix {
        DensityMatrix::from_pure(&make_qubit_ket("D").unwrap())
    }

    #[test]
    fn profile_examples() {
        assert_abs_diff_eq!(dip_profile(0.3, 1.0, 0.0, 2.0), 0.7);
        assert_abs_diff_eq!(dip_profile(0.3, 1.0, 1e6, 2.0), 1.0);
        assert_abs_diff_eq!(dip_profile(0.3, 1.0, 2.0, 2.0), 1.0 - 0.3 / std::f64::consts::E, epsilon = 1e-15);
    }

    #[test]
    fn counts_basics() {
        let cfg = AcquisitionConfig::new(1e6, 1.0, 1.0, 7);
        let mut rng = cfg.stream(0);
        assert_eq!(sample_counts(0.0, &cfg, SamplingMode::Poisson, &mut rng).unwrap(), 0.0);
        let a = sample_counts(1e-3, &cfg, SamplingMode::Poisson, &mut cfg.stream(3)).unwrap();
        let b = sample_counts(1e-3, &cfg, SamplingMode::Poisson, &mut cfg.stream(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fract(), 0.0);
        assert!(sample_counts(f64::MAX, &cfg, SamplingMode::Poisson, &mut rng).is_err());
        assert!(sample_counts(-1.0, &cfg, SamplingMode::Poisson, &mut rng).is_err());
    }

    #[test]
    fn large_mean_concentrates() {
        let cfg = AcquisitionConfig::new(1e6, 1.0, 1.0, 0);
        for seed in 0..50 {
            let c = sample_counts(1.0, &cfg, SamplingMode::Poisson, &mut cfg.stream(seed)).unwrap();
            assert!((c - 1e6).abs() < 5.0 * 1e3, "draw {c}");
        }
    }

    #[test]
    fn far_delays_must_clear_the_dip() {
        let mut cfg = AcquisitionConfig::new(1e6, 1.0, 2.0, 0);
        cfg.far_delays = Some(vec![-10.0, 4.0]);
        assert!(cfg.validate().is_err());
        cfg.far_delays = Some(vec![10.0, 12.0]);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn noiseless_depth_rate() {
        let setup = ideal_setup(1);
        let cfg = AcquisitionConfig::new(1e7, 30.0, 1.5, 1);
        let ket = make_qubit_ket("D").unwrap();
        let (t, p, params) = (&setup.targets[0], &setup.probes.parties[0], &setup.params[0]);
        let rec = three_point_measurement(&rho_d(), "D", &ket, t, p, params, &cfg, SamplingMode::Expected, &mut cfg.stream(0)).unwrap();
        let depth = dip_depth(1.0, "D", t, p, params).unwrap();
        // exp(-25) of the depth remains at the far points
        assert_abs_diff_eq!(rec.depth_counts / 30.0, depth * 1e7, epsilon = 1e-9 * depth * 1e7);
        let ket_a = make_qubit_ket("A").unwrap();
        let rec = three_point_measurement(&rho_d(), "A", &ket_a, t, p, params, &cfg, SamplingMode::Expected, &mut cfg.stream(0)).unwrap();
        assert_abs_diff_eq!(rec.depth_counts, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn dark_counts_leave_expected_depth_unchanged() {
        let setup = ideal_setup(1);
        let mut cfg = AcquisitionConfig::new(1e7, 10.0, 1.0, 1);
        let frame = build_probe_frame(2, 1, FrameKind::Qubit6).unwrap();
        let clean = run_experiment(&rho_d(), &frame, &setup, &cfg, SamplingMode::Expected).unwrap();
        cfg.dark_rate = 250.0;
        let dark = run_experiment(&rho_d(), &frame, &setup, &cfg, SamplingMode::Expected).unwrap();
        for (a, b) in clean.records.iter().zip(&dark.records) {
            assert_abs_diff_eq!(b.c_zero - a.c_zero, 2500.0, epsilon = 1e-6);
            assert_abs_diff_eq!(a.depth_counts, b.depth_counts, epsilon = 1e-6);
        }
    }

    #[test]
    fn symmetric_far_points_cancel_linear_tilt() {
        let setup = ideal_setup(1);
        let mut cfg = AcquisitionConfig::new(1e7, 10.0, 1.0, 1);
        cfg.misalignment_drift = 0.01;
        let frame = build_probe_frame(2, 1, FrameKind::Qubit6).unwrap();
        let ds = run_experiment(&rho_d(), &frame, &setup, &cfg, SamplingMode::Expected).unwrap();
        assert!(ds.records.iter().all(|r| r.depth_counts > -1e-9));
        cfg.far_delays = Some(vec![-5.0, -6.0]);
        let ds = run_experiment(&rho_d(), &frame, &setup, &cfg, SamplingMode::Expected).unwrap();
        let a = ds.record(&MultiSetting::full(&["A"])).unwrap();
        assert!(a.depth_counts < 0.0);
    }

    #[test]
    fn record_counts_per_frame() {
        let frame = build_probe_frame(2, 1, FrameKind::Qubit6).unwrap();
        let cfg = AcquisitionConfig::new(1e7, 1.0, 1.0, 3);
        let ds = run_experiment(&rho_d(), &frame, &ideal_setup(1), &cfg, SamplingMode::Poisson).unwrap();
        assert_eq!(ds.records.len(), 6);

        let frame2 = build_probe_frame(2, 2, FrameKind::Qubit4).unwrap();
        let rho2 = rho_d().tensor(&rho_d());
        let ds = run_experiment(&rho2, &frame2, &ideal_setup(2), &cfg, SamplingMode::Poisson).unwrap();
        assert_eq!(ds.records.len(), 25);
        let joint = ds.records.iter().filter(|r| r.probe_labels.iter().all(Option::is_some)).count();
        let baseline = ds.records.iter().filter(|r| r.probe_labels.iter().all(Option::is_none)).count();
        assert_eq!((joint, baseline), (16, 1));
    }

    #[test]
    fn zero_integration_time_gives_zero_counts() {
        let frame = build_probe_frame(2, 1, FrameKind::Qubit6).unwrap();
        let mut cfg = AcquisitionConfig::new(1e7, 0.0, 1.0, 3);
        cfg.dark_rate = 100.0;
        let ds = run_experiment(&rho_d(), &frame, &ideal_setup(1), &cfg, SamplingMode::Poisson).unwrap();
        assert!(ds.records.iter().all(|r| r.c_zero == 0.0 && r.c_far.iter().all(|&c| c == 0.0)));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let frame = build_probe_frame(2, 1, FrameKind::Qubit6).unwrap();
        let cfg = AcquisitionConfig::new(1e7, 5.0, 1.0, 11);
        let a = run_experiment(&rho_d(), &frame, &ideal_setup(1), &cfg, SamplingMode::Poisson).unwrap();
        let b = run_experiment(&rho_d(), &frame, &ideal_setup(1), &cfg, SamplingMode::Poisson).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let mut cfg2 = cfg.clone();
        cfg2.rng_seed = 12;
        let c = run_experiment(&rho_d(), &frame, &ideal_setup(1), &cfg2, SamplingMode::Poisson).unwrap();
        assert_ne!(a.records, c.records);
        assert_eq!(a.records.len(), c.records.len());
        assert_ne!(a.provenance.config_hash, c.provenance.config_hash);
    }

    #[test]
    fn dip_scan_visibility() {
        let setup = ideal_setup(1);
        let cfg = AcquisitionConfig::new(1e7, 1.0, 1.0, 0);
        let ket = make_qubit_ket("D").unwrap();
        let pts = dip_scan(&rho_d(), "D", &ket, &setup.targets[0], &setup.probes.parties[0], &setup.params[0], &cfg, SamplingMode::Expected).unwrap();
        assert_eq!(pts.len(), 81);
        let min = pts.iter().map(|p| p.expected_probability).fold(f64::INFINITY, f64::min);
        let max = pts.iter().map(|p| p.expected_probability).fold(0.0, f64::max);
        assert_abs_diff_eq!(1.0 - min / max, 1.0, epsilon = 1e-12);
        assert!(dip_scan_csv(&pts).starts_with("delay_ps,expected_probability,sampled_counts\n"));
    }

    #[test]
    fn csv_layout() {
        let frame = build_probe_frame(2, 1, FrameKind::Qubit4).unwrap();
        let cfg = AcquisitionConfig::new(1e7, 2.0, 1.0, 5);
        let ds = run_experiment(&rho_d(), &frame, &ideal_setup(1), &cfg, SamplingMode::Poisson).unwrap();
        let csv = ds.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert!(lines[0].starts_with("# config_hash="));
        assert_eq!(lines[1], "setting,c_zero,c_far_1,c_far_2,depth,time");
        assert_eq!(lines.len(), 6);
        assert!(lines[2].starts_with("H,"));
        assert_eq!(lines[2].split(',').count(), 6);
    }
}
