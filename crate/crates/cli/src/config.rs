//! TOML run configuration and its resolution into library types.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use homqst::quantum::ProbeSetting;
use homqst::sim::input_hash;
use homqst::tomography::Likelihood;
use homqst::{
    build_probe_frame, make_qubit_ket, AcquisitionConfig, CrossCorrelationRule, DensityMatrix, ExperimentParams,
    FrameKind, MleOptions, MultiPartiteSetup, NegativeStrategy, ProbeEnsemble, ProbeFrame, SamplingMode, SourceKind,
    SourceModel, StateVector,
};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub target: TargetSpec,
    pub target_source: SourceSpec,
    pub probe_source: ProbeSpec,
    #[serde(default)]
    pub params: ParamsSpec,
    pub acquisition: AcquisitionSpec,
    #[serde(default)]
    pub frame: FrameSpec,
    #[serde(default)]
    pub tomography: TomographySpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory that relative paths in the config are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Exactly one of `state`, `amplitudes_re` or `density_matrix`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// Qubit labels, one per party, e.g. `"D"` or `"HV"`.
    pub state: Option<String>,
    pub amplitudes_re: Option<Vec<f64>>,
    pub amplitudes_im: Option<Vec<f64>>,
    /// JSON file holding a density matrix as `{dim, re, im}`.
    pub density_matrix: Option<PathBuf>,
    /// Weight of the maximally mixed state mixed into the target.
    #[serde(default)]
    pub white_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    /// heralded, thermal, coherent or custom.
    pub kind: String,
    pub mean_photon: f64,
    /// Required for heralded and custom sources.
    pub g2: Option<f64>,
    /// Explicit `g^(n)` values for orders 1, 2, 3, ...
    pub gn_table: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub kind: String,
    pub mean_photon: f64,
    pub g2: Option<f64>,
    pub gn_table: Option<Vec<f64>>,
    /// independent_product or partitioned_thermal.
    #[serde(default)]
    pub rule: CrossCorrelationRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSpec {
    pub transmittance: f64,
    pub reflectance: f64,
    pub mode_overlap: f64,
    pub eta12: f64,
    /// Defaults to the first label of the frame.
    pub reference_label: Option<String>,
    /// Missing labels default to 1.
    pub rel_efficiency: BTreeMap<String, f64>,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        ParamsSpec {
            transmittance: 0.5,
            reflectance: 0.5,
            mode_overlap: 1.0,
            eta12: 1.0,
            reference_label: None,
            rel_efficiency: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionSpec {
    pub repetition_rate: f64,
    pub integration_time: f64,
    #[serde(default)]
    pub dark_rate: f64,
    pub coherence_time: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub misalignment_drift: f64,
    pub far_delays: Option<Vec<f64>>,
    #[serde(default)]
    pub delay_grid: Vec<f64>,
    #[serde(default)]
    pub sampling: SamplingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameSpec {
    /// qubit6, qubit4, mub-full or custom.
    pub kind: String,
    pub d: usize,
    pub n: usize,
    /// JSON list of `{label, ket: {dim, re, im}}` for custom frames.
    pub custom: Option<PathBuf>,
}

impl FrameSpec {
    /// Builds the frame; a custom frame file is looked up relative to `base_dir`.
    pub fn build(&self, base_dir: &Path) -> CliResult<ProbeFrame> {
        let kind: FrameKind = self.kind.parse().map_err(CliError::config)?;
        if kind != FrameKind::Custom {
            return build_probe_frame(self.d, self.n, kind).map_err(CliError::config);
        }
        let Some(file) = &self.custom else {
            return Err(CliError::Config("frame.custom must name a file for custom frames".into()));
        };
        let path = base_dir.join(file);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let local: Vec<ProbeSetting> =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        ProbeFrame::custom(self.d, self.n, local).map_err(CliError::config)
    }
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec {
            kind: "qubit6".into(),
            d: 2,
            n: 1,
            custom: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographySpec {
    pub strategy: NegativeStrategy,
    pub likelihood: Likelihood,
    /// Emit reconstructions for both negative-depth strategies.
    pub both: bool,
    /// Poisson resamples for fidelity error bars; 0 or 1 disables them.
    pub resamples: usize,
    pub resample_seed: u64,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
}

impl Default for TomographySpec {
    fn default() -> Self {
        TomographySpec {
            strategy: NegativeStrategy::Drop,
            likelihood: Likelihood::Counts,
            both: false,
            resamples: 0,
            resample_seed: 1,
            tolerance: None,
            max_iterations: None,
        }
    }
}

impl TomographySpec {
    pub fn options(&self) -> MleOptions {
        let mut opts = MleOptions::default()
            .with_strategy(self.strategy)
            .with_likelihood(self.likelihood);
        if let Some(t) = self.tolerance {
            opts.tolerance = t;
        }
        if let Some(m) = self.max_iterations {
            opts.max_iterations = m;
        }
        opts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("out") }
    }
}

/// Everything a simulation needs, validated.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub rho: DensityMatrix,
    pub frame: ProbeFrame,
    pub setup: MultiPartiteSetup,
    pub acquisition: AcquisitionConfig,
    pub sampling: SamplingMode,
}

impl Experiment {
    /// Hash recorded in every file derived from this experiment.
    pub fn config_hash(&self) -> String {
        input_hash(&self.rho, &self.frame, &self.setup, &self.acquisition, self.sampling)
    }
}

fn kind_of(name: &str) -> CliResult<SourceKind> {
    match name {
        "heralded" | "hsps" | "heralded_single_photon" => Ok(SourceKind::HeraldedSinglePhoton),
        "thermal" => Ok(SourceKind::Thermal),
        "coherent" => Ok(SourceKind::Coherent),
        "custom" => Ok(SourceKind::Custom),
        other => Err(CliError::Config(format!(
            "unknown source kind `{other}` (expected heralded, thermal, coherent or custom)"
        ))),
    }
}

impl ProbeSpec {
    pub fn source(&self) -> SourceSpec {
        SourceSpec {
            kind: self.kind.clone(),
            mean_photon: self.mean_photon,
            g2: self.g2,
            gn_table: self.gn_table.clone(),
        }
    }
}

impl SourceSpec {
    pub fn build(&self, section: &str) -> CliResult<SourceModel> {
        let kind = kind_of(&self.kind)?;
        let g2 = match (kind, self.g2) {
            (_, Some(g)) => g,
            (SourceKind::Thermal, None) => 2.0,
            (SourceKind::Coherent, None) => 1.0,
            _ => return Err(CliError::Config(format!("{section}.g2 is required for {} sources", self.kind))),
        };
        let model = SourceModel::new(kind, self.mean_photon, g2)
            .map_err(|e| CliError::Config(format!("{section}: {e}")))?;
        match &self.gn_table {
            Some(t) => model
                .with_gn_table(t.clone())
                .map_err(|e| CliError::Config(format!("{section}.gn_table: {e}"))),
            None => Ok(model),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn path(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn build_frame(&self) -> CliResult<ProbeFrame> {
        self.frame.build(&self.base_dir)
    }

    pub fn build_target(&self, frame: &ProbeFrame) -> CliResult<DensityMatrix> {
        let t = &self.target;
        let given = [t.state.is_some(), t.amplitudes_re.is_some(), t.density_matrix.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(CliError::Config(
                "target needs exactly one of state, amplitudes_re or density_matrix".into(),
            ));
        }
        let rho = if let Some(labels) = &t.state {
            if frame.local_dim() != 2 {
                return Err(CliError::Config("target.state names qubit states; use amplitudes for qudits".into()));
            }
            let kets = labels
                .chars()
                .map(|c| make_qubit_ket(&c.to_string()))
                .collect::<homqst::Result<Vec<_>>>()
                .map_err(|e| CliError::Config(format!("target.state: {e}")))?;
            let ket = kets[1..].iter().fold(kets[0].clone(), |acc, k| acc.tensor(k));
            DensityMatrix::from_pure(&ket)
        } else if let Some(re) = &t.amplitudes_re {
            let im = t.amplitudes_im.clone().unwrap_or_else(|| vec![0.0; re.len()]);
            if im.len() != re.len() {
                return Err(CliError::Config("target.amplitudes_im must match amplitudes_re in length".into()));
            }
            let amps = re.iter().zip(&im).map(|(&r, &i)| C64::new(r, i)).collect();
            let ket = StateVector::normalized(amps).map_err(|e| CliError::Config(format!("target.amplitudes: {e}")))?;
            DensityMatrix::from_pure(&ket)
        } else {
            let path = self.path(t.density_matrix.as_ref().expect("checked above"));
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        if rho.dim() != frame.dim() {
            return Err(CliError::Config(format!(
                "target has dimension {}, the frame needs {}",
                rho.dim(),
                frame.dim()
            )));
        }
        if t.white_noise == 0.0 {
            return Ok(rho);
        }
        let mixed = DensityMatrix::maximally_mixed(rho.dim());
        rho.mix(&mixed, 1.0 - t.white_noise)
            .map_err(|e| CliError::Config(format!("target.white_noise: {e}")))
    }

    pub fn build_params(&self, frame: &ProbeFrame) -> CliResult<ExperimentParams> {
        let p = &self.params;
        let labels: Vec<&str> = frame.local_settings().iter().map(|s| s.label.as_str()).collect();
        let mut params = ExperimentParams::ideal(&labels)
            .with_split(p.transmittance, p.reflectance)
            .with_overlap(p.mode_overlap)
            .with_eta(p.eta12);
        if let Some(r) = &p.reference_label {
            params.reference_label = r.clone();
        }
        for (label, &v) in &p.rel_efficiency {
            if !labels.contains(&label.as_str()) {
                return Err(CliError::Config(format!("params.rel_efficiency: unknown label `{label}`")));
            }
            params = params.with_efficiency(label, v);
        }
        params.validate().map_err(|e| CliError::Config(format!("params: {e}")))?;
        Ok(params)
    }

    pub fn build_acquisition(&self) -> CliResult<AcquisitionConfig> {
        let a = &self.acquisition;
        let cfg = AcquisitionConfig {
            repetition_rate: a.repetition_rate,
            integration_time: a.integration_time,
            dark_rate: a.dark_rate,
            delay_grid: a.delay_grid.clone(),
            coherence_time: a.coherence_time,
            rng_seed: a.seed,
            misalignment_drift: a.misalignment_drift,
            far_delays: a.far_delays.clone(),
        };
        cfg.validate().map_err(|e| CliError::Config(format!("acquisition: {e}")))?;
        Ok(cfg)
    }

    /// Validates every section and builds the library inputs.
    pub fn resolve(&self) -> CliResult<Experiment> {
        let frame = self.build_frame()?;
        let rho = self.build_target(&frame)?;
        let params = self.build_params(&frame)?;
        let target = self.target_source.build("target_source")?;
        let probe = self.probe_source.source().build("probe_source")?;
        let n = frame.parties();
        let probes = ProbeEnsemble::new(vec![probe; n], self.probe_source.rule)
            .map_err(|e| CliError::Config(format!("probe_source: {e}")))?;
        let setup = MultiPartiteSetup::new(vec![target; n], probes, vec![params; n])
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.tomography.options().validate().map_err(|e| CliError::Config(format!("tomography: {e}")))?;
        Ok(Experiment {
            rho,
            frame,
            setup,
            acquisition: self.build_acquisition()?,
            sampling: self.acquisition.sampling,
        })
    }
}
