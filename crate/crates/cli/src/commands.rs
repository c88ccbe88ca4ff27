//! Subcommand implementations. Each returns the files it wrote so callers
//! and tests can inspect them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use homqst::sim::{dip_scan, dip_scan_csv, run_experiment, DipScanPoint};
use homqst::tomography::{dataset_depths, mle_from_depths, reconstruct_with_errors, DepthVector, Likelihood};
use homqst::{
    dip_observables, projection_probability, solve_overlap_from_visibility, state_fidelity, visibility, Dataset,
    MleOptions, NegativeStrategy, ReconstructionResult, SourceModel,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{FrameSpec, RunConfig, TomographySpec};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub quiet: bool,
}

impl Globals {
    fn say(&self, text: &str) {
        if !self.quiet {
            print!("{text}");
        }
    }
}

/// Overrides of the `[tomography]` section.
#[derive(Debug, Clone, Default)]
pub struct ReconstructArgs {
    pub strategy: Option<NegativeStrategy>,
    pub likelihood: Option<Likelihood>,
    pub both: bool,
    pub resamples: Option<usize>,
    pub max_iterations: Option<usize>,
}

impl ReconstructArgs {
    fn apply(&self, spec: &TomographySpec) -> TomographySpec {
        let mut spec = spec.clone();
        if let Some(s) = self.strategy {
            spec.strategy = s;
        }
        if let Some(l) = self.likelihood {
            spec.likelihood = l;
        }
        spec.both |= self.both;
        if let Some(r) = self.resamples {
            spec.resamples = r;
        }
        if self.max_iterations.is_some() {
            spec.max_iterations = self.max_iterations;
        }
        spec
    }
}

pub fn parse_likelihood(s: &str) -> Result<Likelihood, String> {
    match s {
        "counts" => Ok(Likelihood::Counts),
        "depths" => Ok(Likelihood::Depths),
        other => Err(format!("`{other}` (expected counts or depths)")),
    }
}

pub fn parse_strategy(s: &str) -> Result<NegativeStrategy, String> {
    s.parse().map_err(|e: homqst::Error| e.to_string())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

fn load_config(path: &Path, g: &Globals) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = g.seed {
        cfg.acquisition.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(g: &Globals, cfg: Option<&RunConfig>) -> PathBuf {
    g.out
        .clone()
        .or_else(|| cfg.map(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub dataset: Dataset,
    pub json: PathBuf,
    pub csv: PathBuf,
}

/// Simulates the configured experiment and writes `dataset.json` and
/// `dataset.csv`.
pub fn cmd_simulate(config: &Path, g: &Globals) -> CliResult<SimulateOutput> {
    let cfg = load_config(config, g)?;
    simulate(&cfg, g)
}

fn simulate(cfg: &RunConfig, g: &Globals) -> CliResult<SimulateOutput> {
    let exp = cfg.resolve()?;
    let dataset = run_experiment(&exp.rho, &exp.frame, &exp.setup, &exp.acquisition, exp.sampling)?;
    let dir = out_dir(g, Some(cfg));
    let json = write_file(&dir, "dataset.json", &to_json(&dataset))?;
    let csv = write_file(&dir, "dataset.csv", &dataset.to_csv())?;
    g.say(&format!(
        "simulated {} records (seed {}, config_hash {})\nwrote {} and {}\n",
        dataset.records.len(),
        dataset.provenance.seed,
        dataset.provenance.config_hash,
        json.display(),
        csv.display()
    ));
    Ok(SimulateOutput { dataset, json, csv })
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

/// Depths (or conventional counts) keyed by setting label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthTable {
    #[serde(default)]
    pub frame: FrameSpec,
    pub depths: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl DepthTable {
    pub fn config_hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("depth table serializes"))
    }
}

enum Input {
    Dataset(Box<Dataset>),
    Depths(DepthVector, String),
}

fn load_input(path: &Path) -> CliResult<Input> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if value.get("records").is_some() {
        let ds: Dataset =
            serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        return Ok(Input::Dataset(Box::new(ds)));
    }
    let table: DepthTable =
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let frame = table.frame.build(base)?;
    let dv = DepthVector::from_values(&frame, &table.depths).map_err(CliError::config)?;
    Ok(Input::Depths(dv, table.config_hash()))
}

/// JSON written by `reconstruct`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub config_hash: String,
    pub source: String,
    pub likelihood: Likelihood,
    pub reconstructions: Vec<ReconstructionResult>,
}

#[derive(Debug, Clone)]
pub struct ReconstructOutput {
    pub report: ReconstructionReport,
    pub file: PathBuf,
}

fn strategies(spec: &TomographySpec) -> Vec<NegativeStrategy> {
    if spec.both {
        vec![NegativeStrategy::Zero, NegativeStrategy::Drop]
    } else {
        vec![spec.strategy]
    }
}

fn fit_dataset(ds: &Dataset, spec: &TomographySpec, seed: u64) -> CliResult<Vec<ReconstructionResult>> {
    strategies(spec)
        .into_iter()
        .map(|s| {
            let opts = spec.options().with_strategy(s);
            Ok(reconstruct_with_errors(ds, &opts, spec.resamples, seed)?)
        })
        .collect()
}

fn fit_depths(dv: &DepthVector, spec: &TomographySpec) -> CliResult<Vec<ReconstructionResult>> {
    strategies(spec)
        .into_iter()
        .map(|s| {
            let opts: MleOptions = spec.options().with_strategy(s);
            Ok(mle_from_depths(dv, &opts)?)
        })
        .collect()
}

fn fidelity_table(report: &ReconstructionReport) -> String {
    let mut out = format!("config_hash {}\n", report.config_hash);
    for r in &report.reconstructions {
        let _ = writeln!(
            out,
            "strategy {}: {} iterations, log-likelihood {:.6}",
            r.strategy, r.iterations, r.log_likelihood
        );
        let _ = writeln!(out, "  {:<8} {:>10} {:>10}", "label", "fidelity", "stderr");
        for (label, f) in &r.fidelities {
            let err = r
                .stderr_fidelities
                .as_ref()
                .and_then(|m| m.get(label))
                .map(|e| format!("{e:.5}"))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "  {label:<8} {f:>10.5} {err:>10}");
        }
    }
    out
}

fn fidelity_csv(report: &ReconstructionReport) -> String {
    let mut out = format!("# config_hash={}\nstrategy,label,fidelity,stderr\n", report.config_hash);
    for r in &report.reconstructions {
        for (label, f) in &r.fidelities {
            let err = r.stderr_fidelities.as_ref().and_then(|m| m.get(label));
            let _ = writeln!(out, "{},{label},{f},{}", r.strategy, err.map(|e| e.to_string()).unwrap_or_default());
        }
    }
    out
}

fn write_report(report: ReconstructionReport, g: &Globals, dir: &Path) -> CliResult<ReconstructOutput> {
    let file = match g.format {
        Format::Json => write_file(dir, "reconstruction.json", &to_json(&report))?,
        Format::Csv => write_file(dir, "reconstruction.csv", &fidelity_csv(&report))?,
    };
    g.say(&fidelity_table(&report));
    g.say(&format!("wrote {}\n", file.display()));
    Ok(ReconstructOutput { report, file })
}

/// Reconstructs from a dataset JSON or a depth table JSON.
pub fn cmd_reconstruct(input: &Path, args: &ReconstructArgs, g: &Globals) -> CliResult<ReconstructOutput> {
    let spec = args.apply(&TomographySpec::default());
    spec.options().validate().map_err(CliError::config)?;
    let seed = g.seed.unwrap_or(spec.resample_seed);
    let report = match load_input(input)? {
        Input::Dataset(ds) => ReconstructionReport {
            config_hash: ds.provenance.config_hash.clone(),
            source: input.display().to_string(),
            likelihood: effective_likelihood(&ds, spec.likelihood),
            reconstructions: fit_dataset(&ds, &spec, seed)?,
        },
        Input::Depths(dv, hash) => ReconstructionReport {
            config_hash: hash,
            source: input.display().to_string(),
            likelihood: Likelihood::Depths,
            reconstructions: fit_depths(&dv, &spec)?,
        },
    };
    write_report(report, g, &out_dir(g, None))
}

fn effective_likelihood(ds: &Dataset, requested: Likelihood) -> Likelihood {
    if ds.frame.parties() > 1 {
        Likelihood::Depths
    } else {
        requested
    }
}

// ---------------------------------------------------------------------------
// dip-scan
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipScanReport {
    pub config_hash: String,
    pub label: String,
    /// `Delta_k / P_inf` of the expected curve.
    pub visibility: f64,
    pub points: Vec<DipScanPoint>,
}

#[derive(Debug, Clone)]
pub struct DipScanOutput {
    pub report: DipScanReport,
    pub file: PathBuf,
}

/// Delay scan of the first interferometer with its probe in `label`.
pub fn cmd_dip_scan(config: &Path, label: &str, g: &Globals) -> CliResult<DipScanOutput> {
    let cfg = load_config(config, g)?;
    let exp = cfg.resolve()?;
    let ket = exp.frame.local_ket(label).map_err(CliError::config)?.clone();
    let (target, probe, params) = (&exp.setup.targets[0], &exp.setup.probes.parties[0], &exp.setup.params[0]);
    let rho = if exp.frame.parties() == 1 {
        exp.rho.clone()
    } else {
        return Err(CliError::Config("dip-scan needs a single-party frame".into()));
    };
    let points = dip_scan(&rho, label, &ket, target, probe, params, &exp.acquisition, exp.sampling)?;
    let rho_k = projection_probability(&rho, &ket)?.clamp(0.0, 1.0);
    let obs = dip_observables(rho_k, label, target, probe, params)?;
    let report = DipScanReport {
        config_hash: exp.config_hash(),
        label: label.to_string(),
        visibility: obs.visibility,
        points,
    };
    let dir = out_dir(g, Some(&cfg));
    let file = match g.format {
        Format::Json => write_file(&dir, &format!("dip-scan-{label}.json"), &to_json(&report))?,
        Format::Csv => {
            let body = format!("# config_hash={}\n{}", report.config_hash, dip_scan_csv(&report.points));
            write_file(&dir, &format!("dip-scan-{label}.csv"), &body)?
        }
    };
    g.say(&format!(
        "probe {label}: visibility {:.4} over {} delays\nwrote {}\n",
        report.visibility,
        report.points.len(),
        file.display()
    ));
    Ok(DipScanOutput { report, file })
}

// ---------------------------------------------------------------------------
// visibility
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityArgs {
    /// `n_p / n_s`.
    pub zeta: f64,
    pub g2s: f64,
    pub g2p: f64,
    pub overlap: f64,
    /// Measured visibility to invert for the mode overlap.
    pub vex: Option<f64>,
    pub invert: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityReport {
    pub config_hash: String,
    pub inputs: VisibilityArgs,
    pub visibility: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode_overlap: Option<homqst::hom::OverlapEstimate>,
}

pub fn cmd_visibility(args: &VisibilityArgs, g: &Globals) -> CliResult<VisibilityReport> {
    let target = SourceModel::custom(1.0, args.g2s).map_err(CliError::config)?;
    let probe = SourceModel::custom(args.zeta, args.g2p).map_err(CliError::config)?;
    let v = visibility(&target, &probe, args.overlap, 1.0).map_err(CliError::config)?;
    let mode_overlap = match (args.invert, args.vex) {
        (true, Some(vex)) => Some(solve_overlap_from_visibility(vex, &target, &probe, args.zeta).map_err(CliError::config)?),
        (true, None) => return Err(CliError::Config("--invert needs --vex".into())),
        (false, _) => None,
    };
    let report = VisibilityReport {
        config_hash: sha256_hex(&serde_json::to_vec(args).expect("arguments serialize")),
        inputs: args.clone(),
        visibility: v,
        mode_overlap,
    };
    let text = match g.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let m = report.mode_overlap.map(|m| m.overlap.to_string()).unwrap_or_default();
            format!(
                "# config_hash={}\nzeta,g2s,g2p,overlap,visibility,mode_overlap\n{},{},{},{},{},{m}\n",
                report.config_hash, args.zeta, args.g2s, args.g2p, args.overlap, v
            )
        }
    };
    g.say(&text);
    if let Some(dir) = &g.out {
        let name = match g.format {
            Format::Json => "visibility.json",
            Format::Csv => "visibility.csv",
        };
        write_file(dir, name, &text)?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// run-all
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: NegativeStrategy,
    /// Fidelity between the estimate and the simulated state.
    pub state_fidelity: f64,
    pub iterations: usize,
    pub fidelities: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr_fidelities: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub dataset: PathBuf,
    pub reconstruction: PathBuf,
    /// Efficiency-normalized depths per setting.
    pub depths: BTreeMap<String, f64>,
    pub summaries: Vec<StrategySummary>,
}

#[derive(Debug, Clone)]
pub struct RunAllOutput {
    pub report: RunReport,
    pub file: PathBuf,
}

/// Simulate, reconstruct with the configured options, and compare with the
/// simulated state.
pub fn cmd_run_all(config: &Path, g: &Globals) -> CliResult<RunAllOutput> {
    let cfg = load_config(config, g)?;
    let exp = cfg.resolve()?;
    let sim = simulate(&cfg, g)?;
    let spec = &cfg.tomography;
    let results = fit_dataset(&sim.dataset, spec, g.seed.unwrap_or(spec.resample_seed))?;
    let dir = out_dir(g, Some(&cfg));
    let rec = write_report(
        ReconstructionReport {
            config_hash: sim.dataset.provenance.config_hash.clone(),
            source: sim.json.display().to_string(),
            likelihood: effective_likelihood(&sim.dataset, spec.likelihood),
            reconstructions: results,
        },
        g,
        &dir,
    )?;
    let summaries = rec
        .report
        .reconstructions
        .iter()
        .map(|r| {
            Ok(StrategySummary {
                strategy: r.strategy,
                state_fidelity: state_fidelity(&r.rho, &exp.rho)?,
                iterations: r.iterations,
                fidelities: r.fidelities.clone(),
                stderr_fidelities: r.stderr_fidelities.clone(),
            })
        })
        .collect::<homqst::Result<Vec<_>>>()?;
    let report = RunReport {
        config_hash: sim.dataset.provenance.config_hash.clone(),
        dataset: sim.json.clone(),
        reconstruction: rec.file.clone(),
        depths: dataset_depths(&sim.dataset)?.values(),
        summaries,
    };
    let file = match g.format {
        Format::Json => write_file(&dir, "report.json", &to_json(&report))?,
        Format::Csv => {
            let mut body = format!("# config_hash={}\nstrategy,state_fidelity,iterations\n", report.config_hash);
            for s in &report.summaries {
                let _ = writeln!(body, "{},{},{}", s.strategy, s.state_fidelity, s.iterations);
            }
            write_file(&dir, "report.csv", &body)?
        }
    };
    for s in &report.summaries {
        g.say(&format!("strategy {}: fidelity to the simulated state {:.6}\n", s.strategy, s.state_fidelity));
    }
    g.say(&format!("wrote {}\n", file.display()));
    Ok(RunAllOutput { report, file })
}
