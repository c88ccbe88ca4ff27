//! Closed-form Hong-Ou-Mandel forward model.
//!
//! A target photon enters one port of a beam splitter (transmittance `T`,
//! reflectance `R`) and probe light in state `|k>` enters the other. With
//! `n_s, g2_s` and `n_p, g2_p` the mean photon numbers and second-order
//! correlations of target and probe, `M` the probe/target mode overlap and
//! `rho_k = <k|rho|k>`, the two-fold coincidence probabilities are
//!
//! ```text
//! P_inf = eta * [T R (n_s^2 g2_s + n_p^2 g2_p) + (T^2 + R^2) n_s n_p]
//! P_k   = P_inf - 2 eta_kk T R n_s n_p M rho_k
//! ```
//!
//! so the dip depth `Delta_k = P_inf - P_k` is proportional to `rho_k` with a
//! coefficient that does not depend on `k` beyond the relative detection
//! efficiency `eta_kk / eta_ref`.
//!
//! For `n` interferometers the `2n`-fold coincidence of a setting in which
//! the parties in `S` sit at zero delay expands by inclusion-exclusion over
//! the subsets of `S` (see [`multi_coincidence`]).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{marginal_projection, DensityMatrix, ProbeFrame};
use crate::sources::{ProbeEnsemble, SourceModel};

const SUM_TOL: f64 = 1e-12;

/// Beam splitter, detection and mode-matching parameters of one interferometer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub transmittance: f64,
    pub reflectance: f64,
    /// `eta_kk / eta_ref` for every probe label.
    pub rel_efficiency: BTreeMap<String, f64>,
    pub reference_label: String,
    /// Mode overlap `M` between probe and target.
    pub mode_overlap: f64,
    /// Absolute joint detection efficiency of the reference label.
    pub eta12: f64,
}

impl ExperimentParams {
    /// Balanced splitter, perfect overlap, unit efficiencies for `labels`
    /// (the first label is the reference).
    pub fn ideal<S: AsRef<str>>(labels: &[S]) -> Self {
        ExperimentParams {
            transmittance: 0.5,
            reflectance: 0.5,
            rel_efficiency: labels.iter().map(|l| (l.as_ref().to_string(), 1.0)).collect(),
            reference_label: labels
                .first()
                .map(|l| l.as_ref().to_string())
                .unwrap_or_default(),
            mode_overlap: 1.0,
            eta12: 1.0,
        }
    }

    pub fn with_split(mut self, transmittance: f64, reflectance: f64) -> Self {
        self.transmittance = transmittance;
        self.reflectance = reflectance;
        self
    }

    pub fn with_overlap(mut self, overlap: f64) -> Self {
        self.mode_overlap = overlap;
        self
    }

    pub fn with_eta(mut self, eta12: f64) -> Self {
        self.eta12 = eta12;
        self
    }

    pub fn with_efficiency(mut self, label: &str, rel: f64) -> Self {
        self.rel_efficiency.insert(label.to_string(), rel);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (t, r) = (self.transmittance, self.reflectance);
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::invalid("transmittance", format!("{t} not in (0,1)")));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::invalid("reflectance", format!("{r} not in (0,1)")));
        }
        if (t + r - 1.0).abs() > SUM_TOL {
            return Err(Error::invalid(
                "transmittance + reflectance",
                format!("{t} + {r} = {} != 1", t + r),
            ));
        }
        if !(0.0..=1.0).contains(&self.mode_overlap) {
            return Err(Error::invalid(
                "mode_overlap",
                format!("{} not in [0,1]", self.mode_overlap),
            ));
        }
        if !(self.eta12 > 0.0 && self.eta12 <= 1.0) {
            return Err(Error::invalid("eta12", format!("{} not in (0,1]", self.eta12)));
        }
        for (label, &v) in &self.rel_efficiency {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    format!("rel_efficiency.{label}"),
                    format!("{v} must be positive"),
                ));
            }
        }
        match self.rel_efficiency.get(&self.reference_label) {
            Some(&v) if v == 1.0 => Ok(()),
            Some(&v) => Err(Error::invalid(
                format!("rel_efficiency.{}", self.reference_label),
                format!("reference label must map to 1, found {v}"),
            )),
            None => Err(Error::invalid(
                "reference_label",
                format!("`{}` has no efficiency entry", self.reference_label),
            )),
        }
    }

    pub fn relative_efficiency(&self, label: &str) -> Result<f64> {
        self.rel_efficiency
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Absolute joint efficiency `eta_kk = eta12 * rel_efficiency[k]`.
    pub fn efficiency(&self, label: &str) -> Result<f64> {
        Ok(self.eta12 * self.relative_efficiency(label)?)
    }

    fn tr(&self) -> f64 {
        self.transmittance * self.reflectance
    }

    fn t2r2(&self) -> f64 {
        self.transmittance.powi(2) + self.reflectance.powi(2)
    }
}

/// Observables of one probe setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipObservables {
    pub p_k: f64,
    pub p_inf: f64,
    pub depth: f64,
    pub visibility: f64,
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(name, format!("{p} is not a probability")));
    }
    Ok(())
}

/// Efficiency-free part of `P_inf`: the distinguishable-photon coincidence.
fn baseline_factor(target: &SourceModel, probe: &SourceModel, params: &ExperimentParams) -> f64 {
    let (ns, np) = (target.mean_photon, probe.mean_photon);
    params.tr() * (ns * ns * target.g2 + np * np * probe.g2) + params.t2r2() * ns * np
}

fn interference_factor(target: &SourceModel, probe: &SourceModel, params: &ExperimentParams) -> f64 {
    2.0 * params.tr() * target.mean_photon * probe.mean_photon * params.mode_overlap
}

/// `P_inf` at the reference efficiency `eta12`.
pub fn coincidence_infinite_delay(
    target: &SourceModel,
    probe: &SourceModel,
    params: &ExperimentParams,
) -> Result<f64> {
    params.validate()?;
    Ok(params.eta12 * baseline_factor(target, probe, params))
}

/// `P_inf` seen while the probe is prepared in `label` (efficiency `eta_kk`).
pub fn coincidence_infinite_delay_for(
    label: &str,
    target: &SourceModel,
    probe: &SourceModel,
    params: &ExperimentParams,
) -> Result<f64> {
    params.validate()?;
    Ok(params.efficiency(label)? * baseline_factor(target, probe, params))
}

/// `P_k` at the reference efficiency.
pub fn coincidence_zero_delay(
    rho_k: f64,
    target: &SourceModel,
    probe: &SourceModel,
    params: &ExperimentParams,
) -> Result<f64> {
    check_probability("rho_k", rho_k)?;
    params.validate()?;
    Ok(params.eta12
        * (baseline_factor(target, probe, params) - interference_factor(target, probe, params) * rho_k))
}

/// `P_k` with the probe prepared in `label`.
pub fn coincidence_zero_delay_for(
    rho_k: f64,
    label: &str,
    target: &SourceModel,
    probe: &SourceModel,
    params: &ExperimentParams,
) -> Result<f64> {
    check_probability("rho_k", rho_k)?;
    params.validate()?;
    Ok(params.efficiency(label)?
        * (baseline_factor(target, probe, params) - interference_factor(target, probe, params) * rho_k))
}

/// `Delta_k = 2 eta_kk T R n_s n_p M rho_k`.
pub fn dip_depth(
    rho_k: f64,
    label: &str,
    target: &SourceModel,
    probe: &SourceModel,
    params: &ExperimentParams,
) -> Result<f64> {
    check_probability("rho_k", rho_k)?;
    params.validate()?;
    Ok(params.efficiency(label)? * interference_factor(target, probe, params) * rho_k)
}

pub fn dip_observables(
    rho_k: f64,
    label: &str,
    target: &SourceModel,
    probe: &SourceModel,
    params: &ExperimentParams,
) -> Result<DipObservables> {
    let p_inf = coincidence_infinite_delay_for(label, target, probe, params)?;
    let depth = dip_depth(rho_k, label, target, probe, params)?;
    Ok(DipObservables {
        p_k: p_inf - depth,
        p_inf,
        depth,
        visibility: if p_inf > 0.0 { depth / p_inf } else { 0.0 },
    })
}

fn zeta_denominator(zeta: f64, g2_s: f64, g2_p: f64) -> f64 {
    1.0 + (zeta * g2_p + g2_s / zeta) / 2.0
}

/// Balanced-splitter visibility `M rho_k / (1 + (zeta g2_p + g2_s / zeta) / 2)`
/// with `zeta = n_p / n_s`.
pub fn visibility(target: &SourceModel, probe: &SourceModel, overlap: f64, rho_k: f64) -> Result<f64> {
    if !(target.mean_photon > 0.0 && probe.mean_photon > 0.0) {
        return Err(Error::invalid(
            "mean_photon",
            "visibility needs non-zero target and probe photon numbers",
        ));
    }
    check_probability("mode_overlap", overlap)?;
    check_probability("rho_k", rho_k)?;
    let zeta = probe.mean_photon / target.mean_photon;
    Ok(overlap * rho_k / zeta_denominator(zeta, target.g2, probe.g2))
}

/// Mode overlap recovered from a measured visibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapEstimate {
    pub overlap: f64,
    /// Unclamped value of the inversion.
    pub raw: f64,
    /// `raw` fell outside `[0, 1]`.
    pub clamped: bool,
}

/// Inverts [`visibility`] for `M` at `rho_k = 1`.
pub fn solve_overlap_from_visibility(
    v_ex: f64,
    target: &SourceModel,
    probe: &SourceModel,
    zeta: f64,
) -> Result<OverlapEstimate> {
    check_probability("v_ex", v_ex)?;
    if !(zeta > 0.0) {
        return Err(Error::invalid("zeta", format!("{zeta} must be positive")));
    }
    let raw = v_ex * zeta_denominator(zeta, target.g2, probe.g2);
    if !raw.is_finite() {
        return Err(Error::NonFinite("mode overlap inversion".into()));
    }
    let overlap = raw.clamp(0.0, 1.0);
    Ok(OverlapEstimate {
        overlap,
        raw,
        clamped: overlap != raw,
    })
}

// ---------------------------------------------------------------------------
// n interferometers
// ---------------------------------------------------------------------------

/// Per-party probe labels; `None` marks an interferometer held at large delay.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiSetting {
    pub labels: Vec<Option<String>>,
}

impl MultiSetting {
    pub fn new(labels: Vec<Option<String>>) -> Self {
        MultiSetting { labels }
    }

    pub fn full<S: AsRef<str>>(labels: &[S]) -> Self {
        MultiSetting {
            labels: labels.iter().map(|l| Some(l.as_ref().to_string())).collect(),
        }
    }

    pub fn baseline(n: usize) -> Self {
        MultiSetting { labels: vec![None; n] }
    }

    pub fn parties(&self) -> usize {
        self.labels.len()
    }

    /// Indices of the interferometers at zero delay.
    pub fn zero_delay_set(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i].is_some()).collect()
    }

    /// Keeps the labels of parties selected by `mask`, clearing the rest.
    pub fn restrict(&self, mask: &[bool]) -> MultiSetting {
        MultiSetting {
            labels: self
                .labels
                .iter()
                .zip(mask)
                .map(|(l, &keep)| if keep { l.clone() } else { None })
                .collect(),
        }
    }

    /// All settings obtained by clearing labels, i.e. the power set of the
    /// zero-delay set, together with `|S'|`.
    pub fn subsets(&self) -> Vec<(MultiSetting, usize)> {
        let active = self.zero_delay_set();
        (0u32..(1 << active.len()))
            .map(|bits| {
                let mut mask = vec![false; self.labels.len()];
                for (b, &i) in active.iter().enumerate() {
                    mask[i] = bits & (1 << b) != 0;
                }
                (self.restrict(&mask), bits.count_ones() as usize)
            })
            .collect()
    }

    /// Compact display, `-` for parties at large delay.
    pub fn display(&self) -> String {
        let parts: Vec<&str> = self
            .labels
            .iter()
            .map(|l| l.as_deref().unwrap_or("-"))
            .collect();
        if parts.iter().all(|p| p.chars().count() == 1) {
            parts.concat()
        } else {
            parts.join(",")
        }
    }
}

/// Targets, probes and interferometer parameters for `n` parties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPartiteSetup {
    pub targets: Vec<SourceModel>,
    pub probes: ProbeEnsemble,
    pub params: Vec<ExperimentParams>,
}

impl MultiPartiteSetup {
    pub fn new(targets: Vec<SourceModel>, probes: ProbeEnsemble, params: Vec<ExperimentParams>) -> Result<Self> {
        let s = MultiPartiteSetup {
            targets,
            probes,
            params,
        };
        s.validate()?;
        Ok(s)
    }

    /// Same target, probe and parameters on each of `n` parties.
    pub fn uniform(n: usize, target: &SourceModel, probe: &SourceModel, params: &ExperimentParams) -> Result<Self> {
        Self::new(
            vec![target.clone(); n],
            ProbeEnsemble::independent(vec![probe.clone(); n])?,
            vec![params.clone(); n],
        )
    }

    pub fn parties(&self) -> usize {
        self.targets.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.targets.len();
        if n == 0 {
            return Err(Error::invalid("setup", "no parties"));
        }
        if self.probes.len() != n {
            return Err(Error::Missing(format!("probe sources: {} for {n} parties", self.probes.len())));
        }
        if self.params.len() != n {
            return Err(Error::Missing(format!(
                "interferometer parameters: {} for {n} parties",
                self.params.len()
            )));
        }
        for t in &self.targets {
            t.validate()?;
        }
        self.probes.validate()?;
        for p in &self.params {
            p.validate()?;
        }
        Ok(())
    }

    fn check_setting(&self, setting: &MultiSetting) -> Result<()> {
        if setting.parties() != self.parties() {
            return Err(Error::DimensionMismatch {
                expected: self.parties(),
                found: setting.parties(),
            });
        }
        for (p, l) in self.params.iter().zip(&setting.labels) {
            if let Some(l) = l {
                p.relative_efficiency(l)?;
            }
        }
        Ok(())
    }

    /// Product of relative efficiencies of the labelled parties.
    pub fn relative_efficiency(&self, setting: &MultiSetting) -> Result<f64> {
        self.params
            .iter()
            .zip(&setting.labels)
            .map(|(p, l)| match l {
                Some(l) => p.relative_efficiency(l),
                None => Ok(1.0),
            })
            .product()
    }

    fn absolute_efficiency(&self, setting: &MultiSetting) -> Result<f64> {
        let base: f64 = self.params.iter().map(|p| p.eta12).product();
        Ok(base * self.relative_efficiency(setting)?)
    }

    /// Coefficient of `rho_{k_1...k_n}` in the fully interfering term,
    /// `2^n T^n R^n eta_X n_{s,n} n_{p,n} M_X`.
    pub fn joint_depth_scale(&self, labels: &[&str]) -> Result<f64> {
        let setting = MultiSetting::full(labels);
        self.check_setting(&setting)?;
        let ones = vec![1u32; self.parties()];
        let probe = self.probes.joint_moment(&ones)?;
        let local: f64 = self
            .targets
            .iter()
            .zip(&self.params)
            .map(|(t, p)| 2.0 * p.tr() * t.mean_photon * p.mode_overlap)
            .product();
        Ok(self.absolute_efficiency(&MultiSetting::baseline(self.parties()))? * local * probe)
    }
}

/// `Delta_{kappa(S')}`: the term of the expansion in which the labelled
/// parties of `sub` interfere and the others contribute their
/// distinguishable-photon coincidence. `rho_joint` is the joint probability of
/// the labelled parties' probe kets.
///
/// Interfering parties carry their state-dependent efficiency, idle parties
/// the reference one.
pub fn multi_dip_term(setup: &MultiPartiteSetup, sub: &MultiSetting, rho_joint: f64) -> Result<f64> {
    setup.validate()?;
    setup.check_setting(sub)?;
    check_probability("rho_joint", rho_joint)?;
    Ok(setup.absolute_efficiency(sub)? * efficiency_free_term(setup, sub)? * rho_joint)
}

fn efficiency_free_term(setup: &MultiPartiteSetup, sub: &MultiSetting) -> Result<f64> {
    let n = setup.parties();
    let interfering: Vec<bool> = sub.labels.iter().map(Option::is_some).collect();
    let idle: Vec<usize> = (0..n).filter(|&i| !interfering[i]).collect();

    let mut prefactor = 1.0;
    for j in (0..n).filter(|&j| interfering[j]) {
        let p = &setup.params[j];
        prefactor *= 2.0 * p.tr() * setup.targets[j].mean_photon * p.mode_overlap;
    }

    // Each idle party contributes <:(T a + R b)(R a + T b):> with a, b the
    // target and probe photon numbers: T R a^2 + (T^2 + R^2) a b + T R b^2.
    // Probe moments are joint across parties, so sum over the probe order on
    // every idle party.
    let mut total = 0.0;
    let combos = 3usize.pow(idle.len() as u32);
    let mut orders = vec![0u32; n];
    for combo in 0..combos {
        let mut c = combo;
        let mut weight = 1.0;
        for &i in &idle {
            let probe_order = (c % 3) as u32;
            c /= 3;
            let p = &setup.params[i];
            let coeff = if probe_order == 1 { p.t2r2() } else { p.tr() };
            weight *= coeff * setup.targets[i].moment(2 - probe_order)?;
            orders[i] = probe_order;
        }
        for j in (0..n).filter(|&j| interfering[j]) {
            orders[j] = 1;
        }
        total += weight * setup.probes.joint_moment(&orders)?;
    }
    Ok(prefactor * total)
}

/// `P_{kappa(S)} = sum_{S' in P(S)} (-1)^{|S'|} Delta_{kappa(S')}`.
///
/// The zero-delay parties keep their probe polarization in every term, so
/// their relative efficiency scales every term of the sum, not only the ones
/// in which they interfere. With unit relative efficiencies this is the plain
/// alternating sum of [`multi_dip_term`].
pub fn multi_coincidence<F>(setup: &MultiPartiteSetup, setting: &MultiSetting, joint_probability: F) -> Result<f64>
where
    F: Fn(&MultiSetting) -> Result<f64>,
{
    setup.validate()?;
    setup.check_setting(setting)?;
    let outer = setup.relative_efficiency(setting)?;
    let mut total = 0.0;
    for (sub, size) in setting.subsets() {
        let rho = if size == 0 { 1.0 } else { joint_probability(&sub)? };
        let term = multi_dip_term(setup, &sub, rho)?;
        let scale = outer / setup.relative_efficiency(&sub)?;
        let sign = if size % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * scale * term;
    }
    Ok(total)
}

/// [`multi_coincidence`] with joint probabilities taken from `rho` and the
/// local kets of `frame`.
pub fn multi_coincidence_for_state(
    setup: &MultiPartiteSetup,
    setting: &MultiSetting,
    rho: &DensityMatrix,
    frame: &ProbeFrame,
) -> Result<f64> {
    multi_coincidence(setup, setting, |sub| joint_probability(rho, frame, sub))
}

/// Marginal probability `Tr[rho (⊗_{j in S'} |k_j><k_j|)]`.
pub fn joint_probability(rho: &DensityMatrix, frame: &ProbeFrame, sub: &MultiSetting) -> Result<f64> {
    let kets = sub
        .labels
        .iter()
        .map(|l| l.as_deref().map(|l| frame.local_ket(l)).transpose())
        .collect::<Result<Vec<_>>>()?;
    let p = marginal_projection(rho, frame.local_dim(), &kets)?;
    Ok(p.clamp(0.0, 1.0))
}

/// Joint probability recovered from the four two-party measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractedProbability {
    pub value: f64,
    /// Outside `[-tolerance, 1 + tolerance]`; indicates noise.
    pub flagged: bool,
}

/// `rho_{k1,k2} = (P_{k1,k2} - P_{k1,-} - P_{-,k2} + Delta_{-,-}) / scale`.
///
/// Each probability is expected divided by the relative efficiency of its
/// zero-delay parties; with unit efficiencies that is the raw probability.
pub fn extract_joint_probability_2q(
    p11: f64,
    p10: f64,
    p01: f64,
    delta00: f64,
    scale: f64,
    tolerance: f64,
) -> Result<ExtractedProbability> {
    if !(scale > 0.0) {
        return Err(Error::invalid("scale", format!("{scale} must be positive")));
    }
    let value = (p11 - p10 - p01 + delta00) / scale;
    if !value.is_finite() {
        return Err(Error::NonFinite("joint probability extraction".into()));
    }
    Ok(ExtractedProbability {
        value,
        flagged: value < -tolerance || value > 1.0 + tolerance,
    })
}

/// Alternating sum `sum_{S' ⊆ X} (-1)^{|S'|} P_{kappa(S')}`, which isolates
/// the fully interfering term `Delta_{kappa(X)}` for any party count. Keys are
/// the restrictions of `full` produced by [`MultiSetting::subsets`].
pub fn isolate_joint_depth(full: &MultiSetting, measured: &BTreeMap<MultiSetting, f64>) -> Result<f64> {
    let mut total = 0.0;
    for (sub, size) in full.subsets() {
        let p = measured
            .get(&sub)
            .ok_or_else(|| Error::Missing(format!("measurement for setting {}", sub.display())))?;
        total += if size % 2 == 0 { *p } else { -*p };
    }
    Ok(total)
}
