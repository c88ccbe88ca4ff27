use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::NegativeStrategy;
use crate::error::{Error, Result};
use crate::quantum::{gram_rank, ProbeFrame, StateVector};

const ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DepthFlag {
    #[default]
    Ok,
    /// Negative, not yet handled.
    Negative,
    /// Negative and set to zero.
    Zeroed,
    /// Negative and excluded from the fit.
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthEntry {
    pub label: String,
    pub ket: StateVector,
    pub value: f64,
    pub flag: DepthFlag,
}

impl DepthEntry {
    pub fn is_active(&self) -> bool {
        self.flag != DepthFlag::Dropped
    }
}

/// Depths (raw or normalized) indexed by the settings of a probe frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthVector {
    pub dim: usize,
    pub entries: Vec<DepthEntry>,
    /// Joint labels forming an orthonormal product basis, used for the scale.
    #[serde(default)]
    pub basis: Vec<String>,
}

impl DepthVector {
    /// Values keyed by joint setting label; every setting of `frame` needs
    /// one.
    pub fn from_values(frame: &ProbeFrame, values: &BTreeMap<String, f64>) -> Result<Self> {
        if let Some(unknown) = values.keys().find(|l| frame.setting(l).is_err()) {
            return Err(Error::UnknownLabel(unknown.clone()));
        }
        let ordered = frame
            .settings()
            .iter()
            .map(|s| {
                values
                    .get(&s.label)
                    .copied()
                    .ok_or_else(|| Error::Missing(format!("depth for setting {}", s.label)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_ordered(frame, &ordered)
    }

    /// Values in the order of `frame.settings()`.
    pub fn from_ordered(frame: &ProbeFrame, values: &[f64]) -> Result<Self> {
        if values.len() != frame.len() {
            return Err(Error::DimensionMismatch {
                expected: frame.len(),
                found: values.len(),
            });
        }
        let entries = frame
            .settings()
            .iter()
            .zip(values)
            .map(|(s, &v)| {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("depth for setting {}", s.label)));
                }
                Ok(DepthEntry {
                    label: s.label.clone(),
                    ket: s.ket.clone(),
                    value: v,
                    flag: if v < 0.0 { DepthFlag::Negative } else { DepthFlag::Ok },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DepthVector {
            dim: frame.dim(),
            entries,
            basis: frame.basis_labels().unwrap_or_default(),
        })
    }

    pub fn get(&self, label: &str) -> Option<&DepthEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    pub fn active(&self) -> impl Iterator<Item = &DepthEntry> {
        self.entries.iter().filter(|e| e.is_active())
    }

    pub fn values(&self) -> BTreeMap<String, f64> {
        self.entries.iter().map(|e| (e.label.clone(), e.value)).collect()
    }
}

/// Sum of the depths over the orthonormal product basis of the frame: the
/// common factor multiplying every `<k|rho|k>`.
pub fn estimate_scale(depths: &DepthVector) -> Result<f64> {
    if depths.basis.is_empty() {
        return Err(Error::Missing("orthonormal basis in the probe frame".into()));
    }
    let mut sum = 0.0;
    for label in &depths.basis {
        let e = depths
            .get(label)
            .ok_or_else(|| Error::Missing(format!("depth for setting {label}")))?;
        sum += e.value;
    }
    if !(sum.is_finite() && sum > 0.0) {
        return Err(Error::invalid("depth scale", format!("basis depths sum to {sum}")));
    }
    Ok(sum)
}

/// Divides every depth by `scale`.
pub fn normalize_depths(depths: &DepthVector, scale: f64) -> Result<DepthVector> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid("scale", format!("{scale} must be positive")));
    }
    let mut out = depths.clone();
    for e in &mut out.entries {
        e.value /= scale;
    }
    Ok(out)
}

/// Applies `strategy` to negative entries. Values within round-off of zero
/// are set to zero whatever the strategy. Dropping fails if the remaining
/// probe kets no longer span the operator space.
pub fn handle_negatives(depths: &DepthVector, strategy: NegativeStrategy) -> Result<DepthVector> {
    let mut out = depths.clone();
    let floor = ROUNDOFF * out.entries.iter().map(|e| e.value.abs()).fold(0.0, f64::max);
    for e in &mut out.entries {
        if e.value < 0.0 && e.value >= -floor {
            e.value = 0.0;
            e.flag = DepthFlag::Ok;
        }
        if e.value < 0.0 && e.flag != DepthFlag::Dropped {
            match strategy {
                NegativeStrategy::Zero => {
                    e.value = 0.0;
                    e.flag = DepthFlag::Zeroed;
                }
                NegativeStrategy::Drop => e.flag = DepthFlag::Dropped,
            }
        }
    }
    let required = out.dim * out.dim;
    let rank = gram_rank(out.active().map(|e| &e.ket));
    if rank < required {
        return Err(Error::RankDeficient { rank, required });
    }
    Ok(out)
}
