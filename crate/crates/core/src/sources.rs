//! Light-source statistics: mean photon number per pulse and the normally
//! ordered intensity correlation functions `g^(n)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    HeraldedSinglePhoton,
    Thermal,
    Coherent,
    Custom,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::HeraldedSinglePhoton => "heralded_single_photon",
            SourceKind::Thermal => "thermal",
            SourceKind::Coherent => "coherent",
            SourceKind::Custom => "custom",
        })
    }
}

/// How `g^(n)` continues past second order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "values")]
pub enum GnRule {
    /// `g^(n) = n!`
    Factorial,
    /// `g^(n) = 1`
    Unity,
    /// Explicit values for orders 3, 4, ...
    Table(Vec<f64>),
    Unset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub kind: SourceKind,
    /// Mean photon number per pulse.
    pub mean_photon: f64,
    pub g2: f64,
    #[serde(default = "unset_rule")]
    pub gn_rule: GnRule,
}

fn unset_rule() -> GnRule {
    GnRule::Unset
}

impl SourceModel {
    /// Builds and validates a source. For thermal and coherent light the
    /// supplied `g2` must match the kind exactly and the high-order rule is
    /// forced.
    pub fn new(kind: SourceKind, mean_photon: f64, g2: f64) -> Result<Self> {
        let gn_rule = match kind {
            SourceKind::Thermal => GnRule::Factorial,
            SourceKind::Coherent => GnRule::Unity,
            _ => GnRule::Unset,
        };
        let s = SourceModel {
            kind,
            mean_photon,
            g2,
            gn_rule,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn thermal(mean_photon: f64) -> Result<Self> {
        Self::new(SourceKind::Thermal, mean_photon, 2.0)
    }

    pub fn coherent(mean_photon: f64) -> Result<Self> {
        Self::new(SourceKind::Coherent, mean_photon, 1.0)
    }

    pub fn heralded(mean_photon: f64, g2: f64) -> Result<Self> {
        Self::new(SourceKind::HeraldedSinglePhoton, mean_photon, g2)
    }

    pub fn custom(mean_photon: f64, g2: f64) -> Result<Self> {
        Self::new(SourceKind::Custom, mean_photon, g2)
    }

    pub fn with_gn_table(mut self, values: Vec<f64>) -> Result<Self> {
        self.gn_rule = GnRule::Table(values);
        self.validate()?;
        Ok(self)
    }

    pub fn with_mean_photon(&self, mean_photon: f64) -> Result<Self> {
        let mut s = self.clone();
        s.mean_photon = mean_photon;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_photon.is_finite() && self.mean_photon >= 0.0) {
            return Err(Error::invalid(
                "mean_photon",
                format!("{} must be finite and non-negative", self.mean_photon),
            ));
        }
        if !(self.g2.is_finite() && self.g2 >= 0.0) {
            return Err(Error::invalid("g2", format!("{} must be non-negative", self.g2)));
        }
        match self.kind {
            SourceKind::Thermal if self.g2 != 2.0 => {
                return Err(Error::invalid("g2", "thermal light has g2 = 2"))
            }
            SourceKind::Coherent if self.g2 != 1.0 => {
                return Err(Error::invalid("g2", "coherent light has g2 = 1"))
            }
            _ => {}
        }
        match (&self.kind, &self.gn_rule) {
            (SourceKind::Thermal, GnRule::Factorial) | (SourceKind::Coherent, GnRule::Unity) => {}
            (SourceKind::Thermal | SourceKind::Coherent, _) => {
                return Err(Error::invalid(
                    "gn_rule",
                    format!("{} light has a fixed high-order rule", self.kind),
                ))
            }
            (_, GnRule::Table(values)) => {
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::invalid("gn_rule", "table entries must be non-negative"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Normally ordered `order`-th intensity correlation `<:N^n:>/<N>^n`.
    pub fn g_n(&self, order: u32) -> Result<f64> {
        match order {
            0 => Err(Error::invalid("order", "correlation order starts at 1")),
            1 => Ok(1.0),
            2 => Ok(self.g2),
            _ => match &self.gn_rule {
                GnRule::Factorial => Ok(factorial(order)),
                GnRule::Unity => Ok(1.0),
                GnRule::Table(values) => values
                    .get(order as usize - 3)
                    .copied()
                    .ok_or(Error::UndefinedCorrelation {
                        order,
                        kind: self.kind.to_string(),
                    }),
                GnRule::Unset => Err(Error::UndefinedCorrelation {
                    order,
                    kind: self.kind.to_string(),
                }),
            },
        }
    }

    /// Normally ordered moment `<:N^order:>`, with `<:N^0:> = 1`.
    pub fn moment(&self, order: u32) -> Result<f64> {
        if order == 0 {
            return Ok(1.0);
        }
        Ok(self.g_n(order)? * self.mean_photon.powi(order as i32))
    }
}

/// Free function form of [`SourceModel::g_n`].
pub fn g_n(source: &SourceModel, order: u32) -> Result<f64> {
    source.g_n(order)
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CrossCorrelationRule {
    /// Statistically independent light on each party.
    #[default]
    IndependentProduct,
    /// One thermal field split into `n` parts.
    PartitionedThermal,
}

/// Probe light for an `n`-party setup, one source per interferometer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEnsemble {
    pub parties: Vec<SourceModel>,
    #[serde(default)]
    pub rule: CrossCorrelationRule,
}

impl ProbeEnsemble {
    pub fn new(parties: Vec<SourceModel>, rule: CrossCorrelationRule) -> Result<Self> {
        let e = ProbeEnsemble { parties, rule };
        e.validate()?;
        Ok(e)
    }

    pub fn independent(parties: Vec<SourceModel>) -> Result<Self> {
        Self::new(parties, CrossCorrelationRule::IndependentProduct)
    }

    pub fn validate(&self) -> Result<()> {
        if self.parties.is_empty() {
            return Err(Error::invalid("probe ensemble", "no parties"));
        }
        for p in &self.parties {
            p.validate()?;
        }
        if self.rule == CrossCorrelationRule::PartitionedThermal
            && self.parties.iter().any(|p| p.kind != SourceKind::Thermal)
        {
            return Err(Error::invalid(
                "probe ensemble",
                "a partitioned thermal probe needs thermal light on every party",
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.parties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parties.is_empty()
    }

    /// `n`-th order cross-correlation across all parties.
    pub fn cross_g_n(&self) -> f64 {
        match self.rule {
            CrossCorrelationRule::IndependentProduct => 1.0,
            CrossCorrelationRule::PartitionedThermal => factorial(self.parties.len() as u32),
        }
    }

    /// Joint normally ordered moment `<: prod_j N_j^{orders_j} :>` of the probe
    /// photon numbers.
    pub fn joint_moment(&self, orders: &[u32]) -> Result<f64> {
        if orders.len() != self.parties.len() {
            return Err(Error::DimensionMismatch {
                expected: self.parties.len(),
                found: orders.len(),
            });
        }
        match self.rule {
            CrossCorrelationRule::IndependentProduct => self
                .parties
                .iter()
                .zip(orders)
                .map(|(p, &o)| p.moment(o))
                .product(),
            CrossCorrelationRule::PartitionedThermal => {
                // all modes share one thermal field: <:prod N_j^a_j:> = (sum a)! prod n_j^a_j
                let total: u32 = orders.iter().sum();
                let means: f64 = self
                    .parties
                    .iter()
                    .zip(orders)
                    .map(|(p, &o)| p.mean_photon.powi(o as i32))
                    .product();
                Ok(factorial(total) * means)
            }
        }
    }
}

/// Free function form of [`ProbeEnsemble::cross_g_n`].
pub fn cross_g_n(ensemble: &ProbeEnsemble) -> f64 {
    ensemble.cross_g_n()
}
