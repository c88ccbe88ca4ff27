//! Dense complex linear algebra for small qudit systems: kets, density
//! matrices, product probe frames and the projection probabilities
//! `<k|rho|k>` that every dip depth is proportional to.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const EIGEN_FLOOR: f64 = -1e-10;
const DUST: f64 = 1e-14;
const RANK_TOL: f64 = 1e-9;

/// Serialized form shared by kets and matrices: `re`/`im` hold the real and
/// imaginary parts in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexRepr {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexRepr {
    fn check_len(&self, expected: usize) -> Result<()> {
        if self.re.len() != expected || self.im.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.re.len().max(self.im.len()),
            });
        }
        Ok(())
    }

    fn to_matrix(&self) -> Result<DMatrix<C64>> {
        self.check_len(self.dim * self.dim)?;
        Ok(DMatrix::from_fn(self.dim, self.dim, |r, c| {
            let i = r * self.dim + c;
            C64::new(self.re[i], self.im[i])
        }))
    }

    fn from_matrix(m: &DMatrix<C64>) -> Self {
        let dim = m.nrows();
        let mut re = Vec::with_capacity(dim * dim);
        let mut im = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                re.push(m[(r, c)].re);
                im.push(m[(r, c)].im);
            }
        }
        ComplexRepr { dim, re, im }
    }
}

// ---------------------------------------------------------------------------
// Kets
// ---------------------------------------------------------------------------

/// Normalized pure state with its global phase fixed so that the first
/// nonzero amplitude is real and positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexRepr", into = "ComplexRepr")]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    /// Wraps `amps`, which must already have unit norm.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidState("empty ket".into()));
        }
        let amps = DVector::from_vec(amps);
        let norm2 = amps.norm_squared();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "ket has squared norm {norm2}, expected 1"
            )));
        }
        Ok(Self::with_fixed_phase(amps))
    }

    /// Normalizes `amps` before wrapping them.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let v = DVector::from_vec(amps);
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidState("ket has zero or non-finite norm".into()));
        }
        Ok(Self::with_fixed_phase(v.unscale(norm)))
    }

    /// Computational basis state `|index>` of a `dim`-level system.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index + 1,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Self::new(amps)
    }

    fn with_fixed_phase(mut amps: DVector<C64>) -> Self {
        if let Some(first) = amps.iter().find(|a| a.norm() > DUST).copied() {
            let phase = first.conj() / first.norm();
            amps *= phase;
            // the pivot is now real up to rounding
            if let Some(p) = amps.iter_mut().find(|a| a.norm() > DUST) {
                *p = C64::new(p.norm(), 0.0);
            }
        }
        StateVector { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let amps = self.amps.kronecker(&other.amps);
        StateVector::with_fixed_phase(amps)
    }

    pub fn projector(&self) -> DMatrix<C64> {
        &self.amps * self.amps.adjoint()
    }
}

impl TryFrom<ComplexRepr> for StateVector {
    type Error = Error;

    fn try_from(repr: ComplexRepr) -> Result<Self> {
        repr.check_len(repr.dim)?;
        StateVector::new(
            repr.re
                .iter()
                .zip(&repr.im)
                .map(|(&re, &im)| C64::new(re, im))
                .collect(),
        )
    }
}

impl From<StateVector> for ComplexRepr {
    fn from(v: StateVector) -> Self {
        ComplexRepr {
            dim: v.dim(),
            re: v.amps.iter().map(|a| a.re).collect(),
            im: v.amps.iter().map(|a| a.im).collect(),
        }
    }
}

/// Labels of the six polarization eigenstates, in the conventional order.
pub const QUBIT_LABELS: [&str; 6] = ["H", "V", "D", "A", "R", "L"];

/// Polarization eigenstate for one of `H, V, D, A, R, L`.
pub fn make_qubit_ket(label: &str) -> Result<StateVector> {
    let s = FRAC_1_SQRT_2;
    let (a, b) = match label {
        "H" => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        "V" => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        "D" => (C64::new(s, 0.0), C64::new(s, 0.0)),
        "A" => (C64::new(s, 0.0), C64::new(-s, 0.0)),
        "R" => (C64::new(s, 0.0), C64::new(0.0, s)),
        "L" => (C64::new(s, 0.0), C64::new(0.0, -s)),
        _ => return Err(Error::UnknownLabel(label.to_string())),
    };
    StateVector::normalized(vec![a, b])
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// Hermitian operator without positivity or trace constraints, e.g. the
/// output of linear inversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexRepr", into = "ComplexRepr")]
pub struct HermitianMatrix {
    mat: DMatrix<C64>,
}

impl HermitianMatrix {
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        check_square(&mat)?;
        let dev = hermitian_deviation(&mat);
        if dev > HERMITIAN_TOL * mat.norm().max(1.0) {
            return Err(Error::InvalidState(format!(
                "matrix deviates from hermiticity by {dev:e}"
            )));
        }
        Ok(HermitianMatrix {
            mat: hermitize(&mat),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.mat.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// `<k|X|k>`, without clamping.
    pub fn expectation(&self, k: &StateVector) -> Result<f64> {
        check_dim(self.dim(), k.dim())?;
        Ok(k.amps.dotc(&(&self.mat * &k.amps)).re)
    }
}

impl TryFrom<ComplexRepr> for HermitianMatrix {
    type Error = Error;
    fn try_from(repr: ComplexRepr) -> Result<Self> {
        HermitianMatrix::new(repr.to_matrix()?)
    }
}

impl From<HermitianMatrix> for ComplexRepr {
    fn from(m: HermitianMatrix) -> Self {
        ComplexRepr::from_matrix(&m.mat)
    }
}

/// Physical density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexRepr", into = "ComplexRepr")]
pub struct DensityMatrix {
    mat: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        Self::with_tolerance(mat, HERMITIAN_TOL)
    }

    /// Validates hermiticity and trace to `tol` and positivity to
    /// `max(tol, 1e-10)`, then stores the hermitized matrix.
    pub fn with_tolerance(mat: DMatrix<C64>, tol: f64) -> Result<Self> {
        check_square(&mat)?;
        let dev = hermitian_deviation(&mat);
        if dev > tol {
            return Err(Error::InvalidState(format!(
                "matrix deviates from hermiticity by {dev:e}"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let mat = hermitize(&mat);
        let min_ev = SymmetricEigen::new(mat.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_ev < EIGEN_FLOOR.min(-tol) {
            return Err(Error::InvalidState(format!(
                "matrix has negative eigenvalue {min_ev:e}"
            )));
        }
        Ok(DensityMatrix { mat })
    }

    pub fn from_pure(ket: &StateVector) -> Self {
        DensityMatrix {
            mat: ket.projector(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            mat: DMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    /// `weight * self + (1 - weight) * other`
    pub fn mix(&self, other: &DensityMatrix, weight: f64) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::invalid("mixing weight", format!("{weight} not in [0,1]")));
        }
        Ok(DensityMatrix {
            mat: self.mat.scale(weight) + other.mat.scale(1.0 - weight),
        })
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        HermitianMatrix {
            mat: self.mat.clone(),
        }
        .eigenvalues()
    }
}

impl TryFrom<ComplexRepr> for DensityMatrix {
    type Error = Error;
    fn try_from(repr: ComplexRepr) -> Result<Self> {
        DensityMatrix::new(repr.to_matrix()?)
    }
}

impl From<DensityMatrix> for ComplexRepr {
    fn from(m: DensityMatrix) -> Self {
        ComplexRepr::from_matrix(&m.mat)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_square(m: &DMatrix<C64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    Ok(())
}

fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).unscale(2.0)
}

/// Square root of a positive semidefinite Hermitian matrix; small negative
/// eigenvalues are clipped to zero.
pub(crate) fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(hermitize(m));
    let vecs = &eig.eigenvectors;
    let roots = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::new(l.max(0.0).sqrt(), 0.0)),
    ));
    vecs * roots * vecs.adjoint()
}

// ---------------------------------------------------------------------------
// Probabilities and fidelities
// ---------------------------------------------------------------------------

/// `<k|rho|k>`: the probability that the target overlaps the probe state.
pub fn projection_probability(rho: &DensityMatrix, k: &StateVector) -> Result<f64> {
    check_dim(rho.dim(), k.dim())?;
    let p = k.amps.dotc(&(&rho.mat * &k.amps)).re;
    Ok(if p < 0.0 && p > -DUST {
        0.0
    } else if p > 1.0 && p < 1.0 + DUST {
        1.0
    } else {
        p
    })
}

/// Fidelity `F_k = <k|rho|k>` of a state to a pure reference ket.
pub fn fidelity_to_ket(rho: &DensityMatrix, k: &StateVector) -> Result<f64> {
    projection_probability(rho, k)
}

/// Uhlmann fidelity `(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2` between two states.
pub fn state_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dim(rho.dim(), sigma.dim())?;
    let root = psd_sqrt(&rho.mat);
    let inner = &root * &sigma.mat * &root;
    let eig = SymmetricEigen::new(hermitize(&inner));
    let tr: f64 = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok((tr * tr).min(1.0))
}

/// `Tr[rho (O_1 ⊗ ... ⊗ O_n)]` where `O_j = |k_j><k_j|` for `Some(k_j)` and
/// the identity for `None`: the joint probability of the parties that carry a
/// probe ket, marginalized over the rest.
pub fn marginal_projection(
    rho: &DensityMatrix,
    local_dim: usize,
    kets: &[Option<&StateVector>],
) -> Result<f64> {
    let total = local_dim.pow(kets.len() as u32);
    check_dim(total, rho.dim())?;
    let mut op = DMatrix::<C64>::identity(1, 1);
    for k in kets {
        let local = match k {
            Some(ket) => {
                check_dim(local_dim, ket.dim())?;
                ket.projector()
            }
            None => DMatrix::identity(local_dim, local_dim),
        };
        op = op.kronecker(&local);
    }
    Ok((&rho.mat * op).trace().re)
}

// ---------------------------------------------------------------------------
// Probe frames
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameKind {
    /// H, V, D, A, R, L
    Qubit6,
    /// H, V, D, R
    Qubit4,
    /// Computational basis plus the Weyl-Heisenberg mutually unbiased bases
    /// (prime `d` only).
    MubFull,
    Custom,
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FrameKind::Qubit6 => "qubit6",
            FrameKind::Qubit4 => "qubit4",
            FrameKind::MubFull => "mub-full",
            FrameKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for FrameKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qubit6" => Ok(FrameKind::Qubit6),
            "qubit4" => Ok(FrameKind::Qubit4),
            "mub-full" | "mub" => Ok(FrameKind::MubFull),
            "custom" => Ok(FrameKind::Custom),
            other => Err(Error::invalid("frame kind", format!("unknown kind `{other}`"))),
        }
    }
}

/// One local probe state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSetting {
    pub label: String,
    pub ket: StateVector,
}

/// One product setting of an `n`-party frame.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSetting {
    pub label: String,
    /// Index into [`ProbeFrame::local_settings`] for every party.
    pub parties: Vec<usize>,
    pub ket: StateVector,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FrameRepr {
    kind: FrameKind,
    d: usize,
    n: usize,
    local_settings: Vec<ProbeSetting>,
}

/// Product frame of probe kets, the same local settings on every party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrameRepr", into = "FrameRepr")]
pub struct ProbeFrame {
    kind: FrameKind,
    d: usize,
    n: usize,
    local: Vec<ProbeSetting>,
    settings: Vec<JointSetting>,
    basis: Option<Vec<usize>>,
    rank: usize,
}

impl ProbeFrame {
    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn parties(&self) -> usize {
        self.n
    }

    /// Hilbert-space dimension `d^n`.
    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn local_settings(&self) -> &[ProbeSetting] {
        &self.local
    }

    pub fn settings(&self) -> &[JointSetting] {
        &self.settings
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    /// Rank of the frame Gram matrix `|<k_i|k_j>|^2`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Dimension of the real space of Hermitian operators, `d^(2n)`.
    pub fn required_rank(&self) -> usize {
        self.dim() * self.dim()
    }

    pub fn is_informationally_complete(&self) -> bool {
        self.rank == self.required_rank()
    }

    pub fn ensure_informationally_complete(&self) -> Result<()> {
        if !self.is_informationally_complete() {
            return Err(Error::RankDeficient {
                rank: self.rank,
                required: self.required_rank(),
            });
        }
        Ok(())
    }

    pub fn local_index(&self, label: &str) -> Result<usize> {
        self.local
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn local_ket(&self, label: &str) -> Result<&StateVector> {
        Ok(&self.local[self.local_index(label)?].ket)
    }

    pub fn setting(&self, label: &str) -> Result<&JointSetting> {
        self.settings
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Local settings forming an orthonormal basis, if the frame contains one.
    pub fn computational_subset(&self) -> Option<&[usize]> {
        self.basis.as_deref()
    }

    /// Joint labels of the product basis built from [`Self::computational_subset`].
    pub fn basis_labels(&self) -> Option<Vec<String>> {
        let basis = self.basis.as_ref()?;
        let labels = self
            .settings
            .iter()
            .filter(|s| s.parties.iter().all(|i| basis.contains(i)))
            .map(|s| s.label.clone())
            .collect();
        Some(labels)
    }

    /// Joins per-party labels the way joint setting labels are formed.
    pub fn join_labels<S: AsRef<str>>(&self, labels: &[S]) -> String {
        join_labels(&self.local, labels)
    }

    /// Custom frame from explicit local settings; must be informationally
    /// complete.
    pub fn custom(d: usize, n: usize, local: Vec<ProbeSetting>) -> Result<Self> {
        let frame = Self::assemble(FrameKind::Custom, d, n, local)?;
        frame.ensure_informationally_complete()?;
        Ok(frame)
    }

    fn assemble(kind: FrameKind, d: usize, n: usize, local: Vec<ProbeSetting>) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid("d", "local dimension must be at least 2"));
        }
        if n < 1 {
            return Err(Error::invalid("n", "at least one party is required"));
        }
        if local.is_empty() {
            return Err(Error::invalid("frame", "no settings"));
        }
        for (i, s) in local.iter().enumerate() {
            check_dim(d, s.ket.dim())?;
            if local[..i].iter().any(|o| o.label == s.label) {
                return Err(Error::invalid("frame", format!("duplicate label `{}`", s.label)));
            }
        }

        let mut settings = Vec::new();
        let mut index = vec![0usize; n];
        loop {
            let labels: Vec<&str> = index.iter().map(|&i| local[i].label.as_str()).collect();
            let ket = index
                .iter()
                .skip(1)
                .fold(local[index[0]].ket.clone(), |acc, &i| acc.tensor(&local[i].ket));
            settings.push(JointSetting {
                label: join_labels(&local, &labels),
                parties: index.clone(),
                ket,
            });
            // odometer, last party fastest
            let mut p = n;
            loop {
                if p == 0 {
                    let basis = find_orthonormal_basis(d, &local);
                    let rank = gram_rank(settings.iter().map(|s| &s.ket));
                    return Ok(ProbeFrame {
                        kind,
                        d,
                        n,
                        local,
                        settings,
                        basis,
                        rank,
                    });
                }
                p -= 1;
                index[p] += 1;
                if index[p] < local.len() {
                    break;
                }
                index[p] = 0;
            }
        }
    }
}

impl TryFrom<FrameRepr> for ProbeFrame {
    type Error = Error;
    fn try_from(r: FrameRepr) -> Result<Self> {
        ProbeFrame::assemble(r.kind, r.d, r.n, r.local_settings)
    }
}

impl From<ProbeFrame> for FrameRepr {
    fn from(f: ProbeFrame) -> Self {
        FrameRepr {
            kind: f.kind,
            d: f.d,
            n: f.n,
            local_settings: f.local,
        }
    }
}

fn join_labels<S: AsRef<str>>(local: &[ProbeSetting], labels: &[S]) -> String {
    let compact = local.iter().all(|s| s.label.chars().count() == 1);
    let parts: Vec<&str> = labels.iter().map(|s| s.as_ref()).collect();
    if compact {
        parts.concat()
    } else {
        parts.join(",")
    }
}

/// Builds one of the standard product frames.
pub fn build_probe_frame(d: usize, n: usize, kind: FrameKind) -> Result<ProbeFrame> {
    let local = match kind {
        FrameKind::Qubit6 | FrameKind::Qubit4 => {
            if d != 2 {
                return Err(Error::invalid("d", format!("{kind} frames require d = 2")));
            }
            let labels: &[&str] = if kind == FrameKind::Qubit6 {
                &QUBIT_LABELS
            } else {
                &["H", "V", "D", "R"]
            };
            labels
                .iter()
                .map(|&l| {
                    Ok(ProbeSetting {
                        label: l.to_string(),
                        ket: make_qubit_ket(l)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        FrameKind::MubFull => mub_settings(d)?,
        FrameKind::Custom => {
            return Err(Error::invalid(
                "frame kind",
                "custom frames are built from explicit settings",
            ))
        }
    };
    let frame = ProbeFrame::assemble(kind, d, n, local)?;
    frame.ensure_informationally_complete()?;
    Ok(frame)
}

fn is_prime(d: usize) -> bool {
    d >= 2 && (2..).take_while(|i| i * i <= d).all(|i| d % i != 0)
}

/// Computational basis plus `d` Weyl-Heisenberg bases
/// `|m(a,b)> = d^{-1/2} sum_j w^(a j^2 + b j) |j>`, `w = exp(2 pi i / d)`.
fn mub_settings(d: usize) -> Result<Vec<ProbeSetting>> {
    if !is_prime(d) {
        return Err(Error::invalid(
            "d",
            format!("mub-full frames need a prime dimension, got {d}; use a custom frame"),
        ));
    }
    if d == 2 {
        return QUBIT_LABELS
            .iter()
            .map(|&l| {
                Ok(ProbeSetting {
                    label: l.to_string(),
                    ket: make_qubit_ket(l)?,
                })
            })
            .collect();
    }
    let mut out = Vec::with_capacity(d * (d + 1));
    for j in 0..d {
        out.push(ProbeSetting {
            label: format!("z{j}"),
            ket: StateVector::basis(d, j)?,
        });
    }
    let norm = 1.0 / (d as f64).sqrt();
    for a in 0..d {
        for b in 0..d {
            let amps = (0..d)
                .map(|j| {
                    let phase = 2.0 * PI * (((a * j * j + b * j) % d) as f64) / d as f64;
                    C64::from_polar(norm, phase)
                })
                .collect();
            out.push(ProbeSetting {
                label: format!("m{a}.{b}"),
                ket: StateVector::normalized(amps)?,
            });
        }
    }
    Ok(out)
}

fn find_orthonormal_basis(d: usize, local: &[ProbeSetting]) -> Option<Vec<usize>> {
    // greedy: first d mutually orthogonal kets in frame order
    let mut chosen: Vec<usize> = Vec::with_capacity(d);
    for (i, s) in local.iter().enumerate() {
        let orthogonal = chosen
            .iter()
            .all(|&j| local[j].ket.amps.dotc(&s.ket.amps).norm() < 1e-9);
        if orthogonal {
            chosen.push(i);
            if chosen.len() == d {
                return Some(chosen);
            }
        }
    }
    None
}

/// Rank of the Gram matrix `G_ij = |<k_i|k_j>|^2`, i.e. the dimension of the
/// real span of the projectors `|k><k|`.
pub fn gram_rank<'a>(kets: impl Iterator<Item = &'a StateVector>) -> usize {
    let kets: Vec<&StateVector> = kets.collect();
    let m = kets.len();
    if m == 0 {
        return 0;
    }
    let gram = DMatrix::<f64>::from_fn(m, m, |i, j| kets[i].amps.dotc(&kets[j].amps).norm_sqr());
    let eig = SymmetricEigen::new(gram);
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    eig.eigenvalues
        .iter()
        .filter(|&&l| l > RANK_TOL * max.max(1.0))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ket(l: &str) -> StateVector {
        make_qubit_ket(l).unwrap()
    }

    #[test]
    fn qubit_kets() {
        let h = ket("H");
        assert_eq!(h.amplitudes()[0], C64::new(1.0, 0.0));
        assert_eq!(h.amplitudes()[1], C64::new(0.0, 0.0));
        let d = ket("D");
        assert_abs_diff_eq!(d.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(d.amplitudes()[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(ket("D").inner(&ket("R")).unwrap().norm_sqr(), 0.5, epsilon = 1e-15);
        assert!(matches!(make_qubit_ket("X"), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn global_phase_is_fixed() {
        let i = C64::new(0.0, 1.0);
        let v = StateVector::normalized(vec![i, C64::new(1.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(v.amplitudes()[0].im, 0.0);
        assert!(v.amplitudes()[0].re > 0.0);
        assert_abs_diff_eq!(v.amplitudes()[1].im, -FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn unnormalized_ket_rejected() {
        assert!(StateVector::new(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn projection_examples() {
        let rho_d = DensityMatrix::from_pure(&ket("D"));
        assert_abs_diff_eq!(projection_probability(&rho_d, &ket("D")).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(projection_probability(&rho_d, &ket("R")).unwrap(), 0.5, epsilon = 1e-15);
        let mixed = DensityMatrix::maximally_mixed(2);
        for l in QUBIT_LABELS {
            assert_abs_diff_eq!(projection_probability(&mixed, &ket(l)).unwrap(), 0.5, epsilon = 1e-15);
        }
        let bad = StateVector::basis(3, 0).unwrap();
        assert!(matches!(
            projection_probability(&mixed, &bad),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fidelity_examples() {
        let rho_h = DensityMatrix::from_pure(&ket("H"));
        assert_eq!(fidelity_to_ket(&rho_h, &ket("H")).unwrap(), 1.0);
        assert_eq!(fidelity_to_ket(&rho_h, &ket("V")).unwrap(), 0.0);
        let noisy = DensityMatrix::from_pure(&ket("D"))
            .mix(&DensityMatrix::maximally_mixed(2), 0.9)
            .unwrap();
        assert_abs_diff_eq!(fidelity_to_ket(&noisy, &ket("D")).unwrap(), 0.95, epsilon = 1e-15);
    }

    #[test]
    fn uhlmann_fidelity_reduces_to_overlap_for_pure_states() {
        let a = DensityMatrix::from_pure(&ket("D"));
        let b = DensityMatrix::from_pure(&ket("R"));
        assert_abs_diff_eq!(state_fidelity(&a, &b).unwrap(), 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(state_fidelity(&a, &a).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn density_matrix_validation() {
        let not_trace_one = DMatrix::<C64>::identity(2, 2);
        assert!(DensityMatrix::new(not_trace_one).is_err());
        let negative = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.5, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(-0.5, 0.0),
            ],
        );
        assert!(DensityMatrix::new(negative.clone()).is_err());
        assert!(HermitianMatrix::new(negative).is_ok());
    }

    #[test]
    fn json_schema() {
        let rho = DensityMatrix::from_pure(&ket("R"));
        let v: serde_json::Value = serde_json::to_value(&rho).unwrap();
        assert_eq!(v["dim"], 2);
        assert_eq!(v["re"].as_array().unwrap().len(), 4);
        assert_eq!(v["im"].as_array().unwrap().len(), 4);
        // row-major: element (0,1) = <H|rho|V> = -i/2
        assert_abs_diff_eq!(v["im"][1].as_f64().unwrap(), -0.5, epsilon = 1e-15);
        let back: DensityMatrix = serde_json::from_value(v).unwrap();
        assert_eq!(back, rho);

        let k: serde_json::Value = serde_json::to_value(ket("L")).unwrap();
        assert_eq!(k["dim"], 2);
        let bad = serde_json::json!({"dim": 2, "re": [1.0, 1.0], "im": [0.0, 0.0]});
        assert!(serde_json::from_value::<StateVector>(bad).is_err());
    }

    #[test]
    fn frames() {
        let f6 = build_probe_frame(2, 1, FrameKind::Qubit6).unwrap();
        let labels: Vec<_> = f6.settings().iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, ["H", "V", "D", "A", "R", "L"]);
        assert_eq!(f6.rank(), 4);

        let f4 = build_probe_frame(2, 1, FrameKind::Qubit4).unwrap();
        let labels: Vec<_> = f4.settings().iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, ["H", "V", "D", "R"]);
        assert_eq!(f4.rank(), 4);

        let f66 = build_probe_frame(2, 2, FrameKind::Qubit6).unwrap();
        assert_eq!(f66.len(), 36);
        assert_eq!(f66.rank(), 16);
        assert!(f66.setting("DA").is_ok());
        assert_eq!(f66.basis_labels().unwrap(), ["HH", "HV", "VH", "VV"]);

        assert!(build_probe_frame(3, 1, FrameKind::Qubit6).is_err());
    }

    #[test]
    fn mub_frames_are_complete_for_primes() {
        for d in [2usize, 3, 5] {
            let f = build_probe_frame(d, 1, FrameKind::MubFull).unwrap();
            assert_eq!(f.len(), d * (d + 1));
            assert_eq!(f.rank(), d * d);
        }
        let f = build_probe_frame(3, 2, FrameKind::MubFull).unwrap();
        assert_eq!(f.rank(), 81);
        assert!(build_probe_frame(4, 1, FrameKind::MubFull).is_err());
    }

    #[test]
    fn mub_bases_are_unbiased() {
        let f = build_probe_frame(5, 1, FrameKind::MubFull).unwrap();
        let s = f.local_settings();
        for i in 0..s.len() {
            for j in 0..s.len() {
                let ov = s[i].ket.inner(&s[j].ket).unwrap().norm_sqr();
                let same_basis = i / 5 == j / 5;
                let expect = match (same_basis, i == j) {
                    (_, true) => 1.0,
                    (true, false) => 0.0,
                    (false, _) => 0.2,
                };
                assert_abs_diff_eq!(ov, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn custom_frame_rank_check() {
        let local: Vec<_> = ["H", "V", "D"]
            .iter()
            .map(|&l| ProbeSetting {
                label: l.into(),
                ket: ket(l),
            })
            .collect();
        assert_eq!(
            ProbeFrame::custom(2, 1, local).unwrap_err(),
            Error::RankDeficient { rank: 3, required: 4 }
        );
    }

    #[test]
    fn frame_roundtrips_through_json() {
        let f = build_probe_frame(2, 2, FrameKind::Qubit4).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        let back: ProbeFrame = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn marginals() {
        let phi = StateVector::normalized(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ])
        .unwrap();
        let rho = DensityMatrix::from_pure(&phi);
        let h = ket("H");
        let v = ket("V");
        assert_abs_diff_eq!(marginal_projection(&rho, 2, &[Some(&h), None]).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(marginal_projection(&rho, 2, &[Some(&h), Some(&v)]).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(marginal_projection(&rho, 2, &[None, None]).unwrap(), 1.0, epsilon = 1e-15);
    }
}
