//! Fixtures and an independent expansion of the two-party coincidence
//! probability, shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeMap;

use homqst::sources::SourceKind;
use homqst::{
    build_probe_frame, make_qubit_ket, CrossCorrelationRule, DensityMatrix, ExperimentParams, FrameKind,
    MultiPartiteSetup, MultiSetting, ProbeEnsemble, ProbeFrame, SourceModel,
};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

pub const QUBIT_LABELS: [&str; 6] = ["H", "V", "D", "A", "R", "L"];
pub const MEASURED_EFFICIENCIES: [f64; 6] = [1.0, 1.39, 1.19, 0.77, 1.19, 1.19];

pub fn measured_params() -> ExperimentParams {
    QUBIT_LABELS
        .iter()
        .zip(MEASURED_EFFICIENCIES)
        .fold(ExperimentParams::ideal(&QUBIT_LABELS), |p, (l, e)| p.with_efficiency(l, e))
}

pub fn pure(label: &str) -> DensityMatrix {
    DensityMatrix::from_pure(&make_qubit_ket(label).unwrap())
}

pub fn qubit6() -> ProbeFrame {
    build_probe_frame(2, 1, FrameKind::Qubit6).unwrap()
}

pub fn bell_phi_plus() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let ket = homqst::StateVector::new(vec![C64::new(s, 0.0), C64::default(), C64::default(), C64::new(s, 0.0)]).unwrap();
    DensityMatrix::from_pure(&ket)
}

/// Random full-rank density matrix `G G^† / Tr G G^†`.
pub fn random_state<R: Rng>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = DMatrix::<C64>::from_fn(dim, dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::with_tolerance(m.unscale(tr), 1e-9).unwrap()
}

/// Measured rows: efficiency-normalized depth rates for H, V, D, A, R, L.
pub fn measured_depths() -> Vec<(&'static str, [f64; 6], f64)> {
    vec![
        ("hsps", [2.3, 2.5, 6.1, -0.7, 2.7, 1.9], 0.999),
        ("thermal", [11.5, 14.6, 32.2, -1.9, 13.1, 13.8], 0.995),
        ("coherent", [145.3, 166.3, 391.7, -84.8, 197.7, 129.1], 0.996),
    ]
}

pub fn depth_map(values: &[f64; 6]) -> BTreeMap<String, f64> {
    QUBIT_LABELS.iter().map(|l| l.to_string()).zip(values.iter().copied()).collect()
}

// ---------------------------------------------------------------------------
// Two-party oracle
// ---------------------------------------------------------------------------

/// Raw per-party inputs, independent of the library's data types.
#[derive(Debug, Clone)]
pub struct PartyInputs {
    pub t: f64,
    pub ns: f64,
    pub g2s: f64,
    pub np: f64,
    pub g2p: f64,
    pub probe_thermal: bool,
    pub overlap: f64,
    pub eta: f64,
    pub rel: [f64; 6],
}

#[derive(Debug, Clone)]
pub struct OracleCase {
    pub parties: [PartyInputs; 2],
    pub partitioned: bool,
    pub rho: DensityMatrix,
}

pub fn random_case<R: Rng>(rng: &mut R) -> OracleCase {
    let partitioned = rng.random_bool(0.3);
    let party = |rng: &mut R| {
        let probe_thermal = partitioned || rng.random_bool(0.3);
        let mut rel = [1.0; 6];
        for r in rel.iter_mut().skip(1) {
            *r = rng.random_range(0.5..1.5);
        }
        PartyInputs {
            t: rng.random_range(0.05..0.95),
            ns: rng.random_range(0.001..0.5),
            g2s: rng.random_range(0.0..2.5),
            np: rng.random_range(0.001..0.5),
            g2p: if probe_thermal { 2.0 } else { rng.random_range(0.0..2.5) },
            probe_thermal,
            overlap: rng.random_range(0.0..1.0),
            eta: rng.random_range(0.01..1.0),
            rel,
        }
    };
    let parties = [party(rng), party(rng)];
    OracleCase {
        parties,
        partitioned,
        rho: random_state(4, rng),
    }
}

pub fn case_setup(case: &OracleCase) -> MultiPartiteSetup {
    let mut targets = Vec::new();
    let mut probes = Vec::new();
    let mut params = Vec::new();
    for p in &case.parties {
        targets.push(SourceModel::new(SourceKind::Custom, p.ns, p.g2s).unwrap());
        probes.push(if p.probe_thermal {
            SourceModel::thermal(p.np).unwrap()
        } else {
            SourceModel::new(SourceKind::Custom, p.np, p.g2p).unwrap()
        });
        let mut ep = ExperimentParams::ideal(&QUBIT_LABELS)
            .with_split(p.t, 1.0 - p.t)
            .with_overlap(p.overlap)
            .with_eta(p.eta);
        for (l, r) in QUBIT_LABELS.iter().zip(p.rel) {
            ep = ep.with_efficiency(l, r);
        }
        params.push(ep);
    }
    let rule = if case.partitioned {
        CrossCorrelationRule::PartitionedThermal
    } else {
        CrossCorrelationRule::IndependentProduct
    };
    MultiPartiteSetup::new(targets, ProbeEnsemble::new(probes, rule).unwrap(), params).unwrap()
}

/// Exponents of `(N1, N1k, N2k, N2kbar)`: total target photons, target
/// photons in the probe polarization, probe photons in the matched mode and
/// probe photons outside it.
type Monomial = [u32; 4];
type Poly = BTreeMap<Vec<Monomial>, f64>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let m: Vec<Monomial> = ma
                .iter()
                .zip(mb)
                .map(|(x, y)| [x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3]])
                .collect();
            *out.entry(m).or_insert(0.0) += ca * cb;
        }
    }
    out
}

fn single(party: usize, n: usize, mono: Monomial, coeff: f64) -> Poly {
    let mut m = vec![[0; 4]; n];
    m[party] = mono;
    Poly::from([(m, coeff)])
}

fn target_moment(p: &PartyInputs, order: u32) -> f64 {
    match order {
        0 => 1.0,
        1 => p.ns,
        2 => p.g2s * p.ns * p.ns,
        _ => panic!("order {order} never appears for two photons per party"),
    }
}

fn probe_joint_moment(case: &OracleCase, orders: &[u32]) -> f64 {
    let fact = |n: u32| (1..=n).product::<u32>() as f64;
    if case.partitioned {
        let total: u32 = orders.iter().sum();
        fact(total) * case.parties.iter().zip(orders).map(|(p, &o)| p.np.powi(o as i32)).product::<f64>()
    } else {
        case.parties
            .iter()
            .zip(orders)
            .map(|(p, &o)| match o {
                0 => 1.0,
                1 => p.np,
                2 => p.g2p * p.np * p.np,
                _ => panic!("unexpected probe order"),
            })
            .product()
    }
}

fn kron_projector(labels: &[Option<&str>]) -> DMatrix<C64> {
    labels.iter().fold(DMatrix::identity(1, 1), |acc, l| {
        let local = match l {
            Some(l) => make_qubit_ket(l).unwrap().projector(),
            None => DMatrix::identity(2, 2),
        };
        acc.kronecker(&local)
    })
}

/// Normally ordered expectation of `prod_i :n_c n_d:_i` expanded over the
/// symbols above, with the target-probe interference term present only on
/// the zero-delay parties.
pub fn oracle_coincidence(case: &OracleCase, setting: &[Option<&str>; 2]) -> f64 {
    let n = 2;
    let mut total = Poly::from([(vec![[0; 4]; n], 1.0)]);
    for (i, p) in case.parties.iter().enumerate() {
        let (t, r) = (p.t, 1.0 - p.t);
        let n1 = |c: f64| single(i, n, [1, 0, 0, 0], c);
        let probe = |c: f64| {
            let mut q = single(i, n, [0, 0, 1, 0], c);
            q.extend(single(i, n, [0, 0, 0, 1], c));
            q
        };
        let mut x = n1(t);
        x.extend(probe(r));
        let mut y = n1(r);
        y.extend(probe(t));
        let mut local = poly_mul(&x, &y);
        if setting[i].is_some() {
            let mut key = vec![[0; 4]; n];
            key[i] = [0, 1, 1, 0];
            *local.entry(key).or_insert(0.0) -= 2.0 * t * r;
        }
        total = poly_mul(&total, &local);
    }

    let mut sum = 0.0;
    for (mono, coeff) in &total {
        let mut value = *coeff;
        let mut probe_orders = Vec::with_capacity(n);
        let mut projected: Vec<Option<&str>> = vec![None; n];
        for (i, m) in mono.iter().enumerate() {
            let p = &case.parties[i];
            value *= target_moment(p, m[0] + m[1]);
            value *= p.overlap.powi(m[2] as i32) * (1.0 - p.overlap).powi(m[3] as i32);
            probe_orders.push(m[2] + m[3]);
            if m[1] == 1 {
                projected[i] = setting[i];
            }
        }
        value *= probe_joint_moment(case, &probe_orders);
        if projected.iter().any(Option::is_some) {
            value *= (case.rho.matrix() * kron_projector(&projected)).trace().re;
        }
        sum += value;
    }

    let eff: f64 = case
        .parties
        .iter()
        .zip(setting)
        .map(|(p, l)| match l {
            Some(l) => p.eta * p.rel[QUBIT_LABELS.iter().position(|x| x == l).unwrap()],
            None => p.eta,
        })
        .product();
    eff * sum
}

pub fn to_setting(labels: &[Option<&str>; 2]) -> MultiSetting {
    MultiSetting::new(labels.iter().map(|l| l.map(str::to_string)).collect())
}
