//! Diluted iterative maximum likelihood, `rho -> (I + eps R) rho (I + eps R)`
//! with `R` the likelihood gradient per count. `eps` is halved until the
//! likelihood does not decrease and doubled after each accepted step;
//! `eps = 1` is the undiluted `R rho R` map. Once the gain stalls, small
//! eigenvalues are tried for truncation and a few Newton steps on the
//! factor `A` of `rho = A A^†` polish the result.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::{handle_negatives, linear_inversion, DepthVector, MleOptions, ReconstructionResult};
use crate::error::{Error, Result};
use crate::quantum::{hermitize, DensityMatrix};
use crate::sim::Dataset;

const MIN_EPS: f64 = 1e-14;
const MAX_EPS: f64 = 1e6;
/// Eigenvalues below this are candidates for truncation once the
/// multiplicative updates stall.
const SNAP: f64 = 1e-2;
/// Largest violation of the optimality conditions at which the ascent hands
/// over to the Newton refinement.
const STATIONARY: f64 = 1e-7;
/// Gradient norm at which the Newton refinement stops.
const REFINED: f64 = 1e-14;
const REFINE_STEPS: usize = 20;
/// Relative likelihood loss tolerated from the refinement.
const ROUNDING: f64 = 1e-12;

fn dilute(rho: &DMatrix<C64>, grad: &DMatrix<C64>, eps: f64) -> DMatrix<C64> {
    let n = rho.nrows();
    let a = DMatrix::<C64>::identity(n, n) + grad * C64::new(eps, 0.0);
    let m = hermitize(&(&a * rho * a.adjoint()));
    let tr = m.trace().re;
    m.unscale(tr)
}

fn probabilities(kets: &[DVector<C64>], rho: &DMatrix<C64>) -> Vec<f64> {
    kets.iter().map(|k| k.dotc(&(rho * k)).re.max(0.0)).collect()
}

fn weighted_projectors(kets: &[DVector<C64>], weights: &[f64]) -> DMatrix<C64> {
    let d = kets[0].len();
    let mut m = DMatrix::<C64>::zeros(d, d);
    for (k, &w) in kets.iter().zip(weights) {
        m += (k * k.adjoint()) * C64::new(w, 0.0);
    }
    m
}

/// `c ln(mu / c) - mu + c`, zero at `mu = c`.
fn poisson_deviance(c: f64, mu: f64) -> f64 {
    if c > 0.0 {
        if mu <= 0.0 {
            f64::NEG_INFINITY
        } else {
            c * (mu / c).ln() - mu + c
        }
    } else {
        -mu
    }
}

/// `rho` with its `j` smallest eigenvalues removed, for every `j` whose
/// eigenvalues are all below [`SNAP`]. Multiplicative updates approach a
/// boundary optimum only sublinearly; these candidates reach it directly.
fn truncations(rho: &DMatrix<C64>) -> Vec<DMatrix<C64>> {
    let eig = SymmetricEigen::new(hermitize(rho));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut out = Vec::new();
    for j in 1..order.len() {
        if eig.eigenvalues[order[j - 1]] >= SNAP {
            break;
        }
        let kept = &order[j..];
        let mut m = DMatrix::<C64>::zeros(rho.nrows(), rho.ncols());
        for &i in kept {
            let v = eig.eigenvectors.column(i);
            m += (&v * v.adjoint()) * C64::new(eig.eigenvalues[i].max(0.0), 0.0);
        }
        let tr = m.trace().re;
        if tr > 0.0 {
            out.push(m.unscale(tr));
        }
    }
    out
}

/// Most likely truncation of `rho`, if it beats `current`.
fn best_truncation<T>(
    rho: &DMatrix<C64>,
    current: f64,
    eval: impl Fn(&DMatrix<C64>) -> (f64, T),
) -> Option<(DMatrix<C64>, f64, T)> {
    truncations(rho)
        .into_iter()
        .map(|c| {
            let (l, extra) = eval(&c);
            (c, l, extra)
        })
        .filter(|(_, l, _)| l.is_finite() && *l > current)
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Largest accepted step along `grad`, halving `eps` from its current value.
fn line_step(
    rho: &DMatrix<C64>,
    grad: &DMatrix<C64>,
    mut eps: f64,
    current: f64,
    ll: impl Fn(&DMatrix<C64>) -> f64,
) -> Option<(DMatrix<C64>, f64, f64)> {
    while eps >= MIN_EPS {
        let cand = dilute(rho, grad, eps);
        let l = ll(&cand);
        if l.is_finite() && l >= current {
            return Some((cand, l, eps));
        }
        eps *= 0.5;
    }
    None
}

struct Ascent {
    rho: DMatrix<C64>,
    log_likelihood: f64,
    iterations: usize,
    trace: Vec<f64>,
}

trait Objective {
    type State;
    /// Log-likelihood of `rho` and whatever the gradient needs.
    fn evaluate(&self, rho: &DMatrix<C64>) -> (f64, Self::State);
    /// Likelihood gradient per count.
    fn gradient(&self, state: &Self::State) -> DMatrix<C64>;
    fn total(&self) -> f64;
}

/// Distance from the optimality conditions `(R - t) rho = 0` and `R <= t`,
/// with `t = Tr(R rho)`, plus the top eigenvector of `R` when the second
/// condition fails.
fn stationarity(rho: &DMatrix<C64>, grad: &DMatrix<C64>) -> (f64, Option<DMatrix<C64>>) {
    let t = (grad * rho).trace().re;
    let residual = (grad * rho - rho * C64::new(t, 0.0)).norm();
    let eig = SymmetricEigen::new(hermitize(grad));
    let top = eig.eigenvalues.imax();
    let excess = eig.eigenvalues[top] - t;
    if excess > STATIONARY {
        let v = eig.eigenvectors.column(top);
        (residual.max(excess), Some(&v * v.adjoint()))
    } else {
        (residual, None)
    }
}

/// Mixes `direction` into `rho` with the largest weight that raises the
/// likelihood. Multiplicative steps cannot revive a zero eigenvalue.
fn escape<O: Objective>(obj: &O, rho: &DMatrix<C64>, direction: &DMatrix<C64>, current: f64) -> Option<(DMatrix<C64>, f64, O::State)> {
    let mut w = 1e-2;
    while w >= 1e-10 {
        let cand = rho.scale(1.0 - w) + direction.scale(w);
        let (l, st) = obj.evaluate(&cand);
        if l.is_finite() && l > current {
            return Some((cand, l, st));
        }
        w *= 0.1;
    }
    None
}

/// Real coordinates of `A` (real parts, then imaginary parts, column-major).
fn pack(a: &DMatrix<C64>) -> DVector<f64> {
    let n = a.len();
    DVector::from_fn(2 * n, |i, _| if i < n { a[i].re } else { a[i - n].im })
}

fn unpack(x: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<C64> {
    let n = rows * cols;
    let a = DMatrix::from_fn(rows, cols, |i, j| C64::new(x[i + j * rows], x[n + i + j * rows]));
    let norm = a.norm();
    a.unscale(norm)
}

/// Gradient per count with respect to the coordinates of `A`, for
/// `rho = A A^† / Tr(A A^†)`: `2 (R - Tr(R rho)) A / Tr(A A^†)`.
fn factor_gradient<O: Objective>(obj: &O, a: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>, f64, O::State) {
    let rho = a * a.adjoint();
    let (ll, state) = obj.evaluate(&rho);
    let grad = obj.gradient(&state);
    let t = (&grad * &rho).trace().re;
    let m = (&grad * a - a * C64::new(t, 0.0)) * C64::new(2.0, 0.0);
    (pack(&m), rho, ll, state)
}

/// Newton iterations on the stationarity condition in the factored
/// parametrization, keeping the rank of `rho`. Likelihood differences are
/// below rounding this close to the optimum, so steps are judged by the
/// gradient norm instead.
fn refine<O: Objective>(obj: &O, rho: &DMatrix<C64>) -> Option<(DMatrix<C64>, f64, O::State)> {
    let eig = SymmetricEigen::new(hermitize(rho));
    let top = eig.eigenvalues.max();
    let kept: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > 1e-12 * top).collect();
    let d = rho.nrows();
    let mut a = DMatrix::<C64>::zeros(d, kept.len());
    for (c, &i) in kept.iter().enumerate() {
        a.set_column(c, &(eig.eigenvectors.column(i) * C64::new(eig.eigenvalues[i].sqrt(), 0.0)));
    }
    let mut x = pack(&unpack(&pack(&a), d, kept.len()));
    let (mut f, mut best_rho, mut best_ll, mut best_state) = factor_gradient(obj, &unpack(&x, d, kept.len()));
    let initial = f.norm();
    for _ in 0..REFINE_STEPS {
        if f.norm() < REFINED {
            break;
        }
        let h = 1e-6;
        let p = x.len();
        let mut jac = DMatrix::<f64>::zeros(p, p);
        for j in 0..p {
            let mut up = x.clone();
            up[j] += h;
            let mut down = x.clone();
            down[j] -= h;
            // Gradients at unnormalized points, so the scale direction shows
            // up as a null direction of the Jacobian.
            let fu = factor_gradient_raw(obj, &up, d, kept.len());
            let fd = factor_gradient_raw(obj, &down, d, kept.len());
            jac.set_column(j, &((fu - fd) / (2.0 * h)));
        }
        let jac = (&jac + jac.transpose()) * 0.5;
        let svd = jac.svd(true, true);
        let cutoff = 1e-9 * svd.singular_values.max();
        let Ok(step) = svd.solve(&f, cutoff) else { break };
        let mut improved = false;
        let mut scale = 1.0;
        while scale > 1e-3 {
            let cand = pack(&unpack(&(&x - &step * scale), d, kept.len()));
            let (fc, r, l, st) = factor_gradient(obj, &unpack(&cand, d, kept.len()));
            if l.is_finite() && fc.norm() < f.norm() {
                (x, f, best_rho, best_ll, best_state) = (cand, fc, r, l, st);
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (f.norm() < initial).then_some((best_rho, best_ll, best_state))
}

fn factor_gradient_raw<O: Objective>(obj: &O, x: &DVector<f64>, rows: usize, cols: usize) -> DVector<f64> {
    let n = rows * cols;
    let a = DMatrix::from_fn(rows, cols, |i, j| C64::new(x[i + j * rows], x[n + i + j * rows]));
    let t = a.norm_squared();
    let rho = (&a * a.adjoint()).unscale(t);
    let (_, state) = obj.evaluate(&rho);
    let grad = obj.gradient(&state);
    let g = (&grad * &rho).trace().re;
    pack(&((&grad * &a - &a * C64::new(g, 0.0)) * C64::new(2.0 / t, 0.0)))
}

fn ascend<O: Objective>(obj: &O, dim: usize, opts: &MleOptions) -> Result<Ascent> {
    let mut rho = DMatrix::<C64>::identity(dim, dim).unscale(dim as f64);
    let (mut ll, mut state) = obj.evaluate(&rho);
    let mut trace = if opts.record_trace { vec![ll] } else { Vec::new() };
    let finish = |rho: DMatrix<C64>, ll: f64, iterations: usize, mut trace: Vec<f64>| {
        let (rho, log_likelihood) = match refine(obj, &rho) {
            Some((r, l, _)) if l >= ll - ROUNDING * ll.abs().max(obj.total()) => (r, l),
            _ => (rho, ll),
        };
        if opts.record_trace && log_likelihood > ll {
            trace.push(log_likelihood);
        }
        Ascent { rho, log_likelihood, iterations, trace }
    };
    let mut eps = 1.0;
    let mut gain = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let grad = obj.gradient(&state);
        let Some((next, l, used)) = line_step(&rho, &grad, eps, ll, |r| obj.evaluate(r).0) else {
            return Ok(finish(rho, ll, it, trace));
        };
        gain = (l - ll) / obj.total();
        eps = (2.0 * used).min(MAX_EPS);
        rho = next;
        (ll, state) = obj.evaluate(&rho);
        if opts.record_trace {
            trace.push(ll);
        }
        if gain >= opts.tolerance {
            continue;
        }
        if let Some((next, l, st)) = best_truncation(&rho, ll, |r| obj.evaluate(r)) {
            (rho, ll, state) = (next, l, st);
        } else {
            let (residual, direction) = stationarity(&rho, &obj.gradient(&state));
            if residual < STATIONARY && direction.is_none() {
                return Ok(finish(rho, ll, it, trace));
            }
            match direction {
                Some(dir) => match escape(obj, &rho, &dir, ll) {
                    Some((next, l, st)) => (rho, ll, state) = (next, l, st),
                    None => return Ok(finish(rho, ll, it, trace)),
                },
                None => continue,
            }
        }
        if opts.record_trace {
            trace.push(ll);
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        last_gain: gain,
        log_likelihood: ll,
    })
}

struct DepthObjective {
    kets: Vec<DVector<C64>>,
    n: Vec<f64>,
    total: f64,
}

impl DepthObjective {
    /// Log-likelihood with the overall scale profiled out, `c = sum n / sum p`.
    fn log_likelihood(&self, p: &[f64]) -> f64 {
        let sp: f64 = p.iter().sum();
        if sp <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let c = self.total / sp;
        self.n.iter().zip(p).map(|(&n, &p)| poisson_deviance(n, c * p)).sum()
    }

    fn gradient(&self, p: &[f64]) -> DMatrix<C64> {
        let sp: f64 = p.iter().sum();
        let c = self.total / sp;
        let w: Vec<f64> = self
            .n
            .iter()
            .zip(p)
            .map(|(&n, &p)| (if n > 0.0 { n / p.max(1e-300) } else { 0.0 } - c) / self.total)
            .collect();
        weighted_projectors(&self.kets, &w)
    }
}

impl Objective for DepthObjective {
    type State = Vec<f64>;

    fn evaluate(&self, rho: &DMatrix<C64>) -> (f64, Vec<f64>) {
        let p = probabilities(&self.kets, rho);
        (self.log_likelihood(&p), p)
    }

    fn gradient(&self, p: &Vec<f64>) -> DMatrix<C64> {
        DepthObjective::gradient(self, p)
    }

    fn total(&self) -> f64 {
        self.total
    }
}

fn finish(
    ascent: Ascent,
    depths: DepthVector,
    opts: &MleOptions,
) -> Result<ReconstructionResult> {
    let rho_linear = linear_inversion(&depths)?;
    let rho = DensityMatrix::with_tolerance(ascent.rho, opts.physicality_tol)?;
    let fidelities = fidelities(&rho, &depths);
    Ok(ReconstructionResult {
        rho,
        rho_linear,
        log_likelihood: ascent.log_likelihood,
        iterations: ascent.iterations,
        converged: true,
        strategy: opts.strategy,
        fidelities,
        stderr_fidelities: None,
        depths,
        trace: ascent.trace,
    })
}

pub(crate) fn fidelities(rho: &DensityMatrix, depths: &DepthVector) -> BTreeMap<String, f64> {
    depths
        .entries
        .iter()
        .map(|e| {
            let k = e.ket.amplitudes();
            (e.label.clone(), k.dotc(&(rho.matrix() * k)).re.clamp(0.0, 1.0))
        })
        .collect()
}

/// Maximum-likelihood state from a depth vector (raw or normalized; the
/// overall scale is a free parameter). Negative depths are handled with
/// `opts.strategy` first.
pub fn mle_from_depths(depths: &DepthVector, opts: &MleOptions) -> Result<ReconstructionResult> {
    opts.validate()?;
    let handled = handle_negatives(depths, opts.strategy)?;
    let active: Vec<_> = handled.active().collect();
    let total: f64 = active.iter().map(|e| e.value).sum();
    if !(total > 0.0) {
        return Err(Error::invalid("depths", "no positive depth to fit"));
    }
    // Fitting the depth fractions keeps the iterates independent of the
    // overall scale; the likelihood is reported for the original values.
    let objective = DepthObjective {
        kets: active.iter().map(|e| e.ket.amplitudes().clone()).collect(),
        n: active.iter().map(|e| e.value / total).collect(),
        total: 1.0,
    };
    let mut ascent = ascend(&objective, handled.dim, opts)?;
    ascent.log_likelihood *= total;
    ascent.trace.iter_mut().for_each(|l| *l *= total);
    finish(ascent, handled, opts)
}

struct CountsObjective {
    kets: Vec<DVector<C64>>,
    weight: Vec<f64>,
    c0: Vec<f64>,
    far: Vec<Vec<f64>>,
    total: f64,
}

/// Nuisance parameters at the profile optimum for one `rho`.
struct Profile {
    p: Vec<f64>,
    /// Zero-delay means `B_k - s w_k p_k`.
    mu0: Vec<f64>,
    s: f64,
    ll: f64,
}

impl CountsObjective {
    /// Baseline maximizing the likelihood of setting `k` for a dip of `a`
    /// counts: the larger root of
    /// `(1 + m) B^2 - ((1 + m) a + c0 + F) B + F a = 0`.
    fn baseline(&self, k: usize, a: f64) -> f64 {
        let m = self.far[k].len() as f64;
        let f: f64 = self.far[k].iter().sum();
        let b = (1.0 + m) * a + self.c0[k] + f;
        let disc = (b * b - 4.0 * (1.0 + m) * f * a).max(0.0);
        ((b + disc.sqrt()) / (2.0 * (1.0 + m))).max(a)
    }

    fn setting_ll(&self, k: usize, a: f64) -> (f64, f64) {
        let base = self.baseline(k, a);
        let mu0 = base - a;
        let ll = poisson_deviance(self.c0[k], mu0) + self.far[k].iter().map(|&f| poisson_deviance(f, base)).sum::<f64>();
        (ll, mu0)
    }

    /// Derivative of the profiled likelihood with respect to the scale.
    fn scale_derivative(&self, p: &[f64], s: f64) -> f64 {
        (0..p.len())
            .map(|k| {
                let a = self.weight[k] * p[k];
                let (_, mu0) = self.setting_ll(k, s * a);
                a * (1.0 - if self.c0[k] > 0.0 { self.c0[k] / mu0.max(1e-300) } else { 0.0 })
            })
            .sum()
    }

    /// Maximizes over the baselines (closed form) and the common scale
    /// (bisection on a concave one-dimensional problem).
    fn profile(&self, rho: &DMatrix<C64>) -> Profile {
        let p = probabilities(&self.kets, rho);
        let mut s = 0.0;
        if self.scale_derivative(&p, 0.0) > 0.0 {
            let weighted: f64 = self.weight.iter().zip(&p).map(|(w, p)| w * p).sum();
            let mut hi = (self.total / weighted.max(1e-300)).max(1e-300);
            while self.scale_derivative(&p, hi) > 0.0 && hi < 1e300 {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if self.scale_derivative(&p, mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            s = 0.5 * (lo + hi);
        }
        let mut ll = 0.0;
        let mut mu0 = Vec::with_capacity(p.len());
        for (k, &pk) in p.iter().enumerate() {
            let (l, m) = self.setting_ll(k, s * self.weight[k] * pk);
            ll += l;
            mu0.push(m);
        }
        Profile { p, mu0, s, ll }
    }

    fn gradient(&self, prof: &Profile) -> DMatrix<C64> {
        let w: Vec<f64> = (0..prof.p.len())
            .map(|k| {
                let ratio = if self.c0[k] > 0.0 { self.c0[k] / prof.mu0[k].max(1e-300) } else { 0.0 };
                prof.s * self.weight[k] * (1.0 - ratio) / self.total
            })
            .collect();
        weighted_projectors(&self.kets, &w)
    }
}

impl Objective for CountsObjective {
    type State = Profile;

    fn evaluate(&self, rho: &DMatrix<C64>) -> (f64, Profile) {
        let prof = self.profile(rho);
        (prof.ll, prof)
    }

    fn gradient(&self, prof: &Profile) -> DMatrix<C64> {
        CountsObjective::gradient(self, prof)
    }

    fn total(&self) -> f64 {
        self.total
    }
}

/// Maximum-likelihood state fitted directly to the zero- and far-delay counts
/// of a single-party dataset.
pub fn mle_reconstruct(dataset: &Dataset, opts: &MleOptions) -> Result<ReconstructionResult> {
    opts.validate()?;
    let frame = &dataset.frame;
    if frame.parties() != 1 {
        return Err(Error::invalid(
            "likelihood",
            "the counts likelihood needs a single-party dataset",
        ));
    }
    let params = &dataset.setup.params[0];
    let mut obj = CountsObjective {
        kets: Vec::new(),
        weight: Vec::new(),
        c0: Vec::new(),
        far: Vec::new(),
        total: 0.0,
    };
    for s in frame.settings() {
        let rec = dataset
            .records
            .iter()
            .find(|r| r.label() == Some(s.label.as_str()))
            .ok_or_else(|| Error::Missing(format!("record for setting {}", s.label)))?;
        obj.kets.push(s.ket.amplitudes().clone());
        obj.weight.push(params.relative_efficiency(&s.label)?);
        obj.c0.push(rec.c_zero);
        obj.far.push(rec.c_far.clone());
        obj.total += rec.c_zero + rec.c_far.iter().sum::<f64>();
    }
    if !(obj.total > 0.0) {
        return Err(Error::invalid("counts", "dataset holds no counts"));
    }
    let ascent = ascend(&obj, frame.dim(), opts)?;
    let depths = super::dataset_depths(dataset)?;
    finish(ascent, depths, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{build_probe_frame, make_qubit_ket, projection_probability, state_fidelity, FrameKind};
    use crate::tomography::{Likelihood, NegativeStrategy};
    use approx::assert_abs_diff_eq;

    fn exact_depths(rho: &DensityMatrix, kind: FrameKind, n: usize, scale: f64) -> DepthVector {
        let frame = build_probe_frame(2, n, kind).unwrap();
        let vals: Vec<f64> = frame
            .settings()
            .iter()
            .map(|s| scale * projection_probability(rho, &s.ket).unwrap())
            .collect();
        DepthVector::from_ordered(&frame, &vals).unwrap()
    }

    #[test]
    fn pure_state_noiseless() {
        let rho = DensityMatrix::from_pure(&make_qubit_ket("D").unwrap());
        let res = mle_from_depths(&exact_depths(&rho, FrameKind::Qubit6, 1, 1000.0), &MleOptions::default()).unwrap();
        assert!(res.converged);
        assert!(res.fidelity("D").unwrap() > 1.0 - 1e-6);
        assert!(res.iterations < 1000);
    }

    #[test]
    fn mixed_state_noiseless() {
        let a = DensityMatrix::from_pure(&make_qubit_ket("R").unwrap());
        let b = DensityMatrix::from_pure(&make_qubit_ket("H").unwrap());
        let rho = a.mix(&b, 0.3).unwrap();
        let res = mle_from_depths(&exact_depths(&rho, FrameKind::Qubit4, 1, 50.0), &MleOptions::default()).unwrap();
        assert!(state_fidelity(&res.rho, &rho).unwrap() > 1.0 - 1e-8);
    }

    #[test]
    fn trace_is_monotone() {
        let frame = build_probe_frame(2, 1, FrameKind::Qubit6).unwrap();
        let dv = DepthVector::from_ordered(&frame, &[0.9, 0.2, 0.95, 0.1, 0.6, 0.3]).unwrap();
        let opts = MleOptions { record_trace: true, ..MleOptions::default() };
        let res = mle_from_depths(&dv, &opts).unwrap();
        assert!(res.trace.len() > 2);
        assert!(res.trace.windows(2).all(|w| w[1] >= w[0]));
        let ev = res.rho.eigenvalues();
        assert!(ev[0] > -1e-9);
    }

    #[test]
    fn scale_invariant() {
        let frame = build_probe_frame(2, 1, FrameKind::Qubit6).unwrap();
        let v = [0.9, 0.2, 0.95, 0.1, 0.6, 0.3];
        let a = mle_from_depths(&DepthVector::from_ordered(&frame, &v).unwrap(), &MleOptions::default()).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| x * 731.0).collect();
        let b = mle_from_depths(&DepthVector::from_ordered(&frame, &scaled).unwrap(), &MleOptions::default()).unwrap();
        let diff = (a.rho.matrix() - b.rho.matrix()).norm();
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn nonconvergence_is_reported() {
        let frame = build_probe_frame(2, 1, FrameKind::Qubit6).unwrap();
        let dv = DepthVector::from_ordered(&frame, &[0.9, 0.2, 0.95, 0.1, 0.6, 0.3]).unwrap();
        let opts = MleOptions { max_iterations: 2, tolerance: 1e-300, ..MleOptions::default() };
        assert!(matches!(mle_from_depths(&dv, &opts), Err(Error::NonConvergence { iterations: 2, .. })));
    }

    #[test]
    fn strategies_differ_only_on_negatives() {
        let frame = build_probe_frame(2, 1, FrameKind::Qubit6).unwrap();
        let dv = DepthVector::from_ordered(&frame, &[0.5, 0.5, 1.0, -0.03, 0.5, 0.5]).unwrap();
        let z = mle_from_depths(&dv, &MleOptions::default().with_strategy(NegativeStrategy::Zero)).unwrap();
        let d = mle_from_depths(&dv, &MleOptions::default().with_strategy(NegativeStrategy::Drop)).unwrap();
        assert!(z.fidelity("D").unwrap() > 0.99);
        assert!(d.fidelity("D").unwrap() > 0.99);
        assert_eq!(d.depths.active().count(), 5);
        assert_eq!(z.strategy, NegativeStrategy::Zero);
        let _ = Likelihood::Counts;
    }

    #[test]
    fn deviance_form() {
        assert_abs_diff_eq!(poisson_deviance(5.0, 5.0), 0.0);
        assert!(poisson_deviance(5.0, 4.0) < 0.0);
        assert_eq!(poisson_deviance(3.0, 0.0), f64::NEG_INFINITY);
        assert_abs_diff_eq!(poisson_deviance(0.0, 2.0), -2.0);
    }
}
