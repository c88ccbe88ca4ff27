use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::DepthVector;
use crate::error::{Error, Result};
use crate::quantum::HermitianMatrix;

const SVD_TOL: f64 = 1e-10;

/// Real basis of the Hermitian `d x d` matrices.
pub(crate) fn hermitian_basis(d: usize) -> Vec<DMatrix<C64>> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut m = DMatrix::zeros(d, d);
        m[(i, i)] = C64::new(1.0, 0.0);
        out.push(m);
    }
    for i in 0..d {
        for j in i + 1..d {
            let mut re = DMatrix::zeros(d, d);
            re[(i, j)] = C64::new(1.0, 0.0);
            re[(j, i)] = C64::new(1.0, 0.0);
            out.push(re);
            let mut im = DMatrix::zeros(d, d);
            im[(i, j)] = C64::new(0.0, -1.0);
            im[(j, i)] = C64::new(0.0, 1.0);
            out.push(im);
        }
    }
    out
}

/// Least-squares solution of `<k|X|k> = depth_k` over the active settings,
/// rescaled to unit trace. The result may have negative eigenvalues.
pub fn linear_inversion(depths: &DepthVector) -> Result<HermitianMatrix> {
    let d = depths.dim;
    let basis = hermitian_basis(d);
    let active: Vec<_> = depths.active().collect();
    let a = DMatrix::<f64>::from_fn(active.len(), basis.len(), |r, c| {
        let k = active[r].ket.amplitudes();
        k.dotc(&(&basis[c] * k)).re
    });
    let b = DVector::<f64>::from_iterator(active.len(), active.iter().map(|e| e.value));

    let svd = a.svd(true, true);
    let max_sv = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > SVD_TOL * max_sv.max(1e-300))
        .count();
    if rank < basis.len() {
        return Err(Error::RankDeficient {
            rank,
            required: basis.len(),
        });
    }
    let x = svd
        .solve(&b, SVD_TOL * max_sv)
        .map_err(|e| Error::NonFinite(format!("linear inversion: {e}")))?;

    let mut m = DMatrix::<C64>::zeros(d, d);
    for (coef, bm) in x.iter().zip(&basis) {
        m += bm * C64::new(*coef, 0.0);
    }
    let tr = m.trace().re;
    if !(tr.is_finite() && tr > 0.0) {
        return Err(Error::InvalidState(format!("linear inversion has trace {tr}")));
    }
    HermitianMatrix::new(m.unscale(tr))
}
