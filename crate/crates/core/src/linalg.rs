//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// `aᴴb`.
pub fn inner(a: &CVec, b: &CVec) -> C64 {
    a.dotc(b)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues ascending.
pub fn hermitian_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Minimum-norm least-squares solution of `a x = y` via the SVD.
///
/// Singular values below `rtol·σ_max` are treated as zero. Returns the
/// solution and the numerical rank.
pub fn lstsq(a: &CMat, y: &CVec, rtol: f64) -> (CVec, usize) {
    if a.ncols() == 0 {
        return (CVec::zeros(0), 0);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = rtol * smax;
    let mut x = CVec::zeros(a.ncols());
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol && s > 0.0 {
            rank += 1;
            let coef = u.column(k).dotc(y) / s;
            x += v_t.row(k).adjoint() * coef;
        }
    }
    (x, rank)
}

/// `log2 det(m)` for Hermitian positive-definite `m`.
pub fn log2_det_hpd(m: &CMat) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    let l = chol.l_dirty();
    let mut s = 0.0;
    for i in 0..m.nrows() {
        s += l[(i, i)].re.ln();
    }
    Some(2.0 * s / std::f64::consts::LN_2)
}

/// Solve `m x = b` for Hermitian positive-definite `m`.
pub fn solve_hpd(m: &CMat, b: &CVec) -> Option<CVec> {
    let chol = m.clone().cholesky()?;
    Some(chol.solve(b))
}

/// Unit-norm principal eigenvector of a Hermitian matrix.
pub fn principal_eigvec(m: &CMat) -> CVec {
    let (_, vecs) = hermitian_eig(m);
    vecs.column(m.nrows() - 1).into_owned()
}

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `exp(iφ)`.
pub fn cis(phi: f64) -> C64 {
    let (s, c) = phi.sin_cos();
    C64::new(c, s)
}
