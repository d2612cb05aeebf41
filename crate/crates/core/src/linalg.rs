//! Small dense linear-algebra helpers shared by the solvers.

use faer::Mat;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const J: C64 = C64::new(0.0, 1.0);

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// Largest and smallest singular triplets of a complex matrix.
#[derive(Debug, Clone)]
pub struct SvdExtremes {
    pub sigma1: f64,
    /// Second largest singular value, 0 when there is none.
    pub sigma2: f64,
    pub u1: CVec,
    pub v1: CVec,
    pub sigma_min: f64,
    pub u_min: CVec,
    pub v_min: CVec,
}

/// Singular triplets at both ends of the spectrum. For non-square input the
/// smallest triplet refers to the `min(rows, cols)`-th singular value.
pub fn svd_extremes(m: &CMat) -> SvdExtremes {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return SvdExtremes {
            sigma1: 0.0,
            sigma2: 0.0,
            u1: CVec::zeros(r),
            v1: CVec::zeros(c),
            sigma_min: 0.0,
            u_min: CVec::zeros(r),
            v_min: CVec::zeros(c),
        };
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let hi = order[0];
    let lo = *order.last().unwrap();
    SvdExtremes {
        sigma1: s[hi],
        sigma2: if order.len() > 1 { s[order[1]] } else { 0.0 },
        u1: u.column(hi).into_owned(),
        v1: vt.row(hi).adjoint(),
        sigma_min: s[lo],
        u_min: u.column(lo).into_owned(),
        v_min: vt.row(lo).adjoint(),
    }
}

pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn spectral_norm_real(m: &RMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Orthonormal bases of the left and right null spaces of a real square
/// matrix. Singular values below `rel_tol * sigma_max` count as zero.
pub fn nullspace_bases(q: &RMat, rel_tol: f64) -> (RMat, RMat) {
    let n = q.nrows();
    assert_eq!(n, q.ncols(), "null-space bases need a square matrix");
    if n == 0 {
        return (RMat::zeros(0, 0), RMat::zeros(0, 0));
    }
    let svd = q.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let s = &svd.singular_values;
    let smax = s.max();
    let cut = rel_tol * smax;
    let null: Vec<usize> = (0..n).filter(|&i| smax == 0.0 || s[i] <= cut).collect();
    let mut un = RMat::zeros(n, null.len());
    let mut vn = RMat::zeros(n, null.len());
    for (j, &i) in null.iter().enumerate() {
        un.set_column(j, &u.column(i));
        vn.set_column(j, &vt.row(i).transpose());
    }
    (un, vn)
}

pub fn to_faer(m: &CMat) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// All eigenvalues of a dense complex matrix.
pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    to_faer(m)
        .eigenvalues()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// Dominant eigenvalue with unit right and left eigenvectors (`W x = mu x`,
/// `y^H W = mu y^H`). Returns `None` for an empty matrix.
pub fn dominant_eigen(w: &CMat) -> Result<Option<(C64, CVec, CVec)>> {
    let n = w.nrows();
    if n == 0 {
        return Ok(None);
    }
    let ev = eigenvalues(w)?;
    let mu = ev
        .iter()
        .copied()
        .fold(C64::new(0.0, 0.0), |best, z| if z.norm() > best.norm() { z } else { best });
    let shifted = w - CMat::identity(n, n) * mu;
    let ext = svd_extremes(&shifted);
    Ok(Some((mu, ext.v_min, ext.u_min)))
}

/// Spectral radius of a complex matrix.
pub fn spectral_radius(w: &CMat) -> Result<f64> {
    Ok(eigenvalues(w)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Gradient of `Re(w * a^H G X H b)` with respect to the real matrix `X`,
/// added into `grad` with weight `scale`: `scale * G^T Re(w conj(a) b^T) H^T`.
pub fn accumulate_shape_gradient(
    grad: &mut RMat,
    g: &RMat,
    h: &RMat,
    a: &[C64],
    b: &[C64],
    w: C64,
    scale: f64,
) {
    debug_assert_eq!(g.nrows(), a.len());
    debug_assert_eq!(h.ncols(), b.len());
    let alpha: Vec<C64> = (0..g.ncols())
        .map(|i| (0..g.nrows()).map(|r| a[r].conj() * g[(r, i)]).sum::<C64>() * w)
        .collect();
    let beta: Vec<C64> = (0..h.nrows())
        .map(|j| (0..h.ncols()).map(|c| h[(j, c)] * b[c]).sum())
        .collect();
    for i in 0..alpha.len() {
        for j in 0..beta.len() {
            grad[(i, j)] += scale * (alpha[i] * beta[j]).re;
        }
    }
}

/// Frobenius inner product of two real matrices.
pub fn frob_dot(a: &RMat, b: &RMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Solve `A X = B` by LU, failing on a numerically singular `A`.
pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    if a.is_empty() {
        return Some(CMat::zeros(0, b.ncols()));
    }
    a.clone().lu().solve(b)
}

pub fn inverse(a: &CMat) -> Option<CMat> {
    if a.is_empty() {
        return Some(CMat::zeros(0, 0));
    }
    a.clone().try_inverse()
}

/// Normalize a complex vector to unit length; returns `None` for zero input.
pub fn normalized(v: &CVec) -> Option<CVec> {
    let n = v.norm();
    (n > 0.0 && n.is_finite()).then(|| v / C64::new(n, 0.0))
}
