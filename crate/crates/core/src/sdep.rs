//! Singular delay eigenvalue problem associated with an uncertain system.
//!
//! The characteristic matrix is `M(s) = Q s - P0(delta, Delta) - sum_k Pk(delta) e^{-s tau_k}`
//! with unknowns `(x, w, z)`, `Q = diag(E, 0, 0)` and
//!
//! ```text
//! P0 = [A0  B0   0 ]      Pk = [Ak  Bk  0]
//!      [0  -I_m  Δ ]           [0   0   0]
//!      [C0  D0 -I_p]           [Ck  Dk  0]
//! ```
//!
//! so that the second block row closes the loop `w = Δ z`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, spectral_norm_real, to_complex, CMat, RMat, C64};
use crate::model::{Family, Target, UncertainDelaySystem, UncertaintyPoint};

/// Which characteristic matrix to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdepKind {
    /// Full `(x, w, z)` problem with the `Δ` feedback loop.
    Full,
    /// The state equation alone, `s E - A0(delta) - sum Ak(delta) e^{-s tau_k}`.
    StateOnly,
}

/// Matrices of a characteristic matrix `Q s - P0 - sum Pk e^{-s tau_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdepRealization {
    pub q: RMat,
    pub p0: CMat,
    pub pk: Vec<RMat>,
    /// Injection matrix `[0; I_m; 0]`.
    pub r: RMat,
    /// Extraction matrix `[0 0 I_p]`.
    pub s: RMat,
    /// Effective delays.
    pub delays: Vec<f64>,
}

impl SdepRealization {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// `M(s)`.
    pub fn char_matrix(&self, s: C64) -> CMat {
        let mut m = to_complex(&self.q) * s - &self.p0;
        for (pk, &tau) in self.pk.iter().zip(&self.delays) {
            let e = (-s * tau).exp();
            m.zip_apply(pk, |x, y| *x -= e * y);
        }
        m
    }

    /// `M'(s) = Q + sum Pk tau_k e^{-s tau_k}`.
    pub fn char_derivative(&self, s: C64) -> CMat {
        let mut m = to_complex(&self.q);
        for (pk, &tau) in self.pk.iter().zip(&self.delays) {
            let e = (-s * tau).exp() * tau;
            m.zip_apply(pk, |x, y| *x += e * y);
        }
        m
    }

    /// Magnitude scale of `M(s)` used for relative residual tests.
    pub fn residual_scale(&self, s: C64) -> f64 {
        let mut sc = s.norm() * spectral_norm_real(&self.q) + spectral_norm(&self.p0);
        for (pk, &tau) in self.pk.iter().zip(&self.delays) {
            sc += spectral_norm_real(pk) * (-s.re * tau).exp();
        }
        sc.max(1.0)
    }

    /// Largest spectral norm among `P0` and the `Pk`, at least 1.
    pub fn coefficient_norm(&self) -> f64 {
        self.pk
            .iter()
            .map(spectral_norm_real)
            .fold(spectral_norm(&self.p0), f64::max)
            .max(1.0)
    }

    pub fn max_delay(&self) -> f64 {
        self.delays.iter().copied().fold(0.0, f64::max)
    }
}

/// Characteristic matrix of the closed loop `w = Δ z` at an admissible point.
pub fn build_sdep(
    system: &UncertainDelaySystem,
    point: &UncertaintyPoint,
    delta: &CMat,
) -> Result<SdepRealization> {
    system.check_point(point)?;
    if delta.shape() != (system.m(), system.p()) {
        return Err(Error::Dimension(format!(
            "Delta is {}x{}, expected {}x{}",
            delta.nrows(),
            delta.ncols(),
            system.m(),
            system.p()
        )));
    }
    Ok(build_unchecked(system, point, Some(delta), SdepKind::Full))
}

/// Characteristic matrix of the state equation alone at an admissible point.
pub fn build_state_sdep(system: &UncertainDelaySystem, point: &UncertaintyPoint) -> Result<SdepRealization> {
    system.check_point(point)?;
    Ok(build_unchecked(system, point, None, SdepKind::StateOnly))
}

pub(crate) fn build_unchecked(
    system: &UncertainDelaySystem,
    point: &UncertaintyPoint,
    delta: Option<&CMat>,
    kind: SdepKind,
) -> SdepRealization {
    let re = system.assemble_unchecked(point);
    let (n, m, p) = (system.n(), system.m(), system.p());
    match kind {
        SdepKind::StateOnly => SdepRealization {
            q: system.e().clone(),
            p0: to_complex(&re.a[0]),
            pk: re.a[1..].to_vec(),
            r: RMat::zeros(n, 0),
            s: RMat::zeros(0, n),
            delays: re.delays,
        },
        SdepKind::Full => {
            let big = n + m + p;
            let block = |k: usize, feedthrough: bool| {
                let mut out = RMat::zeros(big, big);
                out.view_mut((0, 0), (n, n)).copy_from(&re.a[k]);
                out.view_mut((0, n), (n, m)).copy_from(&re.b[k]);
                out.view_mut((n + m, 0), (p, n)).copy_from(&re.c[k]);
                out.view_mut((n + m, n), (p, m)).copy_from(&re.d[k]);
                if feedthrough {
                    for i in n..big {
                        out[(i, i)] = -1.0;
                    }
                }
                out
            };
            let mut q = RMat::zeros(big, big);
            q.view_mut((0, 0), (n, n)).copy_from(system.e());
            let mut p0 = to_complex(&block(0, true));
            if let Some(d) = delta {
                p0.view_mut((n, n + m), (m, p)).copy_from(d);
            }
            let mut r = RMat::zeros(big, m);
            r.view_mut((n, 0), (m, m)).fill_with_identity();
            let mut s = RMat::zeros(p, big);
            s.view_mut((0, n + m), (p, p)).fill_with_identity();
            SdepRealization {
                q,
                p0,
                pk: (1..=system.k()).map(|k| block(k, false)).collect(),
                r,
                s,
                delays: re.delays,
            }
        }
    }
}

/// Row and column offsets of an occurrence's target inside the characteristic
/// matrix, or `None` when the target does not enter that matrix.
pub(crate) fn target_offset(system: &UncertainDelaySystem, kind: SdepKind, t: Target) -> Option<(usize, usize)> {
    let (n, m) = (system.n(), system.m());
    match (kind, t.family) {
        (SdepKind::StateOnly, Family::A) => Some((0, 0)),
        (SdepKind::StateOnly, _) => None,
        (SdepKind::Full, Family::A) => Some((0, 0)),
        (SdepKind::Full, Family::B) => Some((0, n)),
        (SdepKind::Full, Family::C) => Some((n + m, 0)),
        (SdepKind::Full, Family::D) => Some((n + m, n)),
    }
}

/// Rank-one uncertainty `Δ = eps u v^H`.
pub fn rank_one(eps: f64, u: &crate::linalg::CVec, v: &crate::linalg::CVec) -> CMat {
    DMatrix::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj() * eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Occurrence, SystemData, UncertaintyBlock};

    fn s(v: f64) -> RMat {
        RMat::from_element(1, 1, v)
    }

    fn example_31() -> UncertainDelaySystem {
        let occ = |t: &str, g: f64| Occurrence { target: t.parse().unwrap(), g: s(g), h: s(1.0) };
        UncertainDelaySystem::new(SystemData {
            delays: vec![1.0],
            a: vec![s(-7.0), s(-5.0)],
            b: vec![s(4.0), s(0.0)],
            c: vec![s(2.0), s(0.0)],
            d: vec![s(1.0), s(1.0)],
            blocks: vec![
                UncertaintyBlock { bound: 0.15, rows: 1, cols: 1, occurrences: vec![occ("A0", 3.0), occ("D0", 1.0)] },
                UncertaintyBlock { bound: 0.2, rows: 1, cols: 1, occurrences: vec![occ("A1", 2.0), occ("C0", -2.0)] },
            ],
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn layout_of_nominal_example() {
        let sys = example_31();
        let sd = build_sdep(&sys, &sys.zero_point(), &CMat::zeros(1, 1)).unwrap();
        let p0 = RMat::from_row_slice(3, 3, &[-7.0, 4.0, 0.0, 0.0, -1.0, 0.0, 2.0, 1.0, -1.0]);
        let p1 = RMat::from_row_slice(3, 3, &[-5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(sd.p0, to_complex(&p0));
        assert_eq!(sd.pk[0], p1);
        assert_eq!(sd.q, RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0])));
    }

    #[test]
    fn delta_enters_through_r_and_s() {
        let sys = example_31();
        let pt = sys.point_from_flat(&[0.1, -0.05]).unwrap();
        let d = CMat::from_element(1, 1, C64::new(0.3, -0.7));
        let a = build_sdep(&sys, &pt, &d).unwrap();
        let b = build_sdep(&sys, &pt, &CMat::zeros(1, 1)).unwrap();
        let diff = &a.p0 - &b.p0 - to_complex(&a.r) * &d * to_complex(&a.s);
        assert!(diff.norm() < 1e-15);
        assert_eq!(a.pk, b.pk);
    }

    #[test]
    fn char_matrix_of_state_problem() {
        let sys = example_31();
        let sd = build_state_sdep(&sys, &sys.zero_point()).unwrap();
        let z = C64::new(0.4, 1.1);
        let expect = z + 7.0 + 5.0 * (-z).exp();
        assert!((sd.char_matrix(z)[(0, 0)] - expect).norm() < 1e-14);
        let dexp = 1.0 - 5.0 * (-z).exp();
        assert!((sd.char_derivative(z)[(0, 0)] - dexp).norm() < 1e-14);
    }

    #[test]
    fn rejects_wrong_delta_shape() {
        let sys = example_31();
        assert!(build_sdep(&sys, &sys.zero_point(), &CMat::zeros(2, 1)).is_err());
    }
}
