//! Distances defined through the null-space compression of the characteristic
//! matrix: loss of well-posedness and root-chain crossing. These apply to any
//! `E`, including singular ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ascent::{ascend, best_of_starts, AscentOptions, AscentProblem};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::{
    accumulate_shape_gradient, dominant_eigen, inverse, normalized, svd_extremes, to_complex, CMat, CVec, RMat, C64, J,
};
use crate::model::{standard_normal, UncertainDelaySystem, UncertaintyPoint};
use crate::projection;
use crate::rootfind::newton_bisection;
use crate::sdep::{build_unchecked, rank_one, target_offset, SdepKind};
use crate::spectrum::{angle_grid, decreasing_crossing, nullspace_bases};

/// Fixed null-space data of `Q`, which does not depend on the uncertainty.
struct Bases {
    u: CMat,
    v: CMat,
    /// `U^H R`.
    rhat: CMat,
    /// `S V`.
    shat: CMat,
}

fn bases(system: &UncertainDelaySystem, kind: SdepKind) -> Bases {
    let sd = build_unchecked(system, &system.zero_point(), None, kind);
    let (u, v) = nullspace_bases(&sd.q);
    let u = to_complex(&u);
    let v = to_complex(&v);
    let rhat = u.adjoint() * to_complex(&sd.r);
    let shat = to_complex(&sd.s) * &v;
    Bases { u, v, rhat, shat }
}

fn compressions(
    system: &UncertainDelaySystem,
    kind: SdepKind,
    b: &Bases,
    blocks: &[RMat],
    delta: Option<&CMat>,
) -> (CMat, Vec<CMat>) {
    let pt = projection::to_point(system, blocks, &[]);
    let sd = build_unchecked(system, &pt, delta, kind);
    let z0 = b.u.adjoint() * &sd.p0 * &b.v;
    let zk = sd.pk.iter().map(|p| b.u.adjoint() * to_complex(p) * &b.v).collect();
    (z0, zk)
}

fn sphere_direction(x: &CVec, g: &CVec) -> CVec {
    let c = (x.adjoint() * g)[(0, 0)];
    g - x * c + x * (J * (0.5 * c.im))
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    let v = CVec::from_fn(n, |_, _| C64::new(standard_normal(rng), standard_normal(rng)));
    normalized(&v).unwrap_or_else(|| CVec::from_element(n, C64::new(1.0 / (n as f64).sqrt(), 0.0)))
}

// ---------------------------------------------------------------------------
// Chain radius

/// Optimizer state of the chain-radius maximization.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub blocks: Vec<RMat>,
    pub u: CVec,
    pub v: CVec,
    /// Angles of delays `2..K` (the first angle is fixed at zero).
    pub theta: Vec<f64>,
}

#[derive(Clone)]
struct ChainDir {
    blocks: Vec<RMat>,
    du: CVec,
    dv: CVec,
    theta: Vec<f64>,
}

struct ChainProblem<'a> {
    system: &'a UncertainDelaySystem,
    kind: SdepKind,
    eps: f64,
    weights: Vec<f64>,
    bases: Bases,
}

impl ChainProblem<'_> {
    fn uses_delta(&self) -> bool {
        self.kind == SdepKind::Full && self.eps > 0.0 && self.system.m() > 0 && self.system.p() > 0
    }

    fn coefficient(&self, k: usize, theta: &[f64]) -> C64 {
        if k == 0 {
            C64::new(self.weights[0], 0.0)
        } else {
            C64::from_polar(self.weights[k], theta[k - 1])
        }
    }
}

impl AscentProblem for ChainProblem<'_> {
    type State = ChainState;
    type Direction = ChainDir;

    fn evaluate(&self, st: &mut ChainState) -> Result<(f64, ChainDir, f64)> {
        let delta = self.uses_delta().then(|| rank_one(self.eps, &st.u, &st.v));
        let (z0, zk) = compressions(self.system, self.kind, &self.bases, &st.blocks, delta.as_ref());
        let ext = svd_extremes(&z0);
        if ext.sigma_min <= 1e-12 * ext.sigma1.max(1.0) {
            return Err(Error::NotWellPosed);
        }
        let z0inv = inverse(&z0).ok_or(Error::NotWellPosed)?;
        let mut w = CMat::zeros(z0.nrows(), z0.ncols());
        for (k, z) in zk.iter().enumerate() {
            w += z * self.coefficient(k, &st.theta);
        }
        let x_mat = &z0inv * &w;
        let zero_dir = ChainDir {
            blocks: projection::zeros(self.system),
            du: CVec::zeros(st.u.len()),
            dv: CVec::zeros(st.v.len()),
            theta: vec![0.0; st.theta.len()],
        };
        let Some((mu, x, y)) = dominant_eigen(&x_mat)? else {
            return Ok((0.0, zero_dir, 0.0));
        };
        let r = mu.norm();
        let yx = (y.adjoint() * &x)[(0, 0)];
        if r <= 1e-300 || yx.norm() < 1e-12 {
            return Ok((r, zero_dir, 0.0));
        }
        let yt = z0inv.adjoint() * &y;
        let kappa = mu.conj() / (r * yx);

        let dtheta: Vec<f64> = (0..st.theta.len())
            .map(|i| {
                let k = i + 1;
                (kappa * J * self.coefficient(k, &st.theta) * (yt.adjoint() * &zk[k] * &x)[(0, 0)]).re
            })
            .collect();

        let a_full = &self.bases.u * &yt;
        let b_full = &self.bases.v * &x;
        let mut grad = projection::zeros(self.system);
        for (l, blk) in self.system.blocks().iter().enumerate() {
            for occ in &blk.occurrences {
                let Some((ro, co)) = target_offset(self.system, self.kind, occ.target) else {
                    continue;
                };
                let (tr, tc) = self.system.target_shape(occ.target);
                let k = occ.target.index;
                let wgt = if k == 0 { -kappa * mu } else { kappa * self.coefficient(k - 1, &st.theta) };
                accumulate_shape_gradient(
                    &mut grad[l],
                    &occ.g,
                    &occ.h,
                    &a_full.as_slice()[ro..ro + tr],
                    &b_full.as_slice()[co..co + tc],
                    wgt,
                    blk.bound,
                );
            }
        }
        projection::project(&st.blocks, &mut grad);

        let (du, dv) = if self.uses_delta() {
            let eps = C64::new(self.eps, 0.0);
            let sx = &self.bases.shat * &x;
            let ry = self.bases.rhat.adjoint() * &yt;
            let cu = -kappa * mu * eps * (st.v.adjoint() * &sx)[(0, 0)];
            let cv = -kappa * mu * eps * (ry.adjoint() * &st.u)[(0, 0)];
            (sphere_direction(&st.u, &(ry * cu.conj())), sphere_direction(&st.v, &(sx * cv)))
        } else {
            (CVec::zeros(st.u.len()), CVec::zeros(st.v.len()))
        };
        let g = (dtheta.iter().map(|t| t * t).sum::<f64>()
            + projection::sq_norm(&grad)
            + du.norm_squared()
            + dv.norm_squared())
        .sqrt();
        Ok((r, ChainDir { blocks: grad, du, dv, theta: dtheta }, g))
    }

    fn advance(&self, st: &ChainState, d: &ChainDir, h: f64) -> ChainState {
        let hc = C64::new(h, 0.0);
        let step_unit = |x: &CVec, dx: &CVec| {
            if x.len() == 0 {
                x.clone()
            } else {
                normalized(&(x + dx * hc)).unwrap_or_else(|| x.clone())
            }
        };
        ChainState {
            blocks: projection::advance(&st.blocks, &d.blocks, h),
            u: step_unit(&st.u, &d.du),
            v: step_unit(&st.v, &d.dv),
            theta: st.theta.iter().zip(&d.theta).map(|(t, g)| t + h * g).collect(),
        }
    }
}

/// Maximum of the chain spectral radius over the uncertainty set.
#[derive(Debug, Clone)]
pub struct ChainMax {
    pub value: f64,
    pub state: ChainState,
}

/// `max over delta, ||Delta||_2 = eps (rank one), theta of
/// rho(Z0(delta, Delta)^{-1} sum_k Zk(delta) e^{-sigma tau_k + j theta_k})`,
/// where `Z` are null-space compressions of the characteristic matrices.
pub(crate) fn chain_radius_max(
    system: &UncertainDelaySystem,
    kind: SdepKind,
    eps: f64,
    sigma: f64,
    config: &SolverConfig,
    warm: Option<&ChainState>,
) -> Result<ChainMax> {
    let k = system.k();
    let (m, p) = if kind == SdepKind::Full { (system.m(), system.p()) } else { (0, 0) };
    let prob = ChainProblem {
        system,
        kind,
        eps,
        weights: system.delays().iter().map(|t| (-sigma * t).exp()).collect(),
        bases: bases(system, kind),
    };
    if k == 0 || prob.bases.u.ncols() == 0 {
        let st = ChainState { blocks: projection::zeros(system), u: CVec::zeros(m), v: CVec::zeros(p), theta: Vec::new() };
        return Ok(ChainMax { value: 0.0, state: st });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xc4a1);
    let mut block_seeds = vec![projection::zeros(system)];
    let mut uv_seeds = vec![(random_unit(&mut rng, m), random_unit(&mut rng, p))];
    if !system.blocks().is_empty() {
        for _ in 0..config.restarts {
            block_seeds.push(projection::random(system, &mut rng));
        }
    }
    if prob.uses_delta() {
        for _ in 0..config.restarts {
            uv_seeds.push((random_unit(&mut rng, m), random_unit(&mut rng, p)));
        }
    }
    let mut candidates: Vec<ChainState> = Vec::new();
    for th in angle_grid(k - 1) {
        for b in &block_seeds {
            for (u, v) in &uv_seeds {
                candidates.push(ChainState { blocks: b.clone(), u: u.clone(), v: v.clone(), theta: th.clone() });
            }
        }
    }
    let mut scored: Vec<(f64, ChainState)> = candidates
        .into_iter()
        .filter_map(|mut c| prob.evaluate(&mut c).ok().map(|(f, _, _)| (f, c)))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut starts: Vec<ChainState> = warm.into_iter().cloned().collect();
    starts.extend(scored.into_iter().take(2 + config.restarts).map(|(_, s)| s));
    let opts = AscentOptions { tol: config.inner_tol, max_iter: config.max_flow_iter, ..Default::default() };
    let (best, _) = best_of_starts(starts, |s| ascend(&prob, s, &opts), |r| r.value);
    let (_, best) = best.ok_or(Error::NotWellPosed)?;
    Ok(ChainMax { value: best.value, state: best.state })
}

/// Strong chain abscissa maximized over the uncertainty set at radius `eps`
/// (`-inf` when no chain exists).
pub fn chain_pseudo_abscissa(
    system: &UncertainDelaySystem,
    kind: SdepKind,
    eps: f64,
    config: &SolverConfig,
) -> Result<f64> {
    let tmax = system.delays().iter().copied().fold(0.0, f64::max);
    if tmax == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let mut warm: Option<ChainState> = None;
    let mut log_radius = |s: f64| -> Result<f64> {
        let r = chain_radius_max(system, kind, eps, s, config, warm.as_ref())?;
        let v = r.value;
        warm = Some(r.state);
        Ok(if v <= 1e-14 { f64::NEG_INFINITY } else { v.ln() })
    };
    let mut upper = 1.0;
    while log_radius(upper)? >= 0.0 {
        upper *= 2.0;
        if upper > 1e6 {
            return Ok(f64::INFINITY);
        }
    }
    decreasing_crossing(log_radius, upper, -200.0 / tmax, 1e-9)
}

// ---------------------------------------------------------------------------
// Distances

/// Result of the explicit well-posedness distance computation.
#[derive(Debug, Clone)]
pub struct NwpResult {
    pub dist: f64,
    pub point: UncertaintyPoint,
    /// Smallest `Delta` making the compression singular at `point`.
    pub delta: Option<CMat>,
}

struct NwpProblem<'a> {
    system: &'a UncertainDelaySystem,
    bases: Bases,
}

impl NwpProblem<'_> {
    /// `Shat Z0(delta, 0)^{-1} Rhat` and the inverse.
    fn loop_matrix(&self, blocks: &[RMat]) -> Result<(CMat, CMat)> {
        let (z0, _) = compressions(self.system, SdepKind::Full, &self.bases, blocks, None);
        let ext = svd_extremes(&z0);
        if ext.sigma_min <= 1e-12 * ext.sigma1.max(1.0) {
            return Err(Error::NotWellPosed);
        }
        let inv = inverse(&z0).ok_or(Error::NotWellPosed)?;
        Ok((&self.bases.shat * &inv * &self.bases.rhat, inv))
    }
}

impl AscentProblem for NwpProblem<'_> {
    type State = Vec<RMat>;
    type Direction = Vec<RMat>;

    fn evaluate(&self, blocks: &mut Vec<RMat>) -> Result<(f64, Vec<RMat>, f64)> {
        let (y, inv) = self.loop_matrix(blocks)?;
        let ext = svd_extremes(&y);
        let a = &self.bases.u * (inv.adjoint() * self.bases.shat.adjoint() * &ext.u1);
        let b = &self.bases.v * (&inv * &self.bases.rhat * &ext.v1);
        let mut grad = projection::zeros(self.system);
        for (l, blk) in self.system.blocks().iter().enumerate() {
            for occ in blk.occurrences.iter().filter(|o| o.target.index == 0) {
                let (ro, co) = target_offset(self.system, SdepKind::Full, occ.target).expect("full layout");
                let (tr, tc) = self.system.target_shape(occ.target);
                accumulate_shape_gradient(
                    &mut grad[l],
                    &occ.g,
                    &occ.h,
                    &a.as_slice()[ro..ro + tr],
                    &b.as_slice()[co..co + tc],
                    C64::new(-1.0, 0.0),
                    blk.bound,
                );
            }
        }
        projection::project(blocks, &mut grad);
        let g = projection::sq_norm(&grad).sqrt();
        Ok((ext.sigma1, grad, g))
    }

    fn advance(&self, blocks: &Vec<RMat>, d: &Vec<RMat>, h: f64) -> Vec<RMat> {
        projection::advance(blocks, d, h)
    }
}

/// Smallest `||Delta||_2` for which the compression `U^H P0(delta, Delta) V`
/// becomes singular for some admissible `delta`.
///
/// For fixed `delta` the minimal such `Delta` has norm
/// `1 / sigma_1(S V Z0(delta, 0)^{-1} U^H R)`, so only the inner
/// maximization over `delta` is iterative.
pub fn dist_nwp_explicit(system: &UncertainDelaySystem, config: &SolverConfig) -> Result<NwpResult> {
    let prob = NwpProblem { system, bases: bases(system, SdepKind::Full) };
    let zero = system.zero_point();
    if prob.bases.u.ncols() == 0 || system.m() == 0 || system.p() == 0 {
        return Ok(NwpResult { dist: f64::INFINITY, point: zero, delta: None });
    }
    let mut z = projection::zeros(system);
    let first = match prob.evaluate(&mut z) {
        Err(Error::NotWellPosed) => return Ok(NwpResult { dist: 0.0, point: zero, delta: None }),
        other => other?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7a3);
    let mut starts = vec![projection::zeros(system)];
    if !system.blocks().is_empty() {
        for _ in 0..config.restarts {
            starts.push(projection::random(system, &mut rng));
        }
        starts.extend(projection::boundary_starts(&first.1));
    }
    let opts = AscentOptions { tol: config.inner_tol, max_iter: config.max_flow_iter, ..Default::default() };
    let (best, _) = best_of_starts(starts, |s| ascend(&prob, s, &opts), |r| r.value);
    let (_, best) = best.ok_or(Error::NotWellPosed)?;
    let point = projection::to_point(system, &best.state, &[]);
    if best.value <= 0.0 {
        return Ok(NwpResult { dist: f64::INFINITY, point, delta: None });
    }
    let (y, _) = prob.loop_matrix(&best.state)?;
    let ext = svd_extremes(&y);
    let delta = rank_one(-1.0 / ext.sigma1, &ext.v1, &ext.u1);
    Ok(NwpResult { dist: 1.0 / best.value, point, delta: Some(delta) })
}

/// Result of the explicit chain-crossing distance computation.
#[derive(Debug, Clone)]
pub struct ChainDistance {
    pub dist: f64,
    pub state: Option<ChainState>,
    pub evaluations: usize,
}

/// Smallest `eps` below `dist_nwp` at which the maximal chain radius reaches
/// one, `+inf` if it stays below one on the whole interval.
pub fn dist_chain_explicit(system: &UncertainDelaySystem, dist_nwp: f64, config: &SolverConfig) -> Result<ChainDistance> {
    if system.k() == 0 {
        return Ok(ChainDistance { dist: f64::INFINITY, state: None, evaluations: 0 });
    }
    let mut evaluations = 0;
    let mut warm: Option<ChainState> = None;
    let mut radius = |eps: f64| -> Result<f64> {
        evaluations += 1;
        let r = chain_radius_max(system, SdepKind::Full, eps, 0.0, config, warm.as_ref())?;
        warm = Some(r.state);
        Ok(r.value - 1.0)
    };
    let f0 = radius(0.0)?;
    if f0 >= 0.0 {
        return Ok(ChainDistance { dist: 0.0, state: warm, evaluations });
    }
    let b = if dist_nwp.is_finite() {
        dist_nwp * (1.0 - config.endpoint_margin)
    } else {
        let mut b = 1.0;
        while radius(b)? < 0.0 {
            b *= 2.0;
            if b > 1e8 {
                return Ok(ChainDistance { dist: f64::INFINITY, state: warm, evaluations });
            }
        }
        b
    };
    if radius(b)? < 0.0 {
        return Ok(ChainDistance { dist: f64::INFINITY, state: warm, evaluations });
    }
    let h = 1e-7 * b;
    let r = newton_bisection(
        |e| {
            let f = radius(e)?;
            let e2 = if e + h < b { e + h } else { e - h };
            let f2 = radius(e2)?;
            Ok((f, (f2 - f) / (e2 - e)))
        },
        0.0,
        b,
        config.outer_tol * b,
    )?;
    Ok(ChainDistance { dist: r.root, state: warm, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Family, Occurrence, SystemData, Target, UncertaintyBlock};
    use rand::Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> RMat {
        RMat::from_fn(r, c, |_, _| scale * rng.gen_range(-1.0..1.0))
    }

    /// Neutral two-input two-output system with a full block in `D0` and `D1`.
    fn neutral_mimo(rng: &mut ChaCha8Rng) -> UncertainDelaySystem {
        let occ = |rng: &mut ChaCha8Rng, index| Occurrence {
            target: Target::new(Family::D, index),
            g: rand_mat(rng, 2, 2, 1.0),
            h: rand_mat(rng, 2, 2, 1.0),
        };
        let blocks = vec![UncertaintyBlock { bound: 0.2, rows: 2, cols: 2, occurrences: vec![occ(rng, 0), occ(rng, 1)] }];
        UncertainDelaySystem::new(SystemData {
            delays: vec![1.0, 1.7],
            e: None,
            a: vec![RMat::from_element(1, 1, -2.0), rand_mat(rng, 1, 1, 0.5), rand_mat(rng, 1, 1, 0.5)],
            b: vec![rand_mat(rng, 1, 2, 1.0), RMat::zeros(1, 2), RMat::zeros(1, 2)],
            c: vec![rand_mat(rng, 2, 1, 1.0), RMat::zeros(2, 1), RMat::zeros(2, 1)],
            d: vec![rand_mat(rng, 2, 2, 1.0), rand_mat(rng, 2, 2, 0.4), rand_mat(rng, 2, 2, 0.4)],
            blocks,
            delay_bounds: None,
        })
        .unwrap()
    }

    fn rel(fd: &[f64], an: &[f64]) -> f64 {
        let num: f64 = fd.iter().zip(an).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = an.iter().map(|x| x * x).sum::<f64>().sqrt();
        num / den.max(1e-12)
    }

    #[test]
    fn chain_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let system = neutral_mimo(&mut rng);
        let prob = ChainProblem {
            system: &system,
            kind: SdepKind::Full,
            eps: 0.3,
            weights: vec![(-0.1f64).exp(), (-0.17f64).exp()],
            bases: bases(&system, SdepKind::Full),
        };
        let h = 1e-6;
        let mut checked = 0;
        for _ in 0..30 {
            let mut st = ChainState {
                blocks: vec![random_direction_scaled(&mut rng, 0.5)],
                u: random_unit(&mut rng, 2),
                v: random_unit(&mut rng, 2),
                theta: vec![rng.gen_range(0.0..std::f64::consts::TAU)],
            };
            let Ok((_, d, _)) = prob.evaluate(&mut st) else { continue };
            let f = |s: &ChainState| prob.evaluate(&mut s.clone()).unwrap().0;
            let (mut fd, mut an) = (Vec::new(), Vec::new());
            let mut sp = st.clone();
            let mut sm = st.clone();
            sp.theta[0] += h;
            sm.theta[0] -= h;
            fd.push((f(&sp) - f(&sm)) / (2.0 * h));
            an.push(d.theta[0]);
            for idx in 0..4 {
                let (mut sp, mut sm) = (st.clone(), st.clone());
                sp.blocks[0][idx] += h;
                sm.blocks[0][idx] -= h;
                fd.push((f(&sp) - f(&sm)) / (2.0 * h));
                an.push(d.blocks[0][idx]);
            }
            for which in 0..2 {
                let (x, dx) = if which == 0 { (&st.u, &d.du) } else { (&st.v, &d.dv) };
                let c = (x.adjoint() * dx)[(0, 0)];
                let perp = dx - x * c;
                for e in 0..2 {
                    let mut b = CVec::zeros(2);
                    b[e] = C64::new(1.0, 0.0);
                    let t = &b - x * (x.adjoint() * &b)[(0, 0)];
                    for w in [t.clone(), &t * J, x * J] {
                        let pred = (perp.adjoint() * &w)[(0, 0)].re + 2.0 * (x.adjoint() * &w)[(0, 0)].im * c.im;
                        let xp = normalized(&(x + &w * C64::new(h, 0.0))).unwrap();
                        let xm = normalized(&(x - &w * C64::new(h, 0.0))).unwrap();
                        let (mut sp, mut sm) = (st.clone(), st.clone());
                        if which == 0 {
                            sp.u = xp;
                            sm.u = xm;
                        } else {
                            sp.v = xp;
                            sm.v = xm;
                        }
                        fd.push((f(&sp) - f(&sm)) / (2.0 * h));
                        an.push(pred);
                    }
                }
            }
            let err = rel(&fd, &an);
            assert!(err < 1e-5, "relative error {err}");
            checked += 1;
        }
        assert!(checked >= 20);
    }

    fn random_direction_scaled(rng: &mut ChaCha8Rng, scale: f64) -> RMat {
        crate::model::random_direction(rng, 2, 2) * scale
    }

    #[test]
    fn nwp_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let system = neutral_mimo(&mut rng);
        let prob = NwpProblem { system: &system, bases: bases(&system, SdepKind::Full) };
        let h = 1e-6;
        for _ in 0..20 {
            let mut blocks = vec![random_direction_scaled(&mut rng, 0.7)];
            let (_, d, _) = prob.evaluate(&mut blocks).unwrap();
            let f = |b: &Vec<RMat>| prob.evaluate(&mut b.clone()).unwrap().0;
            let (mut fd, mut an) = (Vec::new(), Vec::new());
            for idx in 0..4 {
                let (mut bp, mut bm) = (blocks.clone(), blocks.clone());
                bp[0][idx] += h;
                bm[0][idx] -= h;
                fd.push((f(&bp) - f(&bm)) / (2.0 * h));
                an.push(d[0][idx]);
            }
            let err = rel(&fd, &an);
            assert!(err < 1e-5, "relative error {err}");
        }
    }

    #[test]
    fn nwp_witness_makes_compression_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let system = neutral_mimo(&mut rng);
        let r = dist_nwp_explicit(&system, &SolverConfig::default()).unwrap();
        let delta = r.delta.unwrap();
        assert!((crate::linalg::spectral_norm(&delta) - r.dist).abs() < 1e-10 * r.dist);
        let b = bases(&system, SdepKind::Full);
        let sd = build_unchecked(&system, &r.point, Some(&delta), SdepKind::Full);
        let z0 = b.u.adjoint() * &sd.p0 * &b.v;
        let ext = svd_extremes(&z0);
        assert!(ext.sigma_min < 1e-10 * ext.sigma1);
    }
}
