//! Projected gradient flows for the robust asymptotic norm (over `delta` and
//! the angles `theta`) and for the pseudo-spectral abscissa (over `delta`, a
//! rank-one `Delta = eps u v^H` and optional delay offsets).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ascent::{ascend, best_of_starts, AscentProblem, AscentResult, TracePoint};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::{accumulate_shape_gradient, normalized, svd_extremes, to_complex, CMat, CVec, RMat, C64, J};
use crate::model::{standard_normal, Family, UncertainDelaySystem, UncertaintyPoint};
use crate::projection;
use crate::sdep::{build_unchecked, rank_one, target_offset, SdepKind, SdepRealization};
use crate::spectrum::{angle_grid, rightmost_roots_with, track_root, EigenTriple, SpectrumRegion};
use crate::transfer::eval_transfer;

// ---------------------------------------------------------------------------
// Asymptotic-norm flow

/// State of the `(delta, theta)` flow.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFlowState {
    /// Normalized blocks, `||n_l||_F <= 1`.
    pub blocks: Vec<RMat>,
    /// Unwrapped angles, one per delay.
    pub theta: Vec<f64>,
    pub t: f64,
}

/// Time derivatives of the asymptotic flow.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticRhs {
    pub dtheta: Vec<f64>,
    pub dblocks: Vec<RMat>,
    pub sigma1: f64,
    pub u: CVec,
    pub v: CVec,
}

impl AsymptoticRhs {
    pub fn norm(&self) -> f64 {
        (self.dtheta.iter().map(|x| x * x).sum::<f64>() + projection::sq_norm(&self.dblocks)).sqrt()
    }
}

fn asymptotic_matrix(system: &UncertainDelaySystem, blocks: &[RMat], theta: &[f64], delayed: bool) -> (CMat, Vec<RMat>) {
    let pt = projection::to_point(system, blocks, &[]);
    let d = system.assemble_unchecked(&pt).d;
    let mut m = to_complex(&d[0]);
    if delayed {
        for (dk, &th) in d[1..].iter().zip(theta) {
            let e = C64::from_polar(1.0, th);
            m.zip_apply(dk, |x, y| *x += e * y);
        }
    }
    (m, d)
}

fn asymptotic_rhs_impl(system: &UncertainDelaySystem, state: &AsymptoticFlowState, delayed: bool) -> Result<AsymptoticRhs> {
    let (m, d) = asymptotic_matrix(system, &state.blocks, &state.theta, delayed);
    let ext = svd_extremes(&m);
    if ext.sigma2 > 0.0 && ext.sigma1 - ext.sigma2 < 1e-10 * ext.sigma1 {
        return Err(Error::Multiplicity { gap: ext.sigma1 - ext.sigma2 });
    }
    let (u, v) = (ext.u1, ext.v1);
    let dtheta: Vec<f64> = if delayed {
        state
            .theta
            .iter()
            .enumerate()
            .map(|(k, &th)| {
                let z = (u.adjoint() * to_complex(&d[k + 1]) * &v)[(0, 0)] * C64::from_polar(1.0, th);
                -z.im
            })
            .collect()
    } else {
        vec![0.0; state.theta.len()]
    };
    let mut grad = projection::zeros(system);
    for (l, blk) in system.blocks().iter().enumerate() {
        for occ in blk.occurrences.iter().filter(|o| o.target.family == Family::D) {
            let k = occ.target.index;
            if k > 0 && !delayed {
                continue;
            }
            let w = if k == 0 { C64::new(1.0, 0.0) } else { C64::from_polar(1.0, state.theta[k - 1]) };
            accumulate_shape_gradient(&mut grad[l], &occ.g, &occ.h, u.as_slice(), v.as_slice(), w, blk.bound);
        }
    }
    projection::project(&state.blocks, &mut grad);
    Ok(AsymptoticRhs { dtheta, dblocks: grad, sigma1: ext.sigma1, u, v })
}

/// Right-hand side of the `(delta, theta)` flow maximizing
/// `sigma_1(D_0(delta) + sum_k D_k(delta) e^{j theta_k})`.
pub fn asymptotic_flow_rhs(system: &UncertainDelaySystem, state: &AsymptoticFlowState) -> Result<AsymptoticRhs> {
    asymptotic_rhs_impl(system, state, true)
}

struct AsymptoticProblem<'a> {
    system: &'a UncertainDelaySystem,
    delayed: bool,
}

#[derive(Clone)]
struct NudgedState {
    inner: AsymptoticFlowState,
    nudges: u32,
}

impl AscentProblem for AsymptoticProblem<'_> {
    type State = NudgedState;
    type Direction = AsymptoticRhs;

    fn evaluate(&self, st: &mut NudgedState) -> Result<(f64, AsymptoticRhs, f64)> {
        loop {
            match asymptotic_rhs_impl(self.system, &st.inner, self.delayed) {
                Err(Error::Multiplicity { .. }) if st.nudges < 3 => {
                    let mut rng = ChaCha8Rng::seed_from_u64(0xa5 ^ st.nudges as u64);
                    st.inner.blocks = projection::nudge(&st.inner.blocks, &mut rng);
                    for th in &mut st.inner.theta {
                        *th += 1e-10 * standard_normal(&mut rng);
                    }
                    st.nudges += 1;
                }
                Err(e) => return Err(e),
                Ok(rhs) => {
                    let g = rhs.norm();
                    return Ok((rhs.sigma1, rhs, g));
                }
            }
        }
    }

    fn advance(&self, st: &NudgedState, dir: &AsymptoticRhs, h: f64) -> NudgedState {
        NudgedState {
            inner: AsymptoticFlowState {
                blocks: projection::advance(&st.inner.blocks, &dir.dblocks, h),
                theta: st.inner.theta.iter().zip(&dir.dtheta).map(|(t, d)| t + h * d).collect(),
                t: st.inner.t + h,
            },
            nudges: st.nudges,
        }
    }
}

/// Result of the asymptotic-norm maximization.
#[derive(Debug, Clone)]
pub struct AsymptoticMax {
    pub value: f64,
    pub point: UncertaintyPoint,
    /// Angles reduced to `[0, 2 pi)`.
    pub theta: Vec<f64>,
    pub converged: bool,
    pub starts: usize,
    pub trace: Vec<TracePoint>,
}

fn maximize_asymptotic_impl(system: &UncertainDelaySystem, config: &SolverConfig, delayed: bool) -> Result<AsymptoticMax> {
    let k = system.k();
    let prob = AsymptoticProblem { system, delayed };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let free = if delayed { k } else { 0 };
    let grid: Vec<Vec<f64>> = if free == 0 {
        vec![vec![0.0; k]]
    } else {
        let g = angle_grid(free);
        g.into_iter().step_by(if free == 1 { 2 } else { 4 }).collect()
    };
    let mut block_seeds = vec![projection::zeros(system)];
    for _ in 0..config.restarts {
        block_seeds.push(projection::random(system, &mut rng));
    }
    if let Ok(rhs) = asymptotic_rhs_impl(
        system,
        &AsymptoticFlowState { blocks: projection::zeros(system), theta: vec![0.0; k], t: 0.0 },
        delayed,
    ) {
        block_seeds.extend(projection::boundary_starts(&rhs.dblocks));
    }
    if system.blocks().is_empty() {
        block_seeds.truncate(1);
    }
    let mut screened: Vec<(f64, NudgedState)> = Vec::new();
    for b in &block_seeds {
        for th in &grid {
            let (m, _) = asymptotic_matrix(system, b, th, delayed);
            let val = svd_extremes(&m).sigma1;
            let inner = AsymptoticFlowState { blocks: b.clone(), theta: th.clone(), t: 0.0 };
            screened.push((val, NudgedState { inner, nudges: 0 }));
        }
    }
    screened.sort_by(|a, b| b.0.total_cmp(&a.0));
    let keep = 4 + config.restarts + system.blocks().len();
    let mut starts: Vec<NudgedState> = screened.iter().take(keep).map(|(_, s)| s.clone()).collect();
    for _ in 0..config.restarts {
        let inner = AsymptoticFlowState {
            blocks: projection::random(system, &mut rng),
            theta: (0..k).map(|_| if delayed { rand::Rng::gen::<f64>(&mut rng) * std::f64::consts::TAU } else { 0.0 }).collect(),
            t: 0.0,
        };
        starts.push(NudgedState { inner, nudges: 0 });
    }
    let nstarts = starts.len();
    let opts = crate::ascent::AscentOptions { record_trace: true, ..config.ascent() };
    let (best, _) = best_of_starts(starts, |s| ascend(&prob, s, &opts), |r| r.value);
    let (_, best) = best.ok_or_else(|| Error::Domain("every asymptotic-flow start failed".into()))?;
    let theta = best.state.inner.theta.iter().map(|t| t.rem_euclid(std::f64::consts::TAU)).collect();
    Ok(AsymptoticMax {
        value: best.value,
        point: projection::to_point(system, &best.state.inner.blocks, &[]),
        theta,
        converged: best.converged,
        starts: nstarts,
        trace: best.trace,
    })
}

/// `max over delta, theta of sigma_1(D_0(delta) + sum_k D_k(delta) e^{j theta_k})`.
pub fn maximize_asymptotic(system: &UncertainDelaySystem, config: &SolverConfig) -> Result<AsymptoticMax> {
    maximize_asymptotic_impl(system, config, true)
}

/// Distance to loss of well-posedness of a system with `E = I`:
/// `1 / max_delta sigma_1(D_0(delta))`, `+inf` when the maximum is zero.
pub fn dist_nwp(system: &UncertainDelaySystem, config: &SolverConfig) -> Result<f64> {
    let r = maximize_asymptotic_impl(system, config, false)?;
    Ok(if r.value <= 0.0 { f64::INFINITY } else { 1.0 / r.value })
}

// ---------------------------------------------------------------------------
// Pseudo-spectral abscissa flow

/// State of the `(delta, u, v, rho)` flow at fixed `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoFlowState {
    pub blocks: Vec<RMat>,
    /// Unit vector in `C^m`.
    pub u: CVec,
    /// Unit vector in `C^p`.
    pub v: CVec,
    pub eps: f64,
    /// Delay offsets, empty when the delays are certain.
    pub offsets: Vec<f64>,
    /// Rightmost root being followed.
    pub triple: EigenTriple,
    pub t: f64,
}

impl PseudoFlowState {
    /// `Delta = eps u v^H`.
    pub fn delta(&self) -> CMat {
        rank_one(self.eps, &self.u, &self.v)
    }
}

/// Time derivatives of the pseudo-spectral flow.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoRhs {
    pub du: CVec,
    pub dv: CVec,
    pub dblocks: Vec<RMat>,
    pub doffsets: Vec<f64>,
}

impl PseudoRhs {
    pub fn norm(&self) -> f64 {
        (self.du.norm_squared()
            + self.dv.norm_squared()
            + projection::sq_norm(&self.dblocks)
            + self.doffsets.iter().map(|x| x * x).sum::<f64>())
        .sqrt()
    }
}

fn flow_sdep(system: &UncertainDelaySystem, kind: SdepKind, st: &PseudoFlowState) -> SdepRealization {
    let pt = projection::to_point(system, &st.blocks, &st.offsets);
    match kind {
        SdepKind::Full => build_unchecked(system, &pt, Some(&st.delta()), kind),
        SdepKind::StateOnly => build_unchecked(system, &pt, None, kind),
    }
}

/// Tangent direction on the unit sphere: `(I - x x^H) g + (j/2) Im(x^H g) x`.
fn sphere_direction(x: &CVec, g: &CVec) -> CVec {
    let c = (x.adjoint() * g)[(0, 0)];
    g - x * c + x * (J * (0.5 * c.im))
}

fn pseudo_rhs_impl(system: &UncertainDelaySystem, kind: SdepKind, st: &PseudoFlowState) -> Result<PseudoRhs> {
    let t = &st.triple;
    if t.defective {
        return Err(Error::Defective { lambda: t.lambda, xi: t.xi });
    }
    let lam = t.lambda;
    let xi = t.xi;
    let delays = system.effective_delays(&projection::to_point(system, &st.blocks, &st.offsets));
    let weight = |k: usize| {
        if k == 0 {
            C64::new(1.0 / xi, 0.0)
        } else {
            (-lam * delays[k - 1]).exp() / xi
        }
    };
    let phi = t.phi.as_slice();
    let psi = t.psi.as_slice();
    let mut grad = projection::zeros(system);
    for (l, blk) in system.blocks().iter().enumerate() {
        for occ in &blk.occurrences {
            let Some((ro, co)) = target_offset(system, kind, occ.target) else {
                continue;
            };
            let (tr, tc) = system.target_shape(occ.target);
            accumulate_shape_gradient(
                &mut grad[l],
                &occ.g,
                &occ.h,
                &phi[ro..ro + tr],
                &psi[co..co + tc],
                weight(occ.target.index),
                blk.bound,
            );
        }
    }
    projection::project(&st.blocks, &mut grad);

    let (n, m) = (system.n(), system.m());
    let (du, dv) = if kind == SdepKind::Full && st.eps > 0.0 && st.u.len() > 0 && st.v.len() > 0 {
        let rt_phi = CVec::from_column_slice(&phi[n..n + m]);
        let s_psi = CVec::from_column_slice(&psi[n + m..]);
        let gu = &rt_phi * (s_psi.adjoint() * &st.v)[(0, 0)];
        let gv = &s_psi * (rt_phi.adjoint() * &st.u)[(0, 0)];
        let f = C64::new(st.eps / xi, 0.0);
        (sphere_direction(&st.u, &gu) * f, sphere_direction(&st.v, &gv) * f)
    } else {
        (CVec::zeros(st.u.len()), CVec::zeros(st.v.len()))
    };

    let mut doffsets = Vec::with_capacity(st.offsets.len());
    if !st.offsets.is_empty() {
        let sd = flow_sdep(system, kind, st);
        for (k, (&rho, &beta)) in st.offsets.iter().zip(system.delay_bounds()).enumerate() {
            if beta == 0.0 {
                doffsets.push(0.0);
                continue;
            }
            let e = (-lam * sd.delays[k]).exp();
            let val = (t.phi.adjoint() * to_complex(&sd.pk[k]) * &t.psi)[(0, 0)];
            let mut d = (-lam * e * val).re / xi;
            if (rho >= beta && d > 0.0) || (rho <= -beta && d < 0.0) {
                d = 0.0;
            }
            doffsets.push(d);
        }
    }
    Ok(PseudoRhs { du, dv, dblocks: grad, doffsets })
}

/// Right-hand side of the rank-one pseudo-spectral flow of the full problem.
pub fn pseudo_flow_rhs(system: &UncertainDelaySystem, state: &PseudoFlowState) -> Result<PseudoRhs> {
    pseudo_rhs_impl(system, SdepKind::Full, state)
}

/// `d alpha / d eps = Re(phi^H R u v^H S psi) / xi` at an optimizer.
pub fn d_alpha_d_eps(system: &UncertainDelaySystem, state: &PseudoFlowState) -> Result<f64> {
    let t = &state.triple;
    if t.defective {
        return Err(Error::Defective { lambda: t.lambda, xi: t.xi });
    }
    if state.u.len() == 0 || state.v.len() == 0 {
        return Ok(0.0);
    }
    let (n, m) = (system.n(), system.m());
    let rt_phi = CVec::from_column_slice(&t.phi.as_slice()[n..n + m]);
    let s_psi = CVec::from_column_slice(&t.psi.as_slice()[n + m..]);
    let val = (rt_phi.adjoint() * &state.u)[(0, 0)] * (state.v.adjoint() * s_psi)[(0, 0)];
    Ok(val.re / t.xi)
}

pub(crate) struct PseudoProblem<'a> {
    pub system: &'a UncertainDelaySystem,
    pub kind: SdepKind,
    pub region: SpectrumRegion,
    pub residual_tol: f64,
}

#[derive(Clone)]
pub(crate) struct TrackedState {
    pub inner: PseudoFlowState,
    pub lost: bool,
}

impl AscentProblem for PseudoProblem<'_> {
    type State = TrackedState;
    type Direction = PseudoRhs;

    fn evaluate(&self, st: &mut TrackedState) -> Result<(f64, PseudoRhs, f64)> {
        if st.lost {
            return Err(Error::Eigensolver("lost track of the rightmost root".into()));
        }
        let rhs = pseudo_rhs_impl(self.system, self.kind, &st.inner)?;
        let g = rhs.norm();
        Ok((st.inner.triple.lambda.re, rhs, g))
    }

    fn advance(&self, st: &TrackedState, dir: &PseudoRhs, h: f64) -> TrackedState {
        let s = &st.inner;
        let step_unit = |x: &CVec, d: &CVec| normalized(&(x + d * C64::new(h, 0.0))).unwrap_or_else(|| x.clone());
        let offsets: Vec<f64> = s
            .offsets
            .iter()
            .zip(&dir.doffsets)
            .zip(self.system.delay_bounds())
            .map(|((r, d), b)| (r + h * d).clamp(-b, *b))
            .collect();
        let mut next = PseudoFlowState {
            blocks: projection::advance(&s.blocks, &dir.dblocks, h),
            u: if s.u.len() > 0 { step_unit(&s.u, &dir.du) } else { s.u.clone() },
            v: if s.v.len() > 0 { step_unit(&s.v, &dir.dv) } else { s.v.clone() },
            eps: s.eps,
            offsets,
            triple: s.triple.clone(),
            t: s.t + h,
        };
        let sd = flow_sdep(self.system, self.kind, &next);
        match track_root(&sd, s.triple.lambda, self.residual_tol) {
            Some(t) if self.region.contains(t.lambda) => {
                next.triple = t;
                TrackedState { inner: next, lost: false }
            }
            _ => TrackedState { inner: next, lost: true },
        }
    }
}

/// Optimizer of the pseudo-spectral abscissa at one `eps`.
#[derive(Debug, Clone)]
pub struct PseudoOptimum {
    pub alpha: f64,
    pub state: PseudoFlowState,
    pub point: UncertaintyPoint,
    pub converged: bool,
    pub starts: usize,
    pub failed_starts: usize,
    pub trace: Vec<TracePoint>,
}

impl PseudoOptimum {
    pub fn delta(&self) -> CMat {
        self.state.delta()
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    if n == 0 {
        return CVec::zeros(0);
    }
    let v = CVec::from_fn(n, |_, _| C64::new(standard_normal(rng), standard_normal(rng)));
    normalized(&v).unwrap_or_else(|| {
        let mut e = CVec::zeros(n);
        e[0] = C64::new(1.0, 0.0);
        e
    })
}

/// Starting guess before the rightmost root is known.
struct Seed {
    blocks: Vec<RMat>,
    u: CVec,
    v: CVec,
    offsets: Vec<f64>,
}

/// Region used for root searches of the given system.
pub fn default_region(system: &UncertainDelaySystem, config: &SolverConfig) -> SpectrumRegion {
    if let Some(cap) = config.imag_cap {
        return SpectrumRegion::new(cap);
    }
    let sd = build_unchecked(system, &system.zero_point(), Some(&CMat::zeros(system.m(), system.p())), SdepKind::Full);
    SpectrumRegion::default_for(&sd)
}

/// Leading singular vectors of `T(j omega; delta)` at the largest local
/// maxima of the gain on a coarse frequency grid, as `(u, v) = (right, left)`.
fn omega_seeds(system: &UncertainDelaySystem, blocks: &[RMat], wmax: f64, points: usize, take: usize) -> Vec<(CVec, CVec)> {
    let pt = projection::to_point(system, blocks, &[]);
    let points = points.max(2);
    let vals: Vec<Option<(f64, CVec, CVec)>> = (0..points)
        .map(|i| {
            let w = wmax * i as f64 / (points - 1) as f64;
            let t = eval_transfer(system, &pt, C64::new(0.0, w)).ok()?;
            let e = svd_extremes(&t);
            Some((e.sigma1, e.v1, e.u1))
        })
        .collect();
    let gain = |i: usize| vals[i].as_ref().map_or(f64::NEG_INFINITY, |v| v.0);
    let mut peaks: Vec<usize> = (0..points)
        .filter(|&i| {
            vals[i].is_some()
                && (i == 0 || gain(i) >= gain(i - 1))
                && (i + 1 == points || gain(i) >= gain(i + 1))
        })
        .collect();
    peaks.sort_by(|&a, &b| gain(b).total_cmp(&gain(a)).then(a.cmp(&b)));
    peaks
        .into_iter()
        .take(take)
        .filter_map(|i| vals[i].as_ref().map(|(_, u, v)| (u.clone(), v.clone())))
        .collect()
}

fn seeds(
    system: &UncertainDelaySystem,
    kind: SdepKind,
    region: &SpectrumRegion,
    config: &SolverConfig,
    warm: Option<&PseudoFlowState>,
) -> Vec<Seed> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9);
    let offsets0 = if system.has_delay_uncertainty() { vec![0.0; system.k()] } else { Vec::new() };
    let full = kind == SdepKind::Full && system.m() > 0 && system.p() > 0;
    let (m, p) = if kind == SdepKind::Full { (system.m(), system.p()) } else { (0, 0) };
    let wmax = region.imag_cap.min(100.0);
    let uv_for = |blocks: &[RMat], take: usize, rng: &mut ChaCha8Rng| {
        let mut uv = if full { omega_seeds(system, blocks, wmax, config.omega_seeds, take) } else { Vec::new() };
        if uv.is_empty() {
            uv.push((random_unit(rng, m), random_unit(rng, p)));
        }
        uv
    };
    let mut out = Vec::new();
    if let Some(w) = warm {
        out.push(Seed { blocks: w.blocks.clone(), u: w.u.clone(), v: w.v.clone(), offsets: w.offsets.clone() });
        if full {
            for (u, v) in uv_for(&w.blocks, 1, &mut rng) {
                out.push(Seed { blocks: w.blocks.clone(), u, v, offsets: w.offsets.clone() });
            }
        }
        return out;
    }
    let zero = projection::zeros(system);
    for (u, v) in uv_for(&zero, 3, &mut rng) {
        out.push(Seed { blocks: zero.clone(), u, v, offsets: offsets0.clone() });
    }
    if system.blocks().is_empty() && !full {
        return out;
    }
    for _ in 0..config.restarts {
        let b = projection::random(system, &mut rng);
        for (u, v) in uv_for(&b, 1, &mut rng) {
            out.push(Seed { blocks: b.clone(), u, v, offsets: offsets0.clone() });
        }
    }
    for _ in 0..config.restarts {
        out.push(Seed {
            blocks: projection::random(system, &mut rng),
            u: random_unit(&mut rng, m),
            v: random_unit(&mut rng, p),
            offsets: offsets0.clone(),
        });
    }
    out
}

fn start_state(
    system: &UncertainDelaySystem,
    kind: SdepKind,
    eps: f64,
    seed: Seed,
    region: &SpectrumRegion,
    config: &SolverConfig,
) -> Result<TrackedState> {
    let mut st = PseudoFlowState {
        blocks: seed.blocks,
        u: seed.u,
        v: seed.v,
        eps,
        offsets: seed.offsets,
        triple: EigenTriple {
            lambda: C64::new(f64::NEG_INFINITY, 0.0),
            phi: CVec::zeros(0),
            psi: CVec::zeros(0),
            xi: 0.0,
            defective: true,
            residual: 0.0,
        },
        t: 0.0,
    };
    let sd = flow_sdep(system, kind, &st);
    let roots = rightmost_roots_with(&sd, region, 1, &config.collocation)?;
    let top = roots.into_iter().next().ok_or_else(|| Error::Eigensolver("no characteristic roots in region".into()))?;
    st.triple = top;
    Ok(TrackedState { inner: st, lost: false })
}

fn run_tracked(
    prob: &PseudoProblem,
    start: TrackedState,
    config: &SolverConfig,
) -> Result<AscentResult<TrackedState>> {
    let opts = crate::ascent::AscentOptions { record_trace: true, ..config.ascent() };
    let mut st = start;
    let mut trace: Vec<TracePoint> = Vec::new();
    for _ in 0..4 {
        let mut r = ascend(prob, st, &opts)?;
        let offset_t = trace.last().map_or(0.0, |p| p.t);
        trace.extend(r.trace.iter().map(|p| TracePoint { t: p.t + offset_t, ..*p }));
        let sd = flow_sdep(prob.system, prob.kind, &r.state.inner);
        let roots = rightmost_roots_with(&sd, &prob.region, 1, &config.collocation)?;
        match roots.into_iter().next() {
            Some(top) if top.lambda.re > r.value + 1e-10 * r.value.abs().max(1.0) => {
                let mut next = r.state.clone();
                next.inner.triple = top;
                st = next;
            }
            _ => {
                r.trace = trace;
                return Ok(r);
            }
        }
    }
    let r = ascend(prob, st, &opts)?;
    Ok(r)
}

/// Multi-start maximization of the rightmost real part over the
/// `(delta, eps)` pseudo-spectrum of the chosen characteristic matrix.
pub(crate) fn pseudo_abscissa_impl(
    system: &UncertainDelaySystem,
    kind: SdepKind,
    eps: f64,
    region: &SpectrumRegion,
    config: &SolverConfig,
    warm: Option<&PseudoFlowState>,
) -> Result<PseudoOptimum> {
    let prob = PseudoProblem { system, kind, region: *region, residual_tol: config.collocation.residual_tol };
    let seeds = seeds(system, kind, region, config, warm);
    let nstarts = seeds.len();
    let (best, failed) = best_of_starts(
        seeds,
        |s| {
            let st = start_state(system, kind, eps, s, region, config)?;
            run_tracked(&prob, st, config)
        },
        |r| r.value,
    );
    let (_, best) = best.ok_or_else(|| Error::Eigensolver("every pseudo-spectral flow start failed".into()))?;
    let state = best.state.inner;
    Ok(PseudoOptimum {
        alpha: best.value,
        point: projection::to_point(system, &state.blocks, &state.offsets),
        state,
        converged: best.converged,
        starts: nstarts,
        failed_starts: failed,
        trace: best.trace,
    })
}

/// Pseudo-spectral abscissa `max Re lambda` over admissible `delta` and
/// `||Delta||_2 <= eps`, restricted to `|Im lambda| <= region.imag_cap`.
///
/// Requires `eps * asymptotic_norm < 1`, where `asymptotic_norm` is the
/// robust asymptotic norm of the system.
pub fn pseudo_spectral_abscissa(
    system: &UncertainDelaySystem,
    eps: f64,
    asymptotic_norm: f64,
    region: &SpectrumRegion,
    config: &SolverConfig,
) -> Result<PseudoOptimum> {
    if !(eps >= 0.0 && eps * asymptotic_norm < 1.0) {
        return Err(Error::Domain(format!(
            "eps = {eps} must lie in [0, 1/{asymptotic_norm}) where finite roots determine the abscissa"
        )));
    }
    pseudo_abscissa_impl(system, SdepKind::Full, eps, region, config, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Occurrence, SystemData, UncertaintyBlock};

    fn s(v: f64) -> RMat {
        RMat::from_element(1, 1, v)
    }

    #[test]
    fn sphere_direction_is_tangent_and_ascending() {
        let x = normalized(&CVec::from_vec(vec![C64::new(1.0, 0.5), C64::new(-0.3, 0.2)])).unwrap();
        let g = CVec::from_vec(vec![C64::new(0.2, -1.0), C64::new(0.7, 0.1)]);
        let d = sphere_direction(&x, &g);
        assert!((x.adjoint() * &d)[(0, 0)].re.abs() < 1e-14);
        assert!((g.adjoint() * &d)[(0, 0)].re >= 0.0);
    }

    #[test]
    fn asymptotic_rhs_without_delayed_feedthrough_has_no_angle_motion() {
        let occ = Occurrence { target: "D0".parse().unwrap(), g: s(1.0), h: s(1.0) };
        let sys = UncertainDelaySystem::new(SystemData {
            delays: vec![1.0],
            a: vec![s(-1.0), s(0.5)],
            b: vec![s(1.0), s(0.0)],
            c: vec![s(1.0), s(0.0)],
            d: vec![s(2.0), s(0.0)],
            blocks: vec![UncertaintyBlock { bound: 0.5, rows: 1, cols: 1, occurrences: vec![occ] }],
            ..Default::default()
        })
        .unwrap();
        let st = AsymptoticFlowState { blocks: vec![s(0.2)], theta: vec![1.0], t: 0.0 };
        let rhs = asymptotic_flow_rhs(&sys, &st).unwrap();
        assert_eq!(rhs.dtheta, vec![0.0]);
        assert!((rhs.dblocks[0][(0, 0)] - 0.5).abs() < 1e-12);
        let r = maximize_asymptotic(&sys, &SolverConfig::default()).unwrap();
        assert!((r.value - 2.5).abs() < 1e-9);
        assert!((dist_nwp(&sys, &SolverConfig::default()).unwrap() - 0.4).abs() < 1e-9);
    }
}
