//! Transfer function, asymptotic frequency response and worst-case gain.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ascent::{ascend, best_of_starts, AscentProblem};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::{accumulate_shape_gradient, svd_extremes, to_complex, CMat, CVec, RMat, C64};
use crate::model::{Family, Realization, UncertainDelaySystem, UncertaintyPoint};
use crate::projection;

/// `X_0 + sum_k X_k e^{-s tau_k}`.
fn delayed_sum(mats: &[RMat], delays: &[f64], s: C64) -> CMat {
    let mut out = to_complex(&mats[0]);
    for (m, &t) in mats[1..].iter().zip(delays) {
        let e = (-s * t).exp();
        out.zip_apply(m, |x, y| *x += e * y);
    }
    out
}

/// Frequency-domain pieces of a realization at `s`.
struct Resolvent {
    /// `R^{-1} B(s)`.
    rinv_b: CMat,
    /// `R^{-H} C(s)^H`.
    rinv_h_ch: CMat,
    t: CMat,
}

fn resolvent(system: &UncertainDelaySystem, re: &Realization, s: C64) -> Result<Resolvent> {
    let a = delayed_sum(&re.a, &re.delays, s);
    let b = delayed_sum(&re.b, &re.delays, s);
    let c = delayed_sum(&re.c, &re.delays, s);
    let d = delayed_sum(&re.d, &re.delays, s);
    let r = to_complex(system.e()) * s - a;
    let ext = svd_extremes(&r);
    if ext.sigma_min <= 1e-13 * ext.sigma1.max(1.0) {
        return Err(Error::Pole { s });
    }
    let lu = r.clone().lu();
    let rinv_b = lu.solve(&b).ok_or(Error::Pole { s })?;
    let rinv_h_ch = r.adjoint().lu().solve(&c.adjoint()).ok_or(Error::Pole { s })?;
    let t = &c * &rinv_b + d;
    Ok(Resolvent { rinv_b, rinv_h_ch, t })
}

/// `T(s) = C(s) (s E - A(s))^{-1} B(s) + D(s)` at an admissible point.
pub fn eval_transfer(system: &UncertainDelaySystem, point: &UncertaintyPoint, s: C64) -> Result<CMat> {
    let re = system.assemble(point)?;
    Ok(resolvent(system, &re, s)?.t)
}

/// `D_0(delta) + sum_k D_k(delta) e^{j theta_k}`.
pub fn eval_asymptotic(system: &UncertainDelaySystem, point: &UncertaintyPoint, theta: &[f64]) -> Result<CMat> {
    if theta.len() != system.k() {
        return Err(Error::Dimension(format!("expected {} angles, got {}", system.k(), theta.len())));
    }
    let re = system.assemble(point)?;
    let mut out = to_complex(&re.d[0]);
    for (m, &th) in re.d[1..].iter().zip(theta) {
        let e = C64::from_polar(1.0, th);
        out.zip_apply(m, |x, y| *x += e * y);
    }
    Ok(out)
}

/// Outcome of a worst-case gain maximization at one frequency.
#[derive(Debug, Clone)]
pub struct WorstCaseGain {
    pub gain: f64,
    pub point: UncertaintyPoint,
    /// Leading left and right singular vectors of `T(j omega)` at the maximizer.
    pub u: CVec,
    pub v: CVec,
    /// Times the maximizer was nudged to split a repeated singular value.
    pub multiplicity_events: u32,
    pub failed_starts: usize,
}

#[derive(Clone)]
struct GainState {
    blocks: Vec<RMat>,
    nudges: u32,
    u: CVec,
    v: CVec,
}

struct GainProblem<'a> {
    system: &'a UncertainDelaySystem,
    s: C64,
}

impl GainProblem<'_> {
    fn gradient(&self, blocks: &[RMat], res: &Resolvent, u: &CVec, v: &CVec) -> Vec<RMat> {
        let sys = self.system;
        let a_vec = &res.rinv_h_ch * u;
        let b_vec = &res.rinv_b * v;
        let mut grad: Vec<RMat> = blocks.iter().map(|b| RMat::zeros(b.nrows(), b.ncols())).collect();
        for (l, blk) in sys.blocks().iter().enumerate() {
            for occ in &blk.occurrences {
                let k = occ.target.index;
                let w = if k == 0 { C64::new(1.0, 0.0) } else { (-self.s * sys.delays()[k - 1]).exp() };
                let (a, b): (&CVec, &CVec) = match occ.target.family {
                    Family::A => (&a_vec, &b_vec),
                    Family::B => (&a_vec, v),
                    Family::C => (u, &b_vec),
                    Family::D => (u, v),
                };
                accumulate_shape_gradient(&mut grad[l], &occ.g, &occ.h, a.as_slice(), b.as_slice(), w, blk.bound);
            }
        }
        grad
    }
}

impl AscentProblem for GainProblem<'_> {
    type State = GainState;
    type Direction = Vec<RMat>;

    fn evaluate(&self, st: &mut GainState) -> Result<(f64, Vec<RMat>, f64)> {
        loop {
            let pt = projection::to_point(self.system, &st.blocks, &[]);
            let re = self.system.assemble_unchecked(&pt);
            let res = resolvent(self.system, &re, self.s)?;
            let ext = svd_extremes(&res.t);
            if ext.sigma2 > 0.0 && ext.sigma1 - ext.sigma2 < 1e-10 * ext.sigma1 && st.nudges < 3 {
                let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ st.nudges as u64);
                st.blocks = projection::nudge(&st.blocks, &mut rng);
                st.nudges += 1;
                continue;
            }
            let mut grad = self.gradient(&st.blocks, &res, &ext.u1, &ext.v1);
            projection::project(&st.blocks, &mut grad);
            let g = projection::sq_norm(&grad).sqrt();
            st.u = ext.u1;
            st.v = ext.v1;
            return Ok((ext.sigma1, grad, g));
        }
    }

    fn advance(&self, st: &GainState, dir: &Vec<RMat>, h: f64) -> GainState {
        GainState { blocks: projection::advance(&st.blocks, dir, h), ..st.clone() }
    }
}

fn empty_state(system: &UncertainDelaySystem, blocks: Vec<RMat>) -> GainState {
    GainState { blocks, nudges: 0, u: CVec::zeros(system.p()), v: CVec::zeros(system.m()) }
}

/// Multi-start projected-gradient maximum of `sigma_1(T(j omega; delta))`.
pub fn worst_case_gain(system: &UncertainDelaySystem, omega: f64, config: &SolverConfig) -> Result<WorstCaseGain> {
    worst_case_gain_from(system, omega, config, None)
}

fn worst_case_gain_from(
    system: &UncertainDelaySystem,
    omega: f64,
    config: &SolverConfig,
    warm: Option<&UncertaintyPoint>,
) -> Result<WorstCaseGain> {
    let s = C64::new(0.0, omega);
    let prob = GainProblem { system, s };
    let mut zero = empty_state(system, projection::zeros(system));
    let zero_eval = prob.evaluate(&mut zero);
    let mut starts: Vec<GainState> = vec![zero.clone()];
    if !system.blocks().is_empty() {
        if let Some(w) = warm {
            starts.push(empty_state(system, projection::from_point(system, w)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for _ in 0..config.restarts {
            starts.push(empty_state(system, projection::random(system, &mut rng)));
        }
        if let Ok((_, grad, _)) = &zero_eval {
            for b in projection::boundary_starts(grad) {
                starts.push(empty_state(system, b));
            }
        }
    }
    let opts = config.ascent();
    let (best, failed) = best_of_starts(starts, |st| ascend(&prob, st, &opts), |r| r.value);
    let Some((_, best)) = best else {
        return Err(zero_eval.err().unwrap_or(Error::Pole { s }));
    };
    Ok(WorstCaseGain {
        gain: best.value,
        point: projection::to_point(system, &best.state.blocks, &[]),
        u: best.state.u,
        v: best.state.v,
        multiplicity_events: best.state.nudges,
        failed_starts: failed,
    })
}

/// Worst-case gain on a frequency grid.
#[derive(Debug, Clone, Default)]
pub struct GainCurve {
    pub omega: Vec<f64>,
    /// `NaN` where every start hit a pole.
    pub gain: Vec<f64>,
    pub points: Vec<Option<UncertaintyPoint>>,
}

impl GainCurve {
    /// CSV with header `omega,gain`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,gain\n");
        for (w, g) in self.omega.iter().zip(&self.gain) {
            if g.is_nan() {
                out.push_str(&format!("{w},nan\n"));
            } else {
                out.push_str(&format!("{w},{g}\n"));
            }
        }
        out
    }

    /// Largest finite gain and its frequency.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.omega
            .iter()
            .zip(&self.gain)
            .filter(|(_, g)| g.is_finite())
            .fold(None, |best: Option<(f64, f64)>, (&w, &g)| match best {
                Some((_, bg)) if bg >= g => best,
                _ => Some((w, g)),
            })
    }
}

/// Pointwise worst-case gain, warm-started from the previous grid point.
pub fn gain_sweep(system: &UncertainDelaySystem, omegas: &[f64], config: &SolverConfig) -> GainCurve {
    let mut curve = GainCurve::default();
    if system.blocks().is_empty() {
        use rayon::prelude::*;
        let zero = system.zero_point();
        curve.omega = omegas.to_vec();
        curve.gain = omegas
            .par_iter()
            .map(|&w| eval_transfer(system, &zero, C64::new(0.0, w)).map_or(f64::NAN, |t| svd_extremes(&t).sigma1))
            .collect();
        curve.points = curve.gain.iter().map(|g| (!g.is_nan()).then(|| zero.clone())).collect();
        return curve;
    }
    let mut warm: Option<UncertaintyPoint> = None;
    for &w in omegas {
        let r = worst_case_gain_from(system, w, config, warm.as_ref()).map(|g| (g.gain, g.point));
        curve.omega.push(w);
        match r {
            Ok((g, pt)) => {
                curve.gain.push(g);
                warm = Some(pt.clone());
                curve.points.push(Some(pt));
            }
            Err(_) => {
                curve.gain.push(f64::NAN);
                curve.points.push(None);
            }
        }
    }
    curve
}

/// Uniform grid of `points` frequencies on `[0, omega_max]`.
pub fn uniform_grid(omega_max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|i| omega_max * i as f64 / (points - 1) as f64).collect(),
    }
}
