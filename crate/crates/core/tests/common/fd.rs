//! Central finite-difference checks of the analytic flow derivatives.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shinf::flows::{asymptotic_flow_rhs, d_alpha_d_eps, pseudo_flow_rhs, AsymptoticFlowState, PseudoFlowState};
use shinf::linalg::{normalized, svd_extremes, CVec, RMat, C64, J};
use shinf::model::random_direction;
use shinf::sdep::{build_sdep, rank_one};
use shinf::spectrum::{rightmost_roots, track_root, SpectrumRegion};
use shinf::transfer::eval_asymptotic;
use shinf::{UncertainDelaySystem, UncertaintyPoint};

/// Worst relative error over the checked states.
#[derive(Debug, Clone, Default)]
pub struct FdReport {
    pub states: usize,
    pub skipped: usize,
    pub worst: f64,
    pub worst_state: usize,
}

impl FdReport {
    fn record(&mut self, i: usize, err: f64) {
        self.states += 1;
        if err > self.worst || err.is_nan() {
            self.worst = err;
            self.worst_state = i;
        }
    }
}

/// `||fd - analytic|| / ||analytic||`, zero when both vanish.
pub fn rel_err(fd: &[f64], an: &[f64]) -> f64 {
    let num: f64 = fd.iter().zip(an).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let den: f64 = an.iter().map(|x| x * x).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn interior_blocks(system: &UncertainDelaySystem, rng: &mut ChaCha8Rng) -> Vec<RMat> {
    system
        .blocks()
        .iter()
        .map(|b| random_direction(rng, b.rows, b.cols) * rng.gen_range(0.05..0.9))
        .collect()
}

fn point(system: &UncertainDelaySystem, blocks: &[RMat], offsets: &[f64]) -> UncertaintyPoint {
    UncertaintyPoint {
        blocks: blocks.iter().zip(system.blocks()).map(|(n, b)| n * b.bound).collect(),
        delay_offsets: if offsets.is_empty() { vec![0.0; system.k()] } else { offsets.to_vec() },
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    let v = CVec::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    normalized(&v).unwrap()
}

/// Asymptotic flow: `d theta` and `d delta` against differences of
/// `sigma_1(D_0(delta) + sum_k D_k(delta) e^{j theta_k})`.
pub fn asymptotic_suite(system: &UncertainDelaySystem, states: usize, seed: u64) -> FdReport {
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = FdReport::default();
    let f = |blocks: &[RMat], theta: &[f64]| svd_extremes(&eval_asymptotic(system, &point(system, blocks, &[]), theta).unwrap()).sigma1;
    let mut i = 0;
    while report.states < states {
        i += 1;
        let blocks = interior_blocks(system, &mut rng);
        let theta: Vec<f64> = (0..system.k()).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let st = AsymptoticFlowState { blocks: blocks.clone(), theta: theta.clone(), t: 0.0 };
        let Ok(rhs) = asymptotic_flow_rhs(system, &st) else {
            report.skipped += 1;
            continue;
        };
        let (mut fd, mut an) = (Vec::new(), Vec::new());
        for k in 0..theta.len() {
            let (mut tp, mut tm) = (theta.clone(), theta.clone());
            tp[k] += h;
            tm[k] -= h;
            fd.push((f(&blocks, &tp) - f(&blocks, &tm)) / (2.0 * h));
            an.push(rhs.dtheta[k]);
        }
        for l in 0..blocks.len() {
            for idx in 0..blocks[l].len() {
                let (mut bp, mut bm) = (blocks.clone(), blocks.clone());
                bp[l][idx] += h;
                bm[l][idx] -= h;
                fd.push((f(&bp, &theta) - f(&bm, &theta)) / (2.0 * h));
                an.push(rhs.dblocks[l][idx]);
            }
        }
        report.record(i, rel_err(&fd, &an));
    }
    report
}

/// Random state of the rank-one flow with its rightmost root.
pub fn random_pseudo_state(system: &UncertainDelaySystem, eps_max: f64, rng: &mut ChaCha8Rng) -> Option<PseudoFlowState> {
    let blocks = interior_blocks(system, rng);
    let offsets: Vec<f64> = if system.has_delay_uncertainty() {
        system.delay_bounds().iter().map(|b| b * rng.gen_range(-0.9..0.9)).collect()
    } else {
        Vec::new()
    };
    let u = random_unit(rng, system.m());
    let v = random_unit(rng, system.p());
    let eps = rng.gen_range(0.0..eps_max);
    let sd = build_sdep(system, &point(system, &blocks, &offsets), &rank_one(eps, &u, &v)).ok()?;
    let roots = rightmost_roots(&sd, &SpectrumRegion::default_for(&sd), 4).ok()?;
    let triple = roots.first()?.clone();
    // Keep the root well separated from its neighbours for clean differences.
    if roots.iter().skip(1).any(|r| (r.lambda - triple.lambda).norm() < 1e-3) || triple.defective {
        return None;
    }
    Some(PseudoFlowState { blocks, u, v, eps, offsets, triple, t: 0.0 })
}

fn real_root(system: &UncertainDelaySystem, st: &PseudoFlowState, blocks: &[RMat], u: &CVec, v: &CVec, eps: f64, offsets: &[f64]) -> f64 {
    let sd = build_sdep(system, &point(system, blocks, offsets), &rank_one(eps, u, v)).unwrap();
    track_root(&sd, st.triple.lambda, 1e-10).expect("root tracked").lambda.re
}

/// Rank-one flow: every component of the right-hand side against
/// differences of the real part of the followed root.
///
/// For the unit vectors the check runs along tangent directions `w`: the
/// analytic rate is `Re(du_perp^H w) + 2 Im(u^H w) Im(u^H du)`, which
/// recovers `Re<grad, w>` from the half-weighted phase component of `du`.
pub fn pseudo_suite(system: &UncertainDelaySystem, eps_max: f64, states: usize, seed: u64) -> (FdReport, FdReport) {
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flow = FdReport::default();
    let mut slope = FdReport::default();
    let mut i = 0;
    while flow.states < states {
        i += 1;
        let Some(st) = random_pseudo_state(system, eps_max, &mut rng) else {
            flow.skipped += 1;
            continue;
        };
        let Ok(rhs) = pseudo_flow_rhs(system, &st) else {
            flow.skipped += 1;
            continue;
        };
        let f = |blocks: &[RMat], u: &CVec, v: &CVec, eps: f64, offsets: &[f64]| real_root(system, &st, blocks, u, v, eps, offsets);
        let (mut fd, mut an) = (Vec::new(), Vec::new());
        for l in 0..st.blocks.len() {
            for idx in 0..st.blocks[l].len() {
                let (mut bp, mut bm) = (st.blocks.clone(), st.blocks.clone());
                bp[l][idx] += h;
                bm[l][idx] -= h;
                fd.push((f(&bp, &st.u, &st.v, st.eps, &st.offsets) - f(&bm, &st.u, &st.v, st.eps, &st.offsets)) / (2.0 * h));
                an.push(rhs.dblocks[l][idx]);
            }
        }
        for k in 0..st.offsets.len() {
            let (mut op, mut om) = (st.offsets.clone(), st.offsets.clone());
            op[k] += h;
            om[k] -= h;
            fd.push((f(&st.blocks, &st.u, &st.v, st.eps, &op) - f(&st.blocks, &st.u, &st.v, st.eps, &om)) / (2.0 * h));
            an.push(rhs.doffsets[k]);
        }
        if st.eps > 0.0 {
            for (which, x, dx) in [(0, &st.u, &rhs.du), (1, &st.v, &rhs.dv)] {
                let c = (x.adjoint() * dx)[(0, 0)];
                let perp = dx - x * c;
                let mut dirs = vec![x * J];
                for e in 0..x.len() {
                    let mut b = CVec::zeros(x.len());
                    b[e] = C64::new(1.0, 0.0);
                    let t = &b - x * (x.adjoint() * &b)[(0, 0)];
                    dirs.push(&t * J);
                    dirs.push(t);
                }
                for w in dirs {
                    if w.norm() < 1e-8 {
                        continue;
                    }
                    let pred = (perp.adjoint() * &w)[(0, 0)].re + 2.0 * (x.adjoint() * &w)[(0, 0)].im * c.im;
                    let xp = normalized(&(x + &w * C64::new(h, 0.0))).unwrap();
                    let xm = normalized(&(x - &w * C64::new(h, 0.0))).unwrap();
                    let (fp, fm) = if which == 0 {
                        (f(&st.blocks, &xp, &st.v, st.eps, &st.offsets), f(&st.blocks, &xm, &st.v, st.eps, &st.offsets))
                    } else {
                        (f(&st.blocks, &st.u, &xp, st.eps, &st.offsets), f(&st.blocks, &st.u, &xm, st.eps, &st.offsets))
                    };
                    fd.push((fp - fm) / (2.0 * h));
                    an.push(pred);
                }
            }
        }
        flow.record(i, rel_err(&fd, &an));

        if st.eps > h {
            let a = d_alpha_d_eps(system, &st).unwrap();
            let d = (f(&st.blocks, &st.u, &st.v, st.eps + h, &st.offsets) - f(&st.blocks, &st.u, &st.v, st.eps - h, &st.offsets))
                / (2.0 * h);
            // Absolute floor for derivatives near zero.
            slope.record(i, (d - a).abs() / a.abs().max(1e-3));
        }
    }
    (flow, slope)
}
