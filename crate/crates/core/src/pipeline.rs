//! Robust strong H-infinity norm: stability gate, asymptotic norm, distance to
//! a finite root crossing, and their combination.

use std::fmt::Write as _;

use crate::chain::{chain_radius_max, dist_chain_explicit, dist_nwp_explicit};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::flows::{self, d_alpha_d_eps, default_region, PseudoFlowState, PseudoOptimum};
use crate::linalg::{svd_extremes, CMat, C64};
use crate::model::{UncertainDelaySystem, UncertaintyPoint};
use crate::rootfind::{newton_bisection, Iterate};
use crate::sdep::SdepKind;
use crate::spectrum::{init_dense_kernels, SpectrumRegion};
use crate::transfer::eval_transfer;

/// Outcome of the robust stability gate.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub stable: bool,
    /// Largest real part of the state characteristic roots over the uncertainty set.
    pub abscissa: f64,
    pub root: Option<C64>,
    pub point: UncertaintyPoint,
    /// Largest chain spectral radius at zero real part (singular `E` only).
    pub chain_radius: Option<f64>,
}

impl StabilityReport {
    fn into_error(self) -> Error {
        let abscissa = match self.chain_radius {
            Some(r) if r >= 1.0 && self.abscissa < 0.0 => 0.0,
            _ => self.abscissa,
        };
        Error::Unstable { abscissa, root: self.root, delta: self.point.flatten() }
    }
}

/// Checks that every admissible `delta` yields a strongly exponentially
/// stable state equation.
pub fn check_robust_stability(system: &UncertainDelaySystem, config: &SolverConfig) -> Result<StabilityReport> {
    init_dense_kernels();
    let region = default_region(system, config);
    let opt = flows::pseudo_abscissa_impl(system, SdepKind::StateOnly, 0.0, &region, config, None)?;
    let chain_radius = if system.e_is_identity() {
        None
    } else {
        Some(chain_radius_max(system, SdepKind::StateOnly, 0.0, 0.0, config, None)?.value)
    };
    let stable = opt.alpha < 0.0 && chain_radius.is_none_or(|r| r < 1.0);
    Ok(StabilityReport {
        stable,
        abscissa: opt.alpha,
        root: Some(opt.state.triple.lambda),
        point: opt.point,
        chain_radius,
    })
}

/// Distances of the asymptotic part and the resulting asymptotic norm.
#[derive(Debug, Clone)]
pub struct AsymptoticPart {
    pub asymptotic_norm: f64,
    pub dist_nwp: f64,
    /// `None` when the chain crossing is not separately resolved.
    pub dist_chain: Option<f64>,
    pub point: Option<UncertaintyPoint>,
    pub theta: Option<Vec<f64>>,
    /// Computed through the null-space compressions rather than the feed-through flow.
    pub explicit: bool,
    pub starts: usize,
}

/// Asymptotic norm for `E = I` through the feed-through flow, otherwise as
/// the reciprocal of the smaller explicit distance.
pub fn asymptotic_part(system: &UncertainDelaySystem, config: &SolverConfig) -> Result<AsymptoticPart> {
    init_dense_kernels();
    if system.e_is_identity() {
        let max = flows::maximize_asymptotic(system, config)?;
        let nwp = flows::dist_nwp(system, config)?;
        let inv = if max.value > 0.0 { 1.0 / max.value } else { f64::INFINITY };
        let dist_chain = (inv < nwp * (1.0 - 1e-6)).then_some(inv);
        Ok(AsymptoticPart {
            asymptotic_norm: max.value,
            dist_nwp: nwp,
            dist_chain,
            point: Some(max.point),
            theta: Some(max.theta),
            explicit: false,
            starts: max.starts,
        })
    } else {
        let nwp = dist_nwp_explicit(system, config)?;
        let chain = dist_chain_explicit(system, nwp.dist, config)?;
        let min = nwp.dist.min(chain.dist);
        Ok(AsymptoticPart {
            asymptotic_norm: if min.is_finite() { 1.0 / min } else { 0.0 },
            dist_nwp: nwp.dist,
            dist_chain: chain.dist.is_finite().then_some(chain.dist),
            point: Some(nwp.point),
            theta: None,
            explicit: true,
            starts: chain.evaluations,
        })
    }
}

/// Explicit distances for any `E`, with `dist_INS` as their minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceTable {
    pub nwp: f64,
    pub chain: f64,
    pub fin: f64,
    pub ins: f64,
}

pub fn distance_table(system: &UncertainDelaySystem, config: &SolverConfig) -> Result<DistanceTable> {
    init_dense_kernels();
    let stab = check_robust_stability(system, config)?;
    if !stab.stable {
        return Err(stab.into_error());
    }
    let nwp = dist_nwp_explicit(system, config)?.dist;
    let chain = dist_chain_explicit(system, nwp, config)?.dist;
    let min = nwp.min(chain);
    let asym = if min.is_finite() { 1.0 / min } else { 0.0 };
    let fin = dist_fin(system, asym, &default_region(system, config), config)?.dist;
    Ok(DistanceTable { nwp, chain, fin, ins: min.min(fin) })
}

/// Distance to a finite root crossing together with its solver history.
#[derive(Debug, Clone)]
pub struct FiniteDistance {
    pub dist: f64,
    /// Evaluations of `(eps, alpha_ps, d alpha / d eps)`.
    pub iterates: Vec<Iterate>,
    /// Optimizer at the crossing.
    pub optimum: Option<PseudoOptimum>,
    /// Right end of the searched `eps` interval.
    pub upper: f64,
    pub alpha_upper: f64,
    pub warning: Option<String>,
}

/// Smallest `eps` with a nonnegative pseudo-spectral abscissa on
/// `[0, 1 / asymptotic_norm)`, `+inf` when none exists.
pub fn dist_fin(
    system: &UncertainDelaySystem,
    asymptotic_norm: f64,
    region: &SpectrumRegion,
    config: &SolverConfig,
) -> Result<FiniteDistance> {
    init_dense_kernels();
    let mut warm: Option<PseudoFlowState> = None;
    let mut last: Option<PseudoOptimum> = None;
    let mut alpha = |eps: f64| -> Result<(f64, f64)> {
        let opt = flows::pseudo_abscissa_impl(system, SdepKind::Full, eps, region, config, warm.as_ref())?;
        let slope = d_alpha_d_eps(system, &opt.state).unwrap_or(f64::NAN);
        warm = Some(opt.state.clone());
        let a = opt.alpha;
        last = Some(opt);
        Ok((a, slope))
    };
    let no_uncertainty = system.m() == 0 || system.p() == 0;
    let upper = if asymptotic_norm > 0.0 {
        (1.0 - config.endpoint_margin) / asymptotic_norm
    } else {
        let mut b = 1.0;
        while alpha(b)?.0 < 0.0 {
            b *= 2.0;
            if b > 1e8 {
                break;
            }
        }
        b
    };
    let (alpha_upper, _) = alpha(upper)?;
    if alpha_upper < 0.0 || no_uncertainty {
        let converged = last.as_ref().is_some_and(|o| o.converged);
        let warning = (alpha_upper > -10.0 * config.outer_tol || !converged).then(|| {
            format!("pseudo-spectral abscissa at the interval end is {alpha_upper:e}; treated as no finite crossing")
        });
        return Ok(FiniteDistance {
            dist: f64::INFINITY,
            iterates: vec![Iterate { x: upper, f: alpha_upper, df: f64::NAN }],
            optimum: last,
            upper,
            alpha_upper,
            warning,
        });
    }
    let r = newton_bisection(&mut alpha, 0.0, upper, 1e-2 * config.outer_tol)?;
    Ok(FiniteDistance {
        dist: r.root,
        iterates: r.iterates,
        optimum: last,
        upper,
        alpha_upper,
        warning: None,
    })
}

/// Which term attains the norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    FiniteFrequency,
    Asymptotic,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::FiniteFrequency => "finite-frequency",
            Regime::Asymptotic => "asymptotic",
        }
    }
}

/// Solver bookkeeping attached to a report.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub stability_abscissa: f64,
    pub asymptotic_starts: usize,
    pub explicit_asymptotic: bool,
    pub eps_iterates: Vec<Iterate>,
    pub pseudo_starts: usize,
    pub failed_starts: usize,
    /// `|sigma_1(T(lambda*; delta*)) eps* - 1|` at the crossing.
    pub crossing_residual: Option<f64>,
    pub warnings: Vec<String>,
}

/// Result of the robust strong H-infinity norm computation.
#[derive(Debug, Clone)]
pub struct NormReport {
    pub norm: f64,
    pub asymptotic_norm: f64,
    pub dist_nwp: f64,
    pub dist_chain: Option<f64>,
    pub dist_fin: f64,
    pub regime: Regime,
    /// Critical frequency, worst-case `delta` and `Delta` in the finite-frequency regime.
    pub omega: Option<f64>,
    pub worst_point: Option<UncertaintyPoint>,
    pub worst_delta: Option<CMat>,
    pub asymptotic_point: Option<UncertaintyPoint>,
    pub asymptotic_theta: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

fn fmt_f(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.10e}")
    }
}

fn fmt_list(xs: &[f64]) -> String {
    if xs.is_empty() {
        return "none".into();
    }
    xs.iter().map(|x| fmt_f(*x)).collect::<Vec<_>>().join(",")
}

impl NormReport {
    /// `key = value` lines, one per field.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "norm = {}", fmt_f(self.norm));
        let _ = writeln!(s, "regime = {}", self.regime.as_str());
        let _ = writeln!(s, "asymptotic_norm = {}", fmt_f(self.asymptotic_norm));
        let _ = writeln!(s, "dist_nwp = {}", fmt_f(self.dist_nwp));
        let _ = writeln!(s, "dist_chain = {}", self.dist_chain.map_or("none".into(), fmt_f));
        let _ = writeln!(s, "dist_fin = {}", fmt_f(self.dist_fin));
        let _ = writeln!(s, "omega = {}", self.omega.map_or("none".into(), fmt_f));
        let _ = writeln!(
            s,
            "worst_delta_blocks = {}",
            self.worst_point.as_ref().map_or("none".into(), |p| fmt_list(&p.flatten()))
        );
        if let Some(d) = &self.worst_delta {
            let entries: Vec<String> = d
                .iter()
                .map(|z| format!("{}{}{}j", fmt_f(z.re), if z.im < 0.0 { "" } else { "+" }, fmt_f(z.im)))
                .collect();
            let _ = writeln!(s, "worst_Delta = {}", entries.join(","));
        } else {
            let _ = writeln!(s, "worst_Delta = none");
        }
        let _ = writeln!(
            s,
            "asymptotic_delta_blocks = {}",
            self.asymptotic_point.as_ref().map_or("none".into(), |p| fmt_list(&p.flatten()))
        );
        let _ = writeln!(
            s,
            "asymptotic_theta = {}",
            self.asymptotic_theta.as_ref().map_or("none".into(), |t| fmt_list(t))
        );
        let d = &self.diagnostics;
        let _ = writeln!(s, "stability_abscissa = {}", fmt_f(d.stability_abscissa));
        let _ = writeln!(s, "asymptotic_path = {}", if d.explicit_asymptotic { "explicit" } else { "flow" });
        let _ = writeln!(s, "asymptotic_starts = {}", d.asymptotic_starts);
        let _ = writeln!(s, "pseudo_starts = {}", d.pseudo_starts);
        let _ = writeln!(s, "failed_starts = {}", d.failed_starts);
        let _ = writeln!(s, "eps_iterations = {}", d.eps_iterates.len());
        for (i, it) in d.eps_iterates.iter().enumerate() {
            let _ = writeln!(s, "eps_iterate.{i} = {},{},{}", fmt_f(it.x), fmt_f(it.f), fmt_f(it.df));
        }
        let _ = writeln!(s, "crossing_residual = {}", d.crossing_residual.map_or("none".into(), fmt_f));
        let _ = writeln!(s, "warning = {}", if d.warnings.is_empty() { "none".into() } else { d.warnings.join("; ") });
        s
    }

    /// One line: norm, regime and the critical frequency if any.
    pub fn summary(&self) -> String {
        match self.omega {
            Some(w) => format!("robust strong H-infinity norm {:.6} ({}, omega = {:.6})", self.norm, self.regime.as_str(), w),
            None => format!("robust strong H-infinity norm {:.6} ({})", self.norm, self.regime.as_str()),
        }
    }
}

/// Full computation: stability gate, asymptotic norm, finite crossing
/// distance and their combination.
pub fn robust_strong_hinf_norm(system: &UncertainDelaySystem, config: &SolverConfig) -> Result<NormReport> {
    init_dense_kernels();
    let stab = check_robust_stability(system, config)?;
    if !stab.stable {
        return Err(stab.into_error());
    }
    let asym = asymptotic_part(system, config)?;
    let region = default_region(system, config);
    let fin = dist_fin(system, asym.asymptotic_norm, &region, config)?;

    let mut diagnostics = Diagnostics {
        stability_abscissa: stab.abscissa,
        asymptotic_starts: asym.starts,
        explicit_asymptotic: asym.explicit,
        eps_iterates: fin.iterates.clone(),
        pseudo_starts: fin.optimum.as_ref().map_or(0, |o| o.starts),
        failed_starts: fin.optimum.as_ref().map_or(0, |o| o.failed_starts),
        crossing_residual: None,
        warnings: fin.warning.iter().cloned().collect(),
    };
    let finite = fin.dist.is_finite();
    let (norm, regime) = if finite && 1.0 / fin.dist > asym.asymptotic_norm {
        (1.0 / fin.dist, Regime::FiniteFrequency)
    } else {
        (asym.asymptotic_norm, Regime::Asymptotic)
    };
    let (mut omega, mut worst_point, mut worst_delta) = (None, None, None);
    if regime == Regime::FiniteFrequency {
        if let Some(opt) = &fin.optimum {
            let lambda = opt.state.triple.lambda;
            omega = Some(lambda.im.abs());
            match eval_transfer(system, &opt.point, lambda) {
                Ok(t) => diagnostics.crossing_residual = Some((svd_extremes(&t).sigma1 * fin.dist - 1.0).abs()),
                Err(e) => diagnostics.warnings.push(format!("crossing residual unavailable: {e}")),
            }
            worst_point = Some(opt.point.clone());
            worst_delta = Some(opt.delta());
        }
    }
    Ok(NormReport {
        norm,
        asymptotic_norm: asym.asymptotic_norm,
        dist_nwp: asym.dist_nwp,
        dist_chain: asym.dist_chain,
        dist_fin: fin.dist,
        regime,
        omega,
        worst_point,
        worst_delta,
        asymptotic_point: asym.point,
        asymptotic_theta: asym.theta,
        diagnostics,
    })
}

/// Strong H-infinity norm of the nominal system (uncertainty ignored).
pub fn nominal_strong_hinf_norm(system: &UncertainDelaySystem, config: &SolverConfig) -> Result<NormReport> {
    robust_strong_hinf_norm(&system.nominal_system(), config)
}
