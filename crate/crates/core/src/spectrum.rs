//! Characteristic roots, well-posedness and chain abscissa of a singular delay
//! eigenvalue problem.

use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::ascent::{ascend, AscentOptions, AscentProblem};
use crate::error::{Error, Result};
use crate::linalg::{self, dominant_eigen, inverse, svd_extremes, to_complex, CMat, CVec, RMat, C64, J};
use crate::rootfind::newton_bisection;
use crate::sdep::SdepRealization;

/// Rank cutoff used for the null spaces of `Q`.
pub const NULLSPACE_TOL: f64 = 1e-12;

/// Search window for characteristic roots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRegion {
    pub min_real: f64,
    /// Cap on `|Im s|`.
    pub imag_cap: f64,
}

impl SpectrumRegion {
    pub fn new(imag_cap: f64) -> Self {
        assert!(imag_cap.is_finite() && imag_cap > 0.0, "imaginary cap must be finite and positive");
        SpectrumRegion { min_real: f64::NEG_INFINITY, imag_cap }
    }

    /// `20 max(1, ||P||) / min tau`, with `min tau` taken as 1 without delays.
    pub fn default_for(sdep: &SdepRealization) -> Self {
        let tmin = sdep.delays.iter().copied().fold(f64::INFINITY, f64::min);
        let tmin = if tmin.is_finite() { tmin } else { 1.0 };
        SpectrumRegion::new(20.0 * sdep.coefficient_norm() / tmin)
    }

    pub fn contains(&self, s: C64) -> bool {
        s.im.abs() <= self.imag_cap && s.re >= self.min_real
    }
}

/// A characteristic root with left and right null vectors of `M(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTriple {
    pub lambda: C64,
    /// Left null vector, unit norm, phased so that `xi` is real and positive.
    pub phi: CVec,
    /// Right null vector, unit norm.
    pub psi: CVec,
    /// `phi^H M'(lambda) psi`.
    pub xi: f64,
    pub defective: bool,
    /// Smallest singular value of `M(lambda)`.
    pub residual: f64,
}

/// Options of the collocation solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollocationOptions {
    pub nodes: usize,
    pub max_nodes: usize,
    /// Accept the discretization once the leading root moves less than this.
    pub move_tol: f64,
    /// Relative residual accepted after Newton refinement.
    pub residual_tol: f64,
}

impl Default for CollocationOptions {
    fn default() -> Self {
        CollocationOptions { nodes: 40, max_nodes: 160, move_tol: 1e-8, residual_tol: 1e-10 }
    }
}

static SEQUENTIAL: Once = Once::new();

/// Dense kernels run single-threaded; parallelism comes from multi-starts.
pub(crate) fn init_dense_kernels() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// Orthonormal bases `(U_N, V_N)` of the left and right null spaces of `Q`.
pub fn nullspace_bases(q: &RMat) -> (RMat, RMat) {
    linalg::nullspace_bases(q, NULLSPACE_TOL)
}

/// Null-space compressions `U_N^H P0 V_N` and `U_N^H Pk V_N`.
#[derive(Debug, Clone)]
pub struct Compression {
    pub u: RMat,
    pub v: RMat,
    pub z0: CMat,
    pub zk: Vec<CMat>,
}

pub fn compress(sdep: &SdepRealization) -> Compression {
    let (u, v) = nullspace_bases(&sdep.q);
    let uc = to_complex(&u);
    let vc = to_complex(&v);
    let z0 = uc.adjoint() * &sdep.p0 * &vc;
    let zk = sdep.pk.iter().map(|p| uc.adjoint() * to_complex(p) * &vc).collect();
    Compression { u, v, z0, zk }
}

fn compression_nonsingular(z0: &CMat) -> bool {
    if z0.is_empty() {
        return true;
    }
    let e = svd_extremes(z0);
    e.sigma_min > 1e-10 * e.sigma1.max(1.0)
}

/// The pencil `Q s - P0` is regular of index at most one.
pub fn is_well_posed(sdep: &SdepRealization) -> bool {
    compression_nonsingular(&compress(sdep).z0)
}

/// Null vectors and normalization at a (presumed) root.
pub fn eigen_triple(sdep: &SdepRealization, lambda: C64) -> EigenTriple {
    let ext = svd_extremes(&sdep.char_matrix(lambda));
    let psi = ext.v_min;
    let mut phi = ext.u_min;
    let xi = (phi.adjoint() * sdep.char_derivative(lambda) * &psi)[(0, 0)];
    let mag = xi.norm();
    let defective = mag < 1e-12;
    if !defective {
        phi *= xi / mag;
    }
    EigenTriple { lambda, phi, psi, xi: mag, defective, residual: ext.sigma_min }
}

/// Newton iteration on `det M(s)`, step `1 / tr(M^{-1} M')`.
pub fn refine_root(sdep: &SdepRealization, start: C64) -> Option<C64> {
    let mut s = start;
    for _ in 0..60 {
        let m = sdep.char_matrix(s);
        let Some(x) = linalg::solve(&m, &sdep.char_derivative(s)) else {
            return Some(s);
        };
        let tr = x.trace();
        if !(tr.re.is_finite() && tr.im.is_finite()) || tr.norm() == 0.0 {
            return Some(s);
        }
        let step = tr.inv();
        if step.norm() > 10.0 * (1.0 + s.norm()) {
            return None;
        }
        s -= step;
        if step.norm() <= 1e-14 * s.norm().max(1.0) {
            return Some(s);
        }
    }
    Some(s)
}

/// Refine near `start` and accept the result if its residual is small.
pub fn track_root(sdep: &SdepRealization, start: C64, residual_tol: f64) -> Option<EigenTriple> {
    let s = refine_root(sdep, start)?;
    if !(s.re.is_finite() && s.im.is_finite()) {
        return None;
    }
    let t = eigen_triple(sdep, s);
    (t.residual <= residual_tol * sdep.residual_scale(s)).then_some(t)
}

fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..=n).map(|i| (i as f64 * std::f64::consts::PI / n as f64).cos()).collect()
}

/// Chebyshev differentiation matrix on `chebyshev_nodes(n)`.
fn chebyshev_diff(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len() - 1;
    let c: Vec<f64> = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 2.0 } else { 1.0 };
            if i % 2 == 0 {
                w
            } else {
                -w
            }
        })
        .collect();
    let mut d = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        let mut sum = 0.0;
        for j in 0..=n {
            if i != j {
                d[i][j] = c[i] / c[j] / (x[i] - x[j]);
                sum += d[i][j];
            }
        }
        d[i][i] = -sum;
    }
    d
}

/// Lagrange basis on Chebyshev nodes evaluated at `t` (barycentric form).
fn lagrange_at(x: &[f64], t: f64) -> Vec<f64> {
    let n = x.len() - 1;
    if let Some(k) = x.iter().position(|&xi| (xi - t).abs() < 1e-15) {
        let mut out = vec![0.0; n + 1];
        out[k] = 1.0;
        return out;
    }
    let w: Vec<f64> = (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    let terms: Vec<f64> = (0..=n).map(|j| w[j] / (t - x[j])).collect();
    let denom: f64 = terms.iter().sum();
    terms.iter().map(|v| v / denom).collect()
}

/// Eigenvalue approximations of the collocated delay operator.
fn collocation_eigenvalues(sdep: &SdepRealization, nodes: usize) -> Result<Vec<C64>> {
    init_dense_kernels();
    let d = sdep.dim();
    let tmax = sdep.max_delay();
    let nblk = if sdep.pk.is_empty() || tmax == 0.0 { 0 } else { nodes };
    let size = (nblk + 1) * d;
    let mut a = Mat::<C64>::zeros(size, size);
    let mut b = Mat::<C64>::zeros(size, size);
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] = sdep.p0[(i, j)];
            b[(i, j)] = C64::new(sdep.q[(i, j)], 0.0);
        }
    }
    if nblk > 0 {
        let x = chebyshev_nodes(nblk);
        let dm = chebyshev_diff(&x);
        let scale = 2.0 / tmax;
        for (pk, &tau) in sdep.pk.iter().zip(&sdep.delays) {
            let t = 1.0 - 2.0 * tau / tmax;
            let ell = lagrange_at(&x, t);
            for (jb, &lj) in ell.iter().enumerate() {
                if lj == 0.0 {
                    continue;
                }
                for i in 0..d {
                    for j in 0..d {
                        a[(i, jb * d + j)] += C64::new(lj * pk[(i, j)], 0.0);
                    }
                }
            }
        }
        for ib in 1..=nblk {
            for jb in 0..=nblk {
                let v = C64::new(scale * dm[ib][jb], 0.0);
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..d {
                    a[(ib * d + i, jb * d + i)] = v;
                }
            }
            for i in 0..d {
                b[(ib * d + i, ib * d + i)] = C64::new(1.0, 0.0);
            }
        }
    }
    for shift in [C64::new(0.1234, 0.0321), C64::new(-0.377, 0.219), C64::new(0.91, -0.53)] {
        let mut shifted = a.clone();
        for i in 0..size {
            for j in 0..size {
                shifted[(i, j)] -= shift * b[(i, j)];
            }
        }
        let lu = shifted.partial_piv_lu();
        let c = lu.solve(&b);
        let finite = (0..size).all(|j| (0..size).all(|i| c[(i, j)].re.is_finite() && c[(i, j)].im.is_finite()));
        if !finite {
            continue;
        }
        let mu = c.eigenvalues().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let mmax = mu.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if mmax == 0.0 {
            return Ok(Vec::new());
        }
        return Ok(mu.into_iter().filter(|z| z.norm() > 1e-10 * mmax).map(|z| shift + z.inv()).collect());
    }
    Err(Error::Eigensolver("shifted collocation pencil is singular".into()))
}

fn is_real_problem(sdep: &SdepRealization) -> bool {
    sdep.p0.iter().all(|z| z.im == 0.0)
}

fn same_root(a: C64, b: C64) -> bool {
    (a - b).norm() <= 1e-8 * a.norm().max(1.0)
}

fn roots_at_order(
    sdep: &SdepRealization,
    region: &SpectrumRegion,
    count: usize,
    nodes: usize,
    opts: &CollocationOptions,
) -> Result<Vec<EigenTriple>> {
    let mut cand: Vec<C64> = collocation_eigenvalues(sdep, nodes)?
        .into_iter()
        .filter(|z| z.re.is_finite() && z.im.abs() <= 1.1 * region.imag_cap)
        .collect();
    cand.sort_by(|x, y| y.re.total_cmp(&x.re));
    let real = is_real_problem(sdep);
    let limit = (3 * count).max(count + 10);
    let mut found: Vec<EigenTriple> = Vec::new();
    let push = |t: EigenTriple, found: &mut Vec<EigenTriple>| {
        if region.contains(t.lambda) && !found.iter().any(|f| same_root(f.lambda, t.lambda)) {
            found.push(t);
        }
    };
    for &z in cand.iter().take(limit) {
        if real && z.im < -1e-8 * z.norm().max(1.0) {
            continue;
        }
        if let Some(t) = track_root(sdep, z, opts.residual_tol) {
            let conj = real && t.lambda.im.abs() > 1e-8 * t.lambda.norm().max(1.0);
            let lam = t.lambda;
            push(t, &mut found);
            if conj {
                if let Some(tc) = track_root(sdep, lam.conj(), opts.residual_tol) {
                    push(tc, &mut found);
                }
            }
        }
    }
    found.sort_by(|x, y| y.lambda.re.total_cmp(&x.lambda.re).then(y.lambda.im.total_cmp(&x.lambda.im)));
    if found.len() > count {
        let mut keep = count;
        // keep conjugate partners together
        if real && keep > 0 {
            let last = found[keep - 1].lambda;
            if last.im > 0.0 && keep < found.len() && same_root(found[keep].lambda, last.conj()) {
                keep += 1;
            }
        }
        found.truncate(keep);
    }
    Ok(found)
}

/// Rightmost characteristic roots inside `region`, sorted by decreasing real
/// part, using default collocation options.
pub fn rightmost_roots(sdep: &SdepRealization, region: &SpectrumRegion, count: usize) -> Result<Vec<EigenTriple>> {
    rightmost_roots_with(sdep, region, count, &CollocationOptions::default())
}

/// Rightmost characteristic roots with explicit collocation options. The
/// number of nodes is doubled until the leading refined root is stable.
pub fn rightmost_roots_with(
    sdep: &SdepRealization,
    region: &SpectrumRegion,
    count: usize,
    opts: &CollocationOptions,
) -> Result<Vec<EigenTriple>> {
    if !is_well_posed(sdep) {
        return Err(Error::NotWellPosed);
    }
    let count = count.max(1);
    let mut nodes = opts.nodes.max(2);
    let mut roots = roots_at_order(sdep, region, count, nodes, opts)?;
    if sdep.pk.is_empty() {
        return Ok(roots);
    }
    while nodes * 2 <= opts.max_nodes {
        nodes *= 2;
        let next = roots_at_order(sdep, region, count, nodes, opts)?;
        let stable = match (roots.first(), next.first()) {
            (Some(a), Some(b)) => (a.lambda - b.lambda).norm() <= opts.move_tol * a.lambda.norm().max(1.0),
            (None, None) => true,
            _ => false,
        };
        roots = next;
        if stable {
            break;
        }
    }
    Ok(roots)
}

/// Plain spectral abscissa inside `region` (`-inf` without roots).
pub fn spectral_abscissa(sdep: &SdepRealization, region: &SpectrumRegion) -> Result<f64> {
    Ok(rightmost_roots(sdep, region, 1)?.first().map_or(f64::NEG_INFINITY, |t| t.lambda.re))
}

/// Spectral radius of `sum_k C_k e^{-sigma tau_k + j theta_k}` with gradient
/// in the angles, for the free angles `theta_2 .. theta_K` (`theta_1 = 0`).
pub(crate) struct AngleProblem<'a> {
    pub c: &'a [CMat],
    pub weights: Vec<f64>,
}

impl AngleProblem<'_> {
    fn matrix(&self, theta: &[f64]) -> CMat {
        let mut w = &self.c[0] * C64::new(self.weights[0], 0.0);
        for (k, th) in theta.iter().enumerate() {
            w += &self.c[k + 1] * (C64::from_polar(self.weights[k + 1], *th));
        }
        w
    }

    pub fn radius(&self, theta: &[f64]) -> Result<f64> {
        linalg::spectral_radius(&self.matrix(theta))
    }
}

impl AscentProblem for AngleProblem<'_> {
    type State = Vec<f64>;
    type Direction = Vec<f64>;

    fn evaluate(&self, theta: &mut Vec<f64>) -> Result<(f64, Vec<f64>, f64)> {
        let w = self.matrix(theta);
        let Some((mu, x, y)) = dominant_eigen(&w)? else {
            return Ok((0.0, vec![0.0; theta.len()], 0.0));
        };
        let r = mu.norm();
        let yx = (y.adjoint() * &x)[(0, 0)];
        if r == 0.0 || yx.norm() < 1e-12 {
            return Ok((r, vec![0.0; theta.len()], 0.0));
        }
        let kappa = mu.conj() / (r * yx);
        let grad: Vec<f64> = theta
            .iter()
            .enumerate()
            .map(|(k, th)| {
                let ck = C64::from_polar(self.weights[k + 1], *th);
                (kappa * J * ck * (y.adjoint() * &self.c[k + 1] * &x)[(0, 0)]).re
            })
            .collect();
        let g = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok((r, grad, g))
    }

    fn advance(&self, theta: &Vec<f64>, dir: &Vec<f64>, h: f64) -> Vec<f64> {
        theta.iter().zip(dir).map(|(t, d)| t + h * d).collect()
    }
}

/// Coarse angle grid: 16 points per free angle for up to two free angles,
/// further angles set by a fixed low-discrepancy sequence.
pub(crate) fn angle_grid(free: usize) -> Vec<Vec<f64>> {
    if free == 0 {
        return vec![Vec::new()];
    }
    let step = std::f64::consts::TAU / 16.0;
    let dims = free.min(2);
    let total = 16usize.pow(dims as u32);
    (0..total)
        .map(|idx| {
            (0..free)
                .map(|d| {
                    if d < dims {
                        ((idx / 16usize.pow(d as u32)) % 16) as f64 * step
                    } else {
                        let golden = 0.618_033_988_749_895 * (d as f64 + 1.0);
                        ((idx as f64 * golden).fract()) * std::f64::consts::TAU
                    }
                })
                .collect()
        })
        .collect()
}

/// `max_theta rho(sum_k C_k e^{-sigma tau_k + j theta_k})` for fixed matrices.
pub(crate) fn max_angle_radius(c: &[CMat], delays: &[f64], sigma: f64) -> Result<(f64, Vec<f64>)> {
    let weights: Vec<f64> = delays.iter().map(|t| (-sigma * t).exp()).collect();
    let prob = AngleProblem { c, weights };
    let free = c.len().saturating_sub(1);
    if free == 0 {
        return Ok((prob.radius(&[])?, Vec::new()));
    }
    let mut scored: Vec<(f64, Vec<f64>)> = angle_grid(free)
        .into_iter()
        .map(|th| prob.radius(&th).map(|r| (r, th)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let opts = AscentOptions { tol: 1e-12, max_iter: 500, ..Default::default() };
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for (_, th) in scored.into_iter().take(4) {
        let r = ascend(&prob, th, &opts)?;
        if r.value > best.0 {
            best = (r.value, r.state);
        }
    }
    Ok(best)
}

/// Zero crossing in `sigma` of a nonincreasing map `g(sigma) = ln F(sigma)`,
/// given an upper bound where `g < 0`. Returns `-inf` when `g` stays negative.
pub(crate) fn decreasing_crossing<F>(mut log_f: F, upper: f64, lower_limit: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let hi = upper;
    let mut width = (upper + 1.0).max(1.0);
    let mut lo = upper - width;
    loop {
        let glo = log_f(lo)?;
        if glo >= 0.0 {
            break;
        }
        if glo == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        width *= 2.0;
        lo = upper - width;
        if lo < lower_limit {
            return Ok(f64::NEG_INFINITY);
        }
    }
    let r = newton_bisection(
        |s| {
            let g = log_f(s)?;
            let h = 1e-6 * s.abs().max(1.0);
            let slope = (log_f(s + h)? - g) / h;
            Ok((g, slope))
        },
        lo,
        hi,
        tol,
    )?;
    Ok(r.root)
}

/// Upper bound on the crossing: `sum ||C_k|| e^{-sigma tau_k} < 1` beyond it.
pub(crate) fn crossing_upper_bound(norms: &[f64], delays: &[f64]) -> f64 {
    let k = norms.len().max(1) as f64;
    norms
        .iter()
        .zip(delays)
        .filter(|(n, _)| **n > 0.0)
        .map(|(n, t)| (k * n).ln() / t)
        .fold(0.0, f64::max)
        + 1.0
}

/// Real-part asymptote of the characteristic-root chains, `-inf` if none.
pub fn chain_abscissa(sdep: &SdepRealization) -> Result<f64> {
    let comp = compress(sdep);
    if !compression_nonsingular(&comp.z0) {
        return Err(Error::NotWellPosed);
    }
    if comp.z0.is_empty() || sdep.pk.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    let z0inv = inverse(&comp.z0).ok_or(Error::NotWellPosed)?;
    let c: Vec<CMat> = comp.zk.iter().map(|z| &z0inv * z).collect();
    let norms: Vec<f64> = c.iter().map(linalg::spectral_norm).collect();
    let scale = norms.iter().copied().fold(0.0, f64::max);
    if scale <= 1e-14 {
        return Ok(f64::NEG_INFINITY);
    }
    let upper = crossing_upper_bound(&norms, &sdep.delays);
    let tmax = sdep.max_delay();
    decreasing_crossing(
        |s| {
            let r = max_angle_radius(&c, &sdep.delays, s)?.0;
            Ok(if r <= 1e-14 * scale { f64::NEG_INFINITY } else { r.ln() })
        },
        upper,
        -200.0 / tmax,
        1e-12,
    )
}

/// `max(chain abscissa, spectral abscissa in region)`.
pub fn strong_spectral_abscissa(sdep: &SdepRealization, region: &SpectrumRegion) -> Result<f64> {
    Ok(chain_abscissa(sdep)?.max(spectral_abscissa(sdep, region)?))
}
