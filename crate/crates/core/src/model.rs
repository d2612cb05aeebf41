//! Uncertain delay systems, admissible uncertainty values and realizations.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{nullspace_bases, svd_extremes, to_complex, RMat};

/// Which family of system matrices an uncertainty occurrence perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    A,
    B,
    C,
    D,
}

/// A target matrix such as `A0` or `D2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Target {
    pub family: Family,
    /// Delay index, 0 for the undelayed term.
    pub index: usize,
}

impl Target {
    pub fn new(family: Family, index: usize) -> Self {
        Target { family, index }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.family {
            Family::A => 'A',
            Family::B => 'B',
            Family::C => 'C',
            Family::D => 'D',
        };
        write!(f, "{c}{}", self.index)
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        let family = match chars.next() {
            Some('A') => Family::A,
            Some('B') => Family::B,
            Some('C') => Family::C,
            Some('D') => Family::D,
            _ => return Err(Error::Invalid(format!("unknown target matrix {s:?}"))),
        };
        let index = chars
            .as_str()
            .parse::<usize>()
            .map_err(|_| Error::Invalid(format!("unknown target matrix {s:?}")))?;
        Ok(Target { family, index })
    }
}

/// One appearance `G * delta_l * H` of an uncertainty block in a target matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Occurrence {
    pub target: Target,
    pub g: RMat,
    pub h: RMat,
}

/// A real `rows x cols` uncertainty block with a Frobenius-norm bound.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyBlock {
    pub bound: f64,
    pub rows: usize,
    pub cols: usize,
    pub occurrences: Vec<Occurrence>,
}

/// Raw description of a system, validated by [`UncertainDelaySystem::new`].
#[derive(Debug, Clone, Default)]
pub struct SystemData {
    pub delays: Vec<f64>,
    /// `None` means the identity.
    pub e: Option<RMat>,
    pub a: Vec<RMat>,
    pub b: Vec<RMat>,
    pub c: Vec<RMat>,
    pub d: Vec<RMat>,
    pub blocks: Vec<UncertaintyBlock>,
    pub delay_bounds: Option<Vec<f64>>,
}

/// Linear time-delay system with structured real uncertainty:
///
/// `E x' = sum_k A_k(delta) x(t - tau_k) + sum_k B_k(delta) w(t - tau_k)`,
/// `z = sum_k C_k(delta) x(t - tau_k) + sum_k D_k(delta) w(t - tau_k)`, with `tau_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainDelaySystem {
    n: usize,
    m: usize,
    p: usize,
    delays: Vec<f64>,
    e: RMat,
    e_identity: bool,
    a: Vec<RMat>,
    b: Vec<RMat>,
    c: Vec<RMat>,
    d: Vec<RMat>,
    blocks: Vec<UncertaintyBlock>,
    delay_bounds: Vec<f64>,
}

/// Realized system matrices at one uncertainty value.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub a: Vec<RMat>,
    pub b: Vec<RMat>,
    pub c: Vec<RMat>,
    pub d: Vec<RMat>,
    /// Effective delays `tau + rho`.
    pub delays: Vec<f64>,
}

impl Realization {
    pub fn matrix(&self, target: Target) -> &RMat {
        match target.family {
            Family::A => &self.a[target.index],
            Family::B => &self.b[target.index],
            Family::C => &self.c[target.index],
            Family::D => &self.d[target.index],
        }
    }

    fn matrix_mut(&mut self, target: Target) -> &mut RMat {
        match target.family {
            Family::A => &mut self.a[target.index],
            Family::B => &mut self.b[target.index],
            Family::C => &mut self.c[target.index],
            Family::D => &mut self.d[target.index],
        }
    }
}

/// One value of the uncertain parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyPoint {
    pub blocks: Vec<RMat>,
    /// Delay offsets `rho_k`; empty means all zero.
    pub delay_offsets: Vec<f64>,
}

impl UncertaintyPoint {
    pub fn new(blocks: Vec<RMat>) -> Self {
        UncertaintyPoint { blocks, delay_offsets: Vec::new() }
    }

    /// Block entries concatenated in row-major order per block.
    pub fn flatten(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .flat_map(|b| (0..b.nrows()).flat_map(move |i| (0..b.ncols()).map(move |j| b[(i, j)])))
            .collect()
    }
}

const ADMISSIBLE_SLACK: f64 = 1e-12;

fn check_shape(what: &str, m: &RMat, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

impl UncertainDelaySystem {
    pub fn new(data: SystemData) -> Result<Self> {
        let SystemData { delays, e, a, b, c, d, blocks, delay_bounds } = data;
        let k = delays.len();
        for (name, v) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if v.len() != k + 1 {
                return Err(Error::Dimension(format!(
                    "{name} has {} matrices, expected {} (K + 1)",
                    v.len(),
                    k + 1
                )));
            }
        }
        let n = a[0].nrows();
        let m = b[0].ncols();
        let p = c[0].nrows();
        if n == 0 {
            return Err(Error::Invalid("state dimension must be positive".into()));
        }
        for i in 0..=k {
            check_shape(&format!("A{i}"), &a[i], n, n)?;
            check_shape(&format!("B{i}"), &b[i], n, m)?;
            check_shape(&format!("C{i}"), &c[i], p, n)?;
            check_shape(&format!("D{i}"), &d[i], p, m)?;
        }
        for (i, &t) in delays.iter().enumerate() {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Invalid(format!("delay {} must be positive, got {t}", i + 1)));
            }
            if delays[..i].contains(&t) {
                return Err(Error::Invalid(format!("delay {} duplicates an earlier delay", i + 1)));
            }
        }
        let e_identity = e.as_ref().is_none_or(|e| *e == RMat::identity(n, n));
        let e = e.unwrap_or_else(|| RMat::identity(n, n));
        check_shape("E", &e, n, n)?;
        let delay_bounds = delay_bounds.unwrap_or_else(|| vec![0.0; k]);
        if delay_bounds.len() != k {
            return Err(Error::Dimension(format!(
                "delay_bounds has {} entries, expected {k}",
                delay_bounds.len()
            )));
        }
        for (i, (&beta, &tau)) in delay_bounds.iter().zip(&delays).enumerate() {
            if !(beta.is_finite() && beta >= 0.0 && tau - beta > 0.0) {
                return Err(Error::Invalid(format!(
                    "delay bound {} must satisfy 0 <= beta < tau, got {beta}",
                    i + 1
                )));
            }
        }
        let sys = UncertainDelaySystem { n, m, p, delays, e, e_identity, a, b, c, d, blocks, delay_bounds };
        for (l, blk) in sys.blocks.iter().enumerate() {
            if !(blk.bound.is_finite() && blk.bound > 0.0) {
                return Err(Error::Invalid(format!("block {l} bound must be positive")));
            }
            if blk.rows == 0 || blk.cols == 0 {
                return Err(Error::Invalid(format!("block {l} must have positive dimensions")));
            }
            for occ in &blk.occurrences {
                if occ.target.index > k {
                    return Err(Error::Invalid(format!(
                        "block {l} targets {} but the system has K = {k}",
                        occ.target
                    )));
                }
                let (tr, tc) = sys.target_shape(occ.target);
                check_shape(&format!("G of block {l} in {}", occ.target), &occ.g, tr, blk.rows)?;
                check_shape(&format!("H of block {l} in {}", occ.target), &occ.h, blk.cols, tc)?;
            }
        }
        Ok(sys)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn p(&self) -> usize {
        self.p
    }
    /// Number of delays.
    pub fn k(&self) -> usize {
        self.delays.len()
    }
    pub fn delays(&self) -> &[f64] {
        &self.delays
    }
    pub fn e(&self) -> &RMat {
        &self.e
    }
    pub fn e_is_identity(&self) -> bool {
        self.e_identity
    }
    pub fn a(&self) -> &[RMat] {
        &self.a
    }
    pub fn b(&self) -> &[RMat] {
        &self.b
    }
    pub fn c(&self) -> &[RMat] {
        &self.c
    }
    pub fn d(&self) -> &[RMat] {
        &self.d
    }
    pub fn blocks(&self) -> &[UncertaintyBlock] {
        &self.blocks
    }
    pub fn delay_bounds(&self) -> &[f64] {
        &self.delay_bounds
    }
    pub fn has_delay_uncertainty(&self) -> bool {
        self.delay_bounds.iter().any(|&b| b > 0.0)
    }

    pub fn target_shape(&self, t: Target) -> (usize, usize) {
        match t.family {
            Family::A => (self.n, self.n),
            Family::B => (self.n, self.m),
            Family::C => (self.p, self.n),
            Family::D => (self.p, self.m),
        }
    }

    pub fn nominal(&self, t: Target) -> &RMat {
        match t.family {
            Family::A => &self.a[t.index],
            Family::B => &self.b[t.index],
            Family::C => &self.c[t.index],
            Family::D => &self.d[t.index],
        }
    }

    /// Copy of the system with different nominal delays.
    pub fn with_delays(&self, delays: Vec<f64>) -> Result<Self> {
        let mut data = self.to_data();
        data.delays = delays;
        UncertainDelaySystem::new(data)
    }

    /// Copy of the system with every uncertainty bound multiplied by `factor`.
    pub fn with_scaled_bounds(&self, factor: f64) -> Result<Self> {
        let mut data = self.to_data();
        for b in &mut data.blocks {
            b.bound *= factor;
        }
        UncertainDelaySystem::new(data)
    }

    /// Copy of the system with all uncertainty removed.
    pub fn nominal_system(&self) -> Self {
        let mut s = self.clone();
        s.blocks.clear();
        s.delay_bounds = vec![0.0; self.k()];
        s
    }

    pub fn to_data(&self) -> SystemData {
        SystemData {
            delays: self.delays.clone(),
            e: (!self.e_identity).then(|| self.e.clone()),
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
            blocks: self.blocks.clone(),
            delay_bounds: Some(self.delay_bounds.clone()),
        }
    }

    pub fn zero_point(&self) -> UncertaintyPoint {
        UncertaintyPoint {
            blocks: self.blocks.iter().map(|b| RMat::zeros(b.rows, b.cols)).collect(),
            delay_offsets: vec![0.0; self.k()],
        }
    }

    /// Build a point from block entries listed in row-major order per block.
    pub fn point_from_flat(&self, values: &[f64]) -> Result<UncertaintyPoint> {
        let total: usize = self.blocks.iter().map(|b| b.rows * b.cols).sum();
        if values.len() != total {
            return Err(Error::Dimension(format!(
                "expected {total} uncertainty entries, got {}",
                values.len()
            )));
        }
        let mut off = 0;
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let m = RMat::from_row_slice(b.rows, b.cols, &values[off..off + b.rows * b.cols]);
                off += b.rows * b.cols;
                m
            })
            .collect();
        let pt = UncertaintyPoint { blocks, delay_offsets: vec![0.0; self.k()] };
        self.check_point(&pt)?;
        Ok(pt)
    }

    /// Verify dimensions and admissibility of a point.
    pub fn check_point(&self, point: &UncertaintyPoint) -> Result<()> {
        if point.blocks.len() != self.blocks.len() {
            return Err(Error::Dimension(format!(
                "point has {} blocks, system has {}",
                point.blocks.len(),
                self.blocks.len()
            )));
        }
        for (l, (d, blk)) in point.blocks.iter().zip(&self.blocks).enumerate() {
            check_shape(&format!("delta_{l}"), d, blk.rows, blk.cols)?;
            let norm = d.norm();
            if norm > blk.bound * (1.0 + ADMISSIBLE_SLACK) {
                return Err(Error::Inadmissible { block: l, norm, bound: blk.bound });
            }
        }
        if !point.delay_offsets.is_empty() {
            if point.delay_offsets.len() != self.k() {
                return Err(Error::Dimension(format!(
                    "point has {} delay offsets, system has {} delays",
                    point.delay_offsets.len(),
                    self.k()
                )));
            }
            for (i, (&r, &b)) in point.delay_offsets.iter().zip(&self.delay_bounds).enumerate() {
                if r.abs() > b * (1.0 + ADMISSIBLE_SLACK) {
                    return Err(Error::InadmissibleDelay { index: i, value: r, bound: b });
                }
            }
        }
        Ok(())
    }

    pub fn effective_delays(&self, point: &UncertaintyPoint) -> Vec<f64> {
        if point.delay_offsets.is_empty() {
            return self.delays.clone();
        }
        self.delays.iter().zip(&point.delay_offsets).map(|(t, r)| t + r).collect()
    }

    /// Realized matrices `nominal + sum G delta H` at an admissible point.
    pub fn assemble(&self, point: &UncertaintyPoint) -> Result<Realization> {
        self.check_point(point)?;
        Ok(self.assemble_unchecked(point))
    }

    pub(crate) fn assemble_unchecked(&self, point: &UncertaintyPoint) -> Realization {
        let mut r = Realization {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
            delays: self.effective_delays(point),
        };
        for (blk, delta) in self.blocks.iter().zip(&point.blocks) {
            for occ in &blk.occurrences {
                *r.matrix_mut(occ.target) += &occ.g * delta * &occ.h;
            }
        }
        r
    }

    /// Random admissible point: uniform direction, radius uniform in `[0, bound]`.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> UncertaintyPoint {
        let mut pt = self.zero_point();
        for (d, blk) in pt.blocks.iter_mut().zip(&self.blocks) {
            *d = random_direction(rng, blk.rows, blk.cols) * (blk.bound * rng.gen::<f64>());
        }
        pt
    }
}

/// Uniformly distributed unit-Frobenius-norm real matrix.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> RMat {
    loop {
        let m = RMat::from_fn(rows, cols, |_, _| standard_normal(rng));
        let n = m.norm();
        if n > 1e-8 {
            return m / n;
        }
    }
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Sample-based check that `U_E^H A_0(delta) V_E` stays nonsingular.
///
/// The verification set is `delta = 0`, each block at plus and minus its bound
/// along every coordinate direction, and `random_samples` random admissible
/// points. Passing the check is evidence, not a certificate.
pub fn check_causality<R: Rng + ?Sized>(
    system: &UncertainDelaySystem,
    random_samples: usize,
    rng: &mut R,
) -> bool {
    let (ue, ve) = nullspace_bases(system.e(), 1e-12);
    if ue.ncols() == 0 {
        return true;
    }
    let pivot_ok = |pt: &UncertaintyPoint| {
        let a0 = &system.assemble_unchecked(pt).a[0];
        let z = ue.transpose() * a0 * &ve;
        let scale = a0.norm().max(1.0);
        svd_extremes(&to_complex(&z)).sigma_min > 1e-10 * scale
    };
    let mut samples = vec![system.zero_point()];
    for (l, blk) in system.blocks().iter().enumerate() {
        for i in 0..blk.rows {
            for j in 0..blk.cols {
                for sign in [1.0, -1.0] {
                    let mut pt = system.zero_point();
                    pt.blocks[l][(i, j)] = sign * blk.bound;
                    samples.push(pt);
                }
            }
        }
    }
    for _ in 0..random_samples {
        samples.push(system.sample_point(rng));
    }
    samples.iter().all(pivot_ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(v: f64) -> RMat {
        RMat::from_element(1, 1, v)
    }

    fn scalar_system(a0: f64) -> UncertainDelaySystem {
        UncertainDelaySystem::new(SystemData {
            a: vec![s(a0)],
            b: vec![RMat::zeros(1, 0)],
            c: vec![RMat::zeros(0, 1)],
            d: vec![RMat::zeros(0, 0)],
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn target_round_trip() {
        for t in ["A0", "B3", "C12", "D1"] {
            assert_eq!(t.parse::<Target>().unwrap().to_string(), t);
        }
        assert!("E0".parse::<Target>().is_err());
        assert!("A".parse::<Target>().is_err());
    }

    #[test]
    fn rejects_bad_delays() {
        let mut data = scalar_system(-1.0).to_data();
        data.delays = vec![1.0, 1.0];
        data.a = vec![s(-1.0); 3];
        data.b = vec![RMat::zeros(1, 0); 3];
        data.c = vec![RMat::zeros(0, 1); 3];
        data.d = vec![RMat::zeros(0, 0); 3];
        assert!(UncertainDelaySystem::new(data.clone()).is_err());
        data.delays = vec![1.0, -2.0];
        assert!(UncertainDelaySystem::new(data.clone()).is_err());
        data.delays = vec![1.0, 2.0];
        data.delay_bounds = Some(vec![1.0, 0.0]);
        assert!(UncertainDelaySystem::new(data.clone()).is_err());
        data.delay_bounds = Some(vec![0.5, 0.0]);
        assert!(UncertainDelaySystem::new(data).is_ok());
    }

    #[test]
    fn rejects_nonconforming_shape_matrix() {
        let mut data = scalar_system(-1.0).to_data();
        data.blocks = vec![UncertaintyBlock {
            bound: 1.0,
            rows: 1,
            cols: 1,
            occurrences: vec![Occurrence { target: "A0".parse().unwrap(), g: RMat::zeros(2, 1), h: s(1.0) }],
        }];
        assert!(matches!(UncertainDelaySystem::new(data), Err(Error::Dimension(_))));
    }

    #[test]
    fn boundary_point_is_admissible() {
        let mut data = scalar_system(-1.0).to_data();
        data.blocks = vec![UncertaintyBlock {
            bound: 0.3,
            rows: 1,
            cols: 2,
            occurrences: vec![],
        }];
        let sys = UncertainDelaySystem::new(data).unwrap();
        let edge = sys.point_from_flat(&[0.3 * 0.6, 0.3 * 0.8]).unwrap();
        assert!(sys.check_point(&edge).is_ok());
        assert!(matches!(sys.point_from_flat(&[0.3, 0.01]), Err(Error::Inadmissible { .. })));
    }

    #[test]
    fn causality_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(check_causality(&scalar_system(-1.0), 4, &mut rng));
        let dae = |a0: RMat| {
            UncertainDelaySystem::new(SystemData {
                e: Some(RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])),
                a: vec![a0],
                b: vec![RMat::zeros(2, 0)],
                c: vec![RMat::zeros(0, 2)],
                d: vec![RMat::zeros(0, 0)],
                ..Default::default()
            })
            .unwrap()
        };
        assert!(check_causality(&dae(RMat::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0])), 4, &mut rng));
        assert!(!check_causality(&dae(RMat::zeros(2, 2)), 4, &mut rng));
    }

    #[test]
    fn sampled_points_are_admissible() {
        let mut data = scalar_system(-1.0).to_data();
        data.blocks = vec![UncertaintyBlock { bound: 0.7, rows: 2, cols: 3, occurrences: vec![] }];
        let sys = UncertainDelaySystem::new(data).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let pt = sys.sample_point(&mut rng);
            assert!(sys.check_point(&pt).is_ok());
        }
    }
}
