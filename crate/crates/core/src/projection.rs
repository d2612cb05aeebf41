//! Normalized uncertainty blocks `delta_l = bound_l * n_l` with `||n_l||_F <= 1`.

use rand::Rng;

use crate::linalg::{frob_dot, RMat};
use crate::model::{random_direction, UncertainDelaySystem, UncertaintyPoint};

const BOUNDARY: f64 = 1.0 - 1e-12;

pub(crate) fn to_point(system: &UncertainDelaySystem, normalized: &[RMat], offsets: &[f64]) -> UncertaintyPoint {
    UncertaintyPoint {
        blocks: normalized.iter().zip(system.blocks()).map(|(n, b)| n * b.bound).collect(),
        delay_offsets: if offsets.is_empty() { vec![0.0; system.k()] } else { offsets.to_vec() },
    }
}

pub(crate) fn from_point(system: &UncertainDelaySystem, point: &UncertaintyPoint) -> Vec<RMat> {
    point.blocks.iter().zip(system.blocks()).map(|(d, b)| d / b.bound).collect()
}

/// Remove the outward radial component on blocks that sit on the unit sphere.
pub(crate) fn project(normalized: &[RMat], grad: &mut [RMat]) {
    for (n, g) in normalized.iter().zip(grad.iter_mut()) {
        let nn = n.norm();
        if nn >= BOUNDARY {
            let ip = frob_dot(n, g);
            if ip > 0.0 {
                *g -= n * (ip / (nn * nn));
            }
        }
    }
}

/// Euler step followed by radial clipping onto the unit ball.
pub(crate) fn advance(normalized: &[RMat], dir: &[RMat], h: f64) -> Vec<RMat> {
    normalized
        .iter()
        .zip(dir)
        .map(|(n, d)| {
            let x = n + d * h;
            let nx = x.norm();
            if nx > 1.0 {
                x / nx
            } else {
                x
            }
        })
        .collect()
}

pub(crate) fn sq_norm(blocks: &[RMat]) -> f64 {
    blocks.iter().map(|b| b.norm_squared()).sum()
}

pub(crate) fn zeros(system: &UncertainDelaySystem) -> Vec<RMat> {
    system.blocks().iter().map(|b| RMat::zeros(b.rows, b.cols)).collect()
}

/// Uniform direction and uniform radius per block.
pub(crate) fn random<R: Rng + ?Sized>(system: &UncertainDelaySystem, rng: &mut R) -> Vec<RMat> {
    system
        .blocks()
        .iter()
        .map(|b| random_direction(rng, b.rows, b.cols) * rng.gen::<f64>())
        .collect()
}

/// Tiny admissible perturbation used to split a multiple singular value.
pub(crate) fn nudge<R: Rng + ?Sized>(normalized: &[RMat], rng: &mut R) -> Vec<RMat> {
    let dir: Vec<RMat> = normalized.iter().map(|n| random_direction(rng, n.nrows(), n.ncols())).collect();
    let back: Vec<RMat> = normalized
        .iter()
        .map(|n| if n.norm() >= BOUNDARY { n * (1.0 - 1e-10) } else { n.clone() })
        .collect();
    advance(&back, &dir, 1e-10)
}

/// Starts with one block on its bound along `grad` and all others at zero.
pub(crate) fn boundary_starts(grad: &[RMat]) -> Vec<Vec<RMat>> {
    (0..grad.len())
        .filter_map(|l| {
            let gn = grad[l].norm();
            (gn > 1e-14).then(|| {
                grad.iter()
                    .enumerate()
                    .map(|(i, g)| if i == l { g / gn } else { RMat::zeros(g.nrows(), g.ncols()) })
                    .collect()
            })
        })
        .collect()
}
