#![allow(dead_code)]

pub mod fd;

use shinf::linalg::RMat;
use shinf::{Family, Occurrence, SystemData, Target, UncertainDelaySystem, UncertaintyBlock};

pub fn s(v: f64) -> RMat {
    RMat::from_element(1, 1, v)
}

fn scalars(v: &[f64]) -> Vec<RMat> {
    v.iter().map(|x| s(*x)).collect()
}

fn parse_target(t: &str) -> Target {
    t.parse().unwrap()
}

/// Scalar block entering each listed target with the given coefficient.
pub fn scalar_block(bound: f64, terms: &[(&str, f64)]) -> UncertaintyBlock {
    UncertaintyBlock {
        bound,
        rows: 1,
        cols: 1,
        occurrences: terms
            .iter()
            .map(|(t, c)| Occurrence { target: parse_target(t), g: s(*c), h: s(1.0) })
            .collect(),
    }
}

pub fn scalar_system(delays: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64], blocks: Vec<UncertaintyBlock>) -> UncertainDelaySystem {
    UncertainDelaySystem::new(SystemData {
        delays: delays.to_vec(),
        e: None,
        a: scalars(a),
        b: scalars(b),
        c: scalars(c),
        d: scalars(d),
        blocks,
        delay_bounds: None,
    })
    .unwrap()
}

/// Single delay, finite-frequency worst case.
pub fn ex31() -> UncertainDelaySystem {
    scalar_system(
        &[1.0],
        &[-7.0, -5.0],
        &[4.0, 0.0],
        &[2.0, 0.0],
        &[1.0, 1.0],
        vec![
            scalar_block(0.15, &[("A0", 3.0), ("D0", 1.0)]),
            scalar_block(0.2, &[("A1", 2.0), ("C0", -2.0)]),
        ],
    )
}

/// Single delay, chain-dominated.
pub fn ex32() -> UncertainDelaySystem {
    scalar_system(
        &[1.0],
        &[-3.0, -1.0],
        &[4.0, 0.0],
        &[-2.0, 0.0],
        &[3.0, 1.0],
        vec![
            scalar_block(0.1, &[("A1", 3.0), ("C0", -3.0), ("D0", 1.0), ("D1", 1.0)]),
            scalar_block(0.25, &[("A0", 1.0), ("C0", 2.0), ("D1", 1.0)]),
        ],
    )
}

/// Two delays, asymptotic-dominated in the strong sense.
pub fn ex33() -> UncertainDelaySystem {
    scalar_system(
        &[1.0, 2.0],
        &[-2.0, 1.0, 0.0],
        &[-1.0, 0.0, -0.5],
        &[-2.0, 0.0, 1.0],
        &[5.0, 1.5, -3.0],
        vec![
            scalar_block(0.2, &[("A0", 1.0), ("B2", 1.0), ("D0", 4.0), ("D2", 1.0)]),
            scalar_block(0.3, &[("A1", 1.0), ("C0", 2.0)]),
        ],
    )
}

/// Nominal two-delay system without uncertainty.
pub fn ex11() -> UncertainDelaySystem {
    ex33().nominal_system()
}

/// `ex31` written with an extra algebraic state `x2 = x1` that carries the output.
pub fn ddae31() -> UncertainDelaySystem {
    let m = |rows: &[&[f64]]| RMat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let col = |v: &[f64]| RMat::from_column_slice(v.len(), 1, v);
    let row = |v: &[f64]| RMat::from_row_slice(1, v.len(), v);
    let e0 = RMat::from_column_slice(2, 1, &[1.0, 0.0]);
    UncertainDelaySystem::new(SystemData {
        delays: vec![1.0],
        e: Some(m(&[&[1.0, 0.0], &[0.0, 0.0]])),
        a: vec![m(&[&[-7.0, 0.0], &[1.0, -1.0]]), m(&[&[-5.0, 0.0], &[0.0, 0.0]])],
        b: vec![col(&[4.0, 0.0]), col(&[0.0, 0.0])],
        c: vec![row(&[0.0, 2.0]), row(&[0.0, 0.0])],
        d: vec![s(1.0), s(1.0)],
        blocks: vec![
            UncertaintyBlock {
                bound: 0.15,
                rows: 1,
                cols: 1,
                occurrences: vec![
                    Occurrence { target: Target::new(Family::A, 0), g: e0.clone() * 3.0, h: row(&[1.0, 0.0]) },
                    Occurrence { target: Target::new(Family::D, 0), g: s(1.0), h: s(1.0) },
                ],
            },
            UncertaintyBlock {
                bound: 0.2,
                rows: 1,
                cols: 1,
                occurrences: vec![
                    Occurrence { target: Target::new(Family::A, 1), g: e0.clone() * 2.0, h: row(&[1.0, 0.0]) },
                    Occurrence { target: Target::new(Family::C, 0), g: s(-2.0), h: row(&[0.0, 1.0]) },
                ],
            },
        ],
        delay_bounds: None,
    })
    .unwrap()
}

/// Two inputs, two outputs, two delays, a full 2x2 block and a scalar block.
pub fn mimo() -> UncertainDelaySystem {
    let m = |rows: &[&[f64]]| RMat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let i2 = RMat::identity(2, 2);
    let z2 = RMat::zeros(2, 2);
    UncertainDelaySystem::new(SystemData {
        delays: vec![0.5, 1.3],
        e: None,
        a: vec![m(&[&[-3.0, 1.0], &[0.0, -4.0]]), m(&[&[0.5, 0.0], &[0.2, 0.3]]), m(&[&[0.0, 0.1], &[0.0, 0.0]])],
        b: vec![i2.clone(), z2.clone(), m(&[&[0.2, 0.0], &[0.0, 0.0]])],
        c: vec![m(&[&[1.0, 0.0], &[1.0, 1.0]]), z2.clone(), z2.clone()],
        d: vec![m(&[&[0.5, 0.0], &[0.0, 0.2]]), m(&[&[0.2, 0.1], &[0.0, 0.0]]), z2.clone()],
        blocks: vec![
            UncertaintyBlock {
                bound: 0.3,
                rows: 2,
                cols: 2,
                occurrences: vec![
                    Occurrence { target: Target::new(Family::A, 0), g: i2.clone(), h: i2.clone() },
                    Occurrence { target: Target::new(Family::D, 0), g: i2.clone() * 0.5, h: i2.clone() },
                ],
            },
            UncertaintyBlock {
                bound: 0.2,
                rows: 1,
                cols: 1,
                occurrences: vec![
                    Occurrence { target: Target::new(Family::A, 1), g: m(&[&[1.0], &[0.0]]), h: m(&[&[0.0, 1.0]]) },
                    Occurrence { target: Target::new(Family::D, 1), g: m(&[&[0.0], &[1.0]]), h: m(&[&[1.0, 0.0]]) },
                ],
            },
        ],
        delay_bounds: None,
    })
    .unwrap()
}

/// `ex31` with an uncertain delay, `|rho| <= 0.1`.
pub fn ex31_uncertain_delay() -> UncertainDelaySystem {
    let mut data = ex31().to_data();
    data.delay_bounds = Some(vec![0.1]);
    UncertainDelaySystem::new(data).unwrap()
}
