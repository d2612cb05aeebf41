mod common;

use common::{scalar_block, scalar_system};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shinf::flows::{default_region, maximize_asymptotic, pseudo_spectral_abscissa};
use shinf::linalg::{spectral_norm, svd_extremes, CMat, RMat, C64};
use shinf::sdep::build_sdep;
use shinf::spectrum::{rightmost_roots, rightmost_roots_with, CollocationOptions, SpectrumRegion};
use shinf::transfer::{eval_transfer, worst_case_gain};
use shinf::{SolverConfig, UncertainDelaySystem, UncertaintyPoint};

/// Scalar two-delay system, robustly stable by diagonal dominance of `A0`.
#[derive(Debug, Clone)]
struct Params {
    tau2: f64,
    a: [f64; 3],
    b: [f64; 3],
    c: [f64; 3],
    d: [f64; 3],
}

impl Params {
    fn system(&self) -> UncertainDelaySystem {
        scalar_system(
            &[1.0, self.tau2],
            &self.a,
            &self.b,
            &self.c,
            &self.d,
            vec![
                scalar_block(0.2, &[("A0", 1.0), ("D0", 1.0), ("B1", 0.5)]),
                scalar_block(0.3, &[("A1", 1.0), ("C2", 1.0)]),
            ],
        )
    }
}

fn params() -> impl Strategy<Value = Params> {
    (
        1.2..2.5f64,
        (-6.0..-3.0f64, -1.0..1.0f64, -1.0..1.0f64),
        prop::array::uniform3(-2.0..2.0f64),
        prop::array::uniform3(-2.0..2.0f64),
        (-2.0..2.0f64, -0.4..0.4f64, -0.4..0.4f64),
    )
        .prop_map(|(tau2, a, b, c, d)| Params { tau2, a: [a.0, a.1, a.2], b, c, d: [d.0, d.1, d.2] })
}

fn point(v: (f64, f64)) -> UncertaintyPoint {
    UncertaintyPoint::new(vec![RMat::from_element(1, 1, 0.2 * v.0), RMat::from_element(1, 1, 0.3 * v.1)])
}

fn unit() -> impl Strategy<Value = (f64, f64)> {
    (-1.0..1.0f64, -1.0..1.0f64)
}

fn fast() -> SolverConfig {
    SolverConfig { restarts: 2, omega_seeds: 24, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn assembly_is_affine(p in params(), x in unit(), y in unit(), t in 0.0..1.0f64) {
        let sys = p.system();
        let mix = (t * x.0 + (1.0 - t) * y.0, t * x.1 + (1.0 - t) * y.1);
        let (rx, ry, rm) = (sys.assemble(&point(x)).unwrap(), sys.assemble(&point(y)).unwrap(), sys.assemble(&point(mix)).unwrap());
        for (fx, fy, fm) in [(&rx.a, &ry.a, &rm.a), (&rx.b, &ry.b, &rm.b), (&rx.c, &ry.c, &rm.c), (&rx.d, &ry.d, &rm.d)] {
            for k in 0..3 {
                let want = &fx[k] * t + &fy[k] * (1.0 - t);
                prop_assert!((&fm[k] - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn delayed_coefficients_ignore_big_delta(p in params(), x in unit(), re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let sys = p.system();
        let a = build_sdep(&sys, &point(x), &CMat::zeros(1, 1)).unwrap();
        let b = build_sdep(&sys, &point(x), &CMat::from_element(1, 1, C64::new(re, im))).unwrap();
        prop_assert_eq!(a.pk, b.pk);
    }

    #[test]
    fn real_big_delta_gives_conjugate_roots(p in params(), x in unit(), re in -0.3..0.3f64) {
        let sys = p.system();
        let sd = build_sdep(&sys, &point(x), &CMat::from_element(1, 1, C64::new(re, 0.0))).unwrap();
        let roots = rightmost_roots(&sd, &SpectrumRegion::new(60.0), 10).unwrap();
        for r in roots.iter().take(4) {
            let d = roots.iter().map(|q| (q.lambda - r.lambda.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-7 * r.lambda.norm().max(1.0), "{} has no partner", r.lambda);
        }
    }

    #[test]
    fn gain_is_even_in_frequency(p in params(), x in unit(), w in 0.0..50.0f64) {
        let sys = p.system();
        let g = |s: f64| svd_extremes(&eval_transfer(&sys, &point(x), C64::new(0.0, s)).unwrap()).sigma1;
        prop_assert!((g(w) - g(-w)).abs() < 1e-12 * g(w).max(1.0));
    }

    #[test]
    fn roots_make_the_loop_singular(p in params(), x in unit(), re in -0.3..0.3f64, im in -0.3..0.3f64) {
        let sys = p.system();
        let big = C64::new(re, im);
        let sd = build_sdep(&sys, &point(x), &CMat::from_element(1, 1, big)).unwrap();
        for r in rightmost_roots(&sd, &SpectrumRegion::new(60.0), 4).unwrap() {
            let t = eval_transfer(&sys, &point(x), r.lambda).unwrap()[(0, 0)];
            let det = C64::new(1.0, 0.0) - big * t;
            prop_assert!(det.norm() < 1e-8 * (1.0 + t.norm()), "{}: {}", r.lambda, det);
        }
    }

    #[test]
    fn collocation_order_does_not_move_leading_root(p in params(), x in unit()) {
        let sys = p.system();
        let sd = build_sdep(&sys, &point(x), &CMat::zeros(1, 1)).unwrap();
        let region = SpectrumRegion::new(60.0);
        let at = |n: usize| {
            let opts = CollocationOptions { nodes: n, max_nodes: n, ..Default::default() };
            rightmost_roots_with(&sd, &region, 1, &opts).unwrap()[0].lambda
        };
        let (a, b) = (at(40), at(80));
        prop_assert!((a.re - b.re).abs() < 1e-8, "{} vs {}", a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn worst_case_perturbation_puts_root_on_axis(p in params(), w in 0.05..20.0f64) {
        let sys = p.system();
        let wc = worst_case_gain(&sys, w, &fast()).unwrap();
        let delta = &wc.v * wc.u.adjoint() / C64::new(wc.gain, 0.0);
        prop_assert!((spectral_norm(&delta) - 1.0 / wc.gain).abs() < 1e-12 / wc.gain);
        let sd = build_sdep(&sys, &wc.point, &delta).unwrap();
        let s = C64::new(0.0, w);
        let res = svd_extremes(&sd.char_matrix(s)).sigma_min / sd.residual_scale(s);
        prop_assert!(res <= 1e-8, "residual {}", res);
    }

    #[test]
    fn worst_case_gain_dominates_and_grows_with_bounds(p in params(), w in 0.05..20.0f64) {
        let sys = p.system();
        let nominal = svd_extremes(&eval_transfer(&sys, &sys.zero_point(), C64::new(0.0, w)).unwrap()).sigma1;
        let full = worst_case_gain(&sys, w, &fast()).unwrap().gain;
        let half = worst_case_gain(&sys.with_scaled_bounds(0.5).unwrap(), w, &fast()).unwrap().gain;
        prop_assert!(full >= nominal * (1.0 - 1e-12));
        prop_assert!(half >= nominal * (1.0 - 1e-12));
        prop_assert!(full >= half * (1.0 - 1e-9), "{} < {}", full, half);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn pseudo_flow_output_is_feasible_and_monotone(p in params(), frac in 0.05..0.9f64, seed in 0u64..1000) {
        let sys = p.system();
        let cfg = SolverConfig { seed, ..fast() };
        let asym = maximize_asymptotic(&sys, &cfg).unwrap().value;
        let eps = frac / asym.max(1e-3);
        let opt = pseudo_spectral_abscissa(&sys, eps, asym, &default_region(&sys, &cfg), &cfg).unwrap();
        prop_assert!((opt.state.u.norm() - 1.0).abs() < 1e-12);
        prop_assert!((opt.state.v.norm() - 1.0).abs() < 1e-12);
        sys.check_point(&opt.point).unwrap();
        for (b, blk) in opt.point.blocks.iter().zip(sys.blocks()) {
            prop_assert!(b.norm() <= blk.bound * (1.0 + 1e-12));
        }
        for pair in opt.trace.windows(2) {
            prop_assert!(pair[1].objective >= pair[0].objective - 1e-10, "{} then {}", pair[0].objective, pair[1].objective);
        }
        // The optimum dominates a random admissible configuration.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pt = sys.sample_point(&mut rng);
        let sd = build_sdep(&sys, &pt, &CMat::from_element(1, 1, C64::new(eps, 0.0))).unwrap();
        let r = rightmost_roots(&sd, &default_region(&sys, &cfg), 1).unwrap();
        prop_assert!(opt.alpha >= r[0].lambda.re - 1e-8);
    }
}
