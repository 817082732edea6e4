//! Invariants over randomized inputs.

use std::sync::{Arc, OnceLock};

use kssim::dynamics::{initial_state, rhs, step, EvolveConfig};
use kssim::ksctl::cli::parse_modes;
use kssim::ksctl::RunConfig;
use kssim::linops::{parse_spectra_csv, spectra_csv, LinearizedSystem, SpectrumReport};
use kssim::numgrid::{ModelParams, PlanarGrid};
use proptest::prelude::*;

fn system() -> &'static LinearizedSystem {
    static SYS: OnceLock<LinearizedSystem> = OnceLock::new();
    SYS.get_or_init(|| LinearizedSystem::new(ModelParams::default(), &PlanarGrid::new(16.0, 64).unwrap()).unwrap())
}

fn grid() -> &'static Arc<PlanarGrid> {
    system().grid()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rhs_and_step_conserve_mass(seed in 0u64..10_000, amp in 1e-6f64..1e-1) {
        let sys = system();
        let st = initial_state(grid(), sys.params(), seed, amp).unwrap();
        for linear in [true, false] {
            let r = rhs(&st, sys, linear).unwrap();
            prop_assert!(r.g.integral().abs() <= 1e-9 * r.g.l1_norm().max(1e-300));
        }
        let next = step(&st, sys, &EvolveConfig::default()).unwrap();
        prop_assert!(next.g.integral().abs() <= 1e-12 * amp);
    }

    #[test]
    fn linear_blocks_are_linear(seed in 0u64..10_000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let sys = system();
        let p = sys.params();
        let f = initial_state(grid(), p, seed, 1.0).unwrap().g;
        let g = initial_state(grid(), p, seed + 1, 1.0).unwrap().g;
        let lhs = sys.apply_l11(&f.axpby(a, &g, b)).unwrap();
        let rhs = sys.apply_l11(&f).unwrap().axpby(a, &sys.apply_l11(&g).unwrap(), b);
        let scale = lhs.max_abs().max(rhs.max_abs()).max(1e-300);
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-10 * scale);
    }

    #[test]
    fn bilinear_part_scales_quadratically(seed in 0u64..10_000, c in 0.1f64..10.0) {
        let sys = system();
        let st = initial_state(grid(), sys.params(), seed, 1e-2).unwrap();
        let nl = |s: &kssim::State| {
            let full = rhs(s, sys, false).unwrap();
            let lin = rhs(s, sys, true).unwrap();
            full.g.sub(&lin.g)
        };
        let scaled = kssim::State::new(st.g.scale(c), st.w.scale(c)).unwrap();
        let lhs = nl(&scaled);
        let rhs = nl(&st).scale(c * c);
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-9 * rhs.max_abs().max(1e-300));
    }

    #[test]
    fn spectra_csv_round_trips(vals in prop::collection::vec((-50.0f64..0.0, -5.0f64..5.0), 1..20), m in 0usize..8, deflated: bool) {
        let rep = SpectrumReport { m, deflated, cells: vals.len(), r_max: 10.0, eigenvalues: vals.clone(), gap: 1.0 };
        let rows = parse_spectra_csv(&spectra_csv(&[rep])).unwrap();
        prop_assert_eq!(rows.len(), vals.len());
        for (row, v) in rows.iter().zip(&vals) {
            prop_assert_eq!((row.0, row.1, row.2, row.3), (m, deflated, v.0, v.1));
        }
    }

    #[test]
    fn config_round_trips(mu in 0.1f64..4.0, eps in 1e-3f64..0.1, seed in 0..=i64::MAX as u64, n in 16usize..512) {
        let mut c = RunConfig::default();
        c.model.mu = mu;
        c.model.eps = eps;
        c.seed = seed;
        c.grid.n = n;
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn mode_ranges_are_inclusive(a in 0usize..20, len in 0usize..10) {
        let b = a + len;
        prop_assert_eq!(parse_modes(&format!("{a}..{b}")).unwrap().0, (a..=b).collect::<Vec<_>>());
    }
}
