use proptest::prelude::*;

use stoch_ch::dynamics::{Dynamics, ModelParams, NoiseForm, SigmaProfile};
use stoch_ch::experiments::config::RunConfig;
use stoch_ch::experiments::{decode_snapshot, encode_snapshot};
use stoch_ch::grid::{FourierField, SpectralGrid};
use stoch_ch::integrators::{integrate_linear_exact, step, Scheme, StepperConfig};
use stoch_ch::noise::BrownianPath;

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2 * n + 1)
}

fn sigma() -> impl Strategy<Value = SigmaProfile> {
    (-0.6f64..0.6, -0.2f64..0.2, -0.1f64..0.1)
        .prop_map(|(m, a, b)| SigmaProfile::from_coeffs(vec![m, a, b]).unwrap())
}

const SCHEMES: [Scheme; 4] = [Scheme::EulerMaruyama, Scheme::Milstein, Scheme::HeunStratonovich, Scheme::SplitStratonovich];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval_on_physical_grid(n in 1usize..24, c in coeffs(24)) {
        let grid = SpectralGrid::new(n);
        let f = FourierField::from_coeffs(&grid, c[..2 * n + 1].to_vec()).unwrap();
        let vals = f.to_physical();
        let mean_sq = vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64;
        let euclid = c[..2 * n + 1].iter().map(|v| v * v).sum::<f64>();
        prop_assert!((f.sobolev_norm_sq(0) - euclid).abs() <= 1e-12 * (1.0 + euclid));
        prop_assert!((mean_sq - euclid).abs() <= 1e-12 * (1.0 + euclid));
    }

    #[test]
    fn projection_idempotent_and_contractive(n in 2usize..20, k in 0usize..20, c in coeffs(20)) {
        let grid = SpectralGrid::new(n);
        let f = FourierField::from_coeffs(&grid, c[..2 * n + 1].to_vec()).unwrap();
        let p = f.project(k);
        prop_assert_eq!(p.project(k), p.clone());
        prop_assert!(p.sobolev_norm_sq(1) <= f.sobolev_norm_sq(1));
    }

    #[test]
    fn bridge_refinement_preserves_coarse_increments(seed in any::<u64>(), idx in 0u64..1000, steps in 1usize..64, levels in 1u32..4) {
        let base = BrownianPath::sample(seed, idx, 1.0 / steps as f64, steps).unwrap();
        let mut fine = base.refine_times(levels);
        for _ in 0..levels {
            fine = fine.coarsen().unwrap();
        }
        for (a, b) in base.increments.iter().zip(&fine.increments) {
            prop_assert!((a - b).abs() <= 1e-14);
        }
        prop_assert_eq!(BrownianPath::sample(seed, idx, 1.0 / steps as f64, steps).unwrap(), base);
    }

    #[test]
    fn schemes_keep_zero_and_constants(s in sigma(), c in -2.0f64..2.0, dw in -0.05f64..0.05, eps in 0.0f64..0.02) {
        let p = ModelParams::new(eps, s, 8, NoiseForm::Basic).unwrap();
        let zero = FourierField::zeros(p.grid());
        let constant = FourierField::constant(p.grid(), c);
        for scheme in SCHEMES {
            let cfg = StepperConfig::new(scheme, 1e-3, 1e-3, 1);
            prop_assert_eq!(step(&zero, &p, &cfg, dw).unwrap(), zero.clone());
            let out = step(&constant, &p, &cfg, dw).unwrap();
            prop_assert!(out.max_abs_diff(&constant).unwrap() <= 1e-12, "{:?}", scheme);
        }
    }

    #[test]
    fn split_step_is_exact_for_constant_transport(s in -0.8f64..0.8, dw in -0.3f64..0.3, c in coeffs(6)) {
        let p = ModelParams::with_dynamics(0.0, SigmaProfile::constant(s), 6, NoiseForm::Basic, Dynamics::PureTransport).unwrap();
        let u = FourierField::from_coeffs(p.grid(), c).unwrap();
        let cfg = StepperConfig::new(Scheme::SplitStratonovich, 1e-3, 1e-3, 1);
        let stepped = step(&u, &p, &cfg, dw).unwrap();
        let exact = integrate_linear_exact(&u, s, dw);
        prop_assert!(stepped.max_abs_diff(&exact).unwrap() <= 1e-12);
    }

    #[test]
    fn snapshot_roundtrip(n in 0usize..40, c in coeffs(40)) {
        let grid = SpectralGrid::new(n.max(1));
        let len = 2 * n.max(1) + 1;
        let f = FourierField::from_coeffs(&grid, c[..len].to_vec()).unwrap();
        prop_assert_eq!(decode_snapshot(&encode_snapshot(&f)).unwrap(), f);
    }

    #[test]
    fn override_sets_integer_fields(n in 1usize..200, seed in any::<u64>()) {
        let text = r#"{"schema_version": 1,
            "model": {"epsilon": 0.0, "sigma": {"kind": "constant", "value": 0.0}, "n": 4},
            "stepper": {"scheme": "rk4_deterministic", "dt": 0.1, "t_end": 1.0},
            "initial": {"kind": "zero"}}"#;
        let cfg = RunConfig::from_str_with_overrides(
            text,
            &[format!("model.n={n}"), format!("ensemble.master_seed={seed}"), "ensemble.n_paths=2".into()],
        ).unwrap();
        prop_assert_eq!(cfg.model.n, n);
        prop_assert_eq!(cfg.ensemble.master_seed, seed);
    }
}
