//! Cross-module invariants, checked on random parameters.

use bdlab_core::birthdeath::{nu, outcome_distribution, AscentSchedule, ConstantRates};
use bdlab_core::martingale::{space_bound, space_type_bound, z_value};
use bdlab_core::oracle::{expected_population, many_to_one_expectation, transformed_expectation, Bounded, OracleConfig};
use bdlab_core::paths::{functional_j, optimal_paths, AscentSpec, FunctionalMode};
use bdlab_core::sim::{run, SimConfig};
use bdlab_core::spectral::{lambda_min, Sign};
use bdlab_core::{ModelParams, SpectralQuantities};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (2.0f64..30.0, 0.2f64..3.0, 0.0f64..0.9, 0.05f64..2.0)
        .prop_map(|(theta, a, rfrac, rho)| ModelParams::new(theta, a, rfrac * theta / 8.0, rho).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bd_pmf_is_a_law_with_the_stated_mean(b in 0.0f64..3.0, m in 0.0f64..3.0, tau in 0.05f64..4.0) {
        let d = outcome_distribution(&ConstantRates::new(b, m, tau).unwrap()).unwrap();
        let n = 4000;
        let total: f64 = d.pmf_table(n).iter().sum::<f64>() + d.tail(n);
        prop_assert!((total - 1.0).abs() < 1e-12, "{total}");
        prop_assert!(d.pmf_table(50).iter().all(|&q| q >= 0.0));
        let rel = (d.mean_from_pmf() - d.mean) / d.mean;
        prop_assert!(rel.abs() < 1e-10, "{rel}");
        prop_assert!((d.extinction_prob - d.u_tau).abs() < 1e-15);
    }

    #[test]
    fn ascent_schedule_nu_is_the_path_functional(p in params(), frac in 0.1f64..0.9, tau in 0.3f64..3.0) {
        let lambda = lambda_min(&p) * frac;
        let asc = optimal_paths(&p, AscentSpec::new(1.0, 1.0, 4.0).unwrap(), lambda, tau).unwrap();
        let j = functional_j(&p, &asc.x_path(), &asc.y_path(), tau, FunctionalMode::AtS).unwrap().j_value;
        let v = nu(&AscentSchedule { params: &p, ascent: &asc }, tau);
        prop_assert!((v - j).abs() <= 1e-7 * (1.0 + j.abs()), "nu {v} vs J {j}");
    }

    #[test]
    fn transformed_oracle_has_zero_variance_on_the_eigenfunction(p in params(), frac in 0.1f64..0.9, t in 0.1f64..1.5) {
        let lambda = lambda_min(&p) * frac;
        let s = SpectralQuantities::new(&p, lambda).unwrap();
        let f = Bounded::unbounded(move |x: f64, y: f64| (lambda * x + s.psi_minus * y * y).exp());
        let cfg = OracleConfig::new(0.05, 0.05, 16, 3).unwrap();
        let e = transformed_expectation(&p, lambda, &f, t, (0.0, 0.0), &cfg).unwrap();
        let target = (s.e_minus * t).exp();
        prop_assert!(e.variance < 1e-20 * target * target, "{}", e.variance);
        prop_assert!((e.result.estimate / target - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pathwise_bounds_hold_on_small_trees(p in params(), seed in 0u64..1000, frac in 0.05f64..0.95, gamma in 0.0f64..2.0, kappa in 0.0f64..1.5) {
        let cfg = SimConfig::new(0.05, 0.02, 5000, 1.0, seed).unwrap().with_snapshots(vec![0.25, 0.5, 1.0]).unwrap();
        let lambda = lambda_min(&p) * frac;
        for snap in run(&p, (0.0, 0.0), &cfg).unwrap().iter().filter(|s| !s.truncated) {
            prop_assert!(space_bound(snap, &p, lambda, gamma, None).unwrap().holds());
            prop_assert!(space_bound(snap, &p, lambda, gamma, Some((-1.0, 1.0))).unwrap().holds());
            prop_assert!(space_type_bound(snap, &p, lambda, gamma, kappa).unwrap().holds());
            prop_assert!(z_value(snap, &p, lambda, Sign::Plus).unwrap().is_finite());
        }
    }

    #[test]
    fn simulation_is_a_function_of_the_seed(seed in 0u64..1_000_000) {
        let p = ModelParams::p0();
        let cfg = SimConfig::new(0.05, 0.02, 5000, 0.6, seed).unwrap().with_snapshots(vec![0.3, 0.6]).unwrap();
        let a = run(&p, (0.5, -0.2), &cfg).unwrap();
        prop_assert_eq!(&a, &run(&p, (0.5, -0.2), &cfg).unwrap());
        for s in &a {
            prop_assert!(s.particles.windows(2).all(|w| w[0].label < w[1].label));
        }
    }
}

#[test]
fn many_to_one_without_type_breeding_is_exact() {
    // r = 0 makes the weight e^{ρt} deterministic
    let p = ModelParams::new(6.0, 0.5, 0.0, 0.7).unwrap();
    let one = Bounded::new(|_: f64, _: f64| 1.0, 1.0);
    let cfg = OracleConfig::new(0.05, 0.01, 20, 11).unwrap();
    let e = many_to_one_expectation(&p, &one, 1.3, (0.0, 0.4), &cfg).unwrap();
    let target = (0.7f64 * 1.3).exp();
    assert!((e.result.estimate / target - 1.0).abs() < 1e-12);
    assert!((expected_population(&p, 1.3, 0.4).unwrap() / target - 1.0).abs() < 1e-12);
}
