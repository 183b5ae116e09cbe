use std::sync::Arc;

use proptest::prelude::*;

use torus_cascade::pipeline::PipelineConfig;
use torus_cascade::smooth_kit::{
    make_q_s_tau, make_q_tilde, make_q_with, CascadeProfile, CascadeSpec, Mutation, ProfileFunction, QParams,
    SiteAssignment, SkeletonParams, TrigPolynomial,
};
use torus_cascade::sturm_liouville::{first_dirichlet_eigenvalue, EigenOptions};

fn layered() -> ProfileFunction {
    let q = make_q_with(QParams::default()).unwrap();
    let spec = CascadeSpec::geometric(&SkeletonParams::default()).unwrap();
    let h = Arc::new(CascadeProfile::new(&spec, &Mutation::default()).unwrap());
    make_q_s_tau(&q, &h, &SiteAssignment::new(vec![1.4, 2.9], vec![1e-4, 1e-6]).unwrap()).unwrap()
}

fn trig(a0: f64, c: &[f64]) -> ProfileFunction {
    let p = TrigPolynomial { a0, cos: c.to_vec(), sin: vec![0.0; c.len()], half_period: 1.0 };
    ProfileFunction::new("trig", p)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn profiles_are_even_and_two_periodic(x in -3.0f64..3.0) {
        let q = make_q_with(QParams::default()).unwrap();
        let qt = make_q_tilde(QParams::default()).unwrap();
        for f in [&q, &qt, &layered()] {
            let v = f.eval(x);
            prop_assert!((f.eval(-x) - v).abs() <= 1e-14 * v.abs());
            prop_assert!((f.eval(x + 2.0) - v).abs() <= 1e-13 * v.abs());
            prop_assert!(v > 0.0);
        }
    }

    #[test]
    fn sandwich_is_pointwise(x in 0.0f64..1.0) {
        let q = make_q_with(QParams::default()).unwrap();
        let qt = make_q_tilde(QParams::default()).unwrap();
        let qs = layered();
        prop_assert!(qt.eval(x) <= qs.eval(x) + 1e-15);
        prop_assert!(qs.eval(x) <= q.eval(x) + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn eigenvalue_scales_inversely(c in 0.3f64..3.0, a in -0.4f64..0.4, m in 0u64..6) {
        let opts = EigenOptions { tol: 1e-13, ..EigenOptions::default() };
        let q = trig(1.0, &[a]);
        let scaled = trig(c, &[c * a]);
        let l1 = first_dirichlet_eigenvalue(&q, m, &opts).unwrap().lambda;
        let l2 = first_dirichlet_eigenvalue(&scaled, m, &opts).unwrap().lambda;
        prop_assert!((l2 * c - l1).abs() <= 1e-9 * l1, "{} vs {}", l2 * c, l1);
    }

    #[test]
    fn eigenvalue_decreases_with_the_coefficient(a in -0.4f64..0.4, lift in 0.01f64..1.0, m in 0u64..6) {
        let opts = EigenOptions::default();
        let low = first_dirichlet_eigenvalue(&trig(1.0, &[a]), m, &opts).unwrap().lambda;
        let high = first_dirichlet_eigenvalue(&trig(1.0 + lift, &[a]), m, &opts).unwrap().lambda;
        prop_assert!(high < low);
    }

    #[test]
    fn config_round_trips(k in 1usize..5, depth in 4usize..20, c_prime in 1.05f64..1.9, seed in 0..=i64::MAX as u64) {
        let mut cfg = PipelineConfig::default();
        cfg.tuner.k = k;
        cfg.profile.cascade.depth = depth;
        cfg.analysis.c_prime = c_prime;
        cfg.seed = seed;
        prop_assert!(cfg.validate().is_ok());
        let back = PipelineConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
