mod common;

use std::f64::consts::PI;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{fd_oracle, rel};
use torus_cascade::pipeline::checks::random_coefficient;
use torus_cascade::smooth_kit::{make_q_with, ProfileFunction, QParams};
use torus_cascade::sturm_liouville::{
    build_solution_basis, check_variational_brackets, fd_first_eigenvalue, first_dirichlet_eigenvalue, EigenOptions,
};

fn opts() -> EigenOptions {
    EigenOptions { tol: 1e-13, ..EigenOptions::default() }
}

#[test]
fn constant_coefficient_eigenvalues() {
    let q = ProfileFunction::constant(1.0);
    for m in 0..=10u64 {
        let e = first_dirichlet_eigenvalue(&q, m, &opts()).unwrap();
        let exact = PI * PI / 16.0 + (m * m) as f64;
        assert!(rel(e.lambda, exact) <= 1e-9, "m = {m}: {} vs {exact}", e.lambda);
        assert_eq!(e.interior_zeros(), 0);
    }
}

#[test]
fn scaled_constant_coefficient() {
    // Q = c gives Lambda = (pi^2/16 + m^2) / c
    for (c, m) in [(0.5, 3u64), (2.0, 7), (3.7, 0)] {
        let e = first_dirichlet_eigenvalue(&ProfileFunction::constant(c), m, &opts()).unwrap();
        let exact = (PI * PI / 16.0 + (m * m) as f64) / c;
        assert!(rel(e.lambda, exact) <= 1e-9);
    }
}

#[test]
fn oracles_agree_with_each_other() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let (q, m) = random_coefficient(&mut rng);
        let a = fd_oracle(&q, m, 4096);
        let b = fd_first_eigenvalue(&q, m, 4096);
        assert!(rel(a, b) < 1e-10, "{a} {b}");
    }
}

#[test]
fn shooting_matches_finite_differences_on_random_coefficients() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let (q, m) = random_coefficient(&mut rng);
        let e = first_dirichlet_eigenvalue(&q, m, &opts()).unwrap();
        let fd = fd_oracle(&q, m, 4096);
        let r = rel(e.lambda, fd);
        worst = worst.max(r);
        assert!(r <= 1e-5, "trial {trial}: m = {m}, shooting {} vs oracle {fd}", e.lambda);
    }
    assert!(start.elapsed().as_secs_f64() < 60.0);
    eprintln!("worst relative difference {worst:.3e}");
}

#[test]
fn default_profile_matches_finite_differences() {
    let q = make_q_with(QParams::default()).unwrap();
    let e = first_dirichlet_eigenvalue(&q, 5, &opts()).unwrap();
    let fd = fd_oracle(&q, 5, 4096);
    assert!(rel(e.lambda, fd) <= 1e-6, "{} vs {fd}", e.lambda);
}

#[test]
fn brackets_on_the_default_profile() {
    let q = make_q_with(QParams::default()).unwrap();
    let r = check_variational_brackets(&q, 0..=40, 0.05, &opts()).unwrap();
    assert!(r.lower_holds(), "{:?}", r.lower_violations);
    let m0 = r.m0.expect("upper bracket holds at m = 40");
    assert!(r.rows.iter().filter(|row| row.m >= m0).all(|row| row.upper_ok));
}

#[test]
fn symmetric_basis_for_an_even_periodic_coefficient() {
    let q = make_q_with(QParams::default()).unwrap();
    for m in [0u64, 4, 30] {
        let b = build_solution_basis(first_dirichlet_eigenvalue(&q, m, &opts()).unwrap(), 1e-6).unwrap();
        assert!(b.report.u_prime_at_2 <= 1e-6);
        assert!(b.report.wronskian_constant(1e-6), "{:?}", b.report);
        assert!(b.report.independence > 0.0);
    }
}
