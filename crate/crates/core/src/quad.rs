//! Fixed-order quadrature on composite panels.

/// Nodes and weights of the 8-point Gauss-Legendre rule on `[-1, 1]`.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Composite 8-point Gauss-Legendre rule with `panels` equal panels.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for &(x, w) in &GL8 {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// Composite Simpson rule with `n` (rounded up to even) subintervals.
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// Gauss-Legendre with panel doubling until two successive estimates agree
/// to `rel_tol`. Returns the estimate and whether the tolerance was met.
pub fn gauss_legendre_converged<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    start_panels: usize,
    rel_tol: f64,
) -> (f64, bool) {
    let mut panels = start_panels.max(1);
    let mut prev = gauss_legendre(&mut f, a, b, panels);
    for _ in 0..12 {
        panels *= 2;
        let next = gauss_legendre(&mut f, a, b, panels);
        if (next - prev).abs() <= rel_tol * next.abs().max(f64::MIN_POSITIVE) {
            return (next, true);
        }
        prev = next;
    }
    (prev, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_and_exp() {
        let v = gauss_legendre(|x| x.powi(15), 0.0, 1.0, 1);
        assert!((v - 1.0 / 16.0).abs() < 1e-15);
        let v = gauss_legendre(f64::exp, 0.0, 2.0, 4);
        assert!((v - (2f64.exp() - 1.0)).abs() < 1e-13);
        let v = simpson(f64::sin, 0.0, std::f64::consts::PI, 200);
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn converged_flag() {
        let (v, ok) = gauss_legendre_converged(|x| (-1.0 / (1.0 - x * x)).exp(), -1.0, 1.0, 4, 1e-13);
        assert!(ok);
        assert!((v - 0.443_993_816_168_079_4).abs() < 1e-12);
    }
}
