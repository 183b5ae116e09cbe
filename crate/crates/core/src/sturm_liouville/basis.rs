//! The two-dimensional solution space of the 8-periodic problem and the
//! solution with a prescribed flat point.
//!
//! `U` is the extended first Dirichlet eigenfunction and `V(x) = U(x + 2)`.
//! Both are handled through their Prüfer states, so products such as the
//! Wronskian and the coefficients of a combination are formed in the log
//! domain and never overflow even when `U` spans thousands of decades.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::eigen::EigenResult;
use super::prufer::{Potential, PrState};
use crate::error::{Error, Result};
use crate::io::CsvTable;
use crate::ode::{self, Dp45Options, Segments};
use crate::smooth_kit::Feature;

/// A solution `u` of `u'' + K u = 0` known on an interval.
pub trait Solution1D: Sync {
    /// `(u, u', u'')` at `x`.
    fn eval(&self, x: f64) -> Result<[f64; 3]>;

    fn domain(&self) -> (f64, f64);

    /// `u(x) - level`, with whatever extra precision the representation
    /// carries.
    fn offset(&self, x: f64, level: f64) -> Result<f64> {
        Ok(self.eval(x)?[0] - level)
    }

    /// [`Solution1D::offset`] at increasing points `xs`, computed so that
    /// neighbouring values are mutually consistent, for difference quotients.
    fn offsets_along(&self, xs: &[f64], level: f64) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.offset(x, level)).collect()
    }

    /// `(u, u')` at increasing points `xs`, mutually consistent in the same
    /// sense as [`Solution1D::offsets_along`].
    fn states_along(&self, xs: &[f64]) -> Result<Vec<[f64; 2]>> {
        xs.iter().map(|&x| self.eval(x).map(|[u, up, _]| [u, up])).collect()
    }

    /// Points fine enough to separate consecutive sign changes of `u` and
    /// `u'` on `[a, b]`, in increasing order.
    fn sample_points(&self, a: f64, b: f64) -> Vec<f64> {
        let n = 2000;
        (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
    }
}

/// A closed-form solution, mostly for tests.
pub struct AnalyticSolution<F> {
    pub f: F,
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

impl<F: Fn(f64) -> [f64; 3] + Sync> Solution1D for AnalyticSolution<F> {
    fn eval(&self, x: f64) -> Result<[f64; 3]> {
        Ok((self.f)(x))
    }

    fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn sample_points(&self, a: f64, b: f64) -> Vec<f64> {
        let n = self.samples.max(2);
        (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
    }
}

impl Solution1D for EigenResult {
    fn eval(&self, x: f64) -> Result<[f64; 3]> {
        EigenResult::eval(self, x)
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, 8.0)
    }

    fn sample_points(&self, a: f64, b: f64) -> Vec<f64> {
        let mut xs: Vec<f64> = self.left.iter().chain(&self.right).map(|s| s.x).collect();
        xs.extend(self.left.iter().chain(&self.right).map(|s| 8.0 - s.x));
        xs.push(a);
        xs.push(b);
        xs.retain(|x| *x >= a && *x <= b);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }
}

/// `ln |W|` and the sign of `W = u1 u2' - u1' u2` for two Prüfer states
/// sharing the scale `s`, together with `|sin(theta1 - theta2)|`.
fn wronskian(a: &PrState, b: &PrState, s: f64) -> (f64, f64, f64) {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let sd = sa * cb - ca * sb;
    (s.ln() + a.ln_rho + b.ln_rho + sd.abs().ln(), sd.signum(), sd.abs())
}

/// `{U, V}` with the checks of the symmetry argument.
#[derive(Clone, Debug)]
pub struct SolutionBasis {
    pub u: EigenResult,
    pub report: BasisReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisReport {
    pub m: u64,
    /// `|U'(2)| / max |U'|`.
    pub u_prime_at_2: f64,
    pub u_at_2: f64,
    /// `ln U'(0)`.
    pub ln_u_prime_at_0: f64,
    /// `ln |W|` at `x = 2`.
    pub ln_wronskian: f64,
    pub wronskian_sign: f64,
    /// Largest `|W(x) / W(2) - 1|` over the sample points.
    pub wronskian_spread: f64,
    /// Largest `|sin(theta_U - theta_V)|`: the angle between the two
    /// solution vectors, independent of their very different sizes.
    pub independence: f64,
    pub wronskian_points: usize,
}

impl BasisReport {
    pub fn wronskian_constant(&self, rel: f64) -> bool {
        self.wronskian_spread <= rel
    }
}

impl SolutionBasis {
    pub fn scale(&self) -> f64 {
        self.u.prufer_scale
    }

    pub fn u_state(&self, x: f64) -> Result<PrState> {
        self.u.state_at(x)
    }

    pub fn v_state(&self, x: f64) -> Result<PrState> {
        self.u.state_at(x + 2.0)
    }

    /// `(V, V', V'')` at `x`.
    pub fn v_eval(&self, x: f64) -> Result<[f64; 3]> {
        self.u.eval(x + 2.0)
    }

    pub fn wronskian_at(&self, x: f64) -> Result<(f64, f64)> {
        let (ln_w, sign, _) = wronskian(&self.u_state(x)?, &self.v_state(x)?, self.scale());
        Ok((ln_w, sign))
    }
}

/// Builds `{U, V}` and checks `U'(2) = 0` to `symmetry_tol` relative to
/// `max |U'|`, `U(2) != 0`, `U'(0) != 0` and the constancy of the Wronskian.
pub fn build_solution_basis(eig: EigenResult, symmetry_tol: f64) -> Result<SolutionBasis> {
    let s = eig.prufer_scale;
    let (_, max_up) = eig.max_abs();
    let at2 = eig.state_on_base(2.0)?;
    let (sn2, cs2) = at2.sin_cos();
    let up2 = s * (at2.ln_rho.exp()) * cs2;
    let u2 = at2.ln_rho.exp() * sn2;
    let u_prime_at_2 = up2.abs() / max_up;
    if !(u_prime_at_2 <= symmetry_tol) {
        return Err(Error::SymmetryViolation { derivative: u_prime_at_2, tolerance: symmetry_tol });
    }
    let at0 = eig.state_on_base(0.0)?;
    let ln_u_prime_at_0 = s.ln() + at0.ln_rho + at0.sin_cos().1.abs().ln();
    if u2 == 0.0 || !ln_u_prime_at_0.is_finite() {
        return Err(Error::DegenerateBasis { x: if u2 == 0.0 { 2.0 } else { 0.0 } });
    }
    let n = 64;
    let mut values = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let x = 8.0 * k as f64 / n as f64;
        let a = eig.state_at(x)?;
        let b = eig.state_at(x + 2.0)?;
        values.push(wronskian(&a, &b, s));
    }
    let (ln_w, sign, _) = wronskian(&at2, &eig.state_at(4.0)?, s);
    if !ln_w.is_finite() {
        return Err(Error::DegenerateBasis { x: 2.0 });
    }
    let mut spread: f64 = 0.0;
    let mut independence: f64 = 0.0;
    for &(l, sg, sd) in &values {
        let dev = if sg == sign { (l - ln_w).exp_m1().abs() } else { f64::INFINITY };
        spread = spread.max(dev);
        independence = independence.max(sd);
    }
    let report = BasisReport {
        m: eig.m,
        u_prime_at_2,
        u_at_2: u2,
        ln_u_prime_at_0,
        ln_wronskian: ln_w,
        wronskian_sign: sign,
        wronskian_spread: spread,
        independence,
        wronskian_points: values.len(),
    };
    Ok(SolutionBasis { u: eig, report })
}

/// `ln |c|` and the sign of a coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogCoefficient {
    pub ln_abs: f64,
    pub sign: f64,
}

impl LogCoefficient {
    fn times(&self, st: &PrState, s: f64) -> (f64, f64, f64, f64) {
        let (sn, cs) = st.sin_cos();
        (
            self.ln_abs + st.ln_rho + sn.abs().ln(),
            self.sign * sn.signum(),
            self.ln_abs + s.ln() + st.ln_rho + cs.abs().ln(),
            self.sign * cs.signum(),
        )
    }
}

fn signed_exp(ln_abs: f64, sign: f64) -> f64 {
    if ln_abs == f64::NEG_INFINITY {
        0.0
    } else {
        sign * ln_abs.exp()
    }
}

/// Coefficients of `u = alpha U + beta V` and their checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Combination {
    pub alpha: LogCoefficient,
    pub beta: LogCoefficient,
    /// `|alpha U'(x*) + beta V'(x*)|` relative to the larger term.
    pub derivative_residual: f64,
    /// Largest `|alpha U + beta V - u|` at a few window points, with `u` from
    /// the direct integration.
    pub basis_mismatch: f64,
}

/// The solution with `u(x_star) = 1`, `u'(x_star) = 0` on a window around
/// `x_star`, stored as `u = 1 + w` so that the small departures of `u` from
/// its flat value keep full relative precision.
#[derive(Clone)]
pub struct FlatSolution {
    pub x_star: f64,
    pub lo: f64,
    pub hi: f64,
    pub m: u64,
    pub lambda: f64,
    pub combination: Option<Combination>,
    potential: Arc<dyn Potential + Send>,
    /// `(x, w, w')`, increasing in `x`.
    samples: Vec<[f64; 3]>,
    caps: Vec<Feature>,
    default_cap: f64,
}

impl std::fmt::Debug for FlatSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlatSolution")
            .field("x_star", &self.x_star)
            .field("window", &(self.lo, self.hi))
            .field("samples", &self.samples.len())
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatSummary {
    pub x_star: f64,
    pub m: u64,
    pub lambda: f64,
    pub window: (f64, f64),
    pub combination: Option<Combination>,
    pub samples: usize,
}

fn window_options() -> Dp45Options {
    Dp45Options { rtol: 1e-12, atol: 1e-30, max_steps: 20_000_000, running_scale: true }
}

impl FlatSolution {
    /// Integrates `w'' = -K (1 + w)`, `w(x*) = w'(x*) = 0` on
    /// `[x_star - half_width, x_star + half_width]`, with steps capped by the
    /// given features.
    pub fn integrate(
        potential: Arc<dyn Potential + Send>,
        x_star: f64,
        half_width: f64,
        caps: Vec<Feature>,
    ) -> Result<FlatSolution> {
        if !(x_star.is_finite() && half_width > 0.0) {
            return Err(Error::SpecViolation(format!("bad flat-point window {x_star} +- {half_width}")));
        }
        let (lo, hi) = (x_star - half_width, x_star + half_width);
        let default_cap = half_width / 200.0;
        let p = &potential;
        let rhs = |x: f64, y: &[f64; 2]| [y[1], -p.k(x) * (1.0 + y[0])];
        let mut right = Vec::new();
        let mut left = Vec::new();
        let opts = window_options();
        ode::integrate(rhs, x_star, [0.0, 0.0], &Segments::new(x_star, hi, &caps, default_cap), &opts, |x, y| {
            right.push([x, y[0], y[1]])
        })?;
        ode::integrate(rhs, x_star, [0.0, 0.0], &Segments::new(x_star, lo, &caps, default_cap), &opts, |x, y| {
            left.push([x, y[0], y[1]])
        })?;
        left.reverse();
        left.pop();
        left.extend(right);
        Ok(FlatSolution {
            x_star,
            lo,
            hi,
            m: 0,
            lambda: f64::NAN,
            combination: None,
            potential,
            samples: left,
            caps,
            default_cap,
        })
    }

    pub fn k(&self, x: f64) -> f64 {
        self.potential.k(x)
    }

    pub fn summary(&self) -> FlatSummary {
        FlatSummary {
            x_star: self.x_star,
            m: self.m,
            lambda: self.lambda,
            window: (self.lo, self.hi),
            combination: self.combination,
            samples: self.samples.len(),
        }
    }

    /// `(w, w')` at `x`, re-integrated from the nearest stored sample.
    pub fn eval_w(&self, x: f64) -> Result<[f64; 2]> {
        if !(x >= self.lo && x <= self.hi) {
            return Err(Error::Integration { x, reason: "outside the solution window" });
        }
        let k = self.samples.partition_point(|s| s[0] <= x);
        let cand = [k.saturating_sub(1), k.min(self.samples.len() - 1)];
        let from = cand
            .iter()
            .map(|&i| self.samples[i])
            .min_by(|a, b| (a[0] - x).abs().total_cmp(&(b[0] - x).abs()))
            .expect("samples");
        if from[0] == x {
            return Ok([from[1], from[2]]);
        }
        let seg = Segments::new(from[0], x, &self.caps, self.default_cap);
        let p = &self.potential;
        ode::integrate(
            |x, y: &[f64; 2]| [y[1], -p.k(x) * (1.0 + y[0])],
            from[0],
            [from[1], from[2]],
            &seg,
            &window_options(),
            |_, _| {},
        )
    }

    /// `(w, w')` at the increasing points `xs`, from one integration that
    /// starts at the stored sample nearest to `xs[0]` and stops at each point.
    pub fn path_w(&self, xs: &[f64]) -> Result<Vec<[f64; 2]>> {
        let Some(&first) = xs.first() else { return Ok(vec![]) };
        let mut state = self.eval_w(first)?;
        let mut out = vec![state];
        let p = &self.potential;
        for w in xs.windows(2) {
            if !(w[1] >= w[0] && w[1] <= self.hi) {
                return Err(Error::Integration { x: w[1], reason: "points must increase inside the window" });
            }
            if w[1] > w[0] {
                let seg = Segments::new(w[0], w[1], &self.caps, self.default_cap);
                state = ode::integrate(
                    |x, y: &[f64; 2]| [y[1], -p.k(x) * (1.0 + y[0])],
                    w[0],
                    state,
                    &seg,
                    &window_options(),
                    |_, _| {},
                )?;
            }
            out.push(state);
        }
        Ok(out)
    }

    /// `(w, w')` at `x` by quintic Hermite interpolation of the stored steps,
    /// using `w'' = -K (1 + w)` at both ends.
    pub fn dense_w(&self, x: f64) -> Result<[f64; 2]> {
        if !(x >= self.lo && x <= self.hi) {
            return Err(Error::Integration { x, reason: "outside the solution window" });
        }
        let n = self.samples.len();
        let k = self.samples.partition_point(|s| s[0] <= x).clamp(1, n - 1);
        let (a, b) = (self.samples[k - 1], self.samples[k]);
        if x == a[0] {
            return Ok([a[1], a[2]]);
        }
        let h = b[0] - a[0];
        let s = (x - a[0]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);
        let (fa, fb) = (-self.k(a[0]) * (1.0 + a[1]), -self.k(b[0]) * (1.0 + b[1]));
        let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
        let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
        let h3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
        let h5 = 0.5 * (s3 - 2.0 * s4 + s5);
        let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
        let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
        let d2 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
        let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
        let d5 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
        let w = h0 * a[1] + h3 * b[1] + h * (h1 * a[2] + h4 * b[2]) + h * h * (h2 * fa + h5 * fb);
        let wp = d0 * (a[1] - b[1]) / h + d1 * a[2] + d4 * b[2] + h * (d2 * fa + d5 * fb);
        Ok([w, wp])
    }

    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["x", "u", "u_prime", "w"]);
        for s in &self.samples {
            t.push(vec![s[0], 1.0 + s[1], s[2], s[1]]);
        }
        t
    }

    pub fn stored_points(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s[0])
    }
}

impl Solution1D for FlatSolution {
    fn eval(&self, x: f64) -> Result<[f64; 3]> {
        let [w, wp] = self.dense_w(x)?;
        Ok([1.0 + w, wp, -self.k(x) * (1.0 + w)])
    }

    fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn offset(&self, x: f64, level: f64) -> Result<f64> {
        let w = self.dense_w(x)?[0];
        Ok(if level == 1.0 { w } else { (1.0 + w) - level })
    }

    fn offsets_along(&self, xs: &[f64], level: f64) -> Result<Vec<f64>> {
        Ok(self.path_w(xs)?.into_iter().map(|[w, _]| if level == 1.0 { w } else { (1.0 + w) - level }).collect())
    }

    fn states_along(&self, xs: &[f64]) -> Result<Vec<[f64; 2]>> {
        Ok(self.path_w(xs)?.into_iter().map(|[w, wp]| [1.0 + w, wp]).collect())
    }

    fn sample_points(&self, a: f64, b: f64) -> Vec<f64> {
        let mut xs: Vec<f64> = self.stored_points().filter(|x| *x > a && *x < b).collect();
        xs.insert(0, a);
        xs.push(b);
        xs
    }
}

/// `u = alpha U + beta V` with `u(x_star) = 1`, `u'(x_star) = 0`, integrated
/// directly on `[x_star - half_width, x_star + half_width]` and cross-checked
/// against the combination of the basis.
pub fn solve_with_flat_point(basis: &SolutionBasis, x_star: f64, half_width: f64) -> Result<FlatSolution> {
    solve_with_flat_point_using(basis, x_star, half_width, Arc::new(basis.u.potential.clone()))
}

/// [`solve_with_flat_point`] with the direct integration driven by
/// `potential`, an equivalent form of the basis potential on the window
/// that is better conditioned there.
pub fn solve_with_flat_point_using(
    basis: &SolutionBasis,
    x_star: f64,
    half_width: f64,
    potential: Arc<dyn Potential + Send>,
) -> Result<FlatSolution> {
    let s = basis.scale();
    let su = basis.u_state(x_star)?;
    let sv = basis.v_state(x_star)?;
    let (_, _, sd) = wronskian(&su, &sv, s);
    let sin_d = {
        let (a, b) = (su.sin_cos(), sv.sin_cos());
        a.0 * b.1 - a.1 * b.0
    };
    if !(sd > 1e-14) {
        return Err(Error::DegenerateBasis { x: x_star });
    }
    // alpha = V'/W, beta = -U'/W with W = s rho_u rho_v sin(theta_u - theta_v)
    let (_, cu) = su.sin_cos();
    let (_, cv) = sv.sin_cos();
    let alpha = LogCoefficient { ln_abs: cv.abs().ln() - su.ln_rho - sd.ln(), sign: cv.signum() * sin_d.signum() };
    let beta = LogCoefficient { ln_abs: cu.abs().ln() - sv.ln_rho - sd.ln(), sign: -cu.signum() * sin_d.signum() };
    let (_, _, lu_p, sg_u_p) = alpha.times(&su, s);
    let (_, _, lv_p, sg_v_p) = beta.times(&sv, s);
    let big = lu_p.max(lv_p);
    let derivative_residual = if big == f64::NEG_INFINITY {
        0.0
    } else {
        (signed_exp(lu_p - big, sg_u_p) + signed_exp(lv_p - big, sg_v_p)).abs()
    };

    let caps = basis.u.potential.q.features_in(x_star - half_width, x_star + half_width);
    let mut flat = FlatSolution::integrate(potential, x_star, half_width, caps)?;
    flat.m = basis.u.m;
    flat.lambda = basis.u.lambda;
    let mut mismatch: f64 = 0.0;
    for k in 0..=4 {
        let x = flat.lo + (flat.hi - flat.lo) * k as f64 / 4.0;
        let (lu, sgu, _, _) = alpha.times(&basis.u_state(x)?, s);
        let (lv, sgv, _, _) = beta.times(&basis.v_state(x)?, s);
        let combo = signed_exp(lu, sgu) + signed_exp(lv, sgv);
        let direct = 1.0 + flat.eval_w(x)?[0];
        mismatch = mismatch.max((combo - direct).abs());
    }
    flat.combination = Some(Combination { alpha, beta, derivative_residual, basis_mismatch: mismatch });
    Ok(flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth_kit::ProfileFunction;
    use crate::sturm_liouville::{first_dirichlet_eigenvalue, EigenOptions};
    use std::f64::consts::PI;

    fn constant_basis(m: u64) -> SolutionBasis {
        let q = ProfileFunction::constant(1.0);
        let eig = first_dirichlet_eigenvalue(&q, m, &EigenOptions::default()).unwrap();
        build_solution_basis(eig, 1e-6).unwrap()
    }

    #[test]
    fn constant_basis_is_sine_cosine_pair() {
        let b = constant_basis(0);
        assert!(b.report.u_prime_at_2 < 1e-9);
        assert!(b.report.wronskian_spread < 1e-9);
        // U = sin(pi x/4) scaled to max 1, V = cos(pi x/4): W = -pi/4
        assert!((b.report.ln_wronskian - (PI / 4.0).ln()).abs() < 1e-8);
        assert_eq!(b.report.wronskian_sign, -1.0);
        let v = b.v_eval(0.7).unwrap()[0];
        assert!((v - (PI * 0.7 / 4.0).cos()).abs() < 1e-9);
    }

    #[test]
    fn flat_point_at_zero_is_cosine() {
        let b = constant_basis(0);
        let f = solve_with_flat_point(&b, 0.0, 1.0).unwrap();
        let c = f.combination.unwrap();
        assert!(c.derivative_residual < 1e-14);
        assert!(c.basis_mismatch < 1e-9);
        for x in [-0.9, -0.2, 0.3, 1.0] {
            let u = f.eval(x).unwrap();
            assert!((u[0] - (PI * x / 4.0).cos()).abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn dense_output_matches_reintegration() {
        let b = constant_basis(5);
        let f = solve_with_flat_point(&b, 1.3, 0.6).unwrap();
        for k in 0..200 {
            let x = 0.7 + 1.2 * (k as f64 + 0.37) / 200.0;
            let d = f.dense_w(x).unwrap();
            let e = f.eval_w(x).unwrap();
            assert!((d[0] - e[0]).abs() < 1e-11 && (d[1] - e[1]).abs() < 1e-10, "{x}: {d:?} {e:?}");
        }
    }

    #[test]
    fn flat_point_at_two_is_normalized_u() {
        let b = constant_basis(3);
        let f = solve_with_flat_point(&b, 2.0, 0.5).unwrap();
        let u2 = b.u.eval(2.0).unwrap()[0];
        for x in [1.6, 2.3] {
            let direct = f.eval(x).unwrap()[0];
            let via_u = b.u.eval(x).unwrap()[0] / u2;
            assert!((direct - via_u).abs() < 1e-9);
        }
    }

    #[test]
    fn broken_symmetry_is_reported() {
        let q = ProfileFunction::from_fn("skew", None, |x| {
            let (s, c) = (0.9 * x).sin_cos();
            crate::jet::Jet::new(1.0 + 0.3 * s, 0.27 * c, -0.243 * s)
        });
        let eig = first_dirichlet_eigenvalue(&q, 2, &EigenOptions::default()).unwrap();
        assert!(matches!(build_solution_basis(eig, 1e-6), Err(Error::SymmetryViolation { .. })));
    }
}
