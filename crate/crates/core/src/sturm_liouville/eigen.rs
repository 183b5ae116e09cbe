//! First Dirichlet eigenpair of `u'' + (lambda Q - m^2) u = 0` on `[0, 4]`.
//!
//! The eigenvalue is parametrized by its excess `mu = lambda top - m^2`
//! where `top` is the reference maximum of `Q`; then
//! `K = lambda Q - m^2 = mu - lambda D` with `D = top - Q` the deficit, so
//! `K` keeps full relative precision even when `lambda Q` and `m^2` agree to
//! many digits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::prufer::{self, Potential, PrState, ShootOptions};
use crate::error::{Error, Result};
use crate::io::CsvTable;
use crate::ode::Segments;
use crate::quad::gauss_legendre;
use crate::roots;
use crate::smooth_kit::ProfileFunction;

/// `K(x) = mu - lambda D(x)` for a profile in deficit form.
#[derive(Clone, Debug)]
pub struct SlPotential {
    pub q: ProfileFunction,
    pub m: u64,
    pub mu: f64,
    pub lambda: f64,
}

impl SlPotential {
    pub fn new(q: &ProfileFunction, m: u64, mu: f64) -> Self {
        let m2 = (m as f64) * (m as f64);
        SlPotential { q: q.clone(), m, mu, lambda: (m2 + mu) / q.top() }
    }
}

impl Potential for SlPotential {
    #[inline]
    fn k(&self, x: f64) -> f64 {
        self.mu - self.lambda * self.q.deficit(x).v
    }
}

/// Solver settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenOptions {
    /// Relative width of the final bracket on the excess `mu`; this bounds
    /// the relative error of `lambda` from above.
    pub tol: f64,
    /// Local tolerance of the Prüfer integrator.
    pub shoot_tol: f64,
    /// Relative local tolerance on the log-amplitude increments.
    pub rel_ln_rho: f64,
    pub rel_phase: f64,
    pub h_max: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-10, shoot_tol: 1e-12, rel_ln_rho: 1e-12, rel_phase: 1e-12, h_max: 0.05, max_iter: 300 }
    }
}

impl EigenOptions {
    pub fn shoot(&self) -> ShootOptions {
        ShootOptions { tol: self.shoot_tol, rel_ln_rho: self.rel_ln_rho, rel_phase: self.rel_phase, h_max: self.h_max, ..ShootOptions::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub turns: i64,
    pub phi: f64,
    pub ln_rho: f64,
}

impl Sample {
    pub fn new(x: f64, st: PrState) -> Sample {
        Sample { x, turns: st.turns, phi: st.phi, ln_rho: st.ln_rho }
    }

    pub fn state(&self) -> PrState {
        PrState::from_parts(self.turns, self.phi, self.ln_rho)
    }

    pub fn theta(&self) -> f64 {
        self.state().theta()
    }
}

/// Serializable part of an [`EigenResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSummary {
    pub m: u64,
    pub lambda: f64,
    pub excess: f64,
    pub top: f64,
    pub bracket: (f64, f64),
    pub solver_tol: f64,
    pub shoot_tol: f64,
    pub prufer_scale: f64,
    pub mismatch: f64,
    pub iterations: usize,
    pub samples: usize,
}

/// The first Dirichlet eigenpair with a dense log-amplitude trajectory.
#[derive(Clone, Debug)]
pub struct EigenResult {
    pub m: u64,
    pub lambda: f64,
    /// `lambda top - m^2`.
    pub excess: f64,
    pub top: f64,
    pub bracket: (f64, f64),
    pub solver_tol: f64,
    pub prufer_scale: f64,
    pub mismatch: f64,
    pub iterations: usize,
    pub options: EigenOptions,
    pub potential: SlPotential,
    /// Forward samples on `[0, 2]`, increasing `x`.
    pub left: Vec<Sample>,
    /// Backward samples on `[2, 4]`, decreasing `x`.
    pub right: Vec<Sample>,
}

struct Shooter<'a> {
    q: &'a ProfileFunction,
    m: u64,
    s: f64,
    left: Segments,
    right: Segments,
    opts: ShootOptions,
}

impl<'a> Shooter<'a> {
    fn new(q: &'a ProfileFunction, m: u64, s: f64, opts: &EigenOptions) -> Self {
        let feats = q.features_in(0.0, 4.0);
        Shooter {
            q,
            m,
            s,
            left: Segments::new(0.0, 2.0, &feats, opts.h_max),
            right: Segments::new(4.0, 2.0, &feats, opts.h_max),
            opts: opts.shoot(),
        }
    }

    fn start(&self, right: bool) -> PrState {
        PrState::from_parts(i64::from(right), 0.0, -self.s.ln())
    }

    fn phases(&self, mu: f64) -> Result<(PrState, PrState)> {
        let p = SlPotential::new(self.q, self.m, mu);
        let (l, r) = rayon::join(
            || prufer::shoot(&p, self.s, self.start(false), &self.left, &self.opts, |_, _| {}),
            || prufer::shoot(&p, self.s, self.start(true), &self.right, &self.opts, |_, _| {}),
        );
        Ok((l?, r?))
    }

    fn mismatch(&self, mu: f64, target: f64) -> Result<f64> {
        let (l, r) = self.phases(mu)?;
        Ok(l.phase_diff(&r) - target)
    }

    fn record(&self, mu: f64) -> Result<(Vec<Sample>, Vec<Sample>)> {
        let p = SlPotential::new(self.q, self.m, mu);
        let mut left = Vec::new();
        let mut right = Vec::new();
        let (l, r) = rayon::join(
            || {
                prufer::shoot(&p, self.s, self.start(false), &self.left, &self.opts, |x, st| {
                    left.push(Sample::new(x, st))
                })
            },
            || {
                prufer::shoot(&p, self.s, self.start(true), &self.right, &self.opts, |x, st| {
                    right.push(Sample::new(x, st))
                })
            },
        );
        l?;
        r?;
        Ok((left, right))
    }
}

/// Bounds on `mu` from the Rayleigh quotient with `sin(pi x / 4)` and from
/// `Q_min <= Q <= Q_max`.
fn excess_bounds(q: &ProfileFunction, m: u64) -> Result<(f64, f64, f64, f64)> {
    let (qmin, qmax, argmin) = q.sampled_range(0.0, 4.0, 8192);
    if !(qmin > 0.0) {
        return Err(Error::NonpositiveQ { min: qmin, x: argmin });
    }
    let top = q.top();
    let m2 = (m as f64) * (m as f64);
    let base = PI * PI / 16.0;
    let r_lo = top / qmax;
    let r_hi = top / qmin * (1.0 + 1e-3);
    let lo = 0.9 * base * r_lo + m2 * ((top - qmax) / qmax);
    let hi = base * r_hi * 1.1 + m2 * (r_hi - 1.0) + 1.0;
    Ok((lo, hi, qmin, qmax))
}

/// Upper bounds for the first two excesses from the Rayleigh-Ritz principle
/// on the span of `sin(pi x / 4) g` and `sin(pi x / 4) (x - c) g`, with a
/// Gaussian `g` centred at the interior maximum of `Q`, minimized over the
/// Gaussian width.
fn ritz_excess_bounds(q: &ProfileFunction, m: u64) -> (f64, f64) {
    let top = q.top();
    let m2 = (m as f64) * (m as f64);
    let n = 4096;
    let c = (1..n)
        .map(|i| 4.0 * i as f64 / n as f64)
        .min_by(|&a, &b| {
            let (da, db) = (q.deficit(a).v, q.deficit(b).v);
            da.total_cmp(&db).then((a - 2.0).abs().total_cmp(&(b - 2.0).abs()))
        })
        .unwrap_or(2.0);
    let k = PI / 4.0;
    let mut best = (f64::INFINITY, f64::INFINITY);
    for i in 0..=48 {
        let w = 1e-4 * 10f64.powf(i as f64 * 5.0 / 48.0);
        let a = (c - 12.0 * w).max(0.0);
        let b = (c + 12.0 * w).min(4.0);
        // basis values and derivatives at x
        let basis = |x: f64| {
            let (sn, cs) = (k * x).sin_cos();
            let z = (x - c) / w;
            let g = (-0.5 * z * z).exp();
            let gp = -z / w * g;
            let u0 = sn * g;
            let u0p = k * cs * g + sn * gp;
            let u1 = (x - c) * u0;
            let u1p = u0 + (x - c) * u0p;
            ([u0, u1], [u0p, u1p])
        };
        let mut mm = [[0.0; 2]; 2];
        let mut bb = [[0.0; 2]; 2];
        for (r, cidx) in [(0, 0), (0, 1), (1, 1)] {
            let stiff = gauss_legendre(
                |x| {
                    let (u, up) = basis(x);
                    top * up[r] * up[cidx] + m2 * q.deficit(x).v * u[r] * u[cidx]
                },
                a,
                b,
                256,
            );
            let mass = gauss_legendre(
                |x| {
                    let (u, _) = basis(x);
                    q.eval(x) * u[r] * u[cidx]
                },
                a,
                b,
                256,
            );
            mm[r][cidx] = stiff;
            mm[cidx][r] = stiff;
            bb[r][cidx] = mass;
            bb[cidx][r] = mass;
        }
        // det(M - mu B) = 0
        let qa = bb[0][0] * bb[1][1] - bb[0][1] * bb[0][1];
        let qb = -(mm[0][0] * bb[1][1] + mm[1][1] * bb[0][0] - 2.0 * mm[0][1] * bb[0][1]);
        let qc = mm[0][0] * mm[1][1] - mm[0][1] * mm[0][1];
        let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
        if !(qa > 0.0) || !disc.is_finite() {
            continue;
        }
        let r_hi = (-qb + disc) / (2.0 * qa);
        let r_lo = if r_hi != 0.0 { qc / (qa * r_hi) } else { 0.0 };
        if r_lo.is_finite() && r_hi.is_finite() {
            best = (best.0.min(r_lo), best.1.min(r_hi));
        }
    }
    best
}

/// Finds the excess with `theta_L(2) - theta_R(2) = target`, where `target`
/// is `0` for the first eigenvalue and `pi` for the second.
fn solve_excess(
    sh: &Shooter<'_>,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    tol: f64,
    max_iter: usize,
) -> Result<roots::Root> {
    let mut flo = sh.mismatch(lo, target)?;
    let mut tries = 0;
    while flo >= 0.0 {
        tries += 1;
        if tries > 60 {
            return Err(Error::NoConvergence { what: "eigenvalue bracket (low)", iterations: tries, residual: flo });
        }
        hi = lo;
        lo = if lo > 0.0 { lo * 0.5 - 1.0 } else { 2.0 * lo - 1.0 };
        flo = sh.mismatch(lo, target)?;
    }
    let mut fhi = sh.mismatch(hi, target)?;
    tries = 0;
    while fhi <= 0.0 {
        tries += 1;
        if tries > 60 {
            return Err(Error::NoConvergence { what: "eigenvalue bracket (high)", iterations: tries, residual: fhi });
        }
        lo = hi;
        flo = fhi;
        hi = 2.0 * hi.abs() + 1.0;
        fhi = sh.mismatch(hi, target)?;
    }
    let mut iters = 0;
    // geometric bisection while the bracket spans several octaves
    while lo > 0.0 && hi / lo > 4.0 && iters < max_iter {
        let mid = (lo * hi).sqrt();
        let f = sh.mismatch(mid, target)?;
        iters += 1;
        if f == 0.0 {
            return Ok(roots::Root { x: mid, fx: 0.0, lo: mid, hi: mid, iterations: iters });
        }
        if f < 0.0 {
            lo = mid;
            flo = f;
        } else {
            hi = mid;
            fhi = f;
        }
    }
    let mut root = roots::brent(
        |mu| sh.mismatch(mu, target),
        lo,
        hi,
        flo,
        fhi,
        |mu| tol * mu.abs().max(1e-300),
        max_iter.saturating_sub(iters).max(10),
    )?;
    root.iterations += iters;
    Ok(root)
}

fn prufer_scale(lo: f64, hi: f64) -> f64 {
    (lo.max(1.0) * hi.max(1.0)).sqrt().sqrt().max(1.0)
}

/// Smallest `lambda` for which the solution with `u(0) = 0` vanishes at 4
/// with no interior zero.
pub fn first_dirichlet_eigenvalue(q: &ProfileFunction, m: u64, opts: &EigenOptions) -> Result<EigenResult> {
    if !(opts.tol > 0.0 && opts.shoot_tol > 0.0) {
        return Err(Error::config("solver.tol", "tolerances must be positive"));
    }
    let (lo, hi, _, _) = excess_bounds(q, m)?;
    let (ritz, _) = ritz_excess_bounds(q, m);
    let hi = if ritz.is_finite() { hi.min(ritz * (1.0 + 1e-6) + 1e-9) } else { hi };
    let s = prufer_scale(lo, hi);
    let sh = Shooter::new(q, m, s, opts);
    let root = solve_excess(&sh, lo, hi, 0.0, opts.tol, opts.max_iter)?;
    let mu = root.x;
    let (mut left, mut right) = sh.record(mu)?;
    // stitch: the phases agree at 2, scale the right branch to match amplitudes
    let l2 = *left.last().expect("left samples");
    let r2 = *right.last().expect("right samples");
    let shift = l2.state().ln_abs_u() - r2.state().ln_abs_u();
    for smp in right.iter_mut() {
        smp.ln_rho += shift;
    }
    let norm = left
        .iter()
        .chain(right.iter())
        .map(|smp| smp.state().ln_abs_u())
        .fold(f64::NEG_INFINITY, f64::max);
    for smp in left.iter_mut().chain(right.iter_mut()) {
        smp.ln_rho -= norm;
    }
    let top = q.top();
    let m2 = (m as f64) * (m as f64);
    Ok(EigenResult {
        m,
        lambda: (m2 + mu) / top,
        excess: mu,
        top,
        bracket: ((m2 + root.lo) / top, (m2 + root.hi) / top),
        solver_tol: opts.tol,
        prufer_scale: s,
        mismatch: root.fx,
        iterations: root.iterations,
        options: *opts,
        potential: SlPotential::new(q, m, mu),
        left,
        right,
    })
}

/// The second Dirichlet eigenvalue, located as the next Prüfer crossing.
pub fn second_dirichlet_eigenvalue(q: &ProfileFunction, m: u64, first: &EigenResult) -> Result<f64> {
    let opts = first.options;
    let sh = Shooter::new(q, m, first.prufer_scale, &opts);
    let lo = first.bracket.1 * first.top - (m as f64).powi(2);
    let (_, hi, _, _) = excess_bounds(q, m)?;
    let (_, ritz) = ritz_excess_bounds(q, m);
    let hi = if ritz.is_finite() { hi.min(ritz * (1.0 + 1e-6) + 1e-9) } else { hi };
    let hi = hi.max(lo.abs() * 1.01 + 1e-9);
    let root = solve_excess(&sh, lo, hi, PI, opts.tol, opts.max_iter)?;
    Ok(((m as f64).powi(2) + root.x) / first.top)
}

impl EigenResult {
    pub fn summary(&self) -> EigenSummary {
        EigenSummary {
            m: self.m,
            lambda: self.lambda,
            excess: self.excess,
            top: self.top,
            bracket: self.bracket,
            solver_tol: self.solver_tol,
            shoot_tol: self.options.shoot_tol,
            prufer_scale: self.prufer_scale,
            mismatch: self.mismatch,
            iterations: self.iterations,
            samples: self.left.len() + self.right.len(),
        }
    }

    /// Prüfer state of `U` at `x` in `[0, 4]`, re-integrated from the
    /// nearest sample in the direction of the original shot.
    pub fn state_on_base(&self, x: f64) -> Result<PrState> {
        let s = self.prufer_scale;
        let opts = self.options.shoot();
        let (from, to) = if x <= 2.0 {
            let k = self.left.partition_point(|smp| smp.x <= x).max(1) - 1;
            (self.left[k], x)
        } else {
            let k = self.right.partition_point(|smp| smp.x >= x).max(1) - 1;
            (self.right[k], x)
        };
        let st = from.state();
        if from.x == to {
            return Ok(st);
        }
        let feats = self.potential.q.features_in(from.x.min(to), from.x.max(to));
        let seg = Segments::new(from.x, to, &feats, self.options.h_max);
        prufer::shoot(&self.potential, s, st, &seg, &opts, |_, _| {})
    }

    /// Prüfer state of the 8-periodic odd extension at any `x`.
    pub fn state_at(&self, x: f64) -> Result<PrState> {
        let y = x.rem_euclid(8.0);
        if y <= 4.0 {
            self.state_on_base(y)
        } else {
            let st = self.state_on_base(8.0 - y)?;
            Ok(st.reflected())
        }
    }

    /// `(U, U', U'')` at `x`.
    pub fn eval(&self, x: f64) -> Result<[f64; 3]> {
        let st = self.state_at(x)?;
        let (u, up) = st.values(self.prufer_scale);
        let k = self.potential.k(x.rem_euclid(8.0));
        Ok([u, up, -k * u])
    }

    /// Largest `|U|` and `|U'|` over the samples.
    pub fn max_abs(&self) -> (f64, f64) {
        let s = self.prufer_scale;
        let mut mu: f64 = 0.0;
        let mut mup: f64 = 0.0;
        for smp in self.left.iter().chain(&self.right) {
            let (u, up) = smp.state().values(s);
            mu = mu.max(u.abs());
            mup = mup.max(up.abs());
        }
        (mu, mup)
    }

    /// Number of interior zeros of `U` on `(0, 4)` from the stored phases.
    pub fn interior_zeros(&self) -> i64 {
        let (Some(l), Some(r)) = (self.left.last(), self.right.last()) else {
            return 0;
        };
        // total phase from 0 to 4 is l + (pi - r), a multiple of pi
        ((l.state().phase_diff(&r.state()) + PI) / PI).round() as i64 - 1
    }

    /// `max |U'' + K U| / max |U|` using centered differences of `U` with
    /// step `h` at `n` equally spaced points of `(0, 8)`.
    pub fn residual(&self, n: usize, h: f64) -> Result<f64> {
        let (umax, _) = self.max_abs();
        let mut worst: f64 = 0.0;
        for i in 1..n {
            let x = 8.0 * i as f64 / n as f64;
            let u0 = self.eval(x)?[0];
            let up = self.eval(x + h)?[0];
            let um = self.eval(x - h)?[0];
            let upp = (up - 2.0 * u0 + um) / (h * h);
            let k = self.potential.k(x.rem_euclid(8.0));
            worst = worst.max((upp + k * u0).abs());
        }
        Ok(worst / umax)
    }

    /// Trajectory table `x, U, U', theta, ln_rho` on `[0, 8]` from the stored
    /// samples and their reflection.
    pub fn trajectory_table(&self) -> CsvTable {
        let s = self.prufer_scale;
        let mut t = CsvTable::new(&["x", "U", "U_prime", "theta", "ln_rho"]);
        let mut base: Vec<Sample> = self.left.clone();
        base.extend(self.right.iter().rev().skip(1).copied());
        for smp in &base {
            let (u, up) = smp.state().values(s);
            t.push(vec![smp.x, u, up, smp.theta(), smp.ln_rho]);
        }
        for smp in base.iter().rev().skip(1) {
            let (u, up) = smp.state().reflected().values(s);
            t.push(vec![8.0 - smp.x, u, up, -smp.theta(), smp.ln_rho]);
        }
        t
    }
}
