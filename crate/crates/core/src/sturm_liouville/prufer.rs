//! Log-amplitude Prüfer propagation of `u'' + K u = 0`.
//!
//! The state is `(theta, ln rho)` with `u = rho sin(theta)` and
//! `u' = s rho cos(theta)` for a fixed scale `s > 0`. The phase is stored as
//! `turns * pi + phi` with `|phi| <= pi/2`, so phases close to a multiple of
//! `pi` keep full relative precision in their offset; the Prüfer equations
//! only depend on the phase modulo `pi`.
//!
//! Oscillatory and mildly exponential steps use a fourth-order Magnus
//! integrator with the exact exponential of the two-point generator, which
//! is exact for constant `K` of either sign. Deep in exponential regions,
//! when the phase sits on the branch that grows along the direction of
//! integration, the phase equation is stiff and contracting and is advanced
//! by a three-stage Radau IIA step; the log-amplitude follows by the same
//! collocation. Amplitudes live in the log domain and never overflow.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use crate::error::{Error, Result};
use crate::ode::Segments;

/// The coefficient `K` of `u'' + K u = 0`.
pub trait Potential: Sync {
    fn k(&self, x: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Sync> Potential for F {
    fn k(&self, x: f64) -> f64 {
        self(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrState {
    /// Multiples of `pi` in the phase.
    pub turns: i64,
    /// Reduced phase in `[-pi/2, pi/2]`.
    pub phi: f64,
    pub ln_rho: f64,
}

impl PrState {
    pub fn new(theta: f64, ln_rho: f64) -> PrState {
        PrState { turns: 0, phi: theta, ln_rho }.normalized()
    }

    /// State with phase `turns * pi + phi` for any `phi`.
    pub fn from_parts(turns: i64, phi: f64, ln_rho: f64) -> PrState {
        PrState { turns, phi, ln_rho }.normalized()
    }

    fn normalized(mut self) -> PrState {
        if self.phi.abs() > FRAC_PI_2 {
            let k = (self.phi / PI).round();
            self.phi -= k * PI;
            self.turns += k as i64;
        }
        self
    }

    /// The full phase (loses the relative precision of `phi` for large
    /// `turns`).
    pub fn theta(&self) -> f64 {
        self.turns as f64 * PI + self.phi
    }

    fn parity(&self) -> f64 {
        if self.turns.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `(sin theta, cos theta)`.
    pub fn sin_cos(&self) -> (f64, f64) {
        let (sn, cs) = self.phi.sin_cos();
        let p = self.parity();
        (p * sn, p * cs)
    }

    /// `ln |u|`.
    pub fn ln_abs_u(&self) -> f64 {
        self.ln_rho + self.phi.sin().abs().ln()
    }

    /// `theta -> -theta`.
    pub fn reflected(&self) -> PrState {
        PrState { turns: -self.turns, phi: -self.phi, ln_rho: self.ln_rho }
    }

    /// `self.theta - other.theta` without cancellation in the turn part.
    pub fn phase_diff(&self, other: &PrState) -> f64 {
        (self.turns - other.turns) as f64 * PI + (self.phi - other.phi)
    }

    /// `(u, u')` with the amplitude exponentiated; may under/overflow.
    pub fn values(&self, s: f64) -> (f64, f64) {
        let r = self.ln_rho.exp();
        let (sn, cs) = self.sin_cos();
        (r * sn, s * r * cs)
    }

    /// State from `(u, u')`, with `ln_scale` added to the log-amplitude.
    pub fn from_values(u: f64, up: f64, s: f64, ln_scale: f64) -> PrState {
        let w = up / s;
        PrState::new(u.atan2(w), u.hypot(w).ln() + ln_scale)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootOptions {
    /// Absolute local tolerance on the phase per step.
    pub tol: f64,
    /// Local tolerance on `ln rho` relative to the step's own increment
    /// (with `tol` as an absolute floor).
    pub rel_ln_rho: f64,
    /// In exponential steps, phase tolerance relative to `|sin cos|` of the
    /// phase, i.e. relative accuracy of the log-derivative `u'/u`.
    pub rel_phase: f64,
    /// Largest step anywhere.
    pub h_max: f64,
    /// Largest rotation per step in oscillatory regions, in radians.
    pub max_rotation: f64,
    pub max_steps: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions { tol: 1e-12, rel_ln_rho: 1e-12, rel_phase: 1e-12, h_max: 0.05, max_rotation: 1.0, max_steps: 20_000_000 }
    }
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // sqrt(3)/6
const COMMUTATOR: f64 = 0.144_337_567_297_406_44; // sqrt(3)/12

/// Rotation (oscillatory steps) or log-growth (exponential steps) of the
/// Magnus generator over one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepKind {
    pub rotation: f64,
    pub growth: f64,
}

/// One Magnus step of signed length `h`.
pub fn magnus_step<P: Potential + ?Sized>(p: &P, s: f64, x: f64, h: f64, st: PrState) -> (PrState, StepKind) {
    let (phi, dl, kind) = magnus_increment(p, s, x, h, st.phi);
    (PrState::from_parts(st.turns, phi, st.ln_rho + dl), kind)
}

/// New (unreduced) phase and log-amplitude increment of one Magnus step
/// from reduced phase `phi`.
#[inline]
fn magnus_increment<P: Potential + ?Sized>(p: &P, s: f64, x: f64, h: f64, phi: f64) -> (f64, f64, StepKind) {
    let k1 = p.k(x + (0.5 - GAUSS_OFFSET) * h);
    let k2 = p.k(x + (0.5 + GAUSS_OFFSET) * h);
    let kbar = 0.5 * (k1 + k2);
    let a = COMMUTATOR * h * h * (k2 - k1);
    let b = h;
    let c = -h * kbar;
    let w = a * a + b * c;
    let (cc, ss, log_factor, kind) = if w > 0.0 {
        let kap = w.sqrt();
        let kind = StepKind { rotation: 0.0, growth: kap };
        if kap > 1.0 {
            let e = (-2.0 * kap).exp();
            (1.0 + e, (1.0 - e) / kap, kap - LN_2, kind)
        } else {
            (kap.cosh(), if kap > 0.0 { kap.sinh() / kap } else { 1.0 }, 0.0, kind)
        }
    } else if w < 0.0 {
        let kap = (-w).sqrt();
        (kap.cos(), kap.sin() / kap, 0.0, StepKind { rotation: kap, growth: 0.0 })
    } else {
        (1.0, 1.0, 0.0, StepKind { rotation: 0.0, growth: 0.0 })
    };
    let e11 = cc + ss * a;
    let e12 = ss * b;
    let e21 = ss * c;
    let e22 = cc - ss * a;
    let (sn, cs) = phi.sin_cos();
    let un = e11 * sn + e12 * s * cs;
    let wn = e21 * sn / s + e22 * cs;
    let r = un.hypot(wn);
    // rotation from (sn, cs) to (un, wn) in the (w, u) plane
    let d = (cs * un - sn * wn).atan2(cs * wn + sn * un);
    (phi + d, log_factor + r.ln(), kind)
}

const RADAU_C: [f64; 3] = [0.155_051_025_721_682_2, 0.644_948_974_278_317_8, 1.0];
const RADAU_A: [[f64; 3]; 3] = [
    [0.196_815_477_223_660_4, -0.065_535_425_850_198_4, 0.023_770_974_348_220_2],
    [0.394_424_314_739_087_4, 0.292_073_411_665_228_1, -0.041_548_752_125_997_9],
    [0.376_403_062_700_467_2, 0.512_485_826_188_421_6, 0.111_111_111_111_111_1],
];

/// Phase derivative, its `theta`-derivative, and the log-amplitude
/// derivative of the Prüfer system.
#[inline]
fn prufer_rhs(k: f64, s: f64, theta: f64) -> (f64, f64, f64) {
    let (sn, cs) = theta.sin_cos();
    let f = s * cs * cs + k / s * sn * sn;
    let df = (k / s - s) * 2.0 * sn * cs;
    let g = (s - k / s) * sn * cs;
    (f, df, g)
}

/// A step is stiff when it stays in an exponential region and the phase sits
/// on the branch that grows along the direction of integration (so the phase
/// equation is contracting).
fn stiff_step<P: Potential + ?Sized>(p: &P, s: f64, x: f64, h: f64, phi: f64) -> bool {
    let k0 = p.k(x);
    let k1 = p.k(x + 0.5 * h);
    let k2 = p.k(x + h);
    if k0 >= 0.0 || k1 >= 0.0 || k2 >= 0.0 {
        return false;
    }
    let (_, df, _) = prufer_rhs(k0, s, phi);
    h * df < 0.0
}

/// One three-stage Radau IIA step of the Prüfer system from reduced phase
/// `phi`, returning the new phase and the log-amplitude increment. `None`
/// if Newton fails.
fn radau_increment<P: Potential + ?Sized>(p: &P, s: f64, x: f64, h: f64, phi: f64) -> Option<(f64, f64)> {
    let ks = RADAU_C.map(|c| p.k(x + c * h));
    let mut z = [phi; 3];
    let mut last = f64::INFINITY;
    for _ in 0..60 {
        let mut jac = [[0.0; 3]; 3];
        let mut res = [0.0; 3];
        let rhs = [0, 1, 2].map(|j| prufer_rhs(ks[j], s, z[j]));
        for i in 0..3 {
            res[i] = z[i] - phi;
            for j in 0..3 {
                res[i] -= h * RADAU_A[i][j] * rhs[j].0;
                jac[i][j] = if i == j { 1.0 } else { 0.0 } - h * RADAU_A[i][j] * rhs[j].1;
            }
        }
        let dz = solve3(jac, res)?;
        let mut size = 0.0f64;
        for i in 0..3 {
            z[i] -= dz[i];
            size = size.max(dz[i].abs());
        }
        if !size.is_finite() {
            return None;
        }
        let floor = 4.0 * f64::EPSILON * z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // converged, or stalled at rounding level
        if size <= floor || (size >= last && size <= 1e3 * floor) {
            let dl = h * (0..3).map(|j| RADAU_A[2][j] * prufer_rhs(ks[j], s, z[j]).2).sum::<f64>();
            return Some((z[2], dl));
        }
        last = size;
    }
    None
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for c in 0..3 {
        let piv = (c..3).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c] == 0.0 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..3 {
            let f = a[r][c] / a[c][c];
            for k in c..3 {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for c in (0..3).rev() {
        x[c] = (b[c] - (c + 1..3).map(|k| a[c][k] * x[k]).sum::<f64>()) / a[c][c];
    }
    Some(x)
}

/// An accepted-or-rejected trial step with its step-doubling error.
struct Trial {
    phi: f64,
    dl: f64,
    err: f64,
}

/// `Err(factor)` asks for the step to be shrunk by `factor`.
fn trial_step<P: Potential + ?Sized>(
    p: &P,
    s: f64,
    x: f64,
    hs: f64,
    phi: f64,
    opts: &ShootOptions,
) -> std::result::Result<Trial, f64> {
    let (big_phi, big_dl, fine_phi, fine_dl, phase_tol) = if stiff_step(p, s, x, hs, phi) {
        let fail = 0.5;
        let (bp, bd) = radau_increment(p, s, x, hs, phi).ok_or(fail)?;
        let (hp, hd) = radau_increment(p, s, x, 0.5 * hs, phi).ok_or(fail)?;
        let (fp, fd) = radau_increment(p, s, x + 0.5 * hs, 0.5 * hs, hp).ok_or(fail)?;
        let (sn, cs) = fp.sin_cos();
        (bp, bd, fp, hd + fd, opts.tol + opts.rel_phase * (sn * cs).abs())
    } else {
        let (bp, bd, kind) = magnus_increment(p, s, x, hs, phi);
        if kind.rotation > opts.max_rotation {
            return Err(0.9 * opts.max_rotation / kind.rotation);
        }
        let (hp, hd, _) = magnus_increment(p, s, x, 0.5 * hs, phi);
        let (fp, fd, _) = magnus_increment(p, s, x + 0.5 * hs, 0.5 * hs, hp);
        // In exponential regions the phase is attracted to the growing
        // branch at rate 2 sqrt(-K), so a phase error is damped by about
        // exp(-2 growth) over the following stretch of the same kind.
        let phase_tol = if kind.growth > 0.0 {
            let (sn, cs) = fp.sin_cos();
            (opts.tol + opts.rel_phase * (sn * cs).abs()) * (2.0 * kind.growth).exp()
        } else {
            opts.tol
        };
        (bp, bd, fp, hd + fd, phase_tol)
    };
    let phase_tol = phase_tol.max(8.0 * f64::EPSILON * fine_phi.abs());
    let err = ((big_phi - fine_phi).abs() / phase_tol)
        .max((big_dl - fine_dl).abs() / (opts.tol + opts.rel_ln_rho * fine_dl.abs()));
    if !err.is_finite() {
        return Err(0.5);
    }
    Ok(Trial { phi: fine_phi, dl: fine_dl, err })
}

/// Adaptive propagation across `segments` starting from `st` at
/// `segments.points[0]`. `record(x, state)` sees every accepted step.
pub fn shoot<P, R>(p: &P, s: f64, st: PrState, segments: &Segments, opts: &ShootOptions, mut record: R) -> Result<PrState>
where
    P: Potential + ?Sized,
    R: FnMut(f64, PrState),
{
    let mut st = st.normalized();
    let mut steps = 0usize;
    let mut h_prev: Option<f64> = None;
    if let Some(&x0) = segments.points.first() {
        record(x0, st);
    }
    for (a, b, cap) in segments.iter() {
        if b == a {
            continue;
        }
        let dir = (b - a).signum();
        let cap = cap.min(opts.h_max);
        let mut x = a;
        let mut h = h_prev.unwrap_or(cap).min(cap);
        loop {
            let remaining = (b - x).abs();
            if remaining <= 0.0 {
                break;
            }
            let last = h >= remaining;
            let hs = if last { remaining } else { h } * dir;
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::Integration { x, reason: "step budget exhausted" });
            }
            match trial_step(p, s, x, hs, st.phi, opts) {
                Ok(tr) if tr.err <= 1.0 => {
                    x = if last { b } else { x + hs };
                    st = PrState::from_parts(st.turns, tr.phi, st.ln_rho + tr.dl);
                    record(x, st);
                    let fac = if tr.err == 0.0 { 4.0 } else { (0.9 * tr.err.powf(-0.2)).clamp(0.2, 4.0) };
                    if !last {
                        h_prev = Some(hs.abs());
                    }
                    h = (hs.abs() * fac).min(cap);
                }
                rejected => {
                    let shrink = match rejected {
                        Ok(tr) => (0.9 * tr.err.powf(-0.2)).clamp(0.1, 0.9),
                        Err(shrink) => shrink,
                    };
                    h = hs.abs() * shrink;
                    if h < 1e-15 * (1.0 + x.abs()) {
                        return Err(Error::Integration { x, reason: "step size underflow" });
                    }
                }
            }
        }
    }
    Ok(st)
}

/// Number of zeros of `u` on an open interval implied by the phase change
/// from `theta0` (with `sin(theta0) = 0` allowed) to `theta1`.
pub fn zero_count(theta0: f64, theta1: f64) -> i64 {
    ((theta1 / PI).ceil() - (theta0 / PI).floor() - 1.0) as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_positive_k_is_exact() {
        let k = |_x: f64| 9.0;
        let seg = Segments::new(0.0, 2.0, &[], 1.0);
        let st = shoot(&k, 3.0, PrState::new(0.0, -(3f64.ln())), &seg, &ShootOptions::default(), |_, _| {}).unwrap();
        // u = sin(3x)/3
        let (u, up) = st.values(3.0);
        assert!((u - (6f64).sin() / 3.0).abs() < 1e-12);
        assert!((up - (6f64).cos()).abs() < 1e-12);
        assert!((st.theta() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn huge_negative_k_stays_finite() {
        let m2 = 1e10;
        let k = move |_x: f64| -m2;
        let seg = Segments::new(0.0, 1.0, &[], 1.0);
        let mut n = 0;
        let st = shoot(&k, 1.0, PrState::new(0.0, 0.0), &seg, &ShootOptions::default(), |_, _| n += 1).unwrap();
        // u = sinh(1e5 x)/1e5: ln u(1) = 1e5 - ln 2 - ln 1e5
        let expected = 1e5 - LN_2 - 1e5f64.ln();
        assert!((st.ln_abs_u() - expected).abs() < 1e-9);
        assert!(n < 200, "{n}");
    }

    #[test]
    fn backward_start_at_pi_keeps_relative_phase() {
        // starting at pi and integrating backwards into an exponential
        // region: the offset from pi must keep its relative precision
        let k = |_x: f64| -1e12;
        let seg = Segments::new(1.0, 0.5, &[], 1.0);
        let st = shoot(&k, 1.0, PrState::new(PI, 0.0), &seg, &ShootOptions::default(), |_, _| {}).unwrap();
        // u ~ sinh(1e6 (1 - x)), u'/u -> -1e6, so theta - pi -> -1e-6
        assert_eq!(st.turns, 1);
        assert!((st.phi + 1e-6).abs() < 1e-17, "{}", st.phi);
    }

    #[test]
    fn airy_like_variable_k() {
        // u'' + (1 + x) u = 0 compared against a fine Dormand-Prince solve
        let k = |x: f64| 1.0 + x;
        let seg = Segments::new(0.0, 3.0, &[], 0.1);
        let st = shoot(&k, 1.0, PrState::new(0.0, 0.0), &seg, &ShootOptions::default(), |_, _| {}).unwrap();
        let y = crate::ode::integrate(
            |x, y: &[f64; 2]| [y[1], -(1.0 + x) * y[0]],
            0.0,
            [0.0, 1.0],
            &Segments::new(0.0, 3.0, &[], 0.01),
            &crate::ode::Dp45Options { rtol: 1e-13, atol: 1e-15, max_steps: 1_000_000, running_scale: false },
            |_, _| {},
        )
        .unwrap();
        let (u, up) = st.values(1.0);
        assert!((u - y[0]).abs() < 1e-10, "{u} {}", y[0]);
        assert!((up - y[1]).abs() < 1e-10);
    }

    #[test]
    fn stiff_steps_agree_with_fine_magnus() {
        let k = |x: f64| -1e6 * (1.0 + x);
        let seg = Segments::new(0.0, 1.0, &[], 1.0);
        let a = shoot(&k, 1e3, PrState::new(0.0, 0.0), &seg, &ShootOptions::default(), |_, _| {}).unwrap();
        let n = 200_000;
        let mut st = PrState::new(0.0, 0.0);
        for i in 0..n {
            st = magnus_step(&k, 1e3, i as f64 / n as f64, 1.0 / n as f64, st).0;
        }
        assert!((a.ln_rho - st.ln_rho).abs() < 1e-9 * st.ln_rho.abs(), "{} {}", a.ln_rho, st.ln_rho);
        assert!((a.phi - st.phi).abs() < 1e-11);
    }
}
