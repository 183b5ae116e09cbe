//! Layered profiles `q_t` and `q_{S,tau}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cascade::CascadeProfile;
use super::functions::{psi_periodized, ramp_features};
use super::profile::{even_argument, Feature, Profile, ProfileFunction};
use crate::error::{Error, Result};
use crate::jet::Jet;

/// A finite 1-separated set of sites with an intensity attached to each.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SiteAssignment {
    pub sites: Vec<f64>,
    pub intensities: Vec<f64>,
}

impl SiteAssignment {
    pub fn new(sites: Vec<f64>, intensities: Vec<f64>) -> Result<Self> {
        let a = SiteAssignment { sites, intensities };
        a.validate()?;
        Ok(a)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites.len() != self.intensities.len() {
            return Err(Error::SpecViolation(format!(
                "{} sites but {} intensities",
                self.sites.len(),
                self.intensities.len()
            )));
        }
        if let Some(t) = self.sites.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(Error::SpecViolation(format!("site {t} is not a nonnegative real")));
        }
        if let Some(tau) = self.intensities.iter().find(|v| !v.is_finite()) {
            return Err(Error::SpecViolation(format!("intensity {tau} is not finite")));
        }
        let mut sorted = self.sites.clone();
        sorted.sort_by(f64::total_cmp);
        for w in sorted.windows(2) {
            if w[1] - w[0] < 1.0 {
                return Err(Error::SpecViolation(format!(
                    "sites {} and {} are closer than 1",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

#[derive(Debug, Clone)]
struct Layer {
    scale: f64,
    tau: f64,
    /// Deficit of the inner profile at `4^{-t}`.
    inner_deficit: f64,
}

/// `q_{S,tau}` in deficit form. With `D = top - Q`, one layer maps
/// `D -> D + psi_t (D(4^{-t}) - D) - tau H_t`, which is the defining
/// recursion rewritten so that nothing close to `top` is ever subtracted.
#[derive(Debug)]
struct Layered {
    base: ProfileFunction,
    cascade: Option<Arc<CascadeProfile>>,
    /// Sorted by increasing `t`; the largest `t` is the outermost layer.
    layers: Vec<Layer>,
}

impl Layered {
    fn build(
        base: ProfileFunction,
        cascade: Option<Arc<CascadeProfile>>,
        mut sites: Vec<(f64, f64)>,
    ) -> Layered {
        sites.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = Layered { base, cascade, layers: Vec::with_capacity(sites.len()) };
        for (t, tau) in sites {
            let scale = 4f64.powf(t);
            let inner_deficit = out.deficit_at(1.0 / scale).v;
            out.layers.push(Layer { scale, tau, inner_deficit });
        }
        out
    }

    #[inline]
    fn deficit_at(&self, x: f64) -> Jet {
        let mut d = self.base.deficit(x);
        if self.layers.is_empty() {
            return d;
        }
        let (r, _) = even_argument(x);
        for layer in &self.layers {
            let y = r * layer.scale;
            if y <= 0.25 || y >= 1.0 {
                continue;
            }
            let p = psi_periodized(x, layer.scale);
            if !p.is_zero() {
                d = d + p * (Jet::constant(layer.inner_deficit) - d);
            }
            if layer.tau != 0.0 {
                if let Some(h) = &self.cascade {
                    let hj = h.eval_periodized(x, layer.scale);
                    if !hj.is_zero() {
                        d = d - hj.scale(layer.tau);
                    }
                }
            }
        }
        d
    }
}

impl Profile for Layered {
    fn jet(&self, x: f64) -> Jet {
        Jet::constant(self.base.top()) - self.deficit_at(x)
    }

    fn top(&self) -> Option<f64> {
        Some(self.base.top())
    }

    fn deficit(&self, x: f64, top: f64) -> Jet {
        self.deficit_at(x) + Jet::constant(top - self.base.top())
    }

    fn period(&self) -> Option<f64> {
        self.base.period()
    }

    fn features(&self) -> Vec<Feature> {
        let mut out = self.base.features();
        for layer in &self.layers {
            out.extend(ramp_features(layer.scale));
            if let (Some(h), true) = (&self.cascade, layer.tau != 0.0) {
                out.extend(h.features(layer.scale));
            }
        }
        out
    }
}

/// `q_t = phi_t (q - q(4^{-t})) + q(4^{-t})`.
pub fn make_q_t(q: &ProfileFunction, t: f64) -> Result<ProfileFunction> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::SpecViolation(format!("q_t needs t >= 0, got {t}")));
    }
    Ok(ProfileFunction::new(format!("q_{t}"), Layered::build(q.clone(), None, vec![(t, 0.0)])))
}

/// `q_{S,tau}` built over the profile `q` with bumps from `h`.
pub fn make_q_s_tau(
    q: &ProfileFunction,
    h: &Arc<CascadeProfile>,
    assignment: &SiteAssignment,
) -> Result<ProfileFunction> {
    assignment.validate()?;
    if q.period() != Some(2.0) {
        return Err(Error::SpecViolation("the base profile must be 2-periodic".into()));
    }
    let sites = assignment.sites.iter().copied().zip(assignment.intensities.iter().copied()).collect();
    let name = if assignment.is_empty() { "q".to_string() } else { "q_S_tau".to_string() };
    Ok(ProfileFunction::new(name, Layered::build(q.clone(), Some(h.clone()), sites)))
}

/// Sites of a layered profile, for reporting.
pub fn site_windows(assignment: &SiteAssignment) -> Vec<(f64, f64)> {
    assignment.sites.iter().map(|t| (4f64.powf(-t - 1.0), 4f64.powf(-t))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth_kit::cascade::{CascadeSpec, Mutation, SkeletonParams};
    use crate::smooth_kit::functions::{make_q_with, QParams};

    fn setup() -> (ProfileFunction, Arc<CascadeProfile>, CascadeSpec) {
        let q = make_q_with(QParams::default()).unwrap();
        let spec = CascadeSpec::geometric(&SkeletonParams::default()).unwrap();
        let h = Arc::new(CascadeProfile::new(&spec, &Mutation::default()).unwrap());
        (q, h, spec)
    }

    #[test]
    fn empty_assignment_is_q() {
        let (q, h, _) = setup();
        let qs = make_q_s_tau(&q, &h, &SiteAssignment::empty()).unwrap();
        for k in -100..100 {
            let x = k as f64 / 37.0;
            assert_eq!(qs.eval(x), q.eval(x));
        }
    }

    #[test]
    fn cascade_center_and_far_points() {
        let (q, h, spec) = setup();
        let a = SiteAssignment::new(vec![1.0, 2.5, 4.0], vec![1e-3, -2e-4, 3e-6]).unwrap();
        let qs = make_q_s_tau(&q, &h, &a).unwrap();
        for &t in &a.sites {
            let c = 4f64.powf(-t);
            assert_eq!(qs.eval(c * spec.x_inf), q.eval(c));
        }
        assert_eq!(qs.eval(1.3), q.eval(1.3));
    }

    #[test]
    fn rejects_close_sites() {
        let (q, h, _) = setup();
        let a = SiteAssignment { sites: vec![1.0, 1.5], intensities: vec![0.0, 0.0] };
        assert!(matches!(make_q_s_tau(&q, &h, &a), Err(Error::SpecViolation(_))));
    }
}
