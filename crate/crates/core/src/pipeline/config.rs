//! Structured configuration with embedded defaults; an empty file runs the
//! desk-scale demo.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::oscillation::OscillationOptions;
use crate::smooth_kit::{QParams, SkeletonParams};
use crate::sturm_liouville::EigenOptions;
use crate::tuner::TunerOptions;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub q: QParams,
    pub cascade: SkeletonParams,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig { q: QParams::default(), cascade: SkeletonParams { depth: 12, ..SkeletonParams::default() } }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub eigen: EigenOptions,
    /// Bound on `|U'(2)| / max |U'|`.
    pub symmetry_tol: f64,
    /// Bound on the relative spread of the Wronskian.
    pub wronskian_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eigen: EigenOptions { tol: 1e-13, ..EigenOptions::default() },
            symmetry_tol: 1e-6,
            wronskian_tol: 1e-6,
        }
    }
}

/// Analysis tolerances; the dominance constant `C` comes from the cascade.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub c_prime: f64,
    pub isolation_rel: f64,
    pub critical_rel: f64,
    pub crossing_rel: f64,
    /// Bound on the relative telescoping error.
    pub telescoping_tol: f64,
    /// Bound on the relative residual of the assembled eigenfunction.
    pub residual_tol: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let o = OscillationOptions::default();
        AnalysisConfig {
            c_prime: o.c_prime,
            isolation_rel: o.isolation_rel,
            critical_rel: o.critical_rel,
            crossing_rel: o.crossing_rel,
            telescoping_tol: 1e-5,
            residual_tol: 1e-5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub sandwich_uniform: usize,
    pub sandwich_per_feature: usize,
    /// Residual sample columns across the analysis window.
    pub residual_nx: usize,
    pub residual_ny: usize,
    /// Level-set cells per gap `x_{N-1} - x_N`.
    pub levelset_cells_per_gap: usize,
    /// Level-set rows per period `2 pi / m` in `y`.
    pub levelset_rows: usize,
    pub profile_samples: usize,
    pub metric_samples: usize,
    pub eigenfunction_samples: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            sandwich_uniform: 1_000_000,
            sandwich_per_feature: 2_000,
            residual_nx: 400,
            residual_ny: 8,
            levelset_cells_per_gap: 8,
            levelset_rows: 16,
            profile_samples: 4_001,
            metric_samples: 20_001,
            eigenfunction_samples: 4_001,
        }
    }
}

/// Sizes of the solver cross-checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub oracle_max_m: u64,
    pub oracle_tol: f64,
    pub fd_points: usize,
    pub fd_trials: usize,
    pub fd_tol: f64,
    pub bracket_max_m: u64,
    pub bracket_eps: f64,
    /// Largest `m` probed for the upper bracket.
    pub bracket_upper_max_m: u64,
    pub self_map_points: usize,
    /// `k` of the smaller fixed-point run reported next to the main one.
    pub small_k: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            oracle_max_m: 10,
            oracle_tol: 1e-9,
            fd_points: 4096,
            fd_trials: 20,
            fd_tol: 1e-5,
            bracket_max_m: 40,
            bracket_eps: 0.05,
            bracket_upper_max_m: 100_000,
            self_map_points: 50,
            small_k: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub profile: ProfileConfig,
    pub tuner: TunerOptions,
    pub solver: SolverConfig,
    pub analysis: AnalysisConfig,
    pub grid: GridConfig,
    pub checks: CheckConfig,
    pub output: PathBuf,
    /// Seed of every randomized probe outside the tuner.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            profile: ProfileConfig::default(),
            tuner: TunerOptions::default(),
            solver: SolverConfig::default(),
            analysis: AnalysisConfig::default(),
            grid: GridConfig::default(),
            checks: CheckConfig::default(),
            output: PathBuf::from("out"),
            seed: 20_240_601,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn at_least(field: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be at least {min}, got {v}")))
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<PipelineConfig> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map_or_else(|| "<root>".to_string(), |s| format!("byte {}..{}", s.start, s.end));
            Error::config(field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<root>", e.to_string()))
    }

    /// Checks every invariant, reporting the first violation by field path.
    pub fn validate(&self) -> Result<()> {
        let q = &self.profile.q;
        positive("profile.q.c0", q.c0)?;
        positive("profile.q.c1", q.c1)?;
        positive("profile.q.alpha", q.alpha)?;
        positive("profile.q.rho", q.rho)?;
        let c = &self.profile.cascade;
        if c.depth < 4 {
            return Err(Error::config("profile.cascade.depth", format!("N >= 4 required, got N = {}", c.depth)));
        }
        positive("profile.cascade.delta", c.delta)?;
        positive("profile.cascade.amplitude_ratio", c.amplitude_ratio)?;
        positive("profile.cascade.skew", c.skew)?;
        if !(c.x_inf > 0.5 && c.x_inf + c.delta < 0.75) {
            return Err(Error::config("profile.cascade.x_inf", "need 1/2 < x_inf < x_inf + delta < 3/4"));
        }
        let cp = self.analysis.c_prime;
        if !(cp > 1.0 && c.dominance_c > cp && c.dominance_c.is_finite()) {
            return Err(Error::config(
                "analysis.c_prime",
                format!("need C > C' > 1, got C = {}, C' = {cp}", c.dominance_c),
            ));
        }
        // TOML integers are signed 64-bit
        for (field, v) in [("seed", self.seed), ("tuner.seed", self.tuner.seed), ("tuner.m_cap", self.tuner.m_cap)] {
            if v > i64::MAX as u64 {
                return Err(Error::config(field, format!("must not exceed {}", i64::MAX)));
            }
        }
        let t = &self.tuner;
        at_least("tuner.k", t.k, 1)?;
        at_least("tuner.max_iter", t.max_iter, 1)?;
        at_least("tuner.eps_probes", t.eps_probes, 1)?;
        at_least("tuner.eps_window_points", t.eps_window_points, 2)?;
        positive("tuner.residual_tol", t.residual_tol)?;
        positive("tuner.excess_tol", t.excess_tol)?;
        if !(t.tau_fraction > 0.0 && t.tau_fraction < 1.0) {
            return Err(Error::config("tuner.tau_fraction", "must lie in (0, 1)"));
        }
        for (prefix, e) in [("tuner.eigen", &t.eigen), ("solver.eigen", &self.solver.eigen)] {
            positive(&format!("{prefix}.tol"), e.tol)?;
            positive(&format!("{prefix}.shoot_tol"), e.shoot_tol)?;
            positive(&format!("{prefix}.rel_ln_rho"), e.rel_ln_rho)?;
            positive(&format!("{prefix}.rel_phase"), e.rel_phase)?;
            positive(&format!("{prefix}.h_max"), e.h_max)?;
            at_least(&format!("{prefix}.max_iter"), e.max_iter, 1)?;
        }
        positive("solver.symmetry_tol", self.solver.symmetry_tol)?;
        positive("solver.wronskian_tol", self.solver.wronskian_tol)?;
        let a = &self.analysis;
        positive("analysis.isolation_rel", a.isolation_rel)?;
        positive("analysis.critical_rel", a.critical_rel)?;
        positive("analysis.crossing_rel", a.crossing_rel)?;
        positive("analysis.telescoping_tol", a.telescoping_tol)?;
        positive("analysis.residual_tol", a.residual_tol)?;
        let g = &self.grid;
        at_least("grid.sandwich_uniform", g.sandwich_uniform, 1)?;
        at_least("grid.residual_nx", g.residual_nx, 1)?;
        at_least("grid.residual_ny", g.residual_ny, 1)?;
        at_least("grid.levelset_cells_per_gap", g.levelset_cells_per_gap, 2)?;
        at_least("grid.levelset_rows", g.levelset_rows, 2)?;
        at_least("grid.profile_samples", g.profile_samples, 2)?;
        at_least("grid.metric_samples", g.metric_samples, 2)?;
        at_least("grid.eigenfunction_samples", g.eigenfunction_samples, 2)?;
        let k = &self.checks;
        positive("checks.oracle_tol", k.oracle_tol)?;
        positive("checks.fd_tol", k.fd_tol)?;
        positive("checks.bracket_eps", k.bracket_eps)?;
        at_least("checks.fd_points", k.fd_points, 3)?;
        at_least("checks.small_k", k.small_k, 1)?;
        if k.bracket_upper_max_m < k.bracket_max_m {
            return Err(Error::config("checks.bracket_upper_max_m", "must be at least checks.bracket_max_m"));
        }
        Ok(())
    }

    pub fn oscillation_options(&self) -> OscillationOptions {
        let a = &self.analysis;
        OscillationOptions {
            c: self.profile.cascade.dominance_c,
            c_prime: a.c_prime,
            isolation_rel: a.isolation_rel,
            critical_rel: a.critical_rel,
            crossing_rel: a.crossing_rel,
        }
    }

    /// SHA-256 of the canonical serialization, as lowercase hex.
    pub fn hash(&self) -> Result<String> {
        let canon = serde_json::to_string(self)?;
        let digest = Sha256::digest(canon.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default() {
        let cfg = PipelineConfig::from_toml("").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.profile.cascade.depth, 12);
    }

    #[test]
    fn round_trip() {
        let mut cfg = PipelineConfig::default();
        cfg.tuner.k = 2;
        cfg.grid.residual_nx = 123;
        cfg.output = PathBuf::from("elsewhere/run");
        let back = PipelineConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
    }

    #[test]
    fn shallow_cascade_is_rejected_with_its_path() {
        let err = PipelineConfig::from_toml("[profile.cascade]\ndepth = 2\n").unwrap_err();
        match err {
            Error::Config { field, message } => {
                assert_eq!(field, "profile.cascade.depth");
                assert!(message.contains("N >= 4"), "{message}");
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn dominance_constants_are_ordered() {
        let err = PipelineConfig::from_toml("[analysis]\nc_prime = 2.5\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "analysis.c_prime"));
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(PipelineConfig::from_toml("[tuner]\nkk = 3\n").is_err());
    }
}
