use std::path::PathBuf;

use sediment_core::density::AnalyticDensity;
use serde::{Deserialize, Serialize};

use crate::error::LabError;

pub const SCHEMA_VERSION: u32 = 1;

/// Rescaled mass carried by every configuration, `N * 4 pi / (3N)`.
pub const TOTAL_MASS: f64 = 4.0 * std::f64::consts::PI / 3.0;

/// Initial density shared by the micro sampler and the macro solver.
/// Every variant is normalised to [`TOTAL_MASS`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDatum {
    MollifiedBall { radius: f64, width: f64 },
    UniformBall { radius: f64 },
    Gaussian { sigma: f64 },
}

impl Default for InitialDatum {
    fn default() -> Self {
        InitialDatum::MollifiedBall {
            radius: 1.0,
            width: 0.25,
        }
    }
}

impl InitialDatum {
    pub fn density(&self) -> AnalyticDensity {
        match *self {
            InitialDatum::MollifiedBall { radius, width } => AnalyticDensity::mollified_ball(radius, width, TOTAL_MASS),
            InitialDatum::UniformBall { radius } => AnalyticDensity::uniform_ball(radius, TOTAL_MASS),
            InitialDatum::Gaussian { sigma } => AnalyticDensity::gaussian(sigma, TOTAL_MASS),
        }
    }
}

/// `delta = factor * d_min(0)^exponent` and `delta_tilde = tilde_factor *
/// delta`. With snapping, `delta_tilde` is rounded to a whole number of
/// lattice spacings and `delta` follows from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeltaRule {
    pub factor: f64,
    pub exponent: f64,
    pub tilde_factor: u32,
    pub snap_to_lattice: bool,
}

impl Default for DeltaRule {
    /// `delta = 0.4 d_min^(1/6)`, `delta_tilde = 4 delta`. The ratio
    /// `delta / d_min` grows as `d_min` shrinks while `delta` itself still
    /// tends to zero.
    fn default() -> Self {
        Self {
            factor: 0.4,
            exponent: 1.0 / 6.0,
            tilde_factor: 4,
            snap_to_lattice: true,
        }
    }
}

impl DeltaRule {
    /// `delta = factor * d_min`, a fixed multiple of the minimal distance.
    pub fn proportional(factor: f64, tilde_factor: u32) -> Self {
        Self {
            factor,
            exponent: 1.0,
            tilde_factor,
            snap_to_lattice: true,
        }
    }

    /// Returns `(delta, delta_tilde)`.
    pub fn resolve(&self, d_min: f64, lattice_spacing: Option<f64>) -> (f64, f64) {
        let n = self.tilde_factor as f64;
        let raw = n * self.factor * d_min.powf(self.exponent);
        let tilde = match lattice_spacing {
            Some(s) if self.snap_to_lattice && s > 0.0 => (raw / s).round().max(1.0) * s,
            _ => raw,
        };
        (tilde / n, tilde)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub epsilon_ladder: Vec<usize>,
    pub c0: f64,
    pub xi_target: f64,
    pub beta: f64,
    pub t_final: f64,
    pub delta_rule: DeltaRule,
    pub initial: InitialDatum,
    /// One seed per rung; a shorter list is cycled.
    pub seeds: Vec<u64>,
    /// Number of snapshot intervals over `[0, t_final]`.
    pub snapshots: usize,
    /// Requested micro step; the CFL cap may shorten it.
    pub micro_dt: f64,
    /// Marker spacing of the macro solver.
    pub macro_h: f64,
    pub blob_factor: f64,
    pub macro_dt: f64,
    pub output_dir: Option<PathBuf>,
    pub deterministic: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            epsilon_ladder: vec![512, 2048, 8192],
            c0: 0.1,
            xi_target: 1.0,
            beta: 3.0,
            t_final: 0.5,
            delta_rule: DeltaRule::default(),
            initial: InitialDatum::default(),
            seeds: vec![1],
            snapshots: 50,
            micro_dt: 0.01,
            macro_h: 0.1,
            blob_factor: 2.0,
            macro_dt: 0.01,
            output_dir: None,
            deterministic: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), LabError> {
        let bad = |field: &'static str, reason: String| Err(LabError::Config { field, reason });
        if self.schema_version != SCHEMA_VERSION {
            return bad("schema_version", format!("expected {SCHEMA_VERSION}, found {}", self.schema_version));
        }
        if self.epsilon_ladder.is_empty() {
            return bad("epsilon_ladder", "empty".into());
        }
        if self.epsilon_ladder.windows(2).any(|w| w[1] <= w[0]) {
            return bad("epsilon_ladder", "must be strictly increasing".into());
        }
        if self.epsilon_ladder[0] == 0 {
            return bad("epsilon_ladder", "N must be positive".into());
        }
        if !(self.beta > 2.0) {
            return bad("beta", format!("must exceed 2, found {}", self.beta));
        }
        for (field, v) in [
            ("c0", self.c0),
            ("xi_target", self.xi_target),
            ("t_final", self.t_final),
            ("micro_dt", self.micro_dt),
            ("macro_h", self.macro_h),
            ("blob_factor", self.blob_factor),
            ("macro_dt", self.macro_dt),
            ("delta_rule.factor", self.delta_rule.factor),
            ("delta_rule.exponent", self.delta_rule.exponent),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(field, format!("must be positive and finite, found {v}"));
            }
        }
        if self.delta_rule.tilde_factor == 0 {
            return bad("delta_rule.tilde_factor", "must be a positive integer".into());
        }
        if self.snapshots == 0 {
            return bad("snapshots", "must be positive".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds", "empty".into());
        }
        Ok(())
    }

    pub fn seed_for(&self, rung: usize) -> u64 {
        self.seeds[rung % self.seeds.len()]
    }

    pub fn snapshot_interval(&self) -> f64 {
        self.t_final / self.snapshots as f64
    }
}
