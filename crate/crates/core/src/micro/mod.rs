//! Microscopic dynamics of N rigid spheres sedimenting in Stokes flow.

mod diagnostics;
mod dynamics;
mod reflection;
mod system;

pub use diagnostics::{alpha_statistic, delta_statistic, min_distance, pair_statistics, y_series, PairStatistics};
pub use dynamics::{
    run_micro, step_dynamics, MicroRunConfig, MicroRunFailure, SimulationTrace, Snapshot, StepOutcome, StepParams, StepRecord,
    TimeScheme, TraceEvent,
};
pub use reflection::{
    ambient_moments_direct, reflection_step, reflection_step_with, solve_velocities, zeroth_field, zeroth_field_with,
    ReflectionState, SolverParams, Summation, VelocitySolution,
};
pub use system::{
    generate_configuration, settling_speed_single, validate_assumptions, AssumptionReport, ConfigSpec, Domain, ParticleSystem,
};

use crate::kernels::KernelError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MicroError {
    #[error("infeasible configuration: {reason}")]
    InfeasibleConfig { reason: &'static str, value: f64 },
    #[error("reflections diverged at iteration {iteration}: delta = {delta}, residual = {residual}")]
    ReflectionsDiverged { iteration: usize, delta: f64, residual: f64 },
    #[error("reflections not converged after {iterations} iterations, residual {residual}")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("collision imminent: minimum distance {d_min} below {limit}")]
    CollisionImminent { d_min: f64, limit: f64 },
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}
