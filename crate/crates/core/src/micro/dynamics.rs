use alloc::vec::Vec;

use super::diagnostics::{distance_ratio, min_distance};
use super::reflection::{solve_velocities, SolverParams, VelocitySolution};
use super::{MicroError, ParticleSystem};
use crate::linalg::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeScheme {
    Euler,
    /// Heun's method.
    #[default]
    Rk2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub scheme: TimeScheme,
    pub solver: SolverParams,
    /// Step cap as a fraction of `d_min / max |V|`.
    pub cfl_frac: f64,
    /// Steps ending with `d_min < collision_factor * R` are rejected.
    pub collision_factor: f64,
}

impl Default for StepParams {
    fn default() -> Self {
        Self {
            scheme: TimeScheme::Rk2,
            solver: SolverParams::default(),
            cfl_frac: 0.1,
            collision_factor: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub system: ParticleSystem,
    pub dt_used: f64,
    pub capped: bool,
    /// Solution at the start of the step.
    pub start: VelocitySolution,
    /// Whether every stage solve reached tolerance.
    pub converged: bool,
}

/// Advance one explicit step. The step is shortened to the CFL cap when needed.
pub fn step_dynamics(sys: &ParticleSystem, dt: f64, params: &StepParams) -> Result<StepOutcome, MicroError> {
    let start = solve_velocities(sys, &params.solver)?;
    step_from(sys, start, dt, params)
}

fn max_speed(v: &[Vec3]) -> f64 {
    v.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn step_from(sys: &ParticleSystem, start: VelocitySolution, dt: f64, params: &StepParams) -> Result<StepOutcome, MicroError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(MicroError::InvalidParameter { name: "dt", value: dt });
    }
    let vmax = max_speed(&start.velocities);
    let cap = if start.d_min.is_finite() && vmax > 0.0 {
        params.cfl_frac * start.d_min / vmax
    } else {
        f64::INFINITY
    };
    let capped = dt > cap;
    let h = dt.min(cap);
    let v0 = &start.velocities;
    let mut converged = start.converged;
    let positions: Vec<Vec3> = match params.scheme {
        TimeScheme::Euler => sys.positions.iter().zip(v0).map(|(&x, &v)| x + v * h).collect(),
        TimeScheme::Rk2 => {
            let predicted: Vec<Vec3> = sys.positions.iter().zip(v0).map(|(&x, &v)| x + v * h).collect();
            let stage = solve_velocities(&sys.with_positions(predicted), &params.solver)?;
            converged &= stage.converged;
            sys.positions
                .iter()
                .zip(v0.iter().zip(&stage.velocities))
                .map(|(&x, (&a, &b))| x + (a + b) * (0.5 * h))
                .collect()
        }
    };
    let d_new = min_distance(&positions);
    let limit = params.collision_factor * sys.radius;
    if d_new < limit {
        return Err(MicroError::CollisionImminent { d_min: d_new, limit });
    }
    Ok(StepOutcome {
        system: sys.with_positions(positions),
        dt_used: h,
        capped,
        start,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroRunConfig {
    pub t_final: f64,
    pub dt: f64,
    pub snapshot_interval: f64,
    pub step: StepParams,
}

impl MicroRunConfig {
    /// Fifty snapshot intervals over `[0, t_final]`.
    pub fn new(t_final: f64, dt: f64) -> Self {
        Self {
            t_final,
            dt,
            snapshot_interval: t_final / 50.0,
            step: StepParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub d_min: f64,
    /// Running supremum of pair-distance ratios up to this snapshot.
    pub y: f64,
    pub residual: f64,
    pub iterations: usize,
    pub delta_stat: f64,
    pub alpha_stat: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    pub dt_used: f64,
    pub capped: bool,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceEvent {
    DtCapped { time: f64, requested: f64, used: f64 },
    NotConverged { time: f64, residual: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub initial_positions: Vec<Vec3>,
    pub radius: f64,
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepRecord>,
    pub events: Vec<TraceEvent>,
}

impl SimulationTrace {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn y_values(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.y).collect()
    }

    pub fn final_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("micro run stopped at t = {time}: {error}")]
pub struct MicroRunFailure {
    pub error: MicroError,
    pub time: f64,
    pub trace: SimulationTrace,
}

/// Integrate to `t_final`, recording snapshots at multiples of the interval
/// and at `t_final`. Steps are shortened to land exactly on snapshot times.
pub fn run_micro(sys: &ParticleSystem, cfg: &MicroRunConfig) -> Result<SimulationTrace, MicroRunFailure> {
    let mut trace = SimulationTrace {
        initial_positions: sys.positions.clone(),
        radius: sys.radius,
        snapshots: Vec::new(),
        steps: Vec::new(),
        events: Vec::new(),
    };
    let fail = |error: MicroError, time: f64, trace: SimulationTrace| MicroRunFailure { error, time, trace };
    if !(cfg.t_final > 0.0) {
        return Err(fail(
            MicroError::InvalidParameter {
                name: "t_final",
                value: cfg.t_final,
            },
            0.0,
            trace,
        ));
    }
    if !(cfg.dt > 0.0) || !(cfg.snapshot_interval > 0.0) {
        return Err(fail(
            MicroError::InvalidParameter {
                name: "dt",
                value: cfg.dt.min(cfg.snapshot_interval),
            },
            0.0,
            trace,
        ));
    }

    let mut current = sys.clone();
    let mut t = 0.0;
    let mut y = 1.0_f64;
    let mut solution = match solve_velocities(&current, &cfg.step.solver) {
        Ok(s) => s,
        Err(e) => return Err(fail(e, 0.0, trace)),
    };
    record(&mut trace, &current, &solution, 0.0, &mut y);

    let mut k = 1usize;
    let eps = 1e-12 * cfg.t_final;
    while t < cfg.t_final - eps {
        let next_snap = (k as f64 * cfg.snapshot_interval).min(cfg.t_final);
        let h = cfg.dt.min(next_snap - t);
        let outcome = match step_from(&current, solution, h, &cfg.step) {
            Ok(o) => o,
            Err(e) => return Err(fail(e, t, trace)),
        };
        if outcome.capped {
            trace.events.push(TraceEvent::DtCapped {
                time: t,
                requested: h,
                used: outcome.dt_used,
            });
        }
        if !outcome.converged {
            trace.events.push(TraceEvent::NotConverged {
                time: t,
                residual: outcome.start.final_residual,
            });
        }
        trace.steps.push(StepRecord {
            time: t,
            dt_used: outcome.dt_used,
            capped: outcome.capped,
            iterations: outcome.start.iterations_used,
            residual: outcome.start.final_residual,
        });
        t += outcome.dt_used;
        let on_snapshot = (next_snap - t).abs() <= eps;
        if on_snapshot {
            t = next_snap;
        }
        current = outcome.system;
        solution = match solve_velocities(&current, &cfg.step.solver) {
            Ok(s) => s,
            Err(e) => return Err(fail(e, t, trace)),
        };
        if on_snapshot {
            record(&mut trace, &current, &solution, t, &mut y);
            k += 1;
        }
    }
    Ok(trace)
}

fn record(trace: &mut SimulationTrace, sys: &ParticleSystem, sol: &VelocitySolution, t: f64, y: &mut f64) {
    *y = y.max(distance_ratio(&trace.initial_positions, &sys.positions));
    trace.snapshots.push(Snapshot {
        time: t,
        positions: sys.positions.clone(),
        velocities: sol.velocities.clone(),
        d_min: sol.d_min,
        y: *y,
        residual: sol.final_residual,
        iterations: sol.iterations_used,
        delta_stat: sol.delta_stat,
        alpha_stat: sol.alpha_stat,
        converged: sol.converged,
    });
}
