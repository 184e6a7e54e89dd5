use std::time::Instant;

use sediment_core::macroscale::{evolve, init_markers, MacroRunConfig, MacroSnapshot, MarkerOptions};
use sediment_core::meso::{deposit, deposit_cells, x_beta_distance, CubeGrid, DensityGrid};
use sediment_core::micro::{
    generate_configuration, pair_statistics, run_micro, ConfigSpec, Domain, MicroRunConfig, ParticleSystem, SimulationTrace,
    StepParams, Summation,
};
use sediment_core::Vec3;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SCHEMA_VERSION, TOTAL_MASS};
use crate::error::LabError;

pub const GRAVITY: Vec3 = Vec3::new(0.0, 0.0, -1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed,
}

/// One rung of the ladder. Metrics are absent when the rung failed before
/// they could be measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub seed: u64,
    pub status: RowStatus,
    pub error: Option<String>,
    pub delta: Option<f64>,
    pub delta_tilde: Option<f64>,
    pub macro_h: Option<f64>,
    pub markers: Option<usize>,
    pub initial_d_min: Option<f64>,
    pub initial_distance: Option<f64>,
    pub sup_distance: Option<f64>,
    pub final_distance: Option<f64>,
    pub final_d_min: Option<f64>,
    pub max_y: Option<f64>,
    pub max_iterations: Option<usize>,
    pub mean_iterations: Option<f64>,
    pub max_residual: Option<f64>,
    pub max_delta_stat: Option<f64>,
    pub max_alpha_stat: Option<f64>,
    pub micro_steps: Option<usize>,
    pub macro_steps: Option<usize>,
    pub wall_time_s: f64,
}

impl ReportRow {
    fn failed(n: usize, seed: u64, error: &LabError) -> Self {
        ReportRow {
            n,
            seed,
            status: RowStatus::Failed,
            error: Some(error.to_string()),
            delta: None,
            delta_tilde: None,
            macro_h: None,
            markers: None,
            initial_d_min: None,
            initial_distance: None,
            sup_distance: None,
            final_distance: None,
            final_d_min: None,
            max_y: None,
            max_iterations: None,
            mean_iterations: None,
            max_residual: None,
            max_delta_stat: None,
            max_alpha_stat: None,
            micro_steps: None,
            macro_steps: None,
            wall_time_s: 0.0,
        }
    }

    /// Equality ignoring the wall clock.
    pub fn same_result(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.wall_time_s = other.wall_time_s;
        a == *other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub rows: Vec<ReportRow>,
}

impl Default for ConvergenceReport {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            rows: Vec::new(),
        }
    }
}

impl ConvergenceReport {
    pub fn same_results(&self, other: &Self) -> bool {
        self.schema_version == other.schema_version
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| a.same_result(b))
    }
}

/// X_beta distance per matched snapshot time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSeries {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
}

impl DistanceSeries {
    pub fn sup(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }
}

/// Everything fixed before a rung starts running.
#[derive(Debug, Clone, PartialEq)]
pub struct RungSetup {
    pub n: usize,
    pub seed: u64,
    pub system: ParticleSystem,
    pub initial_d_min: f64,
    pub delta: f64,
    pub delta_tilde: f64,
    pub grid: CubeGrid,
}

/// Marker positions of one macro run at the snapshot times.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroTrack {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<Vec3>>,
    pub weights: Vec<f64>,
    pub spacing: f64,
    pub steps: usize,
}

impl MacroTrack {
    pub fn markers(&self) -> usize {
        self.weights.len()
    }

    /// Cube averages on `grid`, each marker spread over its own cell.
    pub fn snapshots_on(&self, grid: CubeGrid) -> Result<Vec<MacroSnapshot>, LabError> {
        let mass = self.weights.iter().sum();
        self.times
            .iter()
            .zip(&self.positions)
            .map(|(&time, p)| {
                Ok(MacroSnapshot {
                    time,
                    grid: deposit_cells(grid, p, &self.weights, self.spacing)?,
                    marker_mass: mass,
                })
            })
            .collect()
    }
}

/// Evolve the macro solution from the configured initial datum.
pub fn track_macro(cfg: &ExperimentConfig) -> Result<MacroTrack, LabError> {
    cfg.validate()?;
    let opts = MarkerOptions {
        blob_factor: cfg.blob_factor,
        xi_star: cfg.xi_target,
        drive: GRAVITY,
        ..MarkerOptions::default()
    };
    let mut cloud = init_markers(&cfg.initial.density(), cfg.macro_h, &opts)?;
    let mut run_cfg = MacroRunConfig::new(cfg.t_final, cfg.macro_dt);
    run_cfg.snapshot_interval = cfg.snapshot_interval();
    let mut times = Vec::new();
    let mut positions = Vec::new();
    let steps = evolve(&mut cloud, &run_cfg.snapshot_times(), cfg.macro_dt, run_cfg.scheme, |c| {
        times.push(c.elapsed());
        positions.push(c.positions());
    })?;
    Ok(MacroTrack {
        times,
        positions,
        weights: cloud.weights().to_vec(),
        spacing: cfg.macro_h,
        steps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RungOutcome {
    pub row: ReportRow,
    pub series: DistanceSeries,
    pub trace: SimulationTrace,
    pub macro_snapshots: Vec<MacroSnapshot>,
}

/// Sample the configuration and fix the grids for one rung.
pub fn prepare_rung(cfg: &ExperimentConfig, rung: usize) -> Result<RungSetup, LabError> {
    cfg.validate()?;
    let n = *cfg.epsilon_ladder.get(rung).ok_or(LabError::Config {
        field: "epsilon_ladder",
        reason: format!("no rung {rung}"),
    })?;
    let seed = cfg.seed_for(rung);
    let mut spec = ConfigSpec::new(n, cfg.c0, cfg.xi_target, seed).with_domain(Domain::Density(cfg.initial.density()));
    spec.gravity_dir = GRAVITY;
    let system = generate_configuration(&spec)?;
    let initial_d_min = pair_statistics(&system.positions, system.radius).d_min;
    let (delta, delta_tilde) = cfg.delta_rule.resolve(initial_d_min, system.lattice_spacing);
    Ok(RungSetup {
        n,
        seed,
        system,
        initial_d_min,
        delta,
        delta_tilde,
        grid: CubeGrid::new(delta_tilde),
    })
}

/// Deposit a micro snapshot with the per-particle mass `4 pi / (3N)`.
pub fn micro_density(positions: &[Vec3], grid: CubeGrid) -> DensityGrid {
    let w = TOTAL_MASS / positions.len().max(1) as f64;
    deposit(grid, positions, &vec![w; positions.len()])
}

/// Match every micro snapshot to the nearest macro snapshot and measure the
/// X_beta distance of the cube averages on `grid`.
pub fn compare_micro_macro(
    trace: &SimulationTrace,
    macro_snapshots: &[MacroSnapshot],
    beta: f64,
    grid: CubeGrid,
    max_skew: f64,
) -> Result<DistanceSeries, LabError> {
    let mut times = Vec::with_capacity(trace.snapshots.len());
    let mut distances = Vec::with_capacity(trace.snapshots.len());
    for snap in &trace.snapshots {
        let nearest = macro_snapshots
            .iter()
            .min_by(|a, b| (a.time - snap.time).abs().total_cmp(&(b.time - snap.time).abs()));
        let skew = nearest.map_or(f64::INFINITY, |m| (m.time - snap.time).abs());
        let partner = match nearest {
            Some(m) if skew <= max_skew => m,
            _ => {
                return Err(LabError::SkewTooLarge {
                    time: snap.time,
                    skew,
                    max_skew,
                })
            }
        };
        let micro = micro_density(&snap.positions, grid);
        times.push(snap.time);
        distances.push(x_beta_distance(&micro, &partner.grid, beta)?);
    }
    Ok(DistanceSeries { times, distances })
}

fn micro_config(cfg: &ExperimentConfig) -> MicroRunConfig {
    let mut step = StepParams::default();
    if !cfg.deterministic {
        step.solver.summation = Summation::RowWise;
    }
    MicroRunConfig {
        t_final: cfg.t_final,
        dt: cfg.micro_dt,
        snapshot_interval: cfg.snapshot_interval(),
        step,
    }
}

/// Run one rung end to end, evolving its own macro solution.
pub fn run_rung(cfg: &ExperimentConfig, rung: usize) -> Result<RungOutcome, LabError> {
    run_rung_with(cfg, rung, &track_macro(cfg)?)
}

/// Run one rung against a precomputed macro solution.
pub fn run_rung_with(cfg: &ExperimentConfig, rung: usize, track: &MacroTrack) -> Result<RungOutcome, LabError> {
    let started = Instant::now();
    let setup = prepare_rung(cfg, rung)?;
    let trace = run_micro(&setup.system, &micro_config(cfg)).map_err(|f| LabError::Micro(f.error))?;
    let macro_snapshots = track.snapshots_on(setup.grid)?;
    let max_skew = 0.5 * cfg.micro_dt.min(cfg.macro_dt);
    let series = compare_micro_macro(&trace, &macro_snapshots, cfg.beta, setup.grid, max_skew)?;

    let snaps = &trace.snapshots;
    let iterations: Vec<usize> = trace.steps.iter().map(|s| s.iterations).collect();
    let row = ReportRow {
        n: setup.n,
        seed: setup.seed,
        status: RowStatus::Ok,
        error: None,
        delta: Some(setup.delta),
        delta_tilde: Some(setup.delta_tilde),
        macro_h: Some(track.spacing),
        markers: Some(track.markers()),
        initial_d_min: Some(setup.initial_d_min),
        initial_distance: series.distances.first().copied(),
        sup_distance: Some(series.sup()),
        final_distance: series.distances.last().copied(),
        final_d_min: snaps.last().map(|s| s.d_min),
        max_y: Some(snaps.iter().map(|s| s.y).fold(1.0, f64::max)),
        max_iterations: Some(snaps.iter().map(|s| s.iterations).chain(iterations.iter().copied()).max().unwrap_or(0)),
        mean_iterations: Some(if iterations.is_empty() {
            0.0
        } else {
            iterations.iter().sum::<usize>() as f64 / iterations.len() as f64
        }),
        max_residual: Some(trace.steps.iter().map(|s| s.residual).chain(snaps.iter().map(|s| s.residual)).fold(0.0, f64::max)),
        max_delta_stat: Some(snaps.iter().map(|s| s.delta_stat).fold(0.0, f64::max)),
        max_alpha_stat: Some(snaps.iter().map(|s| s.alpha_stat).fold(0.0, f64::max)),
        micro_steps: Some(trace.steps.len()),
        macro_steps: Some(track.steps),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok(RungOutcome {
        row,
        series,
        trace,
        macro_snapshots,
    })
}

/// Run every rung against one shared macro solution. A failing rung yields a
/// failed row and the sweep goes on.
/// Under the deterministic flag rungs run one after another; otherwise they
/// run on separate threads.
pub fn sweep_epsilon(cfg: &ExperimentConfig) -> Result<(ConvergenceReport, Vec<Option<RungOutcome>>), LabError> {
    let track = track_macro(cfg)?;
    let track = &track;
    let rungs = 0..cfg.epsilon_ladder.len();
    let results: Vec<Result<RungOutcome, LabError>> = if cfg.deterministic {
        rungs.map(|r| run_rung_with(cfg, r, track)).collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = rungs.map(|r| s.spawn(move || run_rung_with(cfg, r, track))).collect();
            handles.into_iter().map(|h| h.join().expect("rung thread panicked")).collect()
        })
    };
    let mut report = ConvergenceReport::default();
    let mut outcomes = Vec::with_capacity(results.len());
    for (rung, result) in results.into_iter().enumerate() {
        match result {
            Ok(outcome) => {
                report.rows.push(outcome.row.clone());
                outcomes.push(Some(outcome));
            }
            Err(e) => {
                report.rows.push(ReportRow::failed(cfg.epsilon_ladder[rung], cfg.seed_for(rung), &e));
                outcomes.push(None);
            }
        }
    }
    Ok((report, outcomes))
}
