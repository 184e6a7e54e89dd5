use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sediment_core::meso::{cube_average, x_beta_norm, CubeGrid};
use sediment_core::micro::{generate_configuration, run_micro, ConfigSpec, Domain, MicroRunConfig, ParticleSystem};
use sediment_lab::config::{ExperimentConfig, InitialDatum};
use sediment_lab::harness::{compare_micro_macro, sweep_epsilon, track_macro, GRAVITY};
use sediment_lab::io::{self, Format};
use sediment_lab::LabError;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "sediment", version, about = "Multiscale sedimentation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a particle configuration and write it as JSON.
    Gen(GenArgs),
    /// Integrate the particle dynamics and write a trace directory.
    Micro(MicroArgs),
    /// Evolve the continuum model and write cube-averaged snapshots.
    Macro(MacroArgs),
    /// Cube-average a particle configuration.
    Average(AverageArgs),
    /// X_beta distances between a micro trace and macro snapshots.
    Compare(CompareArgs),
    /// Run the convergence ladder and emit a report.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct SampleArgs {
    #[arg(long, default_value_t = 512)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    c0: f64,
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sample the unit ball instead of the mollified ball.
    #[arg(long)]
    unit_ball: bool,
}

impl SampleArgs {
    fn system(&self) -> Result<ParticleSystem, LabError> {
        let mut spec = ConfigSpec::new(self.n, self.c0, self.xi, self.seed);
        spec.gravity_dir = GRAVITY;
        if !self.unit_ball {
            spec = spec.with_domain(Domain::Density(InitialDatum::default().density()));
        }
        Ok(generate_configuration(&spec)?)
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    sample: SampleArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MicroArgs {
    /// Configuration file from `gen`; sampled from the flags when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    sample: SampleArgs,
    #[arg(long, default_value_t = 0.5)]
    t_final: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MacroArgs {
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    #[arg(long, default_value_t = 0.5)]
    t_final: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Marker spacing.
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    /// Edge of the deposition cubes.
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 3.0)]
    beta: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AverageArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 3.0)]
    beta: f64,
    /// Output stem; `.json` and `.csv` are appended.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Trace directory written by `micro`.
    #[arg(long)]
    micro: PathBuf,
    /// Snapshot directory written by `macro`.
    #[arg(long = "macro")]
    macro_dir: PathBuf,
    #[arg(long, default_value_t = 3.0)]
    beta: f64,
    /// Largest accepted time skew between matched snapshots.
    #[arg(long, default_value_t = 0.005)]
    max_skew: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ladder of particle numbers.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Factor of the delta rule `delta = factor * d_min^exponent`.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    delta_exponent: Option<f64>,
    #[arg(long)]
    delta_tilde_factor: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    #[arg(long)]
    deterministic: Option<bool>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: PathBuf,
}

impl SweepArgs {
    fn config(&self) -> Result<ExperimentConfig, LabError> {
        let mut cfg = match &self.config {
            Some(path) => io::read_config(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(n) = &self.n {
            cfg.epsilon_ladder = n.clone();
        }
        if let Some(s) = &self.seed {
            cfg.seeds = s.clone();
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.c0, self.c0);
        set(&mut cfg.xi_target, self.xi);
        set(&mut cfg.beta, self.beta);
        set(&mut cfg.t_final, self.t_final);
        set(&mut cfg.micro_dt, self.dt);
        set(&mut cfg.macro_dt, self.dt);
        set(&mut cfg.delta_rule.factor, self.delta);
        set(&mut cfg.delta_rule.exponent, self.delta_exponent);
        if let Some(k) = self.delta_tilde_factor {
            cfg.delta_rule.tilde_factor = k;
        }
        if let Some(d) = self.deterministic {
            cfg.deterministic = d;
        }
        cfg.output_dir = Some(self.out.clone());
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct MacroIndexRow {
    snapshot: usize,
    time: f64,
    marker_mass: f64,
    grid_mass: f64,
    max_value: f64,
    x_beta: f64,
}

fn snapshot_stem(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("snap_{k:04}"))
}

fn run(cli: Cli) -> Result<(), LabError> {
    match cli.command {
        Command::Gen(a) => {
            let sys = a.sample.system()?;
            io::write_system(&a.out, &sys)?;
            println!("wrote {} particles to {}", sys.count(), a.out.display());
        }
        Command::Micro(a) => {
            let sys = match &a.input {
                Some(path) => io::read_system(path)?,
                None => a.sample.system()?,
            };
            let cfg = MicroRunConfig::new(a.t_final, a.dt);
            match run_micro(&sys, &cfg) {
                Ok(trace) => {
                    io::write_trace(&a.out, &trace)?;
                    println!("wrote {} snapshots to {}", trace.snapshots.len(), a.out.display());
                }
                Err(failure) => {
                    io::write_trace(&a.out, &failure.trace)?;
                    eprintln!("partial trace up to t = {} written to {}", failure.time, a.out.display());
                    return Err(failure.error.into());
                }
            }
        }
        Command::Macro(a) => {
            let cfg = ExperimentConfig {
                xi_target: a.xi,
                t_final: a.t_final,
                macro_dt: a.dt,
                macro_h: a.h,
                beta: a.beta,
                ..ExperimentConfig::default()
            };
            let track = track_macro(&cfg)?;
            let grid = CubeGrid::new(a.delta);
            let snaps = track.snapshots_on(grid)?;
            let mut rows = Vec::with_capacity(snaps.len());
            for (k, s) in snaps.iter().enumerate() {
                io::write_grid(&snapshot_stem(&a.out, k), &s.grid, Some(a.beta))?;
                rows.push(MacroIndexRow {
                    snapshot: k,
                    time: s.time,
                    marker_mass: s.marker_mass,
                    grid_mass: s.grid.total_mass(),
                    max_value: s.grid.max_value(),
                    x_beta: x_beta_norm(&s.grid, a.beta),
                });
            }
            io::write_json(&a.out.join("index.json"), &rows)?;
            println!("wrote {} snapshots of {} markers to {}", rows.len(), track.markers(), a.out.display());
        }
        Command::Average(a) => {
            let sys = io::read_system(&a.input)?;
            let grid = cube_average(&sys, a.delta)?;
            io::write_grid(&a.out, &grid, Some(a.beta))?;
            println!(
                "{} cubes, mass {:.6}, X_beta norm {:.6}",
                grid.len(),
                grid.total_mass(),
                x_beta_norm(&grid, a.beta)
            );
        }
        Command::Compare(a) => {
            let trace = io::read_trace(&a.micro)?;
            let index: Vec<serde_json::Value> = io::read_json(&a.macro_dir.join("index.json"))?;
            let mut snaps = Vec::with_capacity(index.len());
            for (k, row) in index.iter().enumerate() {
                let (_, grid) = io::read_grid(&snapshot_stem(&a.macro_dir, k))?;
                snaps.push(sediment_core::macroscale::MacroSnapshot {
                    time: row["time"].as_f64().unwrap_or(f64::NAN),
                    marker_mass: row["marker_mass"].as_f64().unwrap_or(f64::NAN),
                    grid,
                });
            }
            let grid = snaps.first().map(|s| s.grid.grid).ok_or_else(|| LabError::Format {
                path: a.macro_dir.clone(),
                message: "no snapshots".into(),
            })?;
            let series = compare_micro_macro(&trace, &snaps, a.beta, grid, a.max_skew)?;
            io::write_series(&a.out, &series)?;
            println!("sup X_beta distance {:.6} over {} snapshots", series.sup(), series.times.len());
        }
        Command::Sweep(a) => {
            let cfg = a.config()?;
            let (report, outcomes) = sweep_epsilon(&cfg)?;
            io::write_config(&a.out.join("config.json"), &cfg)?;
            let ext = match a.format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            io::emit_report(&report, a.format, &a.out.join(format!("report.{ext}")))?;
            for outcome in outcomes.iter().flatten() {
                let rung = a.out.join(format!("n{}", outcome.row.n));
                io::write_series(&rung.join("distance.csv"), &outcome.series)?;
                io::write_trace(&rung, &outcome.trace)?;
            }
            for row in &report.rows {
                match (&row.error, row.sup_distance) {
                    (Some(e), _) => println!("N = {:>6}  failed: {e}", row.n),
                    (None, Some(d)) => println!("N = {:>6}  sup X_beta distance {d:.6}", row.n),
                    (None, None) => println!("N = {:>6}  no distance", row.n),
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_physics_guard() {
                ExitCode::from(2)
            } else if e.is_config() {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
