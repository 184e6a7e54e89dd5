//! File formats: particle systems and trace sidecars as JSON, bulk data as
//! CSV. Every JSON document carries `schema_version`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use sediment_core::meso::{CubeGrid, CubeIndex, DensityGrid};
use sediment_core::micro::{ParticleSystem, SimulationTrace, Snapshot, StepRecord, TraceEvent};
use sediment_core::Vec3;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::error::LabError;
use crate::harness::{ConvergenceReport, DistanceSeries, ReportRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn create(path: &Path) -> Result<BufWriter<File>, LabError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| LabError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, LabError> {
    File::open(path).map(BufReader::new).map_err(|e| LabError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| LabError::format(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| LabError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, LabError> {
    serde_json::from_reader(open(path)?).map_err(|e| LabError::format(path, e))
}

fn check_schema(path: &Path, found: u32) -> Result<(), LabError> {
    if found == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(LabError::format(path, format!("schema_version {found}, expected {SCHEMA_VERSION}")))
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, LabError> {
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<BufReader<File>>, LabError> {
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(open(path)?))
}

fn csv_err(path: &Path, e: csv::Error) -> LabError {
    LabError::format(path, e)
}

/// `stem.json` and `stem.csv` next to each other.
fn sibling(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn v3(p: Vec3) -> [f64; 3] {
    p.to_array()
}

// ---------------------------------------------------------------- config

pub fn read_config(path: &Path) -> Result<ExperimentConfig, LabError> {
    let cfg: ExperimentConfig = read_json(path)?;
    check_schema(path, cfg.schema_version)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn write_config(path: &Path, cfg: &ExperimentConfig) -> Result<(), LabError> {
    write_json(path, cfg)
}

// ---------------------------------------------------------------- systems

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SystemFile {
    schema_version: u32,
    radius: f64,
    c0: f64,
    gravity_dir: [f64; 3],
    lattice_spacing: Option<f64>,
    positions: Vec<[f64; 3]>,
}

pub fn write_system(path: &Path, sys: &ParticleSystem) -> Result<(), LabError> {
    write_json(
        path,
        &SystemFile {
            schema_version: SCHEMA_VERSION,
            radius: sys.radius,
            c0: sys.c0,
            gravity_dir: v3(sys.gravity_dir),
            lattice_spacing: sys.lattice_spacing,
            positions: sys.positions.iter().map(|&p| v3(p)).collect(),
        },
    )
}

pub fn read_system(path: &Path) -> Result<ParticleSystem, LabError> {
    let f: SystemFile = read_json(path)?;
    check_schema(path, f.schema_version)?;
    if !(f.radius > 0.0) || f.positions.is_empty() {
        return Err(LabError::format(path, "radius must be positive and positions non-empty"));
    }
    let mut sys = ParticleSystem::new(
        f.positions.into_iter().map(Vec3::from_array).collect(),
        f.radius,
        Vec3::from_array(f.gravity_dir),
        f.c0,
    );
    sys.lattice_spacing = f.lattice_spacing;
    Ok(sys)
}

// ---------------------------------------------------------------- traces

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SnapshotMeta {
    time: f64,
    d_min: f64,
    y: f64,
    residual: f64,
    iterations: usize,
    delta_stat: f64,
    alpha_stat: f64,
    converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum EventRecord {
    DtCapped { time: f64, requested: f64, used: f64 },
    NotConverged { time: f64, residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StepRow {
    time: f64,
    dt_used: f64,
    capped: bool,
    iterations: usize,
    residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TraceSidecar {
    schema_version: u32,
    radius: f64,
    particles: usize,
    initial_positions: Vec<[f64; 3]>,
    snapshots: Vec<SnapshotMeta>,
    steps: Vec<StepRow>,
    events: Vec<EventRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct ParticleRow {
    snapshot: usize,
    particle: usize,
    x: f64,
    y: f64,
    z: f64,
    vx: f64,
    vy: f64,
    vz: f64,
}

const PARTICLE_HEADER: [&str; 8] = ["snapshot", "particle", "x", "y", "z", "vx", "vy", "vz"];

/// Writes `dir/trace.csv` (one row per particle and snapshot) and the
/// `dir/trace.json` sidecar with per-snapshot diagnostics.
pub fn write_trace(dir: &Path, trace: &SimulationTrace) -> Result<(), LabError> {
    let csv_path = dir.join("trace.csv");
    let mut w = csv_writer(&csv_path)?;
    w.write_record(PARTICLE_HEADER).map_err(|e| csv_err(&csv_path, e))?;
    for (k, s) in trace.snapshots.iter().enumerate() {
        for (i, (p, v)) in s.positions.iter().zip(&s.velocities).enumerate() {
            w.serialize(ParticleRow {
                snapshot: k,
                particle: i,
                x: p.x,
                y: p.y,
                z: p.z,
                vx: v.x,
                vy: v.y,
                vz: v.z,
            })
            .map_err(|e| csv_err(&csv_path, e))?;
        }
    }
    w.flush().map_err(|e| LabError::io(&csv_path, e))?;

    let sidecar = TraceSidecar {
        schema_version: SCHEMA_VERSION,
        radius: trace.radius,
        particles: trace.initial_positions.len(),
        initial_positions: trace.initial_positions.iter().map(|&p| v3(p)).collect(),
        snapshots: trace
            .snapshots
            .iter()
            .map(|s| SnapshotMeta {
                time: s.time,
                d_min: s.d_min,
                y: s.y,
                residual: s.residual,
                iterations: s.iterations,
                delta_stat: s.delta_stat,
                alpha_stat: s.alpha_stat,
                converged: s.converged,
            })
            .collect(),
        steps: trace
            .steps
            .iter()
            .map(|s| StepRow {
                time: s.time,
                dt_used: s.dt_used,
                capped: s.capped,
                iterations: s.iterations,
                residual: s.residual,
            })
            .collect(),
        events: trace
            .events
            .iter()
            .map(|e| match *e {
                TraceEvent::DtCapped { time, requested, used } => EventRecord::DtCapped { time, requested, used },
                TraceEvent::NotConverged { time, residual } => EventRecord::NotConverged { time, residual },
            })
            .collect(),
    };
    write_json(&dir.join("trace.json"), &sidecar)
}

pub fn read_trace(dir: &Path) -> Result<SimulationTrace, LabError> {
    let json_path = dir.join("trace.json");
    let side: TraceSidecar = read_json(&json_path)?;
    check_schema(&json_path, side.schema_version)?;
    let n = side.particles;
    let mut positions = vec![vec![Vec3::ZERO; n]; side.snapshots.len()];
    let mut velocities = positions.clone();
    let mut seen = vec![0usize; side.snapshots.len()];

    let csv_path = dir.join("trace.csv");
    for row in csv_reader(&csv_path)?.deserialize() {
        let r: ParticleRow = row.map_err(|e| csv_err(&csv_path, e))?;
        if r.snapshot >= positions.len() || r.particle >= n {
            return Err(LabError::format(&csv_path, format!("row ({}, {}) out of range", r.snapshot, r.particle)));
        }
        positions[r.snapshot][r.particle] = Vec3::new(r.x, r.y, r.z);
        velocities[r.snapshot][r.particle] = Vec3::new(r.vx, r.vy, r.vz);
        seen[r.snapshot] += 1;
    }
    if let Some(k) = seen.iter().position(|&c| c != n) {
        return Err(LabError::format(&csv_path, format!("snapshot {k} has {} of {n} particles", seen[k])));
    }

    let snapshots = side
        .snapshots
        .into_iter()
        .zip(positions.into_iter().zip(velocities))
        .map(|(m, (positions, velocities))| Snapshot {
            time: m.time,
            positions,
            velocities,
            d_min: m.d_min,
            y: m.y,
            residual: m.residual,
            iterations: m.iterations,
            delta_stat: m.delta_stat,
            alpha_stat: m.alpha_stat,
            converged: m.converged,
        })
        .collect();
    Ok(SimulationTrace {
        initial_positions: side.initial_positions.into_iter().map(Vec3::from_array).collect(),
        radius: side.radius,
        snapshots,
        steps: side
            .steps
            .into_iter()
            .map(|s| StepRecord {
                time: s.time,
                dt_used: s.dt_used,
                capped: s.capped,
                iterations: s.iterations,
                residual: s.residual,
            })
            .collect(),
        events: side
            .events
            .into_iter()
            .map(|e| match e {
                EventRecord::DtCapped { time, requested, used } => TraceEvent::DtCapped { time, requested, used },
                EventRecord::NotConverged { time, residual } => TraceEvent::NotConverged { time, residual },
            })
            .collect(),
    })
}

// ---------------------------------------------------------------- grids

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub schema_version: u32,
    pub delta: f64,
    pub anchor: [f64; 3],
    /// Inclusive index bounds of the occupied cubes.
    pub extents: Option<(CubeIndex, CubeIndex)>,
    pub beta: Option<f64>,
    pub cubes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct CubeRow {
    ix: i64,
    iy: i64,
    iz: i64,
    value: f64,
}

const CUBE_HEADER: [&str; 4] = ["ix", "iy", "iz", "value"];

/// Writes `stem.json` (header) and `stem.csv` (one row per cube).
pub fn write_grid(stem: &Path, grid: &DensityGrid, beta: Option<f64>) -> Result<(), LabError> {
    let header = GridHeader {
        schema_version: SCHEMA_VERSION,
        delta: grid.grid.delta,
        anchor: v3(grid.grid.anchor),
        extents: grid.extents(),
        beta,
        cubes: grid.len(),
    };
    write_json(&sibling(stem, "json"), &header)?;
    let path = sibling(stem, "csv");
    let mut w = csv_writer(&path)?;
    w.write_record(CUBE_HEADER).map_err(|e| csv_err(&path, e))?;
    for (k, value) in grid.iter() {
        w.serialize(CubeRow {
            ix: k[0],
            iy: k[1],
            iz: k[2],
            value,
        })
        .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| LabError::io(&path, e))
}

pub fn read_grid(stem: &Path) -> Result<(GridHeader, DensityGrid), LabError> {
    let json_path = sibling(stem, "json");
    let header: GridHeader = read_json(&json_path)?;
    check_schema(&json_path, header.schema_version)?;
    if !(header.delta > 0.0) {
        return Err(LabError::format(&json_path, "delta must be positive"));
    }
    let grid = CubeGrid {
        delta: header.delta,
        anchor: Vec3::from_array(header.anchor),
    };
    let path = sibling(stem, "csv");
    let mut values = Vec::new();
    for row in csv_reader(&path)?.deserialize() {
        let r: CubeRow = row.map_err(|e| csv_err(&path, e))?;
        values.push(([r.ix, r.iy, r.iz], r.value));
    }
    if values.len() != header.cubes {
        return Err(LabError::format(&path, format!("{} cubes, header says {}", values.len(), header.cubes)));
    }
    Ok((header, DensityGrid::from_values(grid, values)))
}

// ---------------------------------------------------------------- series

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct SeriesRow {
    time: f64,
    distance: f64,
}

pub fn write_series(path: &Path, series: &DistanceSeries) -> Result<(), LabError> {
    let mut w = csv_writer(path)?;
    w.write_record(["time", "distance"]).map_err(|e| csv_err(path, e))?;
    for (&time, &distance) in series.times.iter().zip(&series.distances) {
        w.serialize(SeriesRow { time, distance }).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

pub fn read_series(path: &Path) -> Result<DistanceSeries, LabError> {
    let mut series = DistanceSeries {
        times: Vec::new(),
        distances: Vec::new(),
    };
    for row in csv_reader(path)?.deserialize() {
        let r: SeriesRow = row.map_err(|e| csv_err(path, e))?;
        series.times.push(r.time);
        series.distances.push(r.distance);
    }
    Ok(series)
}

// ---------------------------------------------------------------- reports

pub const REPORT_COLUMNS: [&str; 22] = [
    "n",
    "seed",
    "status",
    "error",
    "delta",
    "delta_tilde",
    "macro_h",
    "markers",
    "initial_d_min",
    "initial_distance",
    "sup_distance",
    "final_distance",
    "final_d_min",
    "max_y",
    "max_iterations",
    "mean_iterations",
    "max_residual",
    "max_delta_stat",
    "max_alpha_stat",
    "micro_steps",
    "macro_steps",
    "wall_time_s",
];

/// Write the report with a fixed column order. CSV output starts with a
/// `# schema_version=N` line.
pub fn emit_report(report: &ConvergenceReport, format: Format, path: &Path) -> Result<(), LabError> {
    match format {
        Format::Json => write_json(path, report),
        Format::Csv => {
            let mut out = create(path)?;
            writeln!(out, "# schema_version={}", report.schema_version).map_err(|e| LabError::io(path, e))?;
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(REPORT_COLUMNS).map_err(|e| csv_err(path, e))?;
            for row in &report.rows {
                w.serialize(row).map_err(|e| csv_err(path, e))?;
            }
            w.flush().map_err(|e| LabError::io(path, e))
        }
    }
}

pub fn parse_report(path: &Path, format: Format) -> Result<ConvergenceReport, LabError> {
    match format {
        Format::Json => {
            let r: ConvergenceReport = read_json(path)?;
            check_schema(path, r.schema_version)?;
            Ok(r)
        }
        Format::Csv => {
            let mut first = String::new();
            open(path)?.read_line(&mut first).map_err(|e| LabError::io(path, e))?;
            let version = first
                .trim()
                .strip_prefix("# schema_version=")
                .and_then(|v| v.parse::<u32>().ok())
                .ok_or_else(|| LabError::format(path, "missing schema_version line"))?;
            check_schema(path, version)?;
            let mut reader = csv_reader(path)?;
            let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
            if header.iter().ne(REPORT_COLUMNS) {
                return Err(LabError::format(path, "unexpected report columns"));
            }
            let rows = reader
                .deserialize::<ReportRow>()
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| csv_err(path, e))?;
            Ok(ConvergenceReport {
                schema_version: version,
                rows,
            })
        }
    }
}
