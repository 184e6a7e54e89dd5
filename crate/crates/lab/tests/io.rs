use std::fs;

use sediment_core::meso::{cube_average, CubeGrid, DensityGrid};
use sediment_core::micro::{generate_configuration, run_micro, ConfigSpec, MicroRunConfig};
use sediment_core::Vec3;
use sediment_lab::harness::{ConvergenceReport, DistanceSeries, ReportRow, RowStatus};
use sediment_lab::io::{self, Format, REPORT_COLUMNS};
use sediment_lab::LabError;

fn row(n: usize, failed: bool) -> ReportRow {
    ReportRow {
        n,
        seed: 1,
        status: if failed { RowStatus::Failed } else { RowStatus::Ok },
        error: failed.then(|| "collision imminent, with \"quotes\"".to_string()),
        delta: (!failed).then_some(0.123_456_789_012_345_67),
        delta_tilde: (!failed).then_some(0.5),
        macro_h: (!failed).then_some(0.1),
        markers: (!failed).then_some(8144),
        initial_d_min: (!failed).then_some(1.0 / 3.0),
        initial_distance: (!failed).then_some(0.04),
        sup_distance: (!failed).then_some(0.1 + 0.2),
        final_distance: (!failed).then_some(0.07),
        final_d_min: (!failed).then_some(0.16),
        max_y: (!failed).then_some(1.06),
        max_iterations: (!failed).then_some(4),
        mean_iterations: (!failed).then_some(3.5),
        max_residual: (!failed).then_some(1e-9),
        max_delta_stat: (!failed).then_some(2.5e-4),
        max_alpha_stat: (!failed).then_some(17.0),
        micro_steps: (!failed).then_some(50),
        macro_steps: (!failed).then_some(50),
        wall_time_s: 1.25,
    }
}

fn sample_report() -> ConvergenceReport {
    ConvergenceReport {
        rows: vec![row(512, false), row(2048, true), row(8192, false)],
        ..ConvergenceReport::default()
    }
}

#[test]
fn system_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sys = generate_configuration(&ConfigSpec::new(64, 0.1, 1.0, 3)).unwrap();
    let path = dir.path().join("sub/system.json");
    io::write_system(&path, &sys).unwrap();
    assert_eq!(io::read_system(&path).unwrap(), sys);
}

#[test]
fn trace_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sys = generate_configuration(&ConfigSpec::new(27, 0.1, 1.0, 2)).unwrap();
    let trace = run_micro(&sys, &MicroRunConfig::new(0.05, 0.01)).unwrap();
    io::write_trace(dir.path(), &trace).unwrap();
    assert_eq!(io::read_trace(dir.path()).unwrap(), trace);
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "snapshot,particle,x,y,z,vx,vy,vz");
    assert_eq!(csv.lines().count(), 1 + 27 * trace.snapshots.len());
}

#[test]
fn grid_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sys = generate_configuration(&ConfigSpec::new(512, 0.1, 1.0, 4)).unwrap();
    let grid = cube_average(&sys, 0.25).unwrap();
    let stem = dir.path().join("avg");
    io::write_grid(&stem, &grid, Some(3.0)).unwrap();
    let (header, back) = io::read_grid(&stem).unwrap();
    assert_eq!(back, grid);
    assert_eq!(header.delta, 0.25);
    assert_eq!(header.beta, Some(3.0));
    assert_eq!(header.extents, grid.extents());

    let shifted = DensityGrid::from_values(
        CubeGrid {
            delta: 0.3,
            anchor: Vec3::new(0.1, -0.2, 0.05),
        },
        [([-3, 0, 2], 1.5), ([0, 0, 0], 2.0 / 3.0)],
    );
    io::write_grid(&stem, &shifted, None).unwrap();
    assert_eq!(io::read_grid(&stem).unwrap().1, shifted);
}

#[test]
fn series_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = DistanceSeries {
        times: vec![0.0, 0.01, 0.02],
        distances: vec![0.1, 1.0 / 3.0, 0.2],
    };
    let path = dir.path().join("d.csv");
    io::write_series(&path, &s).unwrap();
    assert_eq!(io::read_series(&path).unwrap(), s);
}

#[test]
fn report_round_trips_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let report = sample_report();
    for (format, name) in [(Format::Csv, "r.csv"), (Format::Json, "r.json")] {
        let path = dir.path().join(name);
        io::emit_report(&report, format, &path).unwrap();
        assert_eq!(io::parse_report(&path, format).unwrap(), report);
    }
    let a = io::parse_report(&dir.path().join("r.csv"), Format::Csv).unwrap();
    let b = io::parse_report(&dir.path().join("r.json"), Format::Json).unwrap();
    assert_eq!(a, b);
}

#[test]
fn csv_report_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    io::emit_report(&sample_report(), Format::Csv, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# schema_version=1");
    assert_eq!(lines.next().unwrap(), REPORT_COLUMNS.join(","));
    assert_eq!(lines.count(), 3);
}

#[test]
fn empty_report_has_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    let report = ConvergenceReport::default();
    io::emit_report(&report, Format::Csv, &path).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 2);
    assert_eq!(io::parse_report(&path, Format::Csv).unwrap(), report);
    let json = dir.path().join("empty.json");
    io::emit_report(&report, Format::Json, &json).unwrap();
    assert_eq!(io::parse_report(&json, Format::Json).unwrap(), report);
}

#[test]
fn malformed_inputs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "n,seed\n1,2\n").unwrap();
    assert!(matches!(io::parse_report(&path, Format::Csv), Err(LabError::Format { .. })));
    fs::write(&path, format!("# schema_version=7\n{}\n", REPORT_COLUMNS.join(","))).unwrap();
    assert!(matches!(io::parse_report(&path, Format::Csv), Err(LabError::Format { .. })));
    fs::write(&path, "# schema_version=1\nn,seed\n").unwrap();
    assert!(matches!(io::parse_report(&path, Format::Csv), Err(LabError::Format { .. })));
    let missing = dir.path().join("nope.json");
    assert!(matches!(io::read_system(&missing), Err(LabError::Io { .. })));
    let sys = dir.path().join("sys.json");
    fs::write(&sys, r#"{"schema_version":1,"radius":0.0,"c0":0.1,"gravity_dir":[0,0,-1],"lattice_spacing":null,"positions":[[0,0,0]]}"#).unwrap();
    assert!(matches!(io::read_system(&sys), Err(LabError::Format { .. })));
}
