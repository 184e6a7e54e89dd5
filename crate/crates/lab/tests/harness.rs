use sediment_core::macroscale::MacroSnapshot;
use sediment_core::meso::{x_beta_distance, CubeGrid};
use sediment_core::micro::{generate_configuration, pair_statistics, run_micro, ConfigSpec, MicroRunConfig};
use sediment_lab::config::{ExperimentConfig, TOTAL_MASS};
use sediment_lab::harness::*;
use sediment_lab::LabError;

fn short_config() -> ExperimentConfig {
    ExperimentConfig {
        epsilon_ladder: vec![512],
        t_final: 0.05,
        snapshots: 5,
        ..ExperimentConfig::default()
    }
}

#[test]
fn comparing_a_trace_with_itself_gives_zero() {
    let sys = generate_configuration(&ConfigSpec::new(64, 0.1, 1.0, 1)).unwrap();
    let trace = run_micro(&sys, &MicroRunConfig::new(0.04, 0.01)).unwrap();
    let grid = CubeGrid::new(0.5);
    let snaps: Vec<MacroSnapshot> = trace
        .snapshots
        .iter()
        .map(|s| MacroSnapshot {
            time: s.time,
            grid: micro_density(&s.positions, grid),
            marker_mass: TOTAL_MASS,
        })
        .collect();
    let series = compare_micro_macro(&trace, &snaps, 3.0, grid, 1e-9).unwrap();
    assert_eq!(series.times.len(), trace.snapshots.len());
    assert!(series.distances.iter().all(|&d| d == 0.0));
    assert_eq!(series.sup(), 0.0);

    let late: Vec<MacroSnapshot> = snaps
        .iter()
        .map(|s| MacroSnapshot {
            time: s.time + 0.004,
            ..s.clone()
        })
        .collect();
    assert!(matches!(
        compare_micro_macro(&trace, &late, 3.0, grid, 0.001),
        Err(LabError::SkewTooLarge { .. })
    ));
    assert!(compare_micro_macro(&trace, &[], 3.0, grid, 1.0).is_err());
}

#[test]
fn micro_density_carries_the_rescaled_mass() {
    let sys = generate_configuration(&ConfigSpec::new(512, 0.1, 1.0, 2)).unwrap();
    let g = micro_density(&sys.positions, CubeGrid::new(0.3));
    assert!((g.total_mass() - TOTAL_MASS).abs() < 1e-12);
}

#[test]
fn rung_setup_follows_the_delta_rule() {
    let cfg = short_config();
    let setup = prepare_rung(&cfg, 0).unwrap();
    assert_eq!(setup.n, 512);
    assert_eq!(setup.system.count(), 512);
    assert!((setup.system.radius - 1.0 / 512.0).abs() < 1e-15);
    let d_min = pair_statistics(&setup.system.positions, setup.system.radius).d_min;
    assert_eq!(setup.initial_d_min, d_min);
    let (delta, tilde) = cfg.delta_rule.resolve(d_min, setup.system.lattice_spacing);
    assert_eq!((setup.delta, setup.delta_tilde), (delta, tilde));
    assert_eq!(setup.grid, CubeGrid::new(tilde));
    assert!(d_min < setup.delta && setup.delta_tilde < 1.5);
    assert!(matches!(prepare_rung(&cfg, 1), Err(LabError::Config { .. })));
}

#[test]
fn macro_track_snapshots_match_requested_times() {
    let cfg = short_config();
    let track = track_macro(&cfg).unwrap();
    assert_eq!(track.times.len(), 6);
    assert_eq!(*track.times.last().unwrap(), 0.05);
    let snaps = track.snapshots_on(CubeGrid::new(0.5)).unwrap();
    for s in &snaps {
        assert!((s.grid.total_mass() - s.marker_mass).abs() < 1e-12);
    }
}

#[test]
fn smoke_sweep_is_deterministic() {
    let cfg = short_config();
    let (a, outcomes) = sweep_epsilon(&cfg).unwrap();
    let (b, _) = sweep_epsilon(&cfg).unwrap();
    assert!(a.same_results(&b));
    assert_eq!(a.rows.len(), 1);
    let row = &a.rows[0];
    assert_eq!(row.status, RowStatus::Ok);
    assert_eq!(row.micro_steps, Some(5));
    let out = outcomes[0].as_ref().unwrap();
    assert_eq!(out.series.times.len(), 6);
    assert_eq!(row.sup_distance, Some(out.series.sup()));
    // The reported distance is the grid distance of the matched snapshots.
    let grid = CubeGrid::new(row.delta_tilde.unwrap());
    let last = out.trace.snapshots.last().unwrap();
    let d = x_beta_distance(
        &micro_density(&last.positions, grid),
        &out.macro_snapshots.last().unwrap().grid,
        3.0,
    )
    .unwrap();
    assert_eq!(Some(d), row.final_distance);
    assert!(row.max_y.unwrap() >= 1.0);
}

#[test]
fn parallel_sweep_agrees_with_sequential() {
    let cfg = ExperimentConfig {
        epsilon_ladder: vec![64, 128],
        ..short_config()
    };
    let (seq, _) = sweep_epsilon(&cfg).unwrap();
    let (par, _) = sweep_epsilon(&ExperimentConfig {
        deterministic: false,
        ..cfg.clone()
    })
    .unwrap();
    for (a, b) in seq.rows.iter().zip(&par.rows) {
        assert_eq!(a.n, b.n);
        let (x, y) = (a.sup_distance.unwrap(), b.sup_distance.unwrap());
        assert!((x - y).abs() < 1e-9 * x.max(1.0));
    }
}

#[test]
fn failing_rungs_become_failed_rows() {
    let cfg = ExperimentConfig {
        epsilon_ladder: vec![64, 128],
        c0: 10.0,
        ..short_config()
    };
    let (report, outcomes) = sweep_epsilon(&cfg).unwrap();
    assert_eq!(report.rows.len(), 2);
    for (row, out) in report.rows.iter().zip(&outcomes) {
        assert_eq!(row.status, RowStatus::Failed);
        assert!(row.error.as_deref().unwrap().contains("infeasible"), "{:?}", row.error);
        assert!(row.sup_distance.is_none());
        assert!(out.is_none());
    }
}
