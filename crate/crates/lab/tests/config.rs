use sediment_lab::config::{DeltaRule, ExperimentConfig, InitialDatum, SCHEMA_VERSION, TOTAL_MASS};
use sediment_lab::io;
use sediment_lab::LabError;

fn field_of(cfg: &ExperimentConfig) -> &'static str {
    match cfg.validate() {
        Err(LabError::Config { field, .. }) => field,
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

#[test]
fn defaults_are_valid() {
    let cfg = ExperimentConfig::default();
    cfg.validate().unwrap();
    assert_eq!(cfg.schema_version, SCHEMA_VERSION);
    assert_eq!(cfg.epsilon_ladder, vec![512, 2048, 8192]);
    assert_eq!(cfg.beta, 3.0);
    assert_eq!(cfg.t_final, 0.5);
    assert!((cfg.snapshot_interval() - 0.01).abs() < 1e-15);
    assert!((cfg.initial.density().mass() - TOTAL_MASS).abs() < 1e-10);
}

#[test]
fn invalid_fields_are_named() {
    let base = ExperimentConfig::default();
    let cases: Vec<(ExperimentConfig, &str)> = vec![
        (ExperimentConfig { epsilon_ladder: vec![], ..base.clone() }, "epsilon_ladder"),
        (ExperimentConfig { epsilon_ladder: vec![512, 512], ..base.clone() }, "epsilon_ladder"),
        (ExperimentConfig { epsilon_ladder: vec![2048, 512], ..base.clone() }, "epsilon_ladder"),
        (ExperimentConfig { beta: 2.0, ..base.clone() }, "beta"),
        (ExperimentConfig { c0: 0.0, ..base.clone() }, "c0"),
        (ExperimentConfig { t_final: f64::NAN, ..base.clone() }, "t_final"),
        (ExperimentConfig { macro_h: -0.1, ..base.clone() }, "macro_h"),
        (ExperimentConfig { snapshots: 0, ..base.clone() }, "snapshots"),
        (ExperimentConfig { seeds: vec![], ..base.clone() }, "seeds"),
        (ExperimentConfig { schema_version: 99, ..base.clone() }, "schema_version"),
        (
            ExperimentConfig {
                delta_rule: DeltaRule { tilde_factor: 0, ..DeltaRule::default() },
                ..base.clone()
            },
            "delta_rule.tilde_factor",
        ),
    ];
    for (cfg, field) in cases {
        assert_eq!(field_of(&cfg), field);
        assert!(cfg.validate().unwrap_err().is_config());
    }
}

#[test]
fn seeds_cycle_over_rungs() {
    let cfg = ExperimentConfig {
        seeds: vec![7, 9],
        ..ExperimentConfig::default()
    };
    assert_eq!([cfg.seed_for(0), cfg.seed_for(1), cfg.seed_for(2)], [7, 9, 7]);
}

#[test]
fn delta_rule_snaps_the_coarse_edge_to_the_lattice() {
    let rule = DeltaRule::default();
    let s = 0.1281;
    let (delta, tilde) = rule.resolve(0.1034, Some(s));
    let k = tilde / s;
    assert!((k - k.round()).abs() < 1e-12 && k >= 1.0);
    assert!((delta * 4.0 - tilde).abs() < 1e-15);
    let raw = 4.0 * 0.4 * 0.1034f64.powf(1.0 / 6.0);
    assert!((tilde - raw).abs() <= 0.5 * s + 1e-12);

    let (d, t) = DeltaRule::proportional(4.0, 4).resolve(0.1, None);
    assert!((d - 0.4).abs() < 1e-15 && (t - 1.6).abs() < 1e-15);
    let loose = DeltaRule {
        snap_to_lattice: false,
        ..DeltaRule::default()
    };
    assert_eq!(loose.resolve(0.1034, Some(s)).1, raw);
}

#[test]
fn config_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    let cfg = ExperimentConfig {
        epsilon_ladder: vec![64, 128],
        seeds: vec![3],
        initial: InitialDatum::Gaussian { sigma: 0.4 },
        delta_rule: DeltaRule::proportional(4.0, 2),
        ..ExperimentConfig::default()
    };
    io::write_config(&path, &cfg).unwrap();
    assert_eq!(io::read_config(&path).unwrap(), cfg);
}

#[test]
fn partial_config_files_take_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("partial.json");
    std::fs::write(&path, r#"{"schema_version": 1, "epsilon_ladder": [128, 256], "beta": 4.0}"#).unwrap();
    let cfg = io::read_config(&path).unwrap();
    assert_eq!(cfg.epsilon_ladder, vec![128, 256]);
    assert_eq!(cfg.beta, 4.0);
    assert_eq!(cfg.c0, ExperimentConfig::default().c0);

    std::fs::write(&path, r#"{"schema_version": 2}"#).unwrap();
    assert!(matches!(io::read_config(&path), Err(LabError::Format { .. })));
    std::fs::write(&path, r#"{"beta": 1.0}"#).unwrap();
    assert!(matches!(io::read_config(&path), Err(LabError::Config { field: "beta", .. })));
}
