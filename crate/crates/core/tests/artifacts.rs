use std::io::Write;

use ldp_testing::experiment::{
    read_config, read_csv, run_experiment, write_csv_file, ExperimentConfig, PlayerCounts, ProtocolId, CSV_HEADER,
};
use ldp_testing::Error;

fn small(protocol: ProtocolId) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(protocol, 4, 0.5, 1.0);
    c.n = Some(PlayerCounts::Sweep(vec![400, 800]));
    c.trials = 12;
    c.master_seed = 5;
    c
}

#[test]
fn csv_file_round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let rows = run_experiment(&small(ProtocolId::HrId)).unwrap().rows;
    write_csv_file(&rows, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    assert_eq!(read_csv(text.as_bytes()).unwrap(), rows);
}

#[test]
fn identical_configs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for protocol in ProtocolId::ALL {
        let config = if protocol.is_independence() {
            let mut c = small(protocol);
            c.n = Some(PlayerCounts::One(4000));
            c
        } else {
            small(protocol)
        };
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_csv_file(&run_experiment(&config).unwrap().rows, &a).unwrap();
        write_csv_file(&run_experiment(&config).unwrap().rows, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{protocol}");
    }
}

#[test]
fn config_file_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let config = small(ProtocolId::PublicId);
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    assert_eq!(read_config(&path).unwrap(), config);
}

#[test]
fn malformed_config_reports_file_and_position() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(file, "{{\n  \"protocol\": \"rappor-id\",\n  \"k\": 4,\n  \"eps\": 0.5,\n  \"rho\": oops\n}}").unwrap();
    match read_config(file.path()) {
        Err(Error::Config { location, .. }) => {
            assert!(location.contains("line 5"), "{location}");
            assert!(location.contains(&file.path().display().to_string()));
        }
        other => panic!("expected a config error, got {other:?}"),
    }
}
