use qcomp::{
    parse_rows, run_sweep, write_rows, ChannelKind, ExperimentConfig, InterpolationScheme, OutputFormat, ResultRow,
};

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        k_targets: 2,
        trials: 60,
        schemes: vec![InterpolationScheme::None, InterpolationScheme::Taylor1],
        channels: vec![ChannelKind::Full, ChannelKind::OneBit, ChannelKind::OneBitDither],
        densities: vec![0.5, 2.0],
        master_seed: 9,
        ..ExperimentConfig::default()
    }
}

fn csv(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_rows(rows, OutputFormat::Csv, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn worker_count_does_not_change_output() {
    let outputs: Vec<String> = [1, 2, 8]
        .into_iter()
        .map(|workers| {
            csv(&run_sweep(&ExperimentConfig {
                workers,
                ..small_config()
            })
            .unwrap())
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn density_order_only_permutes_rows() {
    let forward = run_sweep(&small_config()).unwrap();
    let reversed = run_sweep(&ExperimentConfig {
        densities: vec![2.0, 0.5],
        ..small_config()
    })
    .unwrap();
    assert_eq!(forward.len(), reversed.len());
    for row in &forward {
        let twin = reversed
            .iter()
            .find(|r| r.scheme == row.scheme && r.channel == row.channel && r.rho == row.rho)
            .unwrap();
        assert_eq!(row, twin);
    }
    assert_ne!(forward, reversed);
}

#[test]
fn a_cell_run_alone_matches_the_same_cell_in_a_sweep() {
    let all = run_sweep(&small_config()).unwrap();
    let alone = run_sweep(&ExperimentConfig {
        schemes: vec![InterpolationScheme::Taylor1],
        channels: vec![ChannelKind::OneBitDither],
        densities: vec![2.0],
        ..small_config()
    })
    .unwrap();
    let twin = all
        .iter()
        .find(|r| r.scheme == InterpolationScheme::Taylor1 && r.channel == ChannelKind::OneBitDither && r.rho == 2.0)
        .unwrap();
    assert_eq!(&alone[0], twin);
}

#[test]
fn seed_changes_results() {
    let a = run_sweep(&small_config()).unwrap();
    let b = run_sweep(&ExperimentConfig {
        master_seed: 10,
        ..small_config()
    })
    .unwrap();
    assert_ne!(csv(&a), csv(&b));
}

#[test]
fn grid_error_follows_quarter_bin_law() {
    // Uniform deviation over a bin of width M/N resolution cells gives M/(4N).
    let rows = run_sweep(&ExperimentConfig {
        k_targets: 1,
        schemes: vec![InterpolationScheme::None],
        channels: vec![ChannelKind::Full],
        densities: vec![2.0],
        ..ExperimentConfig::default()
    })
    .unwrap();
    assert!((rows[0].avg_error - 0.125).abs() <= 0.01, "{}", rows[0].avg_error);
}

#[test]
fn first_order_interpolation_error_at_density_five() {
    let rows = run_sweep(&ExperimentConfig {
        k_targets: 1,
        schemes: vec![InterpolationScheme::Taylor1],
        channels: vec![ChannelKind::Full],
        densities: vec![5.0],
        ..ExperimentConfig::default()
    })
    .unwrap();
    assert!((0.0015..=0.0035).contains(&rows[0].avg_error), "{}", rows[0].avg_error);
}

#[test]
fn written_files_parse_back() {
    let rows = run_sweep(&small_config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (format, name) in [(OutputFormat::Csv, "out.csv"), (OutputFormat::Json, "out.json")] {
        let path = dir.path().join(name);
        qcomp::emit(&rows, format, &path).unwrap();
        let back = parse_rows(&std::fs::read_to_string(&path).unwrap(), format).unwrap();
        let expected: Vec<ResultRow> = rows.iter().map(ResultRow::rounded).collect();
        assert_eq!(back, expected);
    }
}
