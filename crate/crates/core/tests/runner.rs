mod common;

use std::ffi::OsString;
use std::fs;

use hetnet_comp::controller::{read_comp_trace, verify_cadence, DecisionSource};
use hetnet_comp::geometry::CellKind;
use hetnet_comp::runner::{execute, parse_cli, read_per_ue_csv, run, ControlMode, Mode, RunConfig};
use hetnet_comp::svm::{HyperGrid, KernelFamily};
use hetnet_comp::Error;

/// Short runs with a small grid keep these tests quick.
fn quick(seed: u64, out: &std::path::Path) -> RunConfig {
    let mut cfg = common::config(seed, out);
    cfg.ttis = 18;
    cfg.grid = HyperGrid {
        c_values: vec![1.0, 10.0],
        scales: vec![1.0],
        kernels: vec![KernelFamily::Linear, KernelFamily::Gaussian],
        normalize: vec![true],
    };
    cfg
}

#[test]
fn writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick(1, dir.path());
    let outcome = run(&cfg).unwrap();
    for f in [
        "manifest.json",
        "timing.json",
        "kpis.json",
        "kpis.csv",
        "plotdata_snr_cqi.csv",
        "plotdata_comp_state.csv",
        "baseline/per_ue.csv",
        "baseline/comp_trace.csv",
        "dynamic/per_ue.csv",
        "dynamic/comp_trace.csv",
    ] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 1);
    assert_eq!(manifest["network"]["n_ues"], 60);
    assert!(manifest.get("wall_clock_s").is_none());

    for m in &outcome.modes {
        let per_ue = read_per_ue_csv(fs::File::open(dir.path().join(m.mode.as_str()).join("per_ue.csv")).unwrap()).unwrap();
        assert_eq!(per_ue.len(), 60);
        for (read, kept) in per_ue.iter().zip(&m.per_ue) {
            assert_eq!(read.throughput_mbps.to_bits(), kept.throughput_mbps.to_bits());
            assert_eq!(read.mean_rsrp_dbm, kept.mean_rsrp_dbm);
        }
        let rows = read_comp_trace(fs::File::open(dir.path().join(m.mode.as_str()).join("comp_trace.csv")).unwrap()).unwrap();
        assert_eq!(verify_cadence(&rows, 3).unwrap(), 6);
    }
}

#[test]
fn populations_and_kpis_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = execute(&quick(2, dir.path())).unwrap();
    let n = &outcome.network;
    assert_eq!(n.macro_served_ues + n.pico_served_ues, 60);
    for m in &outcome.modes {
        let s = &m.summary;
        assert_eq!(s.macro_served.n_ues + s.pico_served.n_ues, 60);
        for g in [&s.macro_served, &s.pico_served, &s.overall] {
            if let (Some(edge), Some(peak)) = (g.edge_mbps, g.peak_mbps) {
                assert!(edge <= peak);
            }
        }
        let bler = s.avg_bler.unwrap();
        assert!((0.0..=1.0).contains(&bler));
        assert_eq!(m.per_ue.iter().filter(|u| u.group == CellKind::Pico).count(), s.pico_served.n_ues);
    }
}

#[test]
fn modes_share_everything_outside_the_controller() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = execute(&quick(3, dir.path())).unwrap();
    let b = outcome.mode(ControlMode::Baseline).unwrap();
    let d = outcome.mode(ControlMode::Dynamic).unwrap();
    for (x, y) in b.reports.iter().zip(&d.reports) {
        assert_eq!(x.cqi, y.cqi);
        assert_eq!(x.rsrp_dbm.to_bits(), y.rsrp_dbm.to_bits());
        assert_eq!(x.wideband_snr_db.to_bits(), y.wideband_snr_db.to_bits());
    }

    // A single-mode run sees the same channel as the paired one.
    let mut alone = quick(3, dir.path());
    alone.mode = Mode::Baseline;
    let single = execute(&alone).unwrap();
    assert_eq!(single.modes.len(), 1);
    assert_eq!(single.modes[0].summary, b.summary);
}

#[test]
fn identical_configs_give_identical_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = execute(&quick(4, dir.path())).unwrap();
    let b = execute(&quick(4, dir.path())).unwrap();
    for (x, y) in a.modes.iter().zip(&b.modes) {
        assert_eq!(x.summary, y.summary);
        assert_eq!(x.decisions, y.decisions);
        assert_eq!(x.trace, y.trace);
    }
}

#[test]
fn overrides_respect_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick(5, dir.path());
    cfg.epsilon = 1e-9;
    let outcome = execute(&cfg).unwrap();
    let d = outcome.mode(ControlMode::Dynamic).unwrap();
    assert_eq!(d.decisions.len(), 6);
    assert_eq!(d.decisions[0].source, DecisionSource::BaselineRule);
    for dec in &d.decisions {
        if dec.source == DecisionSource::MlOverride {
            assert_eq!(dec.err, Some(0.0));
            assert!(dec.enabled);
        }
    }
}

#[test]
fn cli_arguments_resolve_and_fail_cleanly() {
    let cfg = parse_cli(["hetnet-comp", "--scenario", "B", "--seed", "9", "--sinr-min", "-2.5", "--mode", "dynamic"]).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.sinr_min, -2.5);
    assert_eq!(cfg.mode, Mode::Dynamic);
    assert!(matches!(parse_cli(["hetnet-comp", "--ttis", "many"]), Err(Error::Usage(_))));
    assert!(parse_cli(["hetnet-comp", "--t-comp", "0"]).is_err());
    assert!(parse_cli(["hetnet-comp", "--epsilon", "1.5"]).is_err());
}

#[test]
fn config_file_feeds_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "seed = 12\nttis = 9\nmode = \"baseline\"\ngrid-c = [1.0]\n").unwrap();
    let argv = [OsString::from("hetnet-comp"), OsString::from("--config"), path.clone().into_os_string()];
    let cfg = parse_cli(argv).unwrap();
    assert_eq!((cfg.seed, cfg.ttis, cfg.mode), (12, 9, Mode::Baseline));
    assert_eq!(cfg.grid.c_values, vec![1.0]);
    let outcome = execute(&cfg).unwrap();
    assert_eq!(outcome.modes[0].trace.len(), 9);
}
