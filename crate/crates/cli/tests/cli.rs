use std::path::Path;
use std::process::Command;

use triadic_cli::{run, Experiment, ExperimentConfig};

fn triadic() -> Command {
    Command::new(env!("CARGO_BIN_EXE_triadic"))
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn invalid_config_exits_nonzero_with_every_violation() {
    let out = triadic()
        .args(["macro-steady", "--set", "n=2", "--set", "c2=0", "--set", "n_paths=0"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("n ≥ 3 required"), "{err}");
    assert!(err.contains("c2 = 0"), "{err}");
    assert!(err.contains("n_paths"), "{err}");
}

#[test]
fn degenerate_rates_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = triadic()
        .args(["ode-trace", "--set", "c1=0.03125", "--set", "c2=0.28125", "--set", "c3=1.0"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("error"));
}

#[test]
fn config_file_and_overrides_compose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, "n = 12\nc3 = 0.5\ninitial = \"half\"\n").unwrap();
    let out_dir = dir.path().join("out");
    let status = triadic()
        .arg("macro-steady")
        .arg("--config")
        .arg(&cfg_path)
        .args(["--set", "n=14", "--seed", "5"])
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let resolved = ExperimentConfig::load(&out_dir.join("config.toml")).unwrap();
    assert_eq!(resolved.n, 14);
    assert_eq!(resolved.c3, 0.5);
    assert_eq!(resolved.seed, 5);
    assert_eq!(resolved.initial, "half");
    assert_eq!(resolved.experiment, Experiment::MacroSteady);
}

#[test]
fn defaults_round_trip_through_the_binary() {
    let out = triadic().args(["defaults", "sde-mfpt"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(cfg.experiment, Experiment::SdeMfpt);
    assert_eq!(cfg.to_toml(), text);
}

#[test]
fn csv_headers_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let expect = [
        (Experiment::MicroPath, "path.csv", "t,value"),
        (Experiment::MicroSpy, "snapshots.csv", "index,t,edges,density,file"),
        (Experiment::MicroPij, "pij.csv", "t,i,j,p_hat"),
        (Experiment::MicroPij, "pij_mean.csv", "t,mean"),
        (Experiment::MacroPath, "path.csv", "t,value"),
        (Experiment::MacroSteady, "steady.csv", "state,density,prob,prob_density"),
        (Experiment::MacroExit, "exit.csv", "n,tau_low_to_mid,tau_high_to_mid,ratio"),
        (Experiment::SdePath, "path.csv", "t,value"),
        (Experiment::SdeMfpt, "mfpt_low.csv", "x,T"),
        (Experiment::SdeMfpt, "mfpt_high.csv", "x,T"),
        (Experiment::SdeMfpt, "mfpt_curve.csv", "n,tau_low_to_mid,tau_high_to_mid,ratio"),
        (Experiment::OdeTrace, "ode.csv", "t,value"),
        (Experiment::MeanField, "mean_field.csv", "step,value"),
        (Experiment::CompareModels, "compare.csv", "t,micro,macro,sde_mean,sde_std_err,ode"),
    ];
    for (e, file, cols) in expect {
        let out = dir.path().join(e.tag());
        let cfg = ExperimentConfig {
            experiment: e,
            out: out.clone(),
            n: 10,
            t_end: 10.0,
            n_paths: 4,
            record_dt: Some(1.0),
            n_values: Some(vec![10, 12, 14]),
            grid_points: 129,
            ..ExperimentConfig::default()
        };
        run(&cfg).unwrap();
        assert_eq!(header(&out.join(file)), cols, "{e}");
        assert!(out.join("summary.json").exists());
    }
}

#[test]
fn steady_csv_matches_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        experiment: Experiment::MacroSteady,
        out: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let res = run(&cfg).unwrap();
    let text = std::fs::read_to_string(dir.path().join("steady.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 436);
    let total: f64 = rows.iter().map(|r| r[2]).sum();
    assert!((total - 1.0).abs() < 1e-12);
    for r in &rows {
        assert_eq!(r[3], r[2] * 435.0);
    }
    let argmax = rows
        .iter()
        .max_by(|a, b| a[2].total_cmp(&b[2]))
        .map(|r| r[0] as u64)
        .unwrap();
    assert_eq!(res.summary["results"]["argmax"], argmax);
    assert_eq!(res.summary["results"]["modality"], "bimodal");
    assert_eq!(res.summary["regime"], "bistable");
}

#[test]
fn compare_models_agree_in_the_monostable_regime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        experiment: Experiment::CompareModels,
        out: dir.path().to_path_buf(),
        n: 100,
        c1: 0.25,
        initial: "er:0.2".into(),
        t_end: 100.0,
        record_dt: Some(1.0),
        ..ExperimentConfig::default()
    };
    run(&cfg).unwrap();
    let text = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        if v[0] >= 50.0 {
            let vals = [v[1], v[2], v[3], v[5]];
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(hi - lo <= 0.05, "t = {}: {vals:?}", v[0]);
        }
    }
}

#[test]
fn snapshots_are_sorted_one_indexed_edge_lists() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        experiment: Experiment::MicroSpy,
        out: dir.path().to_path_buf(),
        n: 15,
        t_end: 5.0,
        ..ExperimentConfig::default()
    };
    run(&cfg).unwrap();
    let text = std::fs::read_to_string(dir.path().join("snapshot_004.txt")).unwrap();
    let pairs: Vec<(usize, usize)> = text
        .lines()
        .map(|l| {
            let mut it = l.split(' ').map(|v| v.parse().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    assert!(pairs.iter().all(|&(i, j)| 1 <= i && i < j && j <= 15));
    assert!(pairs.windows(2).all(|w| w[0] < w[1]));
}
