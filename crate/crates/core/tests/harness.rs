use std::process::Command;

use cvim::dynamics::Series;
use cvim::harness::{
    grid_csv, log_spaced, recommended_fock_dim, run_preset, run_sweep, time_series_csv,
    validate_config, write_sweep, MachineKind, Preset, PresetOptions, GRID_COLUMNS,
};
use cvim::models::KpoSystemParams;
use cvim::semiclassical::predicted_photon_number;
use cvim::Error;
use num_complex::Complex64;

const PAIR: &str = r#"
[machine]
kind = "cvim"

[problem]
matrix = [[0.0, 0.5], [0.5, 0.0]]

[physics]
detuning = -1.0
kerr = 0.7
epsilon_max = 2.0

[sweep]
ramp_durations = [400.0]
rates = [0.0]
n_traj = 3
"#;

fn config_error_field(text: &str) -> String {
    match validate_config(text, None) {
        Err(Error::Config { field, .. }) => field,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn minimal_config_gets_defaults() {
    let c = validate_config(
        "[machine]\nkind = \"cvim\"\n[problem]\nassets = [4, 5, 6, 7]\n",
        None,
    )
    .unwrap();
    assert_eq!(c.machine, MachineKind::Cvim);
    assert_eq!(c.physics.detuning, Some(-1.5));
    assert_eq!(c.physics.kerr, Some(vec![0.6; 4]));
    assert_eq!(c.physics.epsilon_max, 2.0);
    assert_eq!(c.sweep.ramp_durations, vec![25.0, 50.0, 100.0, 200.0]);
    assert_eq!(c.sweep.rates, log_spaced(1e-3, 1e-1, 4));
    assert_eq!(c.sweep.n_traj, 40);
    let params = c.kpo_params(0.0).unwrap();
    let want = recommended_fock_dim(predicted_photon_number(&params, 2.0));
    // 11⁴ ≤ 20000 < 12⁴
    assert_eq!(want, 18);
    assert_eq!(c.physics.fock_dim, Some(11));
}

#[test]
fn autosized_truncation_follows_mean_field_photons() {
    let c = validate_config(PAIR, None).unwrap();
    // |α|² = (4 - 1 + 0.5) / 1.4 = 2.5
    assert_eq!(c.physics.fock_dim, Some(16));
    let p = KpoSystemParams::pair(-1.0, -0.5, 0.7, 0.0).unwrap();
    assert!((predicted_photon_number(&p, 2.0) - 2.5).abs() < 1e-12);
}

#[test]
fn large_instances_are_capped() {
    let c = validate_config(
        "[machine]\nkind = \"cvim\"\n[problem]\nassets = [1, 2, 3, 4, 5, 6]\n[physics]\nepsilon_max = 5.0\n",
        None,
    )
    .unwrap();
    let d = c.physics.fock_dim.unwrap();
    assert!(d.pow(6) <= 20_000);
}

#[test]
fn negative_rate_names_rates() {
    let text = PAIR.replace("rates = [0.0]", "rates = [0.01, -0.1]");
    assert_eq!(config_error_field(&text), "rates");
}

#[test]
fn unknown_keys_are_rejected() {
    let text = PAIR.replace("kerr = 0.7", "kerr = 0.7\nkappa = 0.1");
    let err = validate_config(&text, None).unwrap_err();
    assert!(matches!(err, Error::Toml(_)));
    assert!(err.to_string().contains("kappa"));
    let text = PAIR.replace("[sweep]", "[sweeps]");
    assert!(validate_config(&text, None).is_err());
}

#[test]
fn duplicate_grid_values_are_removed() {
    let text = PAIR
        .replace(
            "ramp_durations = [400.0]",
            "ramp_durations = [10.0, 20.0, 10.0]",
        )
        .replace("rates = [0.0]", "rates = [0.1, 0.1, 0.0]");
    let c = validate_config(&text, None).unwrap();
    assert_eq!(c.sweep.ramp_durations, vec![10.0, 20.0]);
    assert_eq!(c.sweep.rates, vec![0.1, 0.0]);
}

#[test]
fn invariant_violations_name_the_field() {
    assert_eq!(
        config_error_field(&PAIR.replace("n_traj = 3", "n_traj = 0")),
        "n_traj"
    );
    assert_eq!(
        config_error_field(&PAIR.replace("[400.0]", "[]")),
        "ramp_durations"
    );
    assert_eq!(
        config_error_field(&PAIR.replace("[400.0]", "[-4.0]")),
        "ramp_durations"
    );
    assert_eq!(
        config_error_field(&PAIR.replace("detuning = -1.0", "detuning = 0.2")),
        "physics.detuning"
    );
    assert_eq!(
        config_error_field(&PAIR.replace("kerr = 0.7", "kerr = [0.7]")),
        "physics.kerr"
    );
    assert_eq!(
        config_error_field(&PAIR.replace(
            "matrix = [[0.0, 0.5], [0.5, 0.0]]",
            "matrix = [[0.0, 0.5], [0.4, 0.0]]"
        )),
        "problem.matrix"
    );
    assert_eq!(
        config_error_field(&PAIR.replace("matrix", "assets = [1, 2]\nmatrix")),
        "problem"
    );
}

#[test]
fn qubit_machine_rejects_oscillator_fields() {
    let text =
        "[machine]\nkind = \"qubit\"\n[problem]\nassets = [4, 5, 6, 7]\n[physics]\nkerr = 0.6\n";
    assert_eq!(config_error_field(text), "physics.kerr");
    let ok = validate_config(
        "[machine]\nkind = \"qubit\"\n[problem]\nassets = [4, 5, 6, 7]\n",
        None,
    )
    .unwrap();
    assert_eq!(ok.physics.epsilon_max, 6.0);
    assert_eq!(ok.sweep.ramp_durations, vec![75.0, 150.0, 300.0, 600.0]);
    assert_eq!(ok.physics.fock_dim, None);
}

#[test]
fn problem_file_is_resolved_next_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("npp.txt"), "# four numbers\n4\n5\n\n6\n7\n").unwrap();
    let text = "[machine]\nkind = \"qubit\"\n[problem]\nfile = \"npp.txt\"\n";
    let c = validate_config(text, Some(dir.path())).unwrap();
    assert_eq!(c.problem.assets, Some(vec![4, 5, 6, 7]));
}

#[test]
fn coherent_pair_sweep_always_succeeds() {
    let mut c = validate_config(PAIR, None).unwrap();
    c.physics.fock_dim = Some(18);
    let r = run_sweep(&c).unwrap();
    assert_eq!(r.cells.len(), 1);
    let cell = &r.cells[0];
    assert_eq!(cell.success, 1.0);
    assert_eq!(cell.mean_jumps, 0.0);
    assert_eq!(cell.stderr_success, 0.0);
    assert_eq!(cell.n_traj, 3);
    assert_eq!(cell.inverse_ramp_rate, 200.0);
}

const QA: &str = r#"
[machine]
kind = "qubit"

[problem]
assets = [4, 5, 6, 7]

[sweep]
ramp_durations = [150.0]
rates = [0.0, 0.0016666666666666668]
n_traj = 40
base_seed = 4
"#;

#[test]
fn one_dephasing_event_lowers_qubit_success() {
    let r = run_sweep(&validate_config(QA, None).unwrap()).unwrap();
    let clean = r.cell(150.0, 0.0).unwrap();
    let noisy = r.cell(150.0, 1.0 / 600.0).unwrap();
    assert!(
        (noisy.mean_jumps - 1.0).abs() < 0.5,
        "mean jumps {}",
        noisy.mean_jumps
    );
    assert!(noisy.success < clean.success);
    assert!(r.cells.iter().all(|c| c.valid && c.max_leakage == 0.0));
}

const TINY: &str = r#"
[machine]
kind = "cvim"

[problem]
assets = [1, 2]

[physics]
detuning = -1.5
fock_dim = 8

[sweep]
ramp_durations = [6.0, 9.0]
rates = [0.0, 0.2]
n_traj = 2
base_seed = 17
"#;

#[test]
fn identical_seeds_give_identical_csv() {
    let c = validate_config(&TINY.replace("n_traj = 2", "n_traj = 1"), None).unwrap();
    let a = grid_csv(&run_sweep(&c).unwrap().cells).unwrap();
    let b = grid_csv(&run_sweep(&c).unwrap().cells).unwrap();
    assert_eq!(a, b);
}

#[test]
fn a_cell_rerun_alone_reproduces_its_row() {
    let full = run_sweep(&validate_config(TINY, None).unwrap()).unwrap();
    let single = TINY
        .replace("ramp_durations = [6.0, 9.0]", "ramp_durations = [9.0]")
        .replace("rates = [0.0, 0.2]", "rates = [0.2]");
    let alone = run_sweep(&validate_config(&single, None).unwrap()).unwrap();
    assert_eq!(full.cell(9.0, 0.2).unwrap(), &alone.cells[0]);
    assert_eq!(full.cells.len(), 4);
}

#[test]
fn grid_csv_and_manifest_layout() {
    let dir = tempfile::tempdir().unwrap();
    let c = validate_config(TINY, None).unwrap();
    let r = run_sweep(&c).unwrap();
    let (csv, manifest) = write_sweep(&r, &dir.path().join("grid.csv")).unwrap();
    assert_eq!(manifest, dir.path().join("grid.json"));
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), GRID_COLUMNS.join(","));
    assert_eq!(
        GRID_COLUMNS.join(","),
        "T_us,rate_per_us,success,mean_jumps,stderr_success,n_traj"
    );
    assert_eq!(lines.count(), 4);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(manifest).unwrap()).unwrap();
    assert_eq!(m["seed"], 17);
    assert_eq!(m["config"]["physics"]["fock_dim"], 8);
    assert_eq!(m["truncation"]["fock_dims"], serde_json::json!([8, 8]));
    assert!(m["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["cells"].as_array().unwrap().len(), 4);
    assert!(m["truncation"]["leakage_limit"].as_f64().unwrap() > 0.0);
}

#[test]
fn time_series_splits_complex_columns() {
    let series = vec![
        Series {
            name: "fid".into(),
            real: true,
            values: vec![Complex64::new(0.5, 0.0), Complex64::new(0.25, 0.0)],
        },
        Series {
            name: "adag0_a1".into(),
            real: false,
            values: vec![Complex64::new(1.0, -2.0), Complex64::new(0.0, 3.5)],
        },
    ];
    let text = time_series_csv(&[0.0, 1.5], &series).unwrap();
    assert_eq!(
        text,
        "t_us,fid,adag0_a1.re,adag0_a1.im\n0,0.5,1,-2\n1.5,0.25,0,3.5\n"
    );
}

#[test]
fn preset_names_round_trip() {
    for p in Preset::ALL {
        assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
    }
    assert!("fig9".parse::<Preset>().is_err());
}

#[test]
fn fig2b_preset_writes_series_jumps_and_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let opts = PresetOptions {
        seed: Some(5),
        n_traj: None,
        out_dir: Some(dir.path().to_path_buf()),
    };
    let written = run_preset(Preset::Fig2b, &opts).unwrap();
    for name in [
        "fig2b.csv",
        "fig2b.json",
        "fig2b_jumps.csv",
        "fig2b_jumps.json",
    ] {
        assert!(written.contains(&dir.path().join(name)), "{name} missing");
    }
    let series = std::fs::read_to_string(dir.path().join("fig2b.csv")).unwrap();
    let header = series.lines().next().unwrap();
    assert!(header.starts_with("t_us,fid_vac,fid_phi_plus,fid_phi_minus,fid_psi_plus,n0.re,n0.im"));
    assert_eq!(series.lines().count(), 402);
    let jumps = std::fs::read_to_string(dir.path().join("fig2b_jumps.csv")).unwrap();
    assert_eq!(jumps.lines().next().unwrap(), "t_us,mode");
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cvim"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn cli_oracle_prints_ground_states() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("npp.txt");
    std::fs::write(&file, "4\n5\n6\n7\n").unwrap();
    let out = cli(&["oracle", file.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("ground energy: -1.5"));
    assert!(text.contains("[+1, -1, -1, +1]"));
    assert!(text.contains("[-1, +1, +1, -1]"));
}

#[test]
fn cli_thresholds() {
    let out = cli(&[
        "thresholds",
        "--detuning",
        "-1",
        "--coupling",
        "-0.5",
        "--kappa",
        "0",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("epsilon_soft = 0.25"));
    assert!(text.contains("epsilon_hard = 0.75"));
}

#[test]
fn cli_sweep_honours_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tiny.toml");
    std::fs::write(&config, TINY).unwrap();
    let out_dir = dir.path().join("out");
    let out = cli(&[
        "sweep",
        config.to_str().unwrap(),
        "--seed",
        "3",
        "--n-traj",
        "1",
        "--workers",
        "2",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",1")));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("sweep.json")).unwrap())
            .unwrap();
    assert_eq!(m["seed"], 3);
}

#[test]
fn cli_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(
        &config,
        TINY.replace("rates = [0.0, 0.2]", "rates = [-0.2]"),
    )
    .unwrap();
    let out = cli(&["sweep", config.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("rates"));
}

#[test]
fn shipped_configs_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["pair.toml", "qubit_npp4.toml"] {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        validate_config(&text, Some(&dir)).unwrap();
    }
}
