use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;

use bec_oct::io::read_record;
use bec_oct::{Control, OctProblem};
use bec_oct_cli::config::{Range, SweepSection, Values};
use bec_oct_cli::run::{build_spec, sweep_points};
use bec_oct_cli::{load, run, Config, ExperimentKind, Sources};

fn preset(name: &str, env: &[(&str, &str)]) -> Config {
    load(&Sources {
        preset: Some(name.into()),
        env: env.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        ..Default::default()
    })
    .unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn manifest(dir: &Path) -> Vec<Vec<String>> {
    read_csv(&dir.join("manifest.csv"))
}

#[test]
fn single_well_cost_matches_library() {
    let config = preset("single_well_T9_linear", &[]);
    let dir = tempfile::tempdir().unwrap();
    run(&config, dir.path()).unwrap();
    let rows = read_csv(&dir.path().join("cost.csv"));
    let j: f64 = rows[0][0].parse().unwrap();
    let spec = build_spec(&config, 9.0, 0.0).unwrap();
    let p = OctProblem::transfer(spec).unwrap();
    let expected = p.evaluate_cost(&Control::linear(500)).unwrap().total;
    assert_eq!(j.to_bits(), expected.to_bits());
}

#[test]
fn reruns_and_echoed_configs_reproduce_every_artifact() {
    let env = [("BEC_OCT__GRID__N_X", "128"), ("BEC_OCT__GRID__N_T", "100")];
    let mut config = preset("single_well_T9_linear", &env);
    config.output.states = true;
    config.output.trajectory = true;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    run(&config, a.path()).unwrap();
    run(&config, b.path()).unwrap();
    assert_eq!(manifest(a.path()), manifest(b.path()));
    let echoed = load(&Sources {
        file: Some(a.path().join("effective_config.toml")),
        ..Default::default()
    })
    .unwrap();
    assert_eq!(echoed, config);
    run(&echoed, c.path()).unwrap();
    assert_eq!(manifest(a.path()), manifest(c.path()));
}

#[test]
fn manifest_lists_exactly_the_written_files() {
    let env = [("BEC_OCT__GRID__N_X", "128"), ("BEC_OCT__GRID__N_T", "50")];
    let mut config = preset("single_well_T9_linear", &env);
    config.experiment.kind = ExperimentKind::Groundstate;
    let dir = tempfile::tempdir().unwrap();
    run(&config, dir.path()).unwrap();
    let listed: BTreeSet<String> = manifest(dir.path()).into_iter().map(|r| r[0].clone()).collect();
    let on_disk: BTreeSet<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.csv")
        .collect();
    assert_eq!(listed, on_disk);
    for row in manifest(dir.path()) {
        assert_eq!(
            fs::metadata(dir.path().join(&row[0])).unwrap().len().to_string(),
            row[1]
        );
        assert_eq!(row[2].len(), 64);
    }
    let mut f = fs::File::open(dir.path().join("groundstate_initial.gpf")).unwrap();
    let rec = read_record(&mut f).unwrap();
    assert_eq!(rec.dims, vec![128]);
    let psi = rec.into_complex().unwrap();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * 30.0 / 128.0;
    assert!((norm - 1.0).abs() < 1e-12);
    let axes = read_csv(&dir.path().join("groundstate_initial_axes.csv"));
    assert_eq!(axes.len(), 128);
    assert_eq!(axes[0], vec!["x".to_string(), "0".into(), format!("{:.16e}", -10.0)]);
}

#[test]
fn gpf_header_layout() {
    let env = [("BEC_OCT__GRID__N_X", "64"), ("BEC_OCT__GRID__N_T", "20")];
    let mut config = preset("single_well_T9_linear", &env);
    config.experiment.kind = ExperimentKind::Groundstate;
    let dir = tempfile::tempdir().unwrap();
    run(&config, dir.path()).unwrap();
    let bytes = fs::read(dir.path().join("groundstate_final.gpf")).unwrap();
    assert_eq!(&bytes[..4], b"GPF1");
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    assert_eq!(u32_at(4), 1);
    assert_eq!(u32_at(8), 64);
    assert_eq!(u32_at(12), 1);
    assert_eq!(bytes.len(), 16 + 64 * 16);
}

#[test]
fn single_point_sweep_equals_single_run() {
    let env = [("BEC_OCT__GRID__N_X", "200"), ("BEC_OCT__GRID__N_T", "200")];
    let single = preset("single_well_T9_linear", &env);
    let dir = tempfile::tempdir().unwrap();
    run(&single, dir.path()).unwrap();
    let j: f64 = read_csv(&dir.path().join("cost.csv"))[0][0].parse().unwrap();
    let mut sweep = single.clone();
    sweep.experiment.kind = ExperimentKind::Sweep;
    sweep.sweep = Some(SweepSection {
        t: Some(Values::List(vec![9.0])),
        kappa: None,
    });
    let points = sweep_points(&sweep).unwrap();
    assert_eq!(points.len(), 1);
    assert_eq!(points[0].j_linear.to_bits(), j.to_bits());
}

#[test]
fn nonlinear_map_rows_behave() {
    let env = [("BEC_OCT__GRID__N_X", "256"), ("BEC_OCT__GRID__N_T", "250")];
    let mut config = preset("nonlinear_map", &env);
    let ts = Range {
        start: 2.0,
        stop: 10.0,
        step: 1.0,
    };
    let ks = vec![0.0, 5.0, 10.0, 20.0];
    config.sweep = Some(SweepSection {
        t: Some(Values::Range(ts)),
        kappa: Some(Values::List(ks.clone())),
    });
    let points = sweep_points(&config).unwrap();
    assert_eq!(points.len(), 9 * 4);
    // T-major order
    assert_eq!((points[1].t, points[1].kappa), (2.0, 5.0));
    let at_8: Vec<f64> = points.iter().filter(|p| p.t == 8.0).map(|p| p.j_linear).collect();
    let spread = at_8.iter().cloned().fold(f64::MIN, f64::max) - at_8.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread > 1e-3, "{at_8:?}");
    let first_below = |k: f64| {
        points
            .iter()
            .filter(|p| p.kappa == k)
            .find(|p| p.j_linear < 0.1)
            .map(|p| p.t)
            .unwrap_or(f64::INFINITY)
    };
    let t_min: Vec<f64> = ks.iter().map(|&k| first_below(k)).collect();
    assert!(t_min.windows(2).all(|w| w[1] >= w[0]), "{t_min:?}");
}

#[test]
fn parallel_sweeps_are_deterministic() {
    let env = [("BEC_OCT__GRID__N_X", "128"), ("BEC_OCT__GRID__N_T", "100")];
    let config = preset("nonlinear_map", &env);
    let a = sweep_points(&config).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| sweep_points(&config).unwrap());
    assert_eq!(a, b);
}

#[test]
fn wigner_preset_writes_maps() {
    let env = [
        ("BEC_OCT__GRID__N_X", "128"),
        ("BEC_OCT__GRID__N_T", "100"),
        ("BEC_OCT__WIGNER__TIME_INTEGRATED", "true"),
    ];
    let config = preset("wigner_double_well", &env);
    let dir = tempfile::tempdir().unwrap();
    run(&config, dir.path()).unwrap();
    let mut f = fs::File::open(dir.path().join("wigner.gpf")).unwrap();
    let rec = read_record(&mut f).unwrap();
    assert_eq!(rec.dims.len(), 2);
    let summary = read_csv(&dir.path().join("wigner_summary.csv"));
    assert_eq!(summary.len(), 2);
    let total: f64 = summary[0][1].parse().unwrap();
    assert!((total - 2.0 * std::f64::consts::PI).abs() < 1e-8);
    assert_eq!(summary[1][6], "1");
}

#[test]
fn control_files_round_trip() {
    let env = [("BEC_OCT__GRID__N_X", "128"), ("BEC_OCT__GRID__N_T", "100")];
    let config = preset("single_well_T9_linear", &env);
    let a = tempfile::tempdir().unwrap();
    run(&config, a.path()).unwrap();
    let mut from_file = config.clone();
    from_file.control.guess = bec_oct_cli::config::GuessKind::File;
    from_file.control.file = Some(a.path().join("control.csv"));
    let b = tempfile::tempdir().unwrap();
    run(&from_file, b.path()).unwrap();
    assert_eq!(
        read_csv(&a.path().join("cost.csv")),
        read_csv(&b.path().join("cost.csv"))
    );
}

#[test]
fn binary_reports_errors_with_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_bec-oct");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[solver]\nscheme = \"split_operator\"\nkapa = 1.0\n").unwrap();
    let out = Command::new(exe)
        .args(["propagate", "--preset", "single_well_T9_linear", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("kapa") && err.contains("line 3"), "{err}");

    let out = Command::new(exe)
        .args(["run", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(exe)
        .args([
            "groundstate",
            "--preset",
            "single_well_T9_linear",
            "--threads",
            "2",
            "--out",
        ])
        .arg(dir.path().join("g"))
        .env("BEC_OCT__GRID__N_X", "64")
        .env("BEC_OCT__GRID__N_T", "20")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("g/groundstates.csv").exists());

    let out = Command::new(exe).arg("presets").output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout)
        .lines()
        .any(|l| l == "fig4_three_wire"));
}

#[test]
fn missing_tabulated_file_is_reported() {
    let config = preset(
        "fig5_tabulated_2d",
        &[("BEC_OCT__POTENTIAL__FILE", "\"/nonexistent/rf.gpf\"")],
    );
    let dir = tempfile::tempdir().unwrap();
    let err = run(&config, dir.path()).unwrap_err().to_string();
    assert!(err.contains("/nonexistent/rf.gpf"), "{err}");
}
