use std::fs;
use std::path::Path;

use lorentz_oam::cli;
use lorentz_oam::estimate::FitResult;
use lorentz_oam::hologram::parse_phase_csv;
use lorentz_oam::spectrum::JointSpectrum;

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["lorentz-oam"];
    full.extend_from_slice(args);
    cli::run(full)
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn spectrum_rest_frame_is_antidiagonal() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(run(&["spectrum", "--gamma", "1", "--half-width", "20", "--out", &out]), 0);

    let csv = fs::read_to_string(dir.path().join("spectrum_g1_hw20.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("l_a,l_b,value"));
    let mut rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let (a, b): (i32, i32) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let v: f64 = f[2].parse().unwrap();
        assert_eq!(v, if a == -b { 1.0 } else { 0.0 });
        rows += 1;
    }
    assert_eq!(rows, 41 * 41);
    assert!(dir.path().join("conditional_l0_g1_hw20.csv").exists());
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("spectrum_g1_hw20.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "spectrum");
    assert_eq!(meta["params"]["gamma"], 1.0);
}

#[test]
fn spectrum_json_broadens() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(run(&["spectrum", "--gamma", "10", "--format", "json", "--out", &out]), 0);
    let js = JointSpectrum::from_json(&fs::read_to_string(dir.path().join("spectrum_g10_hw20.json")).unwrap()).unwrap();
    let q: f64 = 9.0 / 11.0;
    assert_eq!(js.get(0, 0), Some(1.0));
    assert!((js.get(0, 4).unwrap() - q.powi(4)).abs() < 1e-15);
    assert_eq!(js.get(0, 3), Some(0.0));
}

#[test]
fn validation_errors_exit_2() {
    assert_eq!(run(&["spectrum", "--gamma", "0.5"]), 2);
    assert_eq!(run(&["sweep"]), 2);
    assert_eq!(run(&["hologram", "-l", "1", "--gamma", "2", "--format", "json"]), 2);
    assert_eq!(run(&["hologram", "-l", "1", "--gamma", "2", "--size", "1"]), 2);
    assert_eq!(run(&["spectrum", "--gamma", "2", "--unknown", "3"]), 2);
    assert_eq!(run(&["experiment", "--gamma", "2,0.9"]), 2);
}

#[test]
fn missing_input_is_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("nope.csv");
    assert_eq!(run(&["estimate", "--input", input.to_str().unwrap()]), 1);
}

#[test]
fn sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let gammas: Vec<String> = (1..=20).map(|g| g.to_string()).collect();
    assert_eq!(run(&["sweep", "--gamma", &gammas.join(","), "--out", &out]), 0);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "gamma,omega,m,eta,beta");
    assert_eq!(lines[1], "1,1,1,0,0");
    assert_eq!(lines.len(), 21);
    let omega: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(omega.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn hologram_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(run(&["hologram", "-l", "0", "--gamma", "3", "--size", "16", "--out", &out]), 0);
    let pgm = fs::read(dir.path().join("holo_l0_g3_16x16.pgm")).unwrap();
    assert!(pgm[pgm.len() - 256..].iter().all(|&b| b == 0));

    assert_eq!(
        run(&["hologram", "-l", "2", "--gamma", "2", "--size", "9x7", "--format", "csv", "--out", &out]),
        0
    );
    let phases = parse_phase_csv(&fs::read_to_string(dir.path().join("holo_l2_g2_9x7.csv")).unwrap()).unwrap();
    assert_eq!((phases.len(), phases[0].len()), (7, 9));
    // odd size: center pixel follows the atan2(0, 0) = 0 convention
    assert_eq!(phases[3][4], 0.0);
}

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(run(&["simulate", "--gamma", "5", "--half-width", "30", "--seed", "7", "--out", &out]), 0);
    let input = dir.path().join("counts_g5_s7.csv");
    assert_eq!(run(&["estimate", "--input", input.to_str().unwrap(), "--out", &out]), 0);
    for name in ["fit_m_sum.json", "fit_least_squares.json"] {
        let r: FitResult = serde_json::from_str(&fs::read_to_string(dir.path().join(name)).unwrap()).unwrap();
        assert!((r.gamma_meas - 5.0).abs() < 0.25, "{name}: {}", r.gamma_meas);
        assert!((r.eta.cosh() - r.gamma_meas).abs() < 1e-10 * r.gamma_meas);
    }
}

#[test]
fn experiment_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = out_arg(d.path());
        assert_eq!(run(&["experiment", "--seed", "42", "--runs", "2", "--out", &out]), 0);
    }
    for name in ["experiment_batch.csv", "experiment_summary.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("experiment_summary.json")).unwrap()).unwrap();
    for row in summary.as_array().unwrap() {
        let g = row["gamma"].as_f64().unwrap();
        let meas = row["gamma_meas_fit"].as_f64().unwrap();
        if g <= 10.0 {
            assert!((meas - g).abs() <= 0.05 * g, "gamma {g}: {meas}");
        }
    }
    let batch = fs::read_to_string(a.path().join("experiment_batch.csv")).unwrap();
    assert_eq!(batch.lines().next(), Some("seed,gamma_encoded,gamma_meas,method,residual"));
    assert_eq!(batch.lines().count(), 1 + 5 * 2 * 2);
}

#[test]
fn experiment_noiseless() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(run(&["experiment", "--noiseless", "--half-width", "200", "--out", &out]), 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("experiment_summary.json")).unwrap()).unwrap();
    for row in summary.as_array().unwrap() {
        let g = row["gamma"].as_f64().unwrap();
        for key in ["gamma_meas_fit", "gamma_meas_msum"] {
            assert!((row[key].as_f64().unwrap() - g).abs() < 1e-4, "{key} at {g}");
        }
    }
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = out_arg(dir.path());
    fs::write(&cfg, format!("# manifest\ngamma = 3\nhalf_width = 4\nout = {out}\n")).unwrap();
    assert_eq!(run(&["spectrum", "--config", cfg.to_str().unwrap()]), 0);
    assert!(dir.path().join("spectrum_g3_hw4.csv").exists());

    // command line wins over the file
    assert_eq!(run(&["spectrum", "--config", cfg.to_str().unwrap(), "--gamma", "2"]), 0);
    assert!(dir.path().join("spectrum_g2_hw4.csv").exists());

    fs::write(&cfg, "gamma = 3\ncolour = blue\n").unwrap();
    assert_eq!(run(&["spectrum", "--config", cfg.to_str().unwrap()]), 2);
}
