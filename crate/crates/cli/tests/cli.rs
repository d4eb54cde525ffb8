use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn krphase(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krphase"))
        .args(args)
        .env("KRPHASE_OUT_DIR", dir)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gaussian_kr_to_wigner_matches_direct_path() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&krphase(d, &["kr", "--scenario", "gaussian"])), 0);
    assert_eq!(code(&krphase(d, &["transform", "--to", "wigner"])), 0);
    let o = krphase(d, &["compare", "--against", "direct-wigner", "--max-linf", "1e-6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS"));
    // an impossible bound is a tolerance failure
    let o = krphase(d, &["compare", "--against", "direct-wigner", "--max-linf", "1e-30"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn wire_heterodyne_tracks_kr() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = krphase(
        d,
        &["heterodyne", "--scenario", "wire", "--mode", "ideal", "--set", "lo.a=0.0425", "--set", "lo.A=17"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = krphase(d, &["compare", "--against", "kr", "--min-corr", "0.99"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn fit_recovers_the_lab_waist() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&krphase(d, &["kr", "--scenario", "gaussian"])), 0);
    assert_eq!(code(&krphase(d, &["marginals"])), 0);
    let o = krphase(d, &["fit", "--input", "marginal_x.csv", "--min-width", "0.83", "--max-width", "0.89"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("width = 0.850000"), "{}", stdout(&o));
    let o = krphase(d, &["fit", "--input", "marginal_p.csv", "--min-width", "0.83", "--max-width", "0.89"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("position_equivalent_width = 0.850000"));
}

#[test]
fn config_errors_exit_2_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("run.cfg"), "units = mm\n# scan\nscan.dx_max = -1\n").unwrap();
    let o = krphase(d, &["field", "--config", "run.cfg"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    fs::write(d.join("bad.cfg"), "grid.n_points = 256\nlo.bogus = 1\n").unwrap();
    let o = krphase(d, &["field", "--config", "bad.cfg"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown key"));
    assert_eq!(code(&krphase(d, &["field", "--set", "grid.n_points=511"])), 2);
    assert_eq!(code(&krphase(d, &["field", "--lo-ratio", "0.5"])), 2);
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&krphase(d, &["transform", "--to", "wigner", "--input", "missing.bin"])), 4);
    assert_eq!(code(&krphase(d, &["kr"])), 0);
    let bytes = fs::read(d.join("kr_conj.bin")).unwrap();
    fs::write(d.join("cut.bin"), &bytes[..bytes.len() / 2]).unwrap();
    let o = krphase(d, &["transform", "--to", "wigner", "--input", "cut.bin"]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("truncated"));
}

#[test]
fn manifests_reproduce_outputs_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let first = d.join("first");
    let second = d.join("second");
    let o = Command::new(env!("CARGO_BIN_EXE_krphase"))
        .args(["kr", "--scenario", "wire", "--points", "256", "--out-dir"])
        .arg(&first)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let manifest = first.join("kr_conj.bin.manifest");
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("field.scenario = wire") && text.contains("grid.n_points = 256"));
    let o = Command::new(env!("CARGO_BIN_EXE_krphase"))
        .args(["kr", "--config"])
        .arg(&manifest)
        .arg("--out-dir")
        .arg(&second)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(
        fs::read(first.join("kr_conj.bin")).unwrap(),
        fs::read(second.join("kr_conj.bin")).unwrap()
    );
}

#[test]
fn transforms_report_p_conditioning() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&krphase(d, &["kr", "--scenario", "wire"])), 0);
    let o = krphase(d, &["transform", "--to", "p"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("ill_conditioned = true"));
    let o = krphase(d, &["transform", "--to", "q"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(d.join("q.bin.manifest")).unwrap().contains("# result.sigma_ref"));
}

#[test]
fn csv_outputs_and_plot_scripts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["--format", "csv", "--units", "dimensionless", "--points", "64"];
    let run = |extra: &[&str]| {
        let mut all: Vec<&str> = extra.to_vec();
        all.extend_from_slice(&args);
        krphase(d, &all)
    };
    assert_eq!(code(&run(&["field"])), 0);
    assert_eq!(code(&run(&["kr", "--input", "field.csv", "--with-kr"])), 0);
    assert_eq!(code(&run(&["transform", "--to", "wigner"])), 0);
    assert_eq!(code(&run(&["plot", "--input", "kr_conj.csv"])), 0);
    let script = fs::read_to_string(d.join("kr_conj_plot.gp")).unwrap();
    assert!(script.contains("multiplot layout 2,2") && script.contains("with pm3d"));
    assert!(d.join("kr_conj_plot.dat").exists());
    assert_eq!(code(&run(&["plot", "--input", "wigner.csv"])), 0);
    assert!(fs::read_to_string(d.join("wigner_plot.gp")).unwrap().contains("layout 1,2"));
}

#[test]
fn timedomain_scan_runs_from_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = krphase(
        d,
        &[
            "heterodyne", "--mode", "timedomain", "--units", "dimensionless", "--lo-ratio", "8",
            "--set", "scan.nx=3", "--set", "scan.np=3",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let line = stdout(&o).lines().find(|l| l.starts_with("rel_l2_vs_ideal")).unwrap().to_string();
    let value: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!(value < 1e-3);
    // the DSP guard rejects a too-slow sample rate before synthesis
    let o = krphase(d, &["heterodyne", "--mode", "timedomain", "--set", "dsp.sample_rate=20000"]);
    assert_eq!(code(&o), 2);
}
