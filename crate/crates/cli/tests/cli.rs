use std::path::Path;
use std::process::{Command, Output};

use gravinv::config::{Case, Config};
use gravinv::io;

fn gravinv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gravinv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = gravinv(args);
    assert!(
        out.status.success(),
        "gravinv {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_owned()
}

fn synth_two_cube(dir: &Path) {
    ok(&["synth", "--case", "two-cube", "--out-dir", dir.to_str().unwrap()]);
}

#[test]
fn synth_writes_case_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth_two_cube(dir);
    assert_eq!(header(&dir.join("stations.csv")), "x_m,y_m,z_m");
    assert_eq!(header(&dir.join("data.csv")), "x_m,y_m,z_m,gz_mgal,std_mgal");
    assert_eq!(header(&dir.join("model.csv")), "i,j,k,x_m,y_m,z_m,rho_gcc");

    let cfg = Config::load(&dir.join("config.toml"), Case::Multibody).unwrap();
    assert_eq!(cfg, Config::preset(Case::TwoCube));
    let mesh = cfg.mesh().unwrap();
    let model = io::read_model(&dir.join("model.csv"), &mesh).unwrap();
    assert_eq!(model.iter().filter(|v| **v != 0.0).count(), 288);
    assert!(model.iter().all(|v| (cfg.rho_min..=cfg.rho_max).contains(v)));
    let data = io::read_data(&dir.join("data.csv")).unwrap();
    assert_eq!(data.gz.len(), 600);
    assert!(data.std.iter().all(|s| *s > 0.0));

    // same seed, same files
    let again = tempfile::tempdir().unwrap();
    synth_two_cube(again.path());
    for f in ["data.csv", "model.csv", "stations.csv", "config.toml"] {
        assert_eq!(
            std::fs::read(dir.join(f)).unwrap(),
            std::fs::read(again.path().join(f)).unwrap()
        );
    }
}

#[test]
fn forward_reproduces_exact_data() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth_two_cube(dir);
    let out = dir.join("exact");
    ok(&["forward", "--in-dir", dir.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    let exact = io::read_data(&out.join("data.csv")).unwrap();
    let noisy = io::read_data(&dir.join("data.csv")).unwrap();
    assert_eq!(exact.std, noisy.std);
    let chi2: f64 = exact
        .gz
        .iter()
        .zip(&noisy.gz)
        .zip(&exact.std)
        .map(|((e, n), s)| ((e - n) / s).powi(2))
        .sum();
    let m = 600.0f64;
    assert!((chi2 - m).abs() < 3.0 * (2.0 * m).sqrt(), "chi2 {chi2}");
}

#[test]
fn invert_two_cube_reaches_noise_level() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth_two_cube(dir);
    let out = dir.join("run");
    let stdout = ok(&[
        "invert",
        "--in-dir",
        dir.to_str().unwrap(),
        "--solver",
        "rsvd",
        "--q",
        "100",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(stdout.contains("termination: noise-level"), "{stdout}");
    assert_eq!(header(&out.join("log.csv")), "iter,alpha,chi2,re,seconds");
    assert_eq!(header(&out.join("spectrum.csv")), "index,sigma");
    let log = io::read_log(&out.join("log.csv")).unwrap();
    let last = log.last().unwrap();
    assert!(last.chi2 <= 600.0 + 1200f64.sqrt());
    assert!(last.re.unwrap() < 1.0);
    assert!(log[0].alpha > 100.0 * last.alpha);
    let mesh = Config::preset(Case::TwoCube).mesh().unwrap();
    let model = io::read_model(&out.join("model.csv"), &mesh).unwrap();
    assert!(model.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn invert_records_upre_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth_two_cube(dir);
    let cfg = dir.join("upre.toml");
    std::fs::write(&cfg, "case = \"two-cube\"\nrecord_upre = true\nmax_iterations = 3\n").unwrap();
    let out = dir.join("run");
    ok(&[
        "invert",
        "--in-dir",
        dir.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    // no curve at the first iteration
    assert!(!out.join("upre_1.csv").exists());
    assert_eq!(header(&out.join("upre_2.csv")), "alpha,upre");
    let rows = std::fs::read_to_string(out.join("upre_2.csv")).unwrap().lines().count();
    assert_eq!(rows, 101);
}

#[test]
fn compare_and_svd_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth_two_cube(dir);
    let cfg = dir.join("short.toml");
    std::fs::write(&cfg, "max_iterations = 2\n").unwrap();
    let out = dir.join("cmp");
    ok(&[
        "compare",
        "--in-dir",
        dir.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--q",
        "300",
        "--t",
        "300",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    let rows = io::read_compare(&out.join("compare.csv")).unwrap();
    assert_eq!(header(&out.join("compare.csv")), "solver,subspace,re,k,seconds");
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].solver.as_str(), rows[0].subspace), ("rsvd", 300));
    assert_eq!((rows[1].solver.as_str(), rows[1].subspace), ("lsqr", 300));
    assert!(rows.iter().all(|r| r.k <= 2 && r.re.is_some()));

    let out = dir.join("spectra");
    ok(&[
        "svd",
        "--in-dir",
        dir.to_str().unwrap(),
        "--q",
        "50",
        "--t",
        "50",
        "--dense",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    let rsvd = io::read_spectrum(&out.join("spectrum.csv")).unwrap();
    let dense = io::read_spectrum(&out.join("spectrum_dense.csv")).unwrap();
    let krylov = io::read_spectrum(&out.join("spectrum_lsqr.csv")).unwrap();
    assert_eq!(rsvd.len(), 50);
    assert_eq!(dense.len(), 600);
    assert!(!krylov.is_empty() && krylov.len() <= 50);
    for (r, d) in rsvd.iter().zip(&dense) {
        assert!(*r <= d * (1.0 + 1e-12));
    }
}

#[test]
fn rejections_exit_non_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "epsilonn = 0.1\n").unwrap();
    let out = gravinv(&["synth", "--config", bad.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilonn"));

    // nothing to invert
    let out = gravinv(&["invert", "--in-dir", dir.to_str().unwrap(), "--out-dir", dir.join("x").to_str().unwrap()]);
    assert!(!out.status.success());

    synth_two_cube(dir);
    let out = gravinv(&["invert", "--in-dir", dir.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()]);
    assert!(!out.status.success());
    let out = gravinv(&["invert", "--in-dir", dir.to_str().unwrap(), "--epsilon", "0", "--out-dir", dir.join("y").to_str().unwrap()]);
    assert!(!out.status.success());
    let out = gravinv(&["synth", "--case", "multibody", "--config", dir.join("config.toml").to_str().unwrap(), "--out-dir", dir.join("z").to_str().unwrap()]);
    assert!(!out.status.success());
}
