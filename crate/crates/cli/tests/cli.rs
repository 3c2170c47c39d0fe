use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_holomotion"));
    cmd.env_remove("HOLOMOTION_THREADS");
    cmd
}

fn germ_file(dir: &Path, name: &str, coeffs: &[f64]) -> PathBuf {
    let pairs: Vec<[f64; 2]> = coeffs.iter().map(|&c| [c, 0.0]).collect();
    let doc = serde_json::json!({ "order": coeffs.len() - 1, "radius": 1.0, "coeffs": pairs });
    let path = dir.join(name);
    fs::write(&path, doc.to_string()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn classify_attracting() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "quad.json", &[0.0, 0.5, 1.0]);
    let out = run(&["classify", s(&f)]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["class"], "attracting");
    assert_eq!(v["lambda"], serde_json::json!([0.5, 0.0]));
    assert!(v["delta"].as_f64().unwrap() > 0.0);
}

#[test]
fn classify_unsupported_exits_2() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "parabolic.json", &[0.0, 1.0, 1.0]);
    let out = run(&["classify", s(&f)]);
    assert_eq!(code(&out), 2);
    assert_eq!(stdout_json(&out)["class"], "unsupported");
}

#[test]
fn malformed_input_exits_1_with_location() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("bad.json");
    fs::write(&f, "{\"order\": 1,\n \"radius\": 1.0,\n \"coeffs\": [[0, 0], [0.5]]}").unwrap();
    let out = run(&["classify", s(&f)]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&run(&["glue"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
}

#[test]
fn conjugate_koenig_series() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "quad.json", &[0.0, 0.5, 1.0]);
    let out = run(&["conjugate", s(&f), "--order", "30"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!(v["residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["phi"]["coeffs"][2], serde_json::json!([-4.0, 0.0]));
}

#[test]
fn conjugate_pure_power_is_identity() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "square.json", &[0.0, 0.0, 1.0]);
    let out = run(&["conjugate", s(&f), "--order", "7"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["residual"].as_f64(), Some(0.0));
    let coeffs = v["phi"]["coeffs"].as_array().unwrap();
    for (j, c) in coeffs.iter().enumerate() {
        let expect = if j == 1 { 1.0 } else { 0.0 };
        assert_eq!(c, &serde_json::json!([expect, 0.0]));
    }
}

#[test]
fn conjugate_both_writes_cross_oracle() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("out");
    for coeffs in [&[0.0, 0.5, 1.0][..], &[0.0, 2.0, 1.0][..], &[0.0, 0.0, 1.0, 1.0][..], &[0.0, 0.0, 2.0, 0.1][..]] {
        let f = germ_file(dir.path(), "germ.json", coeffs);
        let out = run(&["conjugate", s(&f), "--method", "both", "--out", s(&out_dir)]);
        assert_eq!(code(&out), 0);
        let cross: Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("cross_oracle.json")).unwrap()).unwrap();
        assert!(cross["max_discrepancy"].as_f64().unwrap() <= 1e-8, "{coeffs:?}: {cross}");
        let manifest: Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
        for file in manifest["files"].as_array().unwrap() {
            assert!(out_dir.join(file.as_str().unwrap()).exists());
        }
    }
}

#[test]
fn conjugate_unsupported_exits_2() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "parabolic.json", &[0.0, 1.0, 1.0]);
    assert_eq!(code(&run(&["conjugate", s(&f)])), 2);
}

#[test]
fn motion_of_linear_map_has_positive_margin() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "linear.json", &[0.0, 0.5]);
    let out = run(&["motion", s(&f), "--delta", "0.8", "--r", "0.4"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["passed"], true);
    assert!(v["crossing"]["margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn motion_of_quadratic_passes() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "quad.json", &[0.0, 0.5, 1.0]);
    let out = run(&["motion", s(&f)]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["report"]["identity_defect"].as_f64(), Some(0.0));
    assert!(v["report"]["holomorphy_defect"].as_f64().unwrap() <= 1e-8);
}

/// With circles |c| ≤ 0.8, the sampled crossing condition for 0.5z + z² is
/// `0.5 + 0.8δ < 1`, i.e. `δ < 0.625`.
#[test]
fn motion_crossing_threshold() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "quad.json", &[0.0, 0.5, 1.0]);
    let below = run(&["motion", s(&f), "--delta", "0.6", "--r", "0.3"]);
    assert_eq!(code(&below), 0);
    let above = run(&["motion", s(&f), "--delta", "0.65", "--r", "0.3"]);
    assert_eq!(code(&above), 3);
    assert!(String::from_utf8_lossy(&above.stderr).contains("offending sample"));
}

#[test]
fn boettcher_motion_passes() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "cubic.json", &[0.0, 0.0, 1.0, 1.0]);
    let out = run(&["motion", s(&f)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["passed"], true);
}

fn read_csv_column(path: &Path, column: &str) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == column).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn glue_linear_map_is_conformal() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "linear.json", &[0.0, 0.5]);
    let out_dir = dir.path().join("glue");
    let out = run(&["glue", s(&f), "--k-list", "1,2,3", "--mesh", "32", "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0);
    let ks = read_csv_column(&out_dir.join("convergence.csv"), "K");
    assert_eq!(ks.len(), 3);
    for k in ks {
        assert!((k.parse::<f64>().unwrap() - 1.0).abs() < 1e-7, "{k}");
    }
}

#[test]
fn glue_quadratic_is_monotone_and_listed() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "quad.json", &[0.0, 0.5, 1.0]);
    let out_dir = dir.path().join("glue");
    let out = run(&["glue", s(&f), "--k-list", "1,2,3,4", "--mesh", "64", "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0);
    let ks: Vec<f64> =
        read_csv_column(&out_dir.join("convergence.csv"), "K").iter().map(|k| k.parse().unwrap()).collect();
    assert!(ks.windows(2).all(|w| w[1] <= w[0]), "{ks:?}");
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().filter(|l| l.starts_with("k=")).count(), 4);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f.as_str().unwrap().starts_with("k4/piece_")));
    assert!(!files.iter().any(|f| f.as_str().unwrap().starts_with("k1/piece_")));
    for file in files {
        assert!(out_dir.join(file.as_str().unwrap()).exists(), "{file}");
    }
    let piece =
        files.iter().find(|f| f.as_str().unwrap().ends_with(".csv") && f.as_str().unwrap() != "convergence.csv");
    let text = fs::read_to_string(out_dir.join(piece.unwrap().as_str().unwrap())).unwrap();
    assert_eq!(text.lines().next(), Some("x,y,re,im,mu_re,mu_im"));
    assert_eq!(text.lines().count(), 64 * 64 + 1);
}

#[test]
fn glue_underflow_exits_4() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "square.json", &[0.0, 0.0, 1.0]);
    let out = run(&["glue", s(&f), "--k-list", "6", "--delta", "0.25", "--out", s(&dir.path().join("g"))]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("smaller k"));
}

fn dir_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn glue_output_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "cubic.json", &[0.0, 0.0, 1.0, 1.0]);
    let mut snapshots = Vec::new();
    for (name, threads) in [("a", None), ("b", Some("1")), ("c", Some("3"))] {
        let out_dir = dir.path().join(name);
        let mut cmd = bin();
        cmd.args(["glue", s(&f), "--k-list", "1,2", "--delta", "0.25", "--mesh", "48", "--out", s(&out_dir)]);
        if let Some(t) = threads {
            cmd.env("HOLOMOTION_THREADS", t);
        }
        assert_eq!(code(&cmd.output().unwrap()), 0);
        snapshots.push(dir_snapshot(&out_dir));
    }
    assert!(!snapshots[0].is_empty());
    assert_eq!(snapshots[0], snapshots[1]);
    assert_eq!(snapshots[0], snapshots[2]);
}

#[test]
fn invalid_thread_override_exits_1() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "quad.json", &[0.0, 0.5, 1.0]);
    let out = bin().args(["classify", s(&f)]).env("HOLOMOTION_THREADS", "0").output().unwrap();
    assert_eq!(code(&out), 1);
}

fn read_pgm(path: &Path) -> (usize, Vec<u8>) {
    let bytes = fs::read(path).unwrap();
    let header_end = bytes.iter().enumerate().filter(|(_, &b)| b == b'\n').nth(2).unwrap().0 + 1;
    let header = String::from_utf8_lossy(&bytes[..header_end]).to_string();
    let mut parts = header.split_whitespace();
    assert_eq!(parts.next(), Some("P5"));
    let w: usize = parts.next().unwrap().parse().unwrap();
    let h: usize = parts.next().unwrap().parse().unwrap();
    assert_eq!(w, h);
    assert_eq!(parts.next(), Some("255"));
    assert_eq!(bytes.len() - header_end, w * h);
    (w, bytes[header_end..].to_vec())
}

#[test]
fn render_square_is_radially_symmetric() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "square.json", &[0.0, 0.0, 1.0]);
    let img = dir.path().join("img").join("square.pgm");
    assert_eq!(code(&run(&["render", s(&f), "--grid", "65", "--out", s(&img)])), 0);
    let (n, px) = read_pgm(&img);
    for i in 0..n {
        for j in 0..n {
            let v = px[i * n + j];
            assert_eq!(v, px[j * n + i]);
            assert_eq!(v, px[(n - 1 - i) * n + j]);
            assert_eq!(v, px[i * n + (n - 1 - j)]);
        }
    }
    assert_eq!(px[0], 0, "corner lies outside the validity disk");
    assert!(dir.path().join("img").join("square.pgm.manifest.json").exists());
}

#[test]
fn render_perturbed_square_matches_series_coordinate() {
    use holomotion::normal_forms::{boettcher_series, classify};
    use holomotion::series::{PowerSeries, DEFAULT_ORDER};
    use holomotion::Complex64;

    let dir = TempDir::new().unwrap();
    let coeffs = [0.0, 0.0, 1.0, 0.1];
    let f = germ_file(dir.path(), "perturbed.json", &coeffs);
    let img = dir.path().join("perturbed.pgm");
    let n = 48;
    assert_eq!(code(&run(&["render", s(&f), "--grid", &n.to_string(), "--out", s(&img)])), 0);
    let (_, px) = read_pgm(&img);

    let germ = classify(&PowerSeries::from_real(&coeffs, 1.0).unwrap()).unwrap();
    let conj = boettcher_series(&germ, DEFAULT_ORDER).unwrap();
    let delta = conj.delta;
    let mut deformed = 0;
    for i in 0..n {
        for j in 0..n {
            let z = Complex64::new(
                delta * ((2 * j + 1) as f64 / n as f64 - 1.0),
                delta * (1.0 - (2 * i + 1) as f64 / n as f64),
            );
            if z.norm() >= delta {
                assert_eq!(px[i * n + j], 0);
                continue;
            }
            let t = conj.phi_inverse.evaluate(z).norm() / delta;
            let expect = 255.0 * (0.5 + 0.5 * (std::f64::consts::TAU * 8.0 * t).cos());
            assert!((px[i * n + j] as f64 - expect).abs() <= 0.5 + 1e-9);
            let round = 255.0 * (0.5 + 0.5 * (std::f64::consts::TAU * 8.0 * z.norm() / delta).cos());
            if (px[i * n + j] as f64 - round).abs() > 0.5 {
                deformed += 1;
            }
        }
    }
    assert!(deformed > 0, "perturbation should deform the level circles");
}

#[test]
fn render_grid_zero_exits_1() {
    let dir = TempDir::new().unwrap();
    let f = germ_file(dir.path(), "square.json", &[0.0, 0.0, 1.0]);
    assert_eq!(code(&run(&["render", s(&f), "--grid", "0", "--out", s(&dir.path().join("x.pgm"))])), 1);
}
