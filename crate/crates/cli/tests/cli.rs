use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = "[grid]\nn = 16\nbox_length = 8.0\n";

fn hamfric(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamfric"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run_ok(config: &Path, out: &Path, args: &[&str]) -> Value {
    let mut all = vec!["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    all.extend_from_slice(args);
    let o = hamfric(&all);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    let name = format!("{}.json", args[0]);
    serde_json::from_str(&fs::read_to_string(out.join(name)).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|s| s.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    (header, rows)
}

#[test]
fn dispersion_writes_table_and_hashed_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let m = run_ok(&cfg, dir.path(), &["dispersion"]);
    let hash = m["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(m["config"]["model"]["nu"], 1.0);
    assert_eq!(m["config"]["potential"]["W"]["sigma"], 1.0);
    assert_eq!(m["results"]["sound_speed"], 0.0);
    assert_eq!(m["results"]["sound_speed_unscaled_interaction"], 0.0);
    let (header, rows) = read_csv(&dir.path().join("dispersion.csv"));
    assert_eq!(header, ["k", "omega", "phase_velocity"]);
    assert_eq!(rows.len(), 512);
    for r in rows {
        assert!((r[1] - r[0] * r[2]).abs() <= 1e-12 * r[1]);
    }
}

fn without_wall_time(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_time_seconds");
    v
}

#[test]
fn identical_configs_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}[evolve]\nt_max = 1.0\n"));
    for cmd in ["static", "evolve"] {
        let (a, b) = (dir.path().join(format!("{cmd}_a")), dir.path().join(format!("{cmd}_b")));
        let ma = run_ok(&cfg, &a, &[cmd]);
        let mb = run_ok(&cfg, &b, &[cmd]);
        if cmd == "static" {
            assert!(ma["results"]["decay_classification"].is_null());
        }
        assert_eq!(without_wall_time(ma), without_wall_time(mb));
        for entry in fs::read_dir(&a).unwrap() {
            let name = entry.unwrap().file_name();
            if name.to_string_lossy().ends_with(".csv") {
                assert_eq!(
                    fs::read(a.join(&name)).unwrap(),
                    fs::read(b.join(&name)).unwrap(),
                    "{name:?}"
                );
            }
        }
    }
}

#[test]
fn default_friction_curve_has_the_asymptotic_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let m = run_ok(&cfg, dir.path(), &["friction-curve"]);
    let (_, rows) = read_csv(&dir.path().join("friction_curve.csv"));
    let slope = |a: &Vec<f64>, b: &Vec<f64>| (b[1].abs().ln() - a[1].abs().ln()) / (b[0].ln() - a[0].ln());
    assert!((slope(&rows[0], &rows[2]) - 2.0).abs() < 0.05);
    let n = rows.len();
    assert!((slope(&rows[n - 3], &rows[n - 1]) + 2.0).abs() < 0.05);
    assert!(m["results"]["f_max"].as_f64().unwrap() > 0.0);
}

#[test]
fn forced_branch_counts_follow_the_curve_maximum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let half = run_ok(&cfg, &dir.path().join("half"), &["forced"]);
    assert_eq!(half["results"]["branch_count"], 2);
    let f_max = half["results"]["f_max"].as_f64().unwrap();
    for (speed, again) in half["results"]["speeds"]
        .as_array()
        .unwrap()
        .iter()
        .zip(half["results"]["reevaluated_force"].as_array().unwrap())
    {
        assert!(speed.as_f64().unwrap() > 0.0);
        assert!((again.as_f64().unwrap() - 0.5 * f_max).abs() < 1e-6 * f_max);
    }
    let twice = (2.0 * f_max).to_string();
    let none = run_ok(&cfg, &dir.path().join("twice"), &["forced", "--force", &twice]);
    assert_eq!(none["results"]["branch_count"], 0);
    let o = hamfric(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "forced",
        "--force",
        "-1",
    ]);
    assert!(!o.status.success());
}

#[test]
fn configuration_errors_exit_nonzero_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "[model]\nkappa = 0.5\ntag = \"B\"\n[grid]\nn = 16\nbox_length = 8.0\n",
            "B-model",
        ),
        ("[grid]\nn = 16\nbox_length = = 8.0\n", "line 3"),
        ("[grid]\nn = 16\nbox_length = 8.0\nwidth = 2\n", "unknown field"),
        ("[model]\nnu = 1.0\n", "grid"),
    ];
    for (text, needle) in cases {
        let cfg = write_config(dir.path(), text);
        let o = hamfric(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "dispersion",
        ]);
        assert!(!o.status.success());
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "expected {needle:?} in {err}");
    }
    let o = hamfric(&["--config", "/nonexistent/run.toml", "static"]);
    assert!(!o.status.success());
}

#[test]
fn evolve_writes_trajectory_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{SMALL}[evolve]\nt_max = 1.0\ndt = 0.01\nrecord_interval = 0.1\nsnapshot_interval = 0.5\nsponge = {{ enabled = false }}\n"),
    );
    let m = run_ok(&cfg, dir.path(), &["evolve"]);
    assert_eq!(m["results"]["snapshots"], 3);
    let snap = fs::read(dir.path().join("snapshot_00001.bin")).unwrap();
    assert_eq!(snap.len(), 24 + 16 * 16 * 16 * 16);
    assert_eq!(u64::from_le_bytes(snap[..8].try_into().unwrap()), 16);
    assert_eq!(f64::from_le_bytes(snap[8..16].try_into().unwrap()), 8.0);
    assert!((f64::from_le_bytes(snap[16..24].try_into().unwrap()) - 0.5).abs() < 1e-12);
    let (header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(
        header,
        [
            "t",
            "x1",
            "x2",
            "x3",
            "p1",
            "p2",
            "p3",
            "p_norm",
            "energy",
            "ball_sup_dev"
        ]
    );
    assert_eq!(rows.len(), 11);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert!(rows.iter().all(|r| r[8].is_finite()));
    assert!(m["results"]["relative_energy_drift"].as_f64().unwrap() < 1e-4);

    let sponge = write_config(dir.path(), &format!("{SMALL}[evolve]\nt_max = 0.5\n"));
    let out = dir.path().join("sponge");
    run_ok(&sponge, &out, &["evolve", "--speed", "0.2"]);
    let (_, rows) = read_csv(&out.join("trajectory.csv"));
    assert!(rows.iter().all(|r| r[8].is_nan()));
    assert!((rows[0][4] - 0.2).abs() < 1e-15);
}

#[test]
fn reduced_law_decays_like_inverse_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let m = run_ok(&cfg, dir.path(), &["reduced"]);
    let exponent = m["results"]["exponent"].as_f64().unwrap();
    assert!((exponent + 1.0).abs() < 0.05, "{exponent}");
    let (header, _) = read_csv(&dir.path().join("reduced.csv"));
    assert_eq!(header, ["t", "speed", "japanese_bracket", "in_fit_window"]);
}

#[test]
fn static_and_twave_report_their_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[model]\nkappa = 8.0\n[grid]\nn = 32\nbox_length = 20.0\n[twave]\nspeed = 0.5\n",
    );
    let m = run_ok(&cfg, dir.path(), &["static"]);
    assert!(m["results"]["residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(m["results"]["zero_mode_projected"], false);
    assert!(m["results"]["decay_classification"].is_string());
    let t = run_ok(&cfg, dir.path(), &["twave"]);
    assert_eq!(t["results"]["regime"], "Subcritical");
    assert!(t["results"]["friction"]["force"][0].as_f64().unwrap().abs() < 1e-6);
    let (header, rows) = read_csv(&dir.path().join("twave_slice.csv"));
    assert_eq!(header, ["x", "re_gamma", "im_gamma"]);
    assert_eq!(rows.len(), 32);
}
