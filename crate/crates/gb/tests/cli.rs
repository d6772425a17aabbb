use std::path::Path;
use std::process::{Command, Output};

use gb::system::SystemFile;
use gb_core::catalog;
use proptest::prelude::*;
use serde_json::Value;

fn gb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gb")).args(args).output().expect("gb runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

#[test]
fn unknown_system_is_a_configuration_error() {
    let out = gb(&["orbit", "--system", "nosuch"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "unknown_system");
    assert_eq!(err["error"]["exit_code"], 2);
}

#[test]
fn bad_arguments_exit_2_and_help_exits_0() {
    for args in [&["--tol", "0", "orbit"][..], &["--workers", "0", "index"], &["frobnicate"], &["cocycle"]] {
        let out = gb(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(stderr_json(&out)["error"]["class"], "configuration");
    }
    assert_eq!(gb(&["--help"]).status.code(), Some(0));
    assert_eq!(gb(&["--version"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_directory_is_rejected_up_front() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "").unwrap();
    let out = gb(&["--out", file.to_str().unwrap(), "systems", "list"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn free_particle_green_slopes_are_small() {
    let out = gb(&["greens", "--system", "free_particle", "--T", "40"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    let s = doc["greens"]["S_limit"][0][0].as_f64().unwrap();
    let u = doc["greens"]["U_limit"][0][0].as_f64().unwrap();
    // Finite-horizon slopes of the free particle are ∓1/T.
    let t = doc["greens"]["T_used"].as_f64().unwrap();
    assert!((s + 1.0 / t).abs() < 1e-9 && (u - 1.0 / t).abs() < 1e-9);
    assert!(s.abs() < 0.01 && u.abs() < 0.01);
}

#[test]
fn hyperbolicity_exit_codes() {
    let out = gb(&["hyperbolicity", "--system", "pendulum", "--pipeline", "theoremA"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["verdict"], "hyperbolic");

    let out = gb(&["hyperbolicity", "--system", "free_particle(2)", "--pipeline", "theoremA"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["verdict"], "hypothesis_not_satisfied");
    assert_eq!(stderr_json(&out)["error"]["class"], "hypothesis_not_satisfied");

    let out = gb(&["hyperbolicity", "--system", "pendulum", "--pipeline", "cocycle"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["cocycle"]["points"][0]["dims"], serde_json::json!([1, 1]));
}

#[test]
fn cocycle_verdicts() {
    let out = gb(&["cocycle", "--matrix", "2,0;0,0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["verdict"], "quasi_hyperbolic");
    assert!(doc["sacker_sell"].as_bool().unwrap());
    let lambda = doc["unstable_fit"]["lambda"].as_f64().unwrap();
    assert!((lambda - std::f64::consts::LN_2).abs() < 1e-9);

    let out = gb(&["cocycle", "--matrix", "0.9553,-0.2955;0.2955,0.9553"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["verdict"], "not_quasi_hyperbolic");

    let out = gb(&["cocycle", "--matrix", "1,2;3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn maps_file_with_two_base_points() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("maps.json");
    std::fs::write(&path, r#"{"maps": [[[2, 1], [0, 0.5]], [[3, 0], [0, 0.25]]], "step": 0.5}"#).unwrap();
    let out = gb(&["cocycle", "--maps-file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert_eq!(doc["points"].as_array().unwrap().len(), 2);
    assert!(doc["sacker_sell"].as_bool().unwrap());
}

#[test]
fn exported_system_reproduces_the_builtin() {
    let dir = tempfile::tempdir().unwrap();
    for (format, ext) in [("json", "json"), ("toml", "toml")] {
        let out = gb(&["systems", "export", "mathieu(0.1, 2)", "--format", format]);
        assert_eq!(out.status.code(), Some(0));
        let path = dir.path().join(format!("mathieu.{ext}"));
        std::fs::write(&path, &out.stdout).unwrap();
        let args = |system: &str| {
            gb(&["orbit", "--system", system, "--x", "3", "--p", "0.2", "--T", "5", "--dt", "0.5"]).stdout
        };
        assert_eq!(args(path.to_str().unwrap()), args("mathieu(0.1, 2)"), "{format}");
    }
}

#[test]
fn reports_are_written_to_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("reports");
    let out = gb(&["--out", out_dir.to_str().unwrap(), "riccati", "--system", "harmonic", "--T", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(out_dir.join("riccati.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,s00,norm,A,trimmed,pass"));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), csv);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("riccati.json")).unwrap()).unwrap();
    // The vertical frame starts singular; the next blowup is at π.
    let blowups: Vec<f64> = doc["blowup_times"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(blowups.len(), 2);
    assert!(blowups[0].abs() < 1e-9 && (blowups[1] - std::f64::consts::PI).abs() < 1e-6);

    let out = gb(&["--out", out_dir.to_str().unwrap(), "--plot-data", "orbit", "--T", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let dat = std::fs::read_to_string(out_dir.join("orbit.dat")).unwrap();
    assert!(dat.starts_with("# t x0 p0 H\n"));
    assert!(Path::new(&out_dir.join("orbit.json")).exists());
}

#[test]
fn parallel_scans_do_not_depend_on_the_worker_count() {
    let run = |workers: &str| {
        let out = gb(&[
            "--workers", workers, "--seed", "7", "index", "--system", "mathieu", "--T", "5,10", "--mesh", "64",
            "--random-fields", "12",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("3"));
    assert_eq!(one, run("1"));
}

#[test]
fn explicit_sample_set() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("set.toml");
    std::fs::write(
        &path,
        "kind = \"samples\"\nstep = 0.5\n[[points]]\nx = [0.0]\np = [0.0]\nclock = 0.0\n[[points]]\nx = [0.0]\np = [0.0]\nclock = 0.5\n",
    )
    .unwrap();
    let out = gb(&["hyperbolicity", "--system", "pendulum", "--set", path.to_str().unwrap(), "--pipeline", "theoremC"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert_eq!(doc["samples"].as_array().unwrap().len(), 2);
    assert_eq!(doc["step"], 0.5);
}

#[test]
fn every_builtin_round_trips_through_both_formats() {
    for name in catalog::NAMES {
        let file = SystemFile::export(&catalog::get(name).unwrap());
        assert_eq!(SystemFile::parse(&file.to_json(), false).unwrap(), file);
        assert_eq!(SystemFile::parse(&file.to_toml().unwrap(), true).unwrap(), file);
        let rebuilt = file.build().unwrap();
        assert_eq!(SystemFile::export(&rebuilt), file);
    }
}

proptest! {
    #[test]
    fn matrices_parse_back(entries in proptest::collection::vec(-1e6f64..1e6, 9)) {
        let text = entries.chunks(3).map(|r| r.iter().map(f64::to_string).collect::<Vec<_>>().join(",")).collect::<Vec<_>>().join(";");
        let m = gb::pipeline::parse_matrix(&text).unwrap();
        prop_assert_eq!(m.nrows(), 3);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(m[(i, j)], entries[3 * i + j]);
            }
        }
    }

    #[test]
    fn tables_keep_values_exact(rows in proptest::collection::vec(proptest::collection::vec(-1e300f64..1e300, 3), 1..8)) {
        let mut t = gb::report::Table::new(["a", "b", "c"]);
        for r in &rows {
            t.push(r.iter().copied());
        }
        let text = t.render(false);
        let parsed: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
        prop_assert_eq!(parsed, rows);
    }
}
