use std::path::Path;
use std::process::{Command, Output};

fn nlfb(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlfb"))
        .args(args)
        .current_dir(dir)
        .env_remove("NLFB_THREADS")
        .output()
        .expect("nlfb runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn malformed_config_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 3\n[params\nn = 1\n");
    let out = nlfb(&["energy", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn unknown_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\ncells_per_half = 8\nwidth = 3\n");
    let out = nlfb(&["energy", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn out_of_range_value_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[params]\ns = 1.5\n");
    let out = nlfb(&["energy", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"growth\"\n");
    let out = nlfb(&["energy", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("growth"));
}

#[test]
fn bad_thread_count_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nlfb"))
        .args(["energy"])
        .current_dir(dir.path())
        .env("NLFB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn energy_writes_report_with_all_terms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"energy\"\n[grid]\ncells_per_half = 16\n",
    );
    let out = nlfb(&["energy", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/report.json")).unwrap())
            .unwrap();
    for key in [
        "l_in_out",
        "l_in_far",
        "l_far_out",
        "per_sigma",
        "dirichlet",
        "total",
        "truncation_error",
    ] {
        assert!(report["energy"][key].is_number(), "missing {key}");
    }
    assert_eq!(report["passed"], true);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert!(dir.path().join("o/energy.csv").exists());
    assert!(dir.path().join("o/energy.svg").exists());
}

#[test]
fn half_space_density_matches_half_ball() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "preset = \"half-space\"\n[minimize]\namplitude = 1.0\n[grid]\ncells_per_half = 32\n",
    );
    let out = nlfb(&["density", "--config", &cfg, "--out", "d"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let mut reader = csv::Reader::from_path(dir.path().join("d/density.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (ratio, excluded, half) = (col("ratio"), col("excluded"), col("half_space_ratio"));
    let mut used = 0;
    for row in reader.records() {
        let row = row.unwrap();
        if &row[excluded] == "true" {
            continue;
        }
        let (r, h): (f64, f64) = (row[ratio].parse().unwrap(), row[half].parse().unwrap());
        assert!((r - h).abs() < 0.05, "ratio {r} vs {h}");
        used += 1;
    }
    assert!(used > 0);
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[grid]\ncells_per_half = 16\n[minimize]\nanneal_steps = 50\n",
    );
    for o in ["a", "b"] {
        let out = nlfb(
            &["minimize", "--config", &cfg, "--seed", "11", "--out", o],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    for f in ["state.csv", "set.csv", "history.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}
