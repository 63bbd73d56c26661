use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const BIN: &str = env!("CARGO_BIN_EXE_antibunch");

fn antibunch(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn small(command: &str) -> Vec<&str> {
    let mut args = vec![command];
    let sets: &[&str] = match command {
        "analytic" => &["t_max=5", "delta12_list=0,2"],
        "g2" => &["t2=200", "chunk=100", "tau_max=2"],
        "sweep" => &["t2=100", "chunk=100", "tau_max=2", "delta12_grid=0,5", "gamma12_grid=0,0.5"],
        "tip-map" => &["r_steps=4", "theta_steps=5"],
        "tip-experiment" => &["n1=2", "n2=2", "duration=150", "chunk=100", "tau_max=2"],
        _ => unreachable!(),
    };
    for s in sets {
        args.push("--set");
        args.push(s);
    }
    args
}

const COMMANDS: [&str; 5] = ["analytic", "g2", "sweep", "tip-map", "tip-experiment"];

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn every_command_is_reproducible_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    for cmd in COMMANDS {
        let a = tmp.path().join(format!("{cmd}-a"));
        let b = tmp.path().join(format!("{cmd}-b"));
        let mut args = small(cmd);
        args.extend(["--seed", "42"]);
        let ra = antibunch(&[args.as_slice(), &["--threads", "1"]].concat(), &a);
        let rb = antibunch(&[args.as_slice(), &["--threads", "3"]].concat(), &b);
        assert!(ra.status.success(), "{cmd}: {}", stderr(&ra));
        assert!(rb.status.success(), "{cmd}: {}", stderr(&rb));

        let (ma, mb) = (manifest(&a), manifest(&b));
        assert_eq!(ma["outputs"], mb["outputs"], "{cmd}");
        assert_eq!(ma["seeds"], mb["seeds"], "{cmd}");
        let outputs = ma["outputs"].as_array().unwrap();
        assert!(outputs.len() >= 2, "{cmd}");
        for o in outputs {
            let name = o["file"].as_str().unwrap();
            let bytes = fs::read(a.join(name)).unwrap();
            assert_eq!(bytes, fs::read(b.join(name)).unwrap(), "{cmd}: {name}");
            assert_eq!(o["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
            assert_eq!(o["bytes"].as_u64().unwrap(), bytes.len() as u64);
        }
    }
}

#[test]
fn seed_changes_stochastic_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let mut args = small("g2");
        args.extend(["--seed", seed]);
        assert!(antibunch(&args, &out).status.success());
        fs::read(out.join("g2.csv")).unwrap()
    };
    assert_ne!(run("1", "s1"), run("2", "s2"));
}

#[test]
fn manifest_records_config_and_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("g2");
    let mut args = small("g2");
    args.extend(["--seed", "9"]);
    assert!(antibunch(&args, &out).status.success());
    let m = manifest(&out);
    assert_eq!(m["command"], "g2");
    assert_eq!(m["master_seed"], 9);
    assert!(m["version"].as_str().is_some());
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    let config = m["config"].as_array().unwrap();
    assert!(config.iter().any(|kv| kv[0] == "t2" && kv[1] == "200.0"));
    // One-atom segment of 400 and two-atom segment of 200 in pieces of 100.
    assert_eq!(m["seeds"].as_array().unwrap().len(), 6);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("g2_summary.json")).unwrap()).unwrap();
    for key in ["g2_zero", "mean_rate", "brightness", "total_photons", "duration", "g2_zero_weighted", "g2_zero_textbook"] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert_eq!(summary["duration"], 600.0);

    let csv = fs::read_to_string(out.join("g2.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("tau,g2,counts,sigma"));
    assert_eq!(csv.lines().count(), 1 + 40);
}

#[test]
fn resolved_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let mut args = small("tip-experiment");
    args.extend(["--seed", "3"]);
    assert!(antibunch(&args, &first).status.success());

    let second = tmp.path().join("second");
    let conf = first.join("resolved.conf");
    let r = antibunch(&["tip-experiment", "--config", conf.to_str().unwrap()], &second);
    assert!(r.status.success(), "{}", stderr(&r));
    assert_eq!(manifest(&first)["outputs"], manifest(&second)["outputs"]);
}

#[test]
fn printed_defaults_are_a_valid_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(BIN).arg("--print-defaults").output().unwrap();
    assert!(o.status.success());
    let path = tmp.path().join("defaults.conf");
    fs::write(&path, &o.stdout).unwrap();
    let out = tmp.path().join("run");
    let r = antibunch(&["analytic", "--config", path.to_str().unwrap()], &out);
    assert!(r.status.success(), "{}", stderr(&r));
    assert_eq!(fs::read(out.join("resolved.conf")).unwrap(), o.stdout);
}

#[test]
fn analytic_files_have_expected_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("a");
    assert!(antibunch(&small("analytic"), &out).status.success());
    let csv = fs::read_to_string(out.join("analytic_delta12_2.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,Pee,Pprod"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!(first[1] < 1e-30 && first[2] == 0.0, "{first:?}");
    assert_eq!(csv.lines().count(), 1 + 501);
}

#[test]
fn tip_map_marks_points_inside_the_sphere() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    let r = antibunch(&["tip-map", "--set", "r_steps=3", "--set", "theta_steps=3", "--set", "geometry=B"], &out);
    assert!(r.status.success(), "{}", stderr(&r));
    let csv = fs::read_to_string(out.join("tip_map.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r_nm,theta_deg,gamma12_over_gamma0,delta12_over_gamma0,valid"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    for row in &rows {
        match row[4] {
            "1" => assert!(row[2].parse::<f64>().unwrap().is_finite()),
            "0" => assert_eq!(row[2], "nan"),
            v => panic!("valid column {v}"),
        }
    }
    // r = r_tip, theta = 0: atom 1 touches the pole and atom 2 is beside it.
    assert_eq!(rows[0][4], "1");
}

#[test]
fn unknown_key_in_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.conf");
    fs::write(&path, "# run\nmu = 1\n\ndelta_12 = 5\n").unwrap();
    let r = antibunch(&["g2", "--config", path.to_str().unwrap()], &tmp.path().join("o"));
    assert_eq!(r.status.code(), Some(2));
    let err = stderr(&r);
    assert!(err.contains("bad.conf:4"), "{err}");
    assert!(err.contains("delta_12"), "{err}");
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn malformed_and_repeated_lines_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    for (text, needle) in [
        ("mu = 1\nmu = 2\n", "bad.conf:2"),
        ("mu 1\n", "bad.conf:1"),
        ("t2 = ten\n", "bad.conf:1"),
        ("delta12_grid = 0,,5\n", "delta12_grid"),
    ] {
        let path = tmp.path().join("bad.conf");
        fs::write(&path, text).unwrap();
        let r = antibunch(&["sweep", "--config", path.to_str().unwrap()], &tmp.path().join("o"));
        assert_eq!(r.status.code(), Some(2), "{text}");
        assert!(stderr(&r).contains(needle), "{text}: {}", stderr(&r));
    }
}

#[test]
fn invalid_values_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    for set in ["gamma12=3", "mu=-1", "epsilon=1", "r_inner=50", "nonsense=1"] {
        let mut args = small("tip-experiment");
        if set.starts_with("gamma12") || set.starts_with("mu") {
            args = small("g2");
        }
        args.extend(["--set", set]);
        let r = antibunch(&args, &tmp.path().join("o"));
        assert_eq!(r.status.code(), Some(2), "{set}: {}", stderr(&r));
        let key = set.split('=').next().unwrap();
        assert!(stderr(&r).contains(key), "{set}: {}", stderr(&r));
    }
}

#[test]
fn oversized_time_step_is_a_numerical_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = small("g2");
    args.extend(["--set", "dt=1"]);
    let r = antibunch(&args, &tmp.path().join("o"));
    assert_eq!(r.status.code(), Some(3), "{}", stderr(&r));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let r = antibunch(&["analytic", "--config", "/nonexistent/run.conf"], &tmp.path().join("o"));
    assert_eq!(r.status.code(), Some(2));
}
