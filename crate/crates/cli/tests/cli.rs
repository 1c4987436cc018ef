use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{
  "num_channels": 2,
  "num_slots": 300,
  "compare_dopplers": [1.0, 6.0],
  "drift": { "max_fraction": 0.2, "points": 4, "draws": 10 },
  "ber": { "snr_db": [0.0, 4.0], "channels": 3, "frames_per_channel": 4, "log_channels": 1 }
}"#;

fn bnst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bnst"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![
        sub,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "42",
    ];
    args.extend_from_slice(extra);
    let o = bnst(&args);
    assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn every_subcommand_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL).unwrap();
    let files = [
        ("drift", vec!["drift.csv"]),
        ("track", vec!["track.csv"]),
        ("compare", vec!["compare.csv"]),
        ("ber", vec!["ber.csv", "ber_frames.csv"]),
    ];
    for (sub, names) in files {
        let outs: Vec<_> = [("a", "1"), ("b", "1"), ("c", "4")]
            .iter()
            .map(|(tag, w)| {
                let out = dir.path().join(format!("{sub}-{tag}"));
                run(sub, &cfg, &out, &["--workers", w]);
                out
            })
            .collect();
        for name in names {
            let first = fs::read(outs[0].join(name)).unwrap();
            assert!(first.starts_with(b"# bnst "), "{name} lacks the comment line");
            for other in &outs[1..] {
                assert_eq!(first, fs::read(other.join(name)).unwrap(), "{sub}/{name} differs");
            }
        }
    }
}

#[test]
fn seed_flag_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run("ber", &cfg, &a, &[]);
    let o = bnst(&[
        "ber",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--seed",
        "43",
    ]);
    assert!(o.status.success());
    let ta = fs::read_to_string(a.join("ber_frames.csv")).unwrap();
    let tb = fs::read_to_string(b.join("ber_frames.csv")).unwrap();
    assert!(ta.contains("seed=42") && tb.contains("seed=43"));
    assert_ne!(ta.lines().nth(3), tb.lines().nth(3));
}

#[test]
fn overrides_reach_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL).unwrap();
    run("track", &cfg, dir.path(), &["--slots", "123", "--fd", "0"]);
    let text = fs::read_to_string(dir.path().join("track.csv")).unwrap();
    let data = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(data, 1 + 123);
    assert!(text.contains("adaptation_episodes=0"));
}

#[test]
fn invalid_config_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{ "nt": 1, "nr": 1 }"#).unwrap();
    let o = bnst(&["drift", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nt > nr"));

    fs::write(&cfg, "{ not json").unwrap();
    let o = bnst(&["track", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!o.stderr.is_empty());

    let o = bnst(&["compare", "--config", "/nonexistent/cfg.json"]);
    assert!(!o.status.success());
}
