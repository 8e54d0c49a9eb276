mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cheq::data_model::*;
use common::*;

fn cheq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cheq")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn fixture_run_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixtures().join("run.json");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = cheq(&["run", "--config", path(&config), "--out", path(dir)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let m = manifest(&a);
    assert_eq!(m["artifacts"].as_array().unwrap().len(), 7);
    assert_eq!(m, manifest(&b));
    assert_eq!(files(&a), files(&b));
    for artifact in m["artifacts"].as_array().unwrap() {
        for f in artifact["files"].as_array().unwrap() {
            assert!(a.join(f["file"].as_str().unwrap()).is_file());
        }
    }
}

#[test]
fn single_threshold_gives_single_column() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cheq(&["run", "--config", path(&fixtures().join("run.json")), "--out", path(tmp.path()), "--thresholds", "0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(tmp.path().join("che_by_district.csv")).unwrap();
    let header = table.lines().next().unwrap();
    assert_eq!(header, "district_code,district,che10,che10_se,che10_lo,che10_hi,n,excluded");
    assert!(!tmp.path().join("choropleth_che20.csv").exists());
}

#[test]
fn invalid_input_exits_with_validation_code() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    let mut text = fs::read_to_string(fixtures().join("central_households.csv")).unwrap();
    text.push_str("X-1,1,Rural,Central,S1,01-R,0,3,1000,0,0,0,false\n");
    fs::write(&bad, text).unwrap();
    let out = cheq(&["estimate", "--data", path(&bad), "--out", path(&tmp.path().join("est"))]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let unknown = tmp.path().join("unknown.csv");
    fs::write(&unknown, "hh_id\nx\n").unwrap();
    let out = cheq(&["estimate", "--data", path(&unknown), "--out", path(&tmp.path().join("est"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dissimilar_samples_are_not_pooled_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let mut r = rng(40);
    let central = random_dataset(&mut r, 200, &[1, 2], Agency::Central);
    let mut state = random_dataset(&mut r, 200, &[1, 2], Agency::State);
    state.households.iter_mut().for_each(|h| h.aexp = h.aexp * 3.0 + 500_000.0);
    let (c, s) = (tmp.path().join("c.csv"), tmp.path().join("s.csv"));
    write_households(fs::File::create(&c).unwrap(), &central.households).unwrap();
    write_households(fs::File::create(&s).unwrap(), &state.households).unwrap();
    let pooled = tmp.path().join("pooled.csv");

    let out = cheq(&["pool", "--central", path(&c), "--state", path(&s), "--out", path(&pooled)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!pooled.exists());

    let out = cheq(&["pool", "--central", path(&c), "--state", path(&s), "--out", path(&pooled), "--force"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(load_households(&pooled, None).unwrap().households.len(), 400);

    let report = cheq(&["poolability", "--central", path(&c), "--state", path(&s)]);
    assert!(report.status.success());
    let json: serde_json::Value = serde_json::from_slice(&report.stdout).unwrap();
    assert_eq!(json["poolable"], false);
}

#[test]
fn synth_reproduces_the_committed_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cheq(&["synth", "--config", path(&fixtures().join("synth.json")), "--out", path(tmp.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["central_households.csv", "central_episodes.csv", "state_households.csv", "state_episodes.csv"] {
        assert_eq!(fs::read(tmp.path().join(name)).unwrap(), fs::read(fixtures().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn gini_and_stats_print_results() {
    let f = fixtures();
    let out = cheq(&[
        "gini",
        "--data",
        path(&f.join("central_households.csv")),
        "--episodes",
        path(&f.join("central_episodes.csv")),
        "--group",
        "sex",
        "--mode",
        "strict",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains("sex between")).count(), 3);

    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a.csv"), tmp.path().join("b.csv"));
    fs::write(&a, "x\n1\n2\n3\n4\n5\n").unwrap();
    fs::write(&b, "y\n2\n4\n6\n8\n11\n").unwrap();
    let out = cheq(&["stats", "spearman", "--in", &format!("{},{}", path(&a), path(&b))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((json["rho"].as_f64(), json["n"].as_u64()), (Some(1.0), Some(5)));
}
