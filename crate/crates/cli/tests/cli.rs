use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use esk_core::etnc::{EtncData, ScaledElem};
use esk_core::io::{self, Payload};
use serde_json::Value;

fn esk(args: &[&str], dump: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esk"))
        .arg("--dump-dir")
        .arg(dump)
        .args(args)
        .output()
        .unwrap()
}

fn fixtures() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn fixture(prefix: &str) -> PathBuf {
    fixtures()
        .into_iter()
        .find(|p| p.file_name().unwrap().to_str().unwrap().starts_with(prefix))
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn passing_commands_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let sel = fixture("cartesian-p3-m1");
    let sel = sel.to_str().unwrap();
    for args in [
        vec!["selmer", sel],
        vec!["core-rank", sel],
        vec!["cartesian", sel],
        vec!["stark", "solve", sel],
        vec!["ring", "--p", "3", "--m", "2", "--group", "3"],
        vec!["euler-poly", "--a", "2", "--ell", "7", "--p", "3"],
        vec!["artin", "--group", "3", "--values", "[3, 0, 0]"],
    ] {
        let o = esk(&args, tmp.path());
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout_json(&o)["status"], "pass");
    }
    assert!(!tmp.path().exists() || std::fs::read_dir(tmp.path()).unwrap().next().is_none());
}

#[test]
fn input_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let garbage = tmp.path().join("garbage.json");
    std::fs::write(&garbage, "{\"schema_version\": 1").unwrap();
    let etnc = fixture("etnc-basic");
    for args in [
        vec!["selmer", garbage.to_str().unwrap()],
        vec!["selmer", "does-not-exist.json"],
        vec!["selmer", etnc.to_str().unwrap()],
        vec!["gen", "--recipe", "spiral"],
        vec!["gen", "--recipe", "cartesian", "--p", "7"],
        vec!["ring", "--p", "4"],
        vec!["artin", "--group", "3"],
    ] {
        assert_eq!(code(&esk(&args, tmp.path())), 2, "{args:?}");
    }
    // one bad file among good ones still fails the batch
    let good = fixture("cartesian-p3-m1");
    let o = esk(&["selmer", good.to_str().unwrap(), garbage.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 2);
    let statuses: Vec<Value> = stdout_json(&o).as_array().unwrap().iter().map(|e| e["status"].clone()).collect();
    assert!(statuses.contains(&"pass".into()) && statuses.contains(&"input_error".into()));
}

#[test]
fn violations_are_dumped_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let dump = tmp.path().join("dumps");
    let mut file = io::load(&fixture("non-cartesian")).unwrap();
    let Payload::Selmer(d) = &mut file.body else { panic!() };
    let declared = d.core[0].declared_h0_rank.unwrap();
    d.core[0].declared_h0_rank = Some(declared + 1);
    let bad = tmp.path().join("wrong-rank.json");
    io::store(&bad, &file).unwrap();

    let first = esk(&["core-rank", bad.to_str().unwrap()], &dump);
    assert_eq!(code(&first), 1);
    let report = stdout_json(&first);
    assert_eq!(report["status"], "violation");
    let out = PathBuf::from(report["counterexample"].as_str().unwrap());
    let dumped = io::load(&out).unwrap();
    assert!(dumped.provenance.as_deref().unwrap().starts_with("counterexample: esk "));
    assert_eq!(dumped.body, file.body);

    let again = esk(&["core-rank", out.to_str().unwrap()], &tmp.path().join("second"));
    assert_eq!(code(&again), 1);
    assert_eq!(stdout_json(&again)["report"], report["report"]);
}

fn cut_to(data: &EtncData, h: u32) -> EtncData {
    let m = data.ring.m();
    let top = data.ring.with_level(m + data.headroom).unwrap();
    let cut = |e: &mut ScaledElem| e.coeffs = top.reduce_to_level(&e.coeffs, m + h);
    let mut d = data.clone();
    d.headroom = h;
    d.h1_basis.iter_mut().flatten().for_each(cut);
    d.lambda.iter_mut().flatten().for_each(cut);
    cut(&mut d.leading_term);
    d
}

#[test]
fn low_headroom_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let mut threes = 0;
    for path in fixtures().into_iter().filter(|p| p.to_str().unwrap().contains("etnc-basic")) {
        let file = io::load(&path).unwrap();
        let Payload::Etnc(d) = &file.body else { panic!() };
        let low = d.h1_basis.iter().chain(&d.lambda).flatten().chain([&d.leading_term]).map(|e| e.offset).max().unwrap();
        for h in low..d.headroom {
            let mut copy = file.clone();
            copy.body = Payload::Etnc(cut_to(d, h));
            let p = tmp.path().join(format!("h{h}.json"));
            std::fs::write(&p, io::to_text(&copy)).unwrap();
            let c = code(&esk(&["bk-check", p.to_str().unwrap()], tmp.path()));
            assert!(c == 0 || c == 3, "{} at headroom {h}: exit {c}", path.display());
            threes += (c == 3) as usize;
        }
    }
    assert!(threes > 0);
}

#[test]
fn output_does_not_depend_on_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let files: Vec<String> = fixtures()
        .iter()
        .filter(|p| !p.to_str().unwrap().contains("etnc") && !p.to_str().unwrap().contains("tower"))
        .map(|p| p.to_str().unwrap().to_string())
        .collect();
    for cmd in [&["selmer"][..], &["core-vertex"], &["stark", "report"]] {
        let run = |jobs: &str| {
            let mut args: Vec<&str> = vec!["--jobs", jobs];
            args.extend_from_slice(cmd);
            args.extend(files.iter().map(|s| s.as_str()));
            let o = esk(&args, tmp.path());
            assert_eq!(code(&o), 0, "{cmd:?}");
            o.stdout
        };
        assert_eq!(run("1"), run("4"), "{cmd:?}");
    }
}

#[test]
fn generated_files_match_the_library() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("g.json");
    let args = ["gen", "--recipe", "tower", "--seed", "1", "--p", "3", "--m", "1", "--group", "9", "--out", out.to_str().unwrap()];
    assert_eq!(code(&esk(&args, tmp.path())), 0);
    let printed = esk(&args[..args.len() - 2], tmp.path());
    let on_disk = std::fs::read(&out).unwrap();
    assert_eq!(printed.stdout, on_disk);
    assert_eq!(on_disk, std::fs::read(fixture("tower-p3-m1-g9-s1")).unwrap());
}
