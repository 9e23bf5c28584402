use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.json"))
}

fn isocrys<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_isocrys")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn find(dir: &Path, module: &str, group: &str, seed: u64) -> PathBuf {
    let out = dir.join(format!("{module}-{group}-{seed}.json"));
    let o = isocrys([
        "filtration".as_ref(),
        "find".as_ref(),
        "--module".as_ref(),
        fixture(module).as_os_str(),
        "--group".as_ref(),
        fixture(group).as_os_str(),
        "--seed".as_ref(),
        seed.to_string().as_ref(),
        "--out".as_ref(),
        out.as_os_str(),
    ]);
    assert!(o.status.success(), "find failed: {}", stderr(&o));
    out
}

fn check(cert: &Path) -> Output {
    isocrys(["filtration".as_ref(), "check".as_ref(), cert.as_os_str()])
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn write_json(p: &Path, v: &Value) {
    std::fs::write(p, serde_json::to_string_pretty(v).unwrap()).unwrap()
}

#[test]
fn slopes_of_fixture_modules() {
    let o = isocrys(["slopes".as_ref(), "--module".as_ref(), fixture("ss2").as_os_str()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "1/2 ×2");

    let o = isocrys(["slopes".as_ref(), "--json".as_ref(), "--module".as_ref(), fixture("ordinary").as_os_str()]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["dim"], 2);
    assert_eq!(v["slopes"]["slopes"][0][0], "0");
    assert_eq!(v["slopes"]["slopes"][1][0], "1");
}

#[test]
fn minkowski_values_and_table() {
    let o = isocrys(["minkowski", "--n", "2"]);
    assert_eq!(stdout(&o).trim(), "24");
    let o = isocrys(["minkowski", "--n", "4", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.to_string().contains("5760"));
    let o = isocrys(["minkowski", "--table", "3"]);
    let text = stdout(&o);
    assert!(text.contains("2903040"));
    assert!(text.contains("0 failed"));
}

#[test]
fn degree_formulas_and_parse_positions() {
    let o = isocrys(["degree", "--local", "1:2,0:3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains('6') && text.contains("12"), "{text}");

    let o = isocrys(["degree", "--local", "1:2,x:3"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("character 5"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(isocrys(["slopes"]).status.code(), Some(64));
    assert_eq!(isocrys(["no-such-command"]).status.code(), Some(64));
    assert_eq!(isocrys(["--help"]).status.code(), Some(0));
    assert_eq!(isocrys(["slopes", "--module", "/nonexistent/module.json"]).status.code(), Some(64));
}

#[test]
fn mismatched_dimensions_are_usage_errors() {
    let (q8, ss4) = (fixture("q8"), fixture("ss4"));
    for cmd in ["decompose", "group"] {
        let o = if cmd == "group" {
            isocrys([
                OsStr::new("group"),
                OsStr::new("check"),
                OsStr::new("--group"),
                q8.as_os_str(),
                OsStr::new("--module"),
                ss4.as_os_str(),
            ])
        } else {
            isocrys([
                OsStr::new("decompose"),
                OsStr::new("--module"),
                ss4.as_os_str(),
                OsStr::new("--group"),
                q8.as_os_str(),
            ])
        };
        assert_eq!(o.status.code(), Some(64), "{cmd}: {}", stderr(&o));
        assert!(stderr(&o).contains("dimension 2, the module 4"), "{cmd}: {}", stderr(&o));
    }
}

#[test]
fn malformed_documents_report_their_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"field\": {\"p\": 2,\n").unwrap();
    let o = isocrys(["slopes".as_ref(), "--module".as_ref(), bad.as_os_str()]);
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let mut v = read_json(&fixture("ss2"));
    v["unexpected"] = Value::Bool(true);
    write_json(&bad, &v);
    let o = isocrys(["slopes".as_ref(), "--module".as_ref(), bad.as_os_str()]);
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("unexpected"));
}

#[test]
fn certificates_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cert = find(dir.path(), "ss2", "sign2-sqrt2", 3);
    let o = check(&cert);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = isocrys(["filtration".as_ref(), "check".as_ref(), "--json".as_ref(), cert.as_os_str()]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let steps = v["steps"].as_array().unwrap();
    assert!(steps.iter().all(|s| s["ok"] == Value::Bool(true)));
    assert_eq!(steps.last().unwrap()["name"], "certificate digest");
}

#[test]
fn certificates_are_deterministic_up_to_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let a = find(dir.path(), "ss4", "k4-cyclic4", 11);
    let b = dir.path().join("again.json");
    std::fs::copy(&a, &b).unwrap();
    let a2 = find(dir.path(), "ss4", "k4-cyclic4", 11);
    let (mut x, mut y) = (read_json(&b), read_json(&a2));
    x.as_object_mut().unwrap().remove("created");
    y.as_object_mut().unwrap().remove("created");
    assert_eq!(x, y);
}

#[test]
fn tampering_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let cert = find(dir.path(), "ss2", "sign2-sqrt2", 5);
    let orig = read_json(&cert);
    let edited = dir.path().join("edited.json");

    let mut v = orig.clone();
    v["params"]["budget"] = Value::from(17);
    write_json(&edited, &v);
    let o = check(&edited);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("verification record"), "{}", stderr(&o));

    let mut v = orig.clone();
    v["inputs"]["module"]["document"]["field"]["precision"] = Value::from(40);
    write_json(&edited, &v);
    let o = check(&edited);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("input digest (module)"), "{}", stderr(&o));

    let mut v = orig.clone();
    v["digest"] = Value::from("0".repeat(64));
    write_json(&edited, &v);
    let o = check(&edited);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("certificate digest"), "{}", stderr(&o));
}

#[test]
fn group_check_names_the_perturbateur() {
    let o = isocrys([
        "group".as_ref(),
        "check".as_ref(),
        "--group".as_ref(),
        fixture("q8").as_os_str(),
        "--module".as_ref(),
        fixture("ss2").as_os_str(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("perturbateur"));
}

#[test]
fn descend_a_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cert = find(dir.path(), "ss2", "sign2-sqrt2", 2);
    let o = isocrys(["descend".as_ref(), "--json".as_ref(), cert.as_os_str()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.to_string().contains("1/2"));
}

#[test]
fn wreath_demo_small() {
    let o = isocrys(["wreath-demo", "--g", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("order 128"));
}
