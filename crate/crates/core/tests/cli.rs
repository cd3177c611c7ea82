use std::process::Command;

fn symred(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_symred")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn list_scenarios_names_every_builtin() {
    let (code, out, _) = symred(&["list-scenarios"]);
    assert_eq!(code, 0);
    for name in symred::scenarios::BUILTIN_NAMES {
        assert!(out.contains(name), "missing {name}");
    }
}

#[test]
fn parse_check_accepts_shipped_file() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/hopf.scn");
    let (code, _, err) = symred(&["parse-check", path]);
    assert_eq!(code, 0, "{err}");
}

#[test]
fn parse_check_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.scn");
    std::fs::write(&path, "dim = 2\nmu = (x1 + \n").unwrap();
    let (code, out, err) = symred(&["parse-check", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(format!("{out}{err}").contains("line 2"));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let (code, _, _) = symred(&["verify", "hopf", "--suites", "nonsense"]);
    assert_eq!(code, 2);
}

#[test]
fn noninvariant_metric_fails_checks() {
    let (code, out, _) = symred(&["verify", "noninvariant_metric_hopf", "--samples", "4"]);
    assert_eq!(code, 1);
    assert!(out.contains("FAIL"));
}

#[test]
fn out_flag_writes_json_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let (code, _, _) = symred(&[
        "verify", "linear_translation", "--format", "json", "--samples", "3", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["passed"], serde_json::Value::Bool(true));
}
