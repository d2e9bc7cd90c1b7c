use std::path::Path;
use std::process::{Command, Output};

fn ahp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ahp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/case_study")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&o.stdout)
        )
    })
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL: &str = "\
[decision]
goal = \"Pick an office location\"

[panel]
experts = 3

[hierarchy]
top_criteria = 3
sub_per_criterion = 2
final_alternatives = 3
";

#[test]
fn compute_published_top_matrix() {
    let o = ahp(&["compute", &fixture("top_matrix.csv"), "--json"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v = stdout_json(&o);
    let cr = v["consistency"]["cr"].as_f64().unwrap();
    assert!((cr - 0.016).abs() < 0.004, "{cr}");
    assert_eq!(v["consistency"]["consistent"], true);
    let human = String::from_utf8_lossy(&o.stderr);
    assert!(human.contains("Verdict: consistent"), "{human}");
}

#[test]
fn compute_expert_matrix_and_consistent_matrix() {
    let o = ahp(&["compute", &fixture("expert_sub_matrix.csv")]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for w in ["0.539", "0.297", "0.164"] {
        assert!(text.contains(w), "{text}");
    }
    let dir = tempfile::tempdir().unwrap();
    let m = write(
        dir.path(),
        "m.csv",
        ",a,b,c\na,1,2,4\nb,1/2,1,2\nc,1/4,1/2,1\n",
    );
    let v = stdout_json(&ahp(&["--json", "compute", &m]));
    assert!(v["consistency"]["ci"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn invalid_matrix_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.csv", ",a,b\na,1,3\nb,3,1\n");
    let o = ahp(&["compute", &m, "--json"]);
    assert_eq!(o.status.code(), Some(2));
    let v = stdout_json(&o);
    assert_eq!(v["error"]["kind"], "data");
    assert_eq!(v["error"]["exit_code"], 2);
    let o = ahp(&["validate", &m]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(ahp(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ahp(&["compute"]).status.code(), Some(1));
    assert_eq!(
        ahp(&["compute", "x.csv", "--threshold", "0"]).status.code(),
        Some(1)
    );
    let o = ahp(&["--json", "run"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["error"]["kind"], "usage");
    assert_eq!(ahp(&["--help"]).status.code(), Some(0));
}

#[test]
fn scripted_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "config.toml", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let oa = ahp(&["run", "--config", &cfg, "--out", p(&a), "--json"]);
    assert_eq!(
        oa.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&oa.stderr)
    );
    let report = stdout_json(&oa);
    assert!(report["best_alternative"].is_string());
    let ob = ahp(&[
        "run",
        "--config",
        &cfg,
        "--out",
        p(&b),
        "--parallelism",
        "1",
    ]);
    assert_eq!(ob.status.code(), Some(0));
    for f in ["report.json", "report.md"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    // A second run into the same place is refused rather than clobbering.
    let again = ahp(&["run", "--config", &cfg, "--out", p(&a)]);
    assert_eq!(again.status.code(), Some(1));
}

#[test]
fn replay_of_the_case_study_picks_employee_training() {
    let dir = tempfile::tempdir().unwrap();
    let o = ahp(&[
        "run",
        "--config",
        &fixture("config.toml"),
        "--out",
        p(dir.path()),
        "--json",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v = stdout_json(&o);
    assert_eq!(
        v["best_alternative"],
        "Comprehensive Employee Training Programs"
    );
    let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(md.contains("Best alternative: Comprehensive Employee Training Programs"));
}

#[test]
fn missing_credential_fails_before_any_write() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "config.toml",
        &format!(
            "{SMALL}\n[backend]\nkind = \"live\"\napi_key_env = \"AHP_TEST_KEY_THAT_IS_NOT_SET\"\n"
        ),
    );
    let out = dir.path().join("out");
    let o = ahp(&["run", "--config", &cfg, "--out", p(&out), "--json"]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout_json(&o)["error"]["kind"], "backend");
    assert!(!out.exists());

    // Same for a scripted session resumed with a live override.
    let cfg = write(dir.path(), "small.toml", SMALL);
    let session = dir.path().join("s").join("session.json");
    let o = ahp(&["run", "--config", &cfg, "--out", p(&dir.path().join("s"))]);
    assert_eq!(o.status.code(), Some(0));
    let mut v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&session).unwrap()).unwrap();
    v["stage"] = "aggregate".into();
    v["report"] = serde_json::Value::Null;
    v["config"]["backend"]["api_key_env"] = "AHP_TEST_KEY_THAT_IS_NOT_SET".into();
    std::fs::write(&session, serde_json::to_string(&v).unwrap()).unwrap();
    let before = std::fs::read(&session).unwrap();
    let o = ahp(&["resume", "--session", p(&session), "--backend", "live"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(std::fs::read(&session).unwrap(), before);
}

/// A run whose backend cannot answer stops with a backend error and leaves
/// a resumable session; fixing the configuration and resuming completes it
/// with the same report as an uninterrupted run.
#[test]
fn failed_run_resumes_to_the_uninterrupted_report() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.toml", SMALL);
    let reference = dir.path().join("ref");
    assert_eq!(
        ahp(&["run", "--config", &good, "--out", p(&reference)])
            .status
            .code(),
        Some(0)
    );

    let mute = write(
        dir.path(),
        "mute.toml",
        &format!("{SMALL}\n[backend]\nresponder = \"none\"\n"),
    );
    let out = dir.path().join("out");
    let o = ahp(&["run", "--config", &mute, "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(3));
    let session = out.join("session.json");
    let mut v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&session).unwrap()).unwrap();
    assert_eq!(v["stage"], "advise");
    assert_eq!(v["failures"].as_array().unwrap().len(), 1);

    // An empty session costs nothing.
    let cost = stdout_json(&ahp(&["estimate-cost", "--session", p(&session), "--json"]));
    assert_eq!(cost["total_cents"], 0);

    v["config"]["backend"]["responder"] = "synthetic".into();
    v["failures"] = serde_json::json!([]);
    std::fs::write(&session, serde_json::to_string(&v).unwrap()).unwrap();
    let o = ahp(&["resume", "--session", p(&session)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(
        std::fs::read(out.join("report.json")).unwrap(),
        std::fs::read(reference.join("report.json")).unwrap()
    );
}

#[test]
fn reads_never_touch_the_session() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "config.toml", SMALL);
    let out = dir.path().join("out");
    assert_eq!(
        ahp(&["run", "--config", &cfg, "--out", p(&out)])
            .status
            .code(),
        Some(0)
    );
    let session = out.join("session.json");
    let s = p(&session);
    let before = std::fs::read(&session).unwrap();
    let modified = std::fs::metadata(&session).unwrap().modified().unwrap();
    for args in [
        vec!["report", "--session", s],
        vec!["report", "--session", s, "--json"],
        vec!["estimate-cost", "--session", s],
        vec!["estimate-cost", "--session", s, "--blended", "0.2"],
        vec!["export-tree", "--session", s, "--format", "graph"],
        vec!["validate", "--session", s, "--config", &cfg],
        vec!["resume", "--session", s],
    ] {
        let o = ahp(&args);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    assert_eq!(std::fs::read(&session).unwrap(), before);
    assert_eq!(
        std::fs::metadata(&session).unwrap().modified().unwrap(),
        modified
    );
}

#[test]
fn case_study_cost_is_44_cents_per_expert() {
    let o = ahp(&[
        "estimate-cost",
        "--session",
        &fixture("session.json"),
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let experts: Vec<&serde_json::Value> = v["per_persona"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["role"] == "expert")
        .collect();
    assert_eq!(experts.len(), 7);
    assert!(experts.iter().all(|p| p["cents"] == 44));
    assert_eq!(v["panel_cents"], 308);
    assert!(v["headline_dollars"].as_u64().unwrap() <= 4);
    let human = String::from_utf8_lossy(&o.stderr);
    assert!(human.contains("Panel: $3.08"), "{human}");
    assert!(human.contains("rounded half-up"), "{human}");
}

#[test]
fn json_mode_keeps_stdout_machine_readable() {
    for args in [
        vec![
            "export-tree".to_string(),
            "--session".into(),
            fixture("session.json"),
            "--json".into(),
        ],
        vec![
            "report".to_string(),
            "--session".into(),
            fixture("session.json"),
            "--json".into(),
        ],
        vec![
            "validate".to_string(),
            "--config".into(),
            fixture("config.toml"),
            "--json".into(),
        ],
    ] {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = ahp(&refs);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        stdout_json(&o);
        assert!(
            !o.stderr.is_empty(),
            "human text goes to stderr in JSON mode"
        );
    }
}

#[test]
fn bad_config_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "config.toml",
        "[decision]\ngoal = \"g\"\n[panel]\nexpertz = 3\n",
    );
    assert_eq!(ahp(&["validate", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(
        ahp(&["run", "--config", &cfg, "--out", p(dir.path())])
            .status
            .code(),
        Some(2)
    );
    let missing = dir.path().join("nope.json");
    assert_eq!(
        ahp(&["report", "--session", p(&missing)]).status.code(),
        Some(2)
    );
}
