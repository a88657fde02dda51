mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{MockServer, Reply};
use ethical_reasoning::prompt::example_document;
use ethical_reasoning::reasoning::serialize_reasoning;

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ethreason"));
    for (k, _) in std::env::vars() {
        if k.starts_with("ETHREASON_") {
            c.env_remove(k);
        }
    }
    c
}

fn text(o: &[u8]) -> String {
    String::from_utf8_lossy(o).into_owned()
}

fn last_json_line(o: &Output) -> serde_json::Value {
    let err = text(&o.stderr);
    let line = err.lines().rev().find(|l| l.starts_with('{')).expect("error line");
    serde_json::from_str(line).unwrap()
}

#[test]
fn validate_documents() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.xml");
    let xml = serialize_reasoning(&example_document());
    std::fs::write(&good, &xml).unwrap();
    let o = bin().arg("validate").arg(&good).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));

    let start = xml.find("<compromise_section>").unwrap();
    let end = xml.find("</compromise_section>").unwrap() + "</compromise_section>".len();
    let bad = dir.path().join("bad.xml");
    std::fs::write(&bad, format!("{}{}", &xml[..start], &xml[end..])).unwrap();
    let o = bin().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("MissingSection"));

    let o = bin().args(["validate", "/definitely/not/here.xml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(last_json_line(&o)["error"], "IoError");
}

#[test]
fn validate_scenarios() {
    let o = bin()
        .arg("validate")
        .arg(corpus().join("scenarios/dietary_request.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("s.json");
    std::fs::write(&bad, r#"{"id":"x","title":"t","description":"d","labels":[]}"#).unwrap();
    let o = bin().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_an_error() {
    let o = bin().args(["sweep", "--no-such-flag"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(last_json_line(&o)["error"], "UsageError");
    let o = bin().arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn analyze_empty_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("t.jsonl");
    std::fs::write(&log, "").unwrap();
    let o = bin()
        .arg("analyze")
        .arg("--transcripts")
        .arg(&log)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(last_json_line(&o)["error"], "EmptyInput");
}

fn sweep_ewcs(out: &Path) -> Vec<String> {
    let log = std::fs::read_to_string(out.join("transcripts.jsonl")).unwrap();
    let ewcs: BTreeSet<String> = log
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["ewc"].as_str().unwrap().to_string())
        .collect();
    ewcs.into_iter().collect()
}

#[test]
fn settings_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    let c = corpus();
    std::fs::write(
        &cfg,
        format!(
            "providers = {:?}\nscenarios = [{:?}]\nfixtures = {:?}\newc_grid = [0.0, 1.0]\nout = \"from-config\"\n",
            c.join("providers.toml"),
            c.join("scenarios/animal_compassion.json"),
            c.join("fixtures"),
        ),
    )
    .unwrap();

    let o = bin().arg("sweep").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let from_config = dir.path().join("from-config");
    assert_eq!(sweep_ewcs(&from_config), ["0.00", "1.00"]);

    let env_out = dir.path().join("env");
    let o = bin()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .env("ETHREASON_EWC_GRID", "0.25")
        .env("ETHREASON_OUT", &env_out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(sweep_ewcs(&env_out), ["0.25"]);

    let flag_out = dir.path().join("flag");
    let o = bin()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .env("ETHREASON_EWC_GRID", "0.25")
        .args(["--ewc-grid", "0.5,0.75"])
        .arg("--out")
        .arg(&flag_out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(sweep_ewcs(&flag_out), ["0.50", "0.75"]);
}

#[test]
fn invalid_plan_exits_one() {
    let c = corpus();
    let o = bin()
        .arg("sweep")
        .arg("--scenarios")
        .arg(c.join("scenarios/animal_compassion.json"))
        .arg("--providers")
        .arg(c.join("providers.toml"))
        .arg("--fixtures")
        .arg(c.join("fixtures"))
        .args(["--trials", "0", "--out", "/tmp/unused-ethreason"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(last_json_line(&o)["error"], "PlanError");
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) {
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            walk(&p, out);
        } else {
            out.push(p);
        }
    }
}

#[test]
fn live_run_never_leaks_the_api_key() {
    const SECRET: &str = "sk-test-Zq8uV3secretvalue";
    let doc = serialize_reasoning(&example_document());
    let server = MockServer::start(move |_, _| Reply::ok_content(&doc));
    let dir = tempfile::tempdir().unwrap();
    let providers = dir.path().join("providers.toml");
    std::fs::write(
        &providers,
        format!(
            "[[providers]]\nname = \"mock\"\nbase_url = \"{}\"\nmodel_id = \"m\"\napi_key_env = \"ETHREASON_TEST_SECRET\"\n",
            server.base_url
        ),
    )
    .unwrap();
    let out = dir.path().join("out");
    let fixtures = dir.path().join("fx");
    let o = bin()
        .arg("-vv")
        .arg("run")
        .arg("--scenario")
        .arg(corpus().join("scenarios/animal_compassion.json"))
        .arg("--providers")
        .arg(&providers)
        .args(["--provider", "mock", "--ewc", "0.5", "--mode", "live"])
        .arg("--fixtures")
        .arg(&fixtures)
        .arg("--out")
        .arg(&out)
        .env("ETHREASON_TEST_SECRET", SECRET)
        .env("RUST_LOG", "trace")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    // The example document names neither label.
    assert!(text(&o.stdout).contains("[unclassified]"));
    assert_eq!(server.recorded()[0].header("authorization"), Some(format!("Bearer {SECRET}").as_str()));

    assert!(!text(&o.stdout).contains(SECRET));
    assert!(!text(&o.stderr).contains(SECRET));
    let mut files = Vec::new();
    walk(dir.path(), &mut files);
    assert!(files.len() >= 3);
    for f in files.iter().filter(|f| *f != &providers) {
        let bytes = std::fs::read(f).unwrap();
        assert!(!text(&bytes).contains(SECRET), "{}", f.display());
    }
}
