use std::path::{Path, PathBuf};

use ethical_reasoning::extract::ReasoningLevel;
use ethical_reasoning::gateway::{load_providers, RefusalDetector};
use ethical_reasoning::harness::{
    assemble_table, load_scenario, read_transcripts, run_sweep, write_transcripts, CellStatus, RunPlan,
};
use ethical_reasoning::reasoning::{DiagnosticCode, ParseMode};
use ethical_reasoning::stats::{analyze_table, StatsConfig};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn plan() -> RunPlan {
    let c = corpus();
    let scenarios = ["animal_compassion", "dietary_request"]
        .iter()
        .map(|id| load_scenario(&c.join("scenarios").join(format!("{id}.json"))).unwrap())
        .collect();
    let mut plan = RunPlan::new(scenarios, load_providers(&c.join("providers.toml")).unwrap());
    plan.fixtures = Some(c.join("fixtures"));
    plan.refusals = RefusalDetector::load(&c.join("refusal_phrases.txt")).unwrap();
    plan
}

#[test]
fn replay_matches_expected_tables() {
    let out = run_sweep(&plan()).unwrap();
    assert_eq!(out.transcripts.len(), 2 * 8 * 5);
    assert!(out.transcripts.iter().all(|t| t.status == CellStatus::Ok && t.is_consistent()));
    for table in &out.tables {
        let expected = std::fs::read_to_string(corpus().join("expected").join(format!("{}.csv", table.scenario_id))).unwrap();
        assert_eq!(table.to_csv(), expected, "{}", table.scenario_id);
        assert_eq!(table.missing_count(None), 0);
    }
}

#[test]
fn fixtures_exercise_lenient_recovery() {
    let out = run_sweep(&plan()).unwrap();
    let codes: Vec<DiagnosticCode> = out
        .transcripts
        .iter()
        .flat_map(|t| t.parse.as_ref().unwrap().diagnostics.iter().map(|d| d.code))
        .collect();
    for code in [
        DiagnosticCode::FenceStripped,
        DiagnosticCode::ProseStripped,
        DiagnosticCode::ItemsSplit,
        DiagnosticCode::CaseFolded,
    ] {
        assert!(codes.contains(&code), "{code:?} never raised");
    }
}

#[test]
fn strict_replay_rejects_dressed_fixtures() {
    let mut p = plan();
    p.parse_mode = ParseMode::Strict;
    assert!(run_sweep(&p).is_err());
}

#[test]
fn transcript_log_round_trip() {
    let out = run_sweep(&plan()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    write_transcripts(&path, &out.transcripts).unwrap();
    let back = read_transcripts(&path).unwrap();
    assert_eq!(back, out.transcripts);
    let animal: Vec<_> = back.into_iter().filter(|t| t.scenario_id == "animal_compassion").collect();
    let table = assemble_table(&animal).unwrap();
    assert_eq!(table.to_csv(), out.tables[0].to_csv());
    assert_eq!(table.providers, out.tables[0].providers);
}

#[test]
fn replay_statistics() {
    let out = run_sweep(&plan()).unwrap();
    let reports = analyze_table(&out.tables[0], &StatsConfig::default()).unwrap();
    let a = reports[0].anova.as_ref().unwrap();
    assert_eq!(reports[0].level, ReasoningLevel::Final);
    assert_eq!(a.df, (4, 35));
    assert!((a.f - 8.5441).abs() < 1e-3);
    assert_eq!(reports[0].pairwise.len(), 10);
    let b = reports[1].anova.as_ref().unwrap();
    assert_eq!(b.df, (7, 32));
    assert!((b.f - 6.0).abs() < 1e-6);
}
