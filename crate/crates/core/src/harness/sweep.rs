use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{assemble_table, CellStatus, HarnessError, LabelTriple, ParseReport, ResultsTable, Scenario, Transcript};
use crate::extract::{ReasoningLevel, RuleSet};
use crate::gateway::{FixtureStore, Gateway, GatewayError, ProviderConfig, RefusalDetector, ResponseStatus};
use crate::prompt::{build_prompt, ewc_grid_default, PromptBundle, PromptTemplate};
use crate::reasoning::{extract_final_texts, parse_reasoning, EmotionWeight, ParseMode};

/// Timestamp stamped on replayed transcripts so reruns are byte-identical.
const REPLAY_TIMESTAMP: &str = "1970-01-01T00:00:00Z";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Live,
    #[default]
    Replay,
}

impl FromStr for RunMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(RunMode::Live),
            "replay" => Ok(RunMode::Replay),
            other => Err(format!("unknown mode {other:?} (expected live or replay)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub scenarios: Vec<Scenario>,
    pub providers: Vec<ProviderConfig>,
    pub ewc_grid: Vec<EmotionWeight>,
    pub trials: u32,
    pub mode: RunMode,
    /// Strict also aborts the sweep on the first failed cell.
    pub parse_mode: ParseMode,
    pub template: PromptTemplate,
    /// Fixture directory: read in replay mode, written in live mode when set.
    pub fixtures: Option<PathBuf>,
    pub refusals: RefusalDetector,
}

impl RunPlan {
    /// Default grid, one trial, replay mode, lenient parsing.
    pub fn new(scenarios: Vec<Scenario>, providers: Vec<ProviderConfig>) -> Self {
        RunPlan {
            scenarios,
            providers,
            ewc_grid: ewc_grid_default(),
            trials: 1,
            mode: RunMode::Replay,
            parse_mode: ParseMode::Lenient,
            template: PromptTemplate::default(),
            fixtures: None,
            refusals: RefusalDetector::default(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let plan = |m: &str| Err(HarnessError::Plan(m.to_string()));
        if self.trials == 0 {
            return plan("trials must be at least 1");
        }
        if self.ewc_grid.is_empty() {
            return plan("emotion weight grid is empty");
        }
        if self.ewc_grid.windows(2).any(|w| w[0] >= w[1]) {
            return plan("emotion weight grid must be strictly increasing");
        }
        if self.scenarios.is_empty() {
            return plan("no scenarios");
        }
        if self.providers.is_empty() {
            return plan("no providers");
        }
        for s in &self.scenarios {
            s.validate()?;
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            if self.scenarios[..i].iter().any(|o| o.id == s.id) {
                return Err(HarnessError::Plan(format!("duplicate scenario id {:?}", s.id)));
            }
        }
        for (i, p) in self.providers.iter().enumerate() {
            p.validate().map_err(|e| HarnessError::Plan(e.to_string()))?;
            if self.providers[..i].iter().any(|o| o.name == p.name) {
                return Err(HarnessError::Plan(format!("duplicate provider {:?}", p.name)));
            }
        }
        if self.mode == RunMode::Replay && self.fixtures.is_none() {
            return plan("replay mode needs a fixture directory");
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.scenarios.len() * self.providers.len() * self.ewc_grid.len() * self.trials as usize
    }

    /// Digest of everything that determines the requests sent.
    fn digest(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |s: &str| {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        };
        for s in &self.scenarios {
            put(&s.id);
            put(&s.description);
        }
        for p in &self.providers {
            put(&p.name);
            put(&p.model_id);
            put(&p.temperature.to_string());
        }
        for w in &self.ewc_grid {
            put(&w.to_string());
        }
        put(&self.trials.to_string());
        put(&format!("{:?}", self.mode));
        put(&format!("{:?}", self.template));
        hex::encode(&h.finalize()[..8])
    }

    fn build_gateways(&self) -> Result<Vec<Gateway>, HarnessError> {
        let refusals = Arc::new(self.refusals.clone());
        self.providers
            .iter()
            .map(|config| {
                let wrap = |source| HarnessError::Gateway {
                    provider: config.name.clone(),
                    source,
                };
                let gw = match self.mode {
                    RunMode::Replay => {
                        let dir = self.fixtures.clone().ok_or_else(|| HarnessError::Plan("replay mode needs a fixture directory".into()))?;
                        Gateway::replay(config.clone(), FixtureStore::new(dir)).map_err(wrap)?
                    }
                    RunMode::Live => {
                        let gw = Gateway::live(config.clone()).map_err(wrap)?;
                        match &self.fixtures {
                            Some(dir) => gw.recording_to(FixtureStore::new(dir)),
                            None => gw,
                        }
                    }
                };
                Ok(gw.with_refusals(refusals.clone()))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub run_id: String,
    /// Ordered by scenario, provider, weight, trial.
    pub transcripts: Vec<Transcript>,
    /// One per scenario, in plan order.
    pub tables: Vec<ResultsTable>,
}

/// Runs `plan` against gateways built from its provider configs.
pub fn run_sweep(plan: &RunPlan) -> Result<SweepOutput, HarnessError> {
    plan.validate()?;
    let gateways = plan.build_gateways()?;
    run_sweep_with(plan, &gateways)
}

/// Runs `plan` against the given gateways, one per provider in plan order.
pub fn run_sweep_with(plan: &RunPlan, gateways: &[Gateway]) -> Result<SweepOutput, HarnessError> {
    if plan.trials == 0 || plan.ewc_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::Plan("invalid trials or emotion weight grid".into()));
    }
    if gateways.len() != plan.providers.len() {
        return Err(HarnessError::Plan(format!(
            "{} gateways for {} providers",
            gateways.len(),
            plan.providers.len()
        )));
    }
    let (run_id, timestamp) = match plan.mode {
        RunMode::Replay => (format!("replay-{}", plan.digest()), REPLAY_TIMESTAMP.to_string()),
        RunMode::Live => {
            let now = chrono::Utc::now();
            (
                format!("live-{}-{}", plan.digest(), now.format("%Y%m%dT%H%M%SZ")),
                now.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            )
        }
    };

    let rules: Vec<RuleSet> = plan.scenarios.iter().map(|s| s.rules()).collect::<Result<_, _>>()?;
    let mut prompts: Vec<Vec<PromptBundle>> = Vec::with_capacity(plan.scenarios.len());
    for s in &plan.scenarios {
        let row = plan
            .ewc_grid
            .iter()
            .map(|&w| build_prompt(&s.description, w, &plan.template))
            .collect::<Result<Vec<_>, _>>()?;
        prompts.push(row);
    }

    let (n_s, n_p, n_e, n_t) = (plan.scenarios.len(), gateways.len(), plan.ewc_grid.len(), plan.trials as usize);
    let slot = |s: usize, p: usize, e: usize, t: usize| ((s * n_p + p) * n_e + e) * n_t + t;
    let results: Mutex<Vec<Option<Transcript>>> = Mutex::new(vec![None; plan.cell_count()]);
    let abort = AtomicBool::new(false);
    let failure: Mutex<Option<HarnessError>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for (p, gateway) in gateways.iter().enumerate() {
            let per_provider = n_s * n_e * n_t;
            let next = Arc::new(AtomicUsize::new(0));
            let workers = gateway.config().max_in_flight.clamp(1, per_provider.max(1));
            for _ in 0..workers {
                let next = next.clone();
                let (results, abort, failure, rules, prompts, run_id, timestamp) =
                    (&results, &abort, &failure, &rules, &prompts, &run_id, &timestamp);
                scope.spawn(move || loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= per_provider || abort.load(Ordering::SeqCst) {
                        break;
                    }
                    let (s, rest) = (i / (n_e * n_t), i % (n_e * n_t));
                    let (e, t) = (rest / n_t, rest % n_t);
                    let cell = Cell {
                        run_id,
                        timestamp,
                        scenario: &plan.scenarios[s],
                        rules: &rules[s],
                        prompt: &prompts[s][e],
                        trial: t as u32,
                        mode: plan.parse_mode,
                    };
                    match cell.run(gateway) {
                        Ok(tr) => results.lock().expect("results lock")[slot(s, p, e, t)] = Some(tr),
                        Err(err) => {
                            abort.store(true, Ordering::SeqCst);
                            failure.lock().expect("failure lock").get_or_insert(err);
                            break;
                        }
                    }
                });
            }
        }
    });

    if let Some(err) = failure.into_inner().expect("failure lock") {
        return Err(err);
    }
    let transcripts: Vec<Transcript> = results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|t| t.expect("every cell ran"))
        .collect();

    let per_scenario = n_p * n_e * n_t;
    let tables = plan
        .scenarios
        .iter()
        .zip(transcripts.chunks(per_scenario))
        .map(|(s, chunk)| assemble_table(chunk).map(|t| t.with_coding(s)))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(SweepOutput {
        run_id,
        transcripts,
        tables,
    })
}

struct Cell<'a> {
    run_id: &'a str,
    timestamp: &'a str,
    scenario: &'a Scenario,
    rules: &'a RuleSet,
    prompt: &'a PromptBundle,
    trial: u32,
    mode: ParseMode,
}

impl Cell<'_> {
    fn transcript(&self, gateway: &Gateway, status: CellStatus) -> Transcript {
        Transcript {
            run_id: self.run_id.to_string(),
            scenario_id: self.scenario.id.clone(),
            provider: gateway.name().to_string(),
            model_id: gateway.config().model_id.clone(),
            ewc: self.prompt.ewc,
            trial: self.trial,
            timestamp: self.timestamp.to_string(),
            prompt: self.prompt.clone(),
            raw_response: None,
            status,
            error: None,
            parse: None,
            decisions: None,
            labels: None,
        }
    }

    /// Errors only in strict mode; otherwise failures are recorded in the transcript.
    fn run(&self, gateway: &Gateway) -> Result<Transcript, HarnessError> {
        let strict = self.mode == ParseMode::Strict;
        let ewc = self.prompt.ewc;
        let where_ = format!("{} / {} / ewc {ewc} / trial {}", self.scenario.id, gateway.name(), self.trial);
        log::info!("cell {where_}");

        let request = gateway.request_for(self.prompt);
        let response = match gateway.complete(&request, ewc) {
            Ok(r) => r,
            Err(source) => {
                if strict {
                    return Err(HarnessError::Gateway {
                        provider: gateway.name().to_string(),
                        source,
                    });
                }
                log::warn!("{where_}: {source}");
                let status = match source {
                    GatewayError::FixtureMissing(_) => CellStatus::FixtureMissing,
                    GatewayError::HttpError { .. } => CellStatus::HttpError,
                    GatewayError::AuthError(_) => CellStatus::AuthError,
                    _ => CellStatus::TransportError,
                };
                let mut t = self.transcript(gateway, status);
                t.error = Some(source.to_string());
                return Ok(t);
            }
        };

        if response.status == ResponseStatus::Refusal {
            log::warn!("{where_}: provider refused");
            let mut t = self.transcript(gateway, CellStatus::Refusal);
            t.raw_response = Some(response.content);
            return Ok(t);
        }

        let parsed = match parse_reasoning(&response.content, self.mode) {
            Ok(p) => p,
            Err(source) => {
                if strict {
                    return Err(HarnessError::Parse { context: where_, source });
                }
                log::warn!("{where_}: {source}");
                let mut t = self.transcript(gateway, CellStatus::ParseError);
                t.raw_response = Some(response.content);
                t.error = Some(source.to_string());
                t.parse = Some(ParseReport {
                    ok: false,
                    diagnostics: source.diagnostics,
                });
                return Ok(t);
            }
        };

        if parsed.document.emotion_weight() != ewc {
            log::warn!(
                "{where_}: document states coefficient {} but {ewc} was requested",
                parsed.document.emotion_weight()
            );
        }
        let texts = extract_final_texts(&parsed.document);
        let classify = |text: &str, level| {
            self.rules.classify(text, level, self.mode).map_err(|source| HarnessError::Extract {
                context: format!("{where_} / {level}"),
                source,
            })
        };
        let labels = LabelTriple {
            logical: classify(&texts.logical, ReasoningLevel::Logical)?,
            emotional: classify(&texts.emotional, ReasoningLevel::Emotional)?,
            final_decision: classify(&texts.final_decision, ReasoningLevel::Final)?,
        };

        let mut t = self.transcript(gateway, CellStatus::Ok);
        t.raw_response = Some(response.content);
        t.parse = Some(ParseReport {
            ok: true,
            diagnostics: parsed.diagnostics,
        });
        t.decisions = Some(texts);
        t.labels = Some(labels);
        Ok(t)
    }
}
