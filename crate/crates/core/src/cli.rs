//! The `ethreason` command line.
//!
//! Exit status: 0 on success, 1 for invalid input or a failed validation,
//! 2 for I/O and transport failures. Fatal errors also print one JSON line
//! `{"error": ..., "message": ..., "exit": ...}` to standard error.
//!
//! Settings come from flags first, then `ETHREASON_*` environment variables,
//! then the TOML file given by `--config`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::gateway::{load_providers, GatewayError, RefusalDetector};
use crate::harness::{
    assemble_table, load_scenario, parse_scenario, read_transcripts, run_sweep, write_transcripts, HarnessError,
    RunMode, RunPlan, Scenario, SweepOutput, Transcript,
};
use crate::prompt::{ewc_grid_default, PromptError, PromptTemplate};
use crate::reasoning::{parse_reasoning_bytes, EmotionWeight, ParseMode};
use crate::stats::{analyze_table, StatsConfig, StatsError, StatsReport};

#[derive(Debug, Parser)]
#[command(name = "ethreason", version, about = "Emotion-weighted ethical reasoning: sweeps, tables and statistics")]
struct Cli {
    /// TOML file with default settings.
    #[arg(long, global = true, env = "ETHREASON_CONFIG")]
    config: Option<PathBuf>,
    /// More log output on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a reasoning document or scenario file in strict mode.
    Validate(ValidateArgs),
    /// Run one scenario against one provider at one emotion weight.
    Run(RunArgs),
    /// Run every scenario against every provider over the weight grid.
    Sweep(PlanArgs),
    /// Compute statistics from a transcript log.
    Analyze(AnalyzeArgs),
    /// Print tables and statistics from a transcript log.
    Report(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FileKind {
    Auto,
    Document,
    Scenario,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    path: PathBuf,
    #[arg(long, value_enum, default_value_t = FileKind::Auto)]
    kind: FileKind,
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// Scenario JSON files (repeatable or comma separated).
    #[arg(long = "scenarios", visible_alias = "scenario", value_delimiter = ',', num_args = 1..)]
    scenarios: Vec<PathBuf>,
    /// Provider list (TOML).
    #[arg(long, env = "ETHREASON_PROVIDERS")]
    providers: Option<PathBuf>,
    /// Comma separated emotion weights [default: 0,0.25,0.5,0.75,1].
    #[arg(long = "ewc-grid", env = "ETHREASON_EWC_GRID")]
    ewc_grid: Option<String>,
    #[arg(long, env = "ETHREASON_TRIALS")]
    trials: Option<u32>,
    #[arg(long, env = "ETHREASON_MODE")]
    mode: Option<RunMode>,
    /// Recorded responses: read in replay mode, written in live mode.
    #[arg(long, env = "ETHREASON_FIXTURES")]
    fixtures: Option<PathBuf>,
    #[arg(long, env = "ETHREASON_TEMPLATE")]
    template: Option<PathBuf>,
    /// Refusal phrase list, one per line.
    #[arg(long, env = "ETHREASON_REFUSALS")]
    refusals: Option<PathBuf>,
    /// Strict parsing and classification; the first failed cell aborts.
    #[arg(long)]
    strict: bool,
    #[arg(long, env = "ETHREASON_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    plan: PlanArgs,
    /// Provider name from the provider list.
    #[arg(long)]
    provider: String,
    #[arg(long, default_value = "0.50")]
    ewc: EmotionWeight,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Transcript log (JSON Lines) [default: OUT/transcripts.jsonl].
    #[arg(long, env = "ETHREASON_TRANSCRIPTS")]
    transcripts: Option<PathBuf>,
    /// Scenario files that define each scenario's label coding.
    #[arg(long = "scenarios", visible_alias = "scenario", value_delimiter = ',', num_args = 1..)]
    scenarios: Vec<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Bonferroni family size [default: all pairs of weights].
    #[arg(long)]
    comparisons: Option<usize>,
    #[arg(long, env = "ETHREASON_OUT")]
    out: Option<PathBuf>,
}

/// Settings file. Relative paths are resolved against the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    providers: Option<PathBuf>,
    scenarios: Option<Vec<PathBuf>>,
    ewc_grid: Option<Vec<f64>>,
    trials: Option<u32>,
    mode: Option<String>,
    fixtures: Option<PathBuf>,
    template: Option<PathBuf>,
    refusals: Option<PathBuf>,
    strict: Option<bool>,
    out: Option<PathBuf>,
    transcripts: Option<PathBuf>,
    alpha: Option<f64>,
    comparisons: Option<usize>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| Failure::invalid("ConfigError", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p.as_mut() {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        for p in [
            &mut cfg.providers,
            &mut cfg.fixtures,
            &mut cfg.template,
            &mut cfg.refusals,
            &mut cfg.out,
            &mut cfg.transcripts,
        ] {
            fix(p);
        }
        if let Some(list) = cfg.scenarios.as_mut() {
            for s in list.iter_mut().filter(|s| s.is_relative()) {
                *s = base.join(&*s);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug)]
struct Failure {
    exit: i32,
    code: &'static str,
    message: String,
}

impl Failure {
    fn invalid(code: &'static str, message: impl Into<String>) -> Self {
        Failure {
            exit: 1,
            code,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure {
            exit: 2,
            code: "IoError",
            message: format!("{}: {e}", path.display()),
        }
    }
}

fn gateway_code(e: &GatewayError) -> &'static str {
    match e {
        GatewayError::Timeout => "Timeout",
        GatewayError::HttpError { .. } => "HttpError",
        GatewayError::AuthError(_) => "AuthError",
        GatewayError::TransportError(_) | GatewayError::InvalidResponse(_) => "TransportError",
        GatewayError::FixtureMissing(_) => "FixtureMissing",
        GatewayError::Config(_) => "ConfigError",
        GatewayError::Io { .. } => "IoError",
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = match &e {
            HarnessError::Io { .. } => "IoError",
            HarnessError::Schema(_) => "SchemaError",
            HarnessError::Plan(_) => "PlanError",
            HarnessError::MixedScenario(_) => "MixedScenario",
            HarnessError::EmptyInput => "EmptyInput",
            HarnessError::Gateway { source, .. } => gateway_code(source),
            HarnessError::Extract { .. } => "ExtractError",
            HarnessError::Parse { .. } => "ParseError",
            HarnessError::Prompt(PromptError::Io { .. }) => "IoError",
            HarnessError::Prompt(_) => "PromptError",
        };
        let exit = if e.is_io() || matches!(e, HarnessError::Prompt(PromptError::Io { .. })) {
            2
        } else {
            1
        };
        Failure {
            exit,
            code,
            message: e.to_string(),
        }
    }
}

impl From<GatewayError> for Failure {
    fn from(e: GatewayError) -> Self {
        let exit = if matches!(e, GatewayError::Config(_)) { 1 } else { 2 };
        Failure {
            exit,
            code: gateway_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<PromptError> for Failure {
    fn from(e: PromptError) -> Self {
        HarnessError::Prompt(e).into()
    }
}

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        Failure::invalid("StatsError", e.to_string())
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

// Console write failures (e.g. a closed pipe) are not worth a second error.
macro_rules! say {
    ($w:expr, $($arg:tt)*) => {{ let _ = writeln!($w, $($arg)*); }};
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return 0;
            }
            let _ = write!(err, "{}", e.render());
            let line = serde_json::json!({"error": "UsageError", "message": e.kind().to_string(), "exit": 1});
            say!(err, "{line}");
            return 1;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    }))
    .try_init();

    let mut io = Io { out, err };
    let result = FileConfig::load(cli.config.as_deref()).and_then(|cfg| match cli.command {
        Command::Validate(a) => validate(&a, &mut io),
        Command::Run(a) => run_one(a, cfg, &mut io),
        Command::Sweep(a) => sweep(a, cfg, &mut io),
        Command::Analyze(a) => analyze(a, cfg, &mut io, true),
        Command::Report(a) => analyze(a, cfg, &mut io, false),
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            say!(io.err, "error: {}", f.message);
            let line = serde_json::json!({"error": f.code, "message": f.message, "exit": f.exit});
            say!(io.err, "{line}");
            f.exit
        }
    }
}

fn validate(args: &ValidateArgs, io: &mut Io) -> Result<i32, Failure> {
    let bytes = std::fs::read(&args.path).map_err(|e| Failure::io(&args.path, e))?;
    let is_scenario = match args.kind {
        FileKind::Scenario => true,
        FileKind::Document => false,
        FileKind::Auto => bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{'),
    };
    let name = args.path.display();
    if is_scenario {
        let text = String::from_utf8_lossy(&bytes);
        return Ok(match parse_scenario(&text) {
            Ok(s) => {
                say!(io.out, "{name}: valid scenario {:?} with {} labels", s.id, s.labels.len());
                0
            }
            Err(e) => {
                say!(io.err, "{name}: {e}");
                1
            }
        });
    }
    Ok(match parse_reasoning_bytes(&bytes, ParseMode::Strict) {
        Ok(p) => {
            say!(io.out, "{name}: valid document, emotion weight {}", p.document.emotion_weight());
            0
        }
        Err(e) => {
            for d in &e.diagnostics {
                say!(io.err, "{name}: {d}");
            }
            1
        }
    })
}

fn parse_grid(text: &str) -> Result<Vec<EmotionWeight>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<EmotionWeight>()
                .map_err(|e| Failure::invalid("PlanError", format!("emotion weight {:?}: {e}", s.trim())))
        })
        .collect()
}

fn build_plan(args: PlanArgs, cfg: &FileConfig) -> Result<(RunPlan, Option<PathBuf>), Failure> {
    let scenario_paths = if args.scenarios.is_empty() {
        cfg.scenarios.clone().unwrap_or_default()
    } else {
        args.scenarios
    };
    if scenario_paths.is_empty() {
        return Err(Failure::invalid("PlanError", "no scenario files given (--scenarios)"));
    }
    let scenarios = scenario_paths
        .iter()
        .map(|p| load_scenario(p))
        .collect::<Result<Vec<_>, _>>()?;
    let providers_path = args
        .providers
        .or_else(|| cfg.providers.clone())
        .ok_or_else(|| Failure::invalid("PlanError", "no provider list given (--providers)"))?;
    let providers = load_providers(&providers_path)?;

    let mut plan = RunPlan::new(scenarios, providers);
    plan.ewc_grid = match (args.ewc_grid, &cfg.ewc_grid) {
        (Some(text), _) => parse_grid(&text)?,
        (None, Some(list)) => list
            .iter()
            .map(|&w| EmotionWeight::new(w).map_err(|e| Failure::invalid("PlanError", format!("emotion weight {w}: {e}"))))
            .collect::<Result<_, _>>()?,
        (None, None) => ewc_grid_default(),
    };
    plan.trials = args.trials.or(cfg.trials).unwrap_or(1);
    plan.mode = match (args.mode, &cfg.mode) {
        (Some(m), _) => m,
        (None, Some(text)) => text.parse().map_err(|e: String| Failure::invalid("PlanError", e))?,
        (None, None) => RunMode::Replay,
    };
    if args.strict || cfg.strict.unwrap_or(false) {
        plan.parse_mode = ParseMode::Strict;
    }
    plan.fixtures = args.fixtures.or_else(|| cfg.fixtures.clone());
    if let Some(t) = args.template.or_else(|| cfg.template.clone()) {
        plan.template = PromptTemplate::load(&t)?;
    }
    if let Some(r) = args.refusals.or_else(|| cfg.refusals.clone()) {
        plan.refusals = RefusalDetector::load(&r)?;
    }
    plan.validate()?;
    Ok((plan, args.out.or_else(|| cfg.out.clone())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn write_sweep(out_dir: &Path, output: &SweepOutput) -> Result<(), Failure> {
    std::fs::create_dir_all(out_dir).map_err(|e| Failure::io(out_dir, e))?;
    write_transcripts(&out_dir.join("transcripts.jsonl"), &output.transcripts)?;
    for table in &output.tables {
        write_file(&out_dir.join(format!("{}.table.csv", table.scenario_id)), &table.to_csv())?;
        write_file(&out_dir.join(format!("{}.table.txt", table.scenario_id)), &table.render_text())?;
    }
    Ok(())
}

fn sweep(args: PlanArgs, cfg: FileConfig, io: &mut Io) -> Result<i32, Failure> {
    let (plan, out_dir) = build_plan(args, &cfg)?;
    let out_dir = out_dir.ok_or_else(|| Failure::invalid("PlanError", "sweep needs an output directory (--out)"))?;
    let output = run_sweep(&plan)?;
    write_sweep(&out_dir, &output)?;
    for table in &output.tables {
        say!(io.out, "{}", table.render_text());
    }
    let failed = output.transcripts.iter().filter(|t| t.labels.is_none()).count();
    say!(
        io.out,
        "{} transcripts written to {} ({} without labels)",
        output.transcripts.len(),
        out_dir.display(),
        failed
    );
    Ok(0)
}

fn run_one(args: RunArgs, cfg: FileConfig, io: &mut Io) -> Result<i32, Failure> {
    let ewc = args.ewc;
    let name = args.provider;
    let mut plan_args = args.plan;
    plan_args.ewc_grid = Some(ewc.to_string());
    plan_args.trials = Some(1);
    let (mut plan, out_dir) = build_plan(plan_args, &cfg)?;
    if plan.scenarios.len() != 1 {
        return Err(Failure::invalid("PlanError", "run takes exactly one scenario"));
    }
    plan.providers.retain(|p| p.name == name);
    if plan.providers.is_empty() {
        return Err(Failure::invalid("PlanError", format!("no provider named {name:?}")));
    }
    let output = run_sweep(&plan)?;
    if let Some(dir) = out_dir {
        write_sweep(&dir, &output)?;
    }
    let t = &output.transcripts[0];
    say!(io.out, "{} / {} / emotion weight {}: {:?}", t.scenario_id, t.provider, t.ewc, t.status);
    if let Some(e) = &t.error {
        say!(io.err, "{e}");
    }
    if let (Some(texts), Some(labels)) = (&t.decisions, &t.labels) {
        for (level, text, outcome) in [
            ("logical", &texts.logical, &labels.logical),
            ("emotional", &texts.emotional, &labels.emotional),
            ("final", &texts.final_decision, &labels.final_decision),
        ] {
            say!(
                io.out,
                "  {level:<9} [{}] {text}",
                outcome.label.as_deref().unwrap_or("unclassified")
            );
        }
    }
    Ok(if t.labels.is_some() { 0 } else { 1 })
}

fn analyze(args: AnalyzeArgs, cfg: FileConfig, io: &mut Io, write_outputs: bool) -> Result<i32, Failure> {
    let out_dir = args.out.or_else(|| cfg.out.clone());
    let log_path = args
        .transcripts
        .or_else(|| cfg.transcripts.clone())
        .or_else(|| out_dir.as_ref().map(|d| d.join("transcripts.jsonl")))
        .ok_or_else(|| Failure::invalid("PlanError", "no transcript log given (--transcripts)"))?;
    let config = StatsConfig {
        alpha: args.alpha.or(cfg.alpha).unwrap_or(0.05),
        comparisons: args.comparisons.or(cfg.comparisons),
    };
    config.validate()?;
    let scenario_paths = if args.scenarios.is_empty() {
        cfg.scenarios.clone().unwrap_or_default()
    } else {
        args.scenarios
    };
    let scenarios: Vec<Scenario> = scenario_paths
        .iter()
        .map(|p| load_scenario(p))
        .collect::<Result<_, _>>()?;

    let transcripts = read_transcripts(&log_path)?;
    if transcripts.is_empty() {
        return Err(HarnessError::EmptyInput.into());
    }
    let mut ids: Vec<&str> = Vec::new();
    for t in &transcripts {
        if !ids.contains(&t.scenario_id.as_str()) {
            ids.push(&t.scenario_id);
        }
    }

    let mut reports: Vec<StatsReport> = Vec::new();
    let mut text = String::new();
    for id in ids {
        let scenario = scenarios.iter().find(|s| s.id == id).ok_or_else(|| {
            Failure::invalid("SchemaError", format!("no scenario file given for {id:?} (--scenarios)"))
        })?;
        let subset: Vec<Transcript> = transcripts.iter().filter(|t| t.scenario_id == id).cloned().collect();
        let table = assemble_table(&subset)?.with_coding(scenario);
        if !write_outputs {
            text.push_str(&table.render_text());
            text.push('\n');
        }
        for r in analyze_table(&table, &config)? {
            text.push_str(&r.render_text());
            reports.push(r);
        }
    }
    say!(io.out, "{}", text.trim_end());

    if write_outputs {
        let dir = out_dir.ok_or_else(|| Failure::invalid("PlanError", "analyze needs an output directory (--out)"))?;
        std::fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
        let mut json = serde_json::to_string_pretty(&reports).expect("reports serialize");
        json.push('\n');
        write_file(&dir.join("stats.json"), &json)?;
        write_file(&dir.join("stats.txt"), &text)?;
    }
    Ok(0)
}
