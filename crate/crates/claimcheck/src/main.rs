use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use claimcheck::config::{AppConfig, BackendKind};
use claimcheck::runner::{evaluate, load_policy, EvalOptions, Services};
use claimcheck_core::agent::ForcedReason;
use claimcheck_core::eval::{classify_error, load_dataset, ErrorClass, EvalReport};
use claimcheck_core::optimize::{optimize, LabeledClaim, OptimizationRun};
use claimcheck_core::{Label, Trajectory};
use clap::{Args, Parser, Subcommand};

/// Agentic claim verification over a knowledge graph and the web.
///
/// Exit codes: `check` 0 Supported, 1 Refuted; `replay` 0 valid, 1
/// invariant violations; every command 2 on errors, including a `check`
/// verdict forced by an unreachable backend.
#[derive(Debug, Parser)]
#[command(name = "claimcheck", version)]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify one claim and print the verdict, justification and citations.
    Check { claim: String },
    /// Run a labeled JSONL dataset and report balanced accuracy and error classes.
    Eval { dataset: PathBuf },
    /// Optimize the prompt policy on labeled claims (at least 150).
    Optimize { claims: PathBuf },
    /// Print and validate trajectories from a JSONL file.
    Replay { trajectories: PathBuf },
}

/// Flags override the config file, which overrides built-in defaults.
#[derive(Debug, Args)]
struct Flags {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// LLM backend.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendKind>,
    /// Script (scripted backend) or cassette (replay backend) file.
    #[arg(long, global = true)]
    cassette: Option<PathBuf>,
    /// Record live LLM interactions to this cassette file.
    #[arg(long, global = true)]
    record: Option<PathBuf>,
    /// Knowledge graph: a fixture JSON path or a SPARQL endpoint URL.
    #[arg(long, global = true)]
    kg: Option<String>,
    /// Web search: a fixture JSON path, a provider URL, or `live`.
    #[arg(long, global = true)]
    web: Option<String>,
    /// Prompt policy JSON to start from.
    #[arg(long, global = true)]
    policy: Option<PathBuf>,
    /// Beam width.
    #[arg(long, global = true)]
    k: Option<u32>,
    /// Maximum knowledge-graph hops.
    #[arg(long, global = true)]
    n_hops: Option<u32>,
    /// Retrieval actions before a verdict is forced.
    #[arg(long, global = true)]
    max_steps: Option<u32>,
    /// Web searches allowed per episode.
    #[arg(long, global = true)]
    max_web_searches: Option<u32>,
    /// Seed for the train/validation split.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Episodes run concurrently by `eval`.
    #[arg(long, global = true)]
    parallel: Option<usize>,
    /// Let `eval` use the dataset's gold evidence documents instead of web search.
    #[arg(long, global = true)]
    use_gold_evidence: bool,
    /// Optimization epochs.
    #[arg(long, global = true)]
    epochs: Option<u32>,
    /// Output file: trajectory (check), report (eval, optimize).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write every trajectory of `eval` to this JSONL file.
    #[arg(long, global = true)]
    trajectories_out: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}

impl Flags {
    fn config(&self) -> Result<AppConfig> {
        let mut c = match &self.config {
            Some(path) => AppConfig::load(path)?,
            None => AppConfig::default(),
        };
        if let Some(b) = self.backend {
            c.llm.backend = b;
        }
        if let Some(p) = &self.cassette {
            c.llm.cassette = Some(p.clone());
        }
        if let Some(p) = &self.record {
            c.llm.record = Some(p.clone());
        }
        if let Some(kg) = &self.kg {
            if is_url(kg) {
                c.kg.fixture = None;
                c.kg.sparql_endpoint = kg.clone();
            } else {
                c.kg.fixture = Some(kg.into());
            }
        }
        if let Some(web) = &self.web {
            if web == "live" {
                c.web.fixture = None;
            } else if is_url(web) {
                c.web.fixture = None;
                c.web.endpoint = web.clone();
            } else {
                c.web.fixture = Some(web.into());
            }
        }
        if let Some(p) = &self.policy {
            c.policy = Some(p.clone());
        }
        let e = &mut c.episode;
        if let Some(k) = self.k {
            e.k = k;
        }
        if let Some(n) = self.n_hops {
            e.n_hops = n;
        }
        if let Some(m) = self.max_steps {
            e.max_steps = m;
        }
        if let Some(w) = self.max_web_searches {
            e.max_web_searches = w;
        }
        if let Some(s) = self.seed {
            c.optimize.seed = s;
        }
        if let Some(p) = self.parallel {
            c.parallel = p;
        }
        if self.use_gold_evidence {
            c.use_gold_evidence = true;
        }
        if let Some(n) = self.epochs {
            c.optimize.epochs = n;
        }
        c.validate()?;
        Ok(c)
    }

    /// `--out`, else `name` inside the configured reports directory.
    fn report_path(&self, config: &AppConfig, name: &str) -> Option<PathBuf> {
        self.out
            .clone()
            .or_else(|| config.reports_dir.as_ref().map(|d| d.join(name)))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn print_counters(out: &mut impl Write, t: &Trajectory) -> io::Result<()> {
    let c = &t.counters;
    writeln!(
        out,
        "counters: llm_calls={} bounded_llm_calls={} sparql_queries={} web_searches={} retries={}",
        c.llm_calls, c.bounded_llm_calls, c.sparql_queries, c.web_searches, c.retries
    )
}

fn cmd_check(flags: &Flags, claim: &str) -> Result<ExitCode> {
    let config = flags.config()?;
    let services = Services::from_config(&config)?;
    let policy = load_policy(&config)?;
    let t = services.run_claim(claim, &policy, &config.episode)?;
    services.finish()?;
    let v = t.verdict.as_ref().context("episode ended without a verdict")?;
    let mut out = io::stdout().lock();
    writeln!(out, "{}", v.label)?;
    writeln!(out, "justification: {}", v.justification)?;
    if let Some(reason) = v.forced_reason {
        writeln!(out, "forced: {reason:?}")?;
    }
    writeln!(out, "citations:")?;
    for c in &v.citations {
        writeln!(out, "  - {c}")?;
    }
    print_counters(&mut out, &t)?;
    for w in &t.warnings {
        log::warn!("{w}");
    }
    if let Some(path) = &flags.out {
        write_file(path, &format!("{}\n", t.to_json()))?;
    }
    if v.forced_reason == Some(ForcedReason::Transport) {
        let cause = t.warnings.last().map_or("a backend failed", String::as_str);
        bail!("no reliable verdict: {cause}");
    }
    Ok(match v.label {
        Label::Supported => ExitCode::SUCCESS,
        Label::Refuted => ExitCode::from(1),
    })
}

fn print_report(out: &mut impl Write, r: &EvalReport) -> io::Result<()> {
    match r.balanced_accuracy {
        Some(ba) => writeln!(out, "balanced accuracy: {ba:.4}")?,
        None => writeln!(
            out,
            "balanced accuracy: n/a ({})",
            r.note.as_deref().unwrap_or("undefined")
        )?,
    }
    for (label, recall) in &r.per_class_recall {
        writeln!(out, "  recall {label}: {recall:.4}")?;
    }
    writeln!(
        out,
        "records: {} evaluated: {} incorrect: {} forced: {}",
        r.n, r.evaluated, r.incorrect, r.forced_verdicts
    )?;
    writeln!(out, "error class        count")?;
    for class in ErrorClass::ALL {
        writeln!(
            out,
            "  {:<16} {}",
            format!("{class:?}"),
            r.error_counts.get(&class).copied().unwrap_or(0)
        )?;
    }
    let m = &r.mean_counters;
    writeln!(
        out,
        "mean counters: llm_calls={:.2} bounded_llm_calls={:.2} sparql_queries={:.2} web_searches={:.2}",
        m.llm_calls, m.bounded_llm_calls, m.sparql_queries, m.web_searches
    )?;
    for (id, e) in &r.errors {
        writeln!(out, "  failed {id}: {e}")?;
    }
    Ok(())
}

fn read_dataset(path: &Path, config: &AppConfig) -> Result<claimcheck_core::eval::Dataset> {
    let text = fs::read_to_string(path).with_context(|| format!("reading dataset {}", path.display()))?;
    let dataset =
        load_dataset(&text, &config.dataset).with_context(|| format!("loading dataset {}", path.display()))?;
    if dataset.dropped > 0 {
        log::info!("dropped {} records without verifiable evidence", dataset.dropped);
    }
    Ok(dataset)
}

fn cmd_eval(flags: &Flags, path: &Path) -> Result<ExitCode> {
    let config = flags.config()?;
    let dataset = read_dataset(path, &config)?;
    let services = Services::from_config(&config)?;
    let policy = load_policy(&config)?;
    let options = EvalOptions {
        parallel: config.parallel,
        use_gold_evidence: config.use_gold_evidence,
    };
    let e = evaluate(&services, &dataset.records, &policy, &config.episode, options)?;
    services.finish()?;
    for w in &e.warnings {
        eprintln!("warning: {w}");
    }
    print_report(&mut io::stdout().lock(), &e.report)?;
    if let Some(path) = flags.report_path(&config, "eval-report.json") {
        write_file(&path, &(serde_json::to_string_pretty(&e.report)? + "\n"))?;
    }
    if let Some(path) = &flags.trajectories_out {
        let lines: String = e.trajectories.iter().flatten().map(|t| t.to_json() + "\n").collect();
        write_file(path, &lines)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_optimize(flags: &Flags, path: &Path) -> Result<ExitCode> {
    let config = flags.config()?;
    let dataset = read_dataset(path, &config)?;
    let claims: Vec<LabeledClaim> = dataset
        .records
        .iter()
        .map(|r| LabeledClaim {
            id: r.id.clone(),
            claim: r.claim.clone(),
            label: r.gold_label,
        })
        .collect();
    let services = Services::from_config(&config)?;
    let initial = load_policy(&config)?;
    let runner =
        |claim: &str, policy: &claimcheck_core::PromptPolicy| services.run_claim(claim, policy, &config.episode);
    let run: OptimizationRun = optimize(&initial, &claims, &config.optimize, &runner, &*services.llm)?;
    services.finish()?;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "initial policy {}: validation reward {:.4}",
        run.initial_policy, run.initial_val.mean_reward
    )?;
    for e in &run.history {
        let val = e
            .val
            .as_ref()
            .map_or_else(|| "-".to_string(), |v| format!("{:.4}", v.mean_reward));
        writeln!(
            out,
            "epoch {:>2}: train reward {:.4} candidate validation {val} {}{}",
            e.epoch,
            e.train.mean_reward,
            if e.accepted { "accepted" } else { "rejected" },
            e.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default()
        )?;
    }
    writeln!(
        out,
        "selected policy {}: validation reward {:.4}",
        run.selected_policy, run.selected_val.mean_reward
    )?;
    if let Some(path) = flags.report_path(&config, "optimization-run.json") {
        write_file(&path, &(serde_json::to_string_pretty(&run)? + "\n"))?;
        let policy_path = path.with_extension("policy.json");
        write_file(&policy_path, &(serde_json::to_string_pretty(&run.selected)? + "\n"))?;
        writeln!(out, "wrote {} and {}", path.display(), policy_path.display())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(path: &Path) -> Result<ExitCode> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut trajectories = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let t: Trajectory =
            serde_json::from_str(line).with_context(|| format!("{}:{}: not a trajectory", path.display(), i + 1))?;
        trajectories.push(t);
    }
    if trajectories.is_empty() {
        bail!("{} contains no trajectories", path.display());
    }
    let mut out = io::stdout().lock();
    let mut violations = 0;
    for (n, t) in trajectories.iter().enumerate() {
        writeln!(out, "episode {}: {}", n + 1, t.claim)?;
        writeln!(
            out,
            "  {:>2}  {:<9} {:>9} {:>11} {:>8}  {:<10} note",
            "#", "action", "triplets", "annotations", "passages", "assessment"
        )?;
        for (i, s) in t.steps.iter().enumerate() {
            let o = &s.observation;
            writeln!(
                out,
                "  {:>2}  {:<9} {:>9} {:>11} {:>8}  {:<10} {}",
                i,
                s.action.kind.prompt_name(),
                o.added_triplets,
                o.added_annotations,
                o.added_passages,
                o.sufficiency_hint.as_str(),
                o.note.as_deref().unwrap_or("")
            )?;
        }
        if let Some(v) = &t.verdict {
            writeln!(
                out,
                "  verdict: {}{} - {}",
                v.label,
                if v.forced { " (forced)" } else { "" },
                v.justification
            )?;
        }
        print_counters(&mut out, t)?;
        let flags = classify_error(t, false);
        writeln!(out, "  error classes if wrong: {flags:?}")?;
        let found = t.violations();
        if found.is_empty() {
            writeln!(out, "  invariants: ok")?;
        }
        for v in &found {
            writeln!(out, "  VIOLATION: {v}")?;
        }
        violations += found.len();
    }
    Ok(if violations == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.flags.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    let result = match &cli.command {
        Command::Check { claim } => cmd_check(&cli.flags, claim),
        Command::Eval { dataset } => cmd_eval(&cli.flags, dataset),
        Command::Optimize { claims } => cmd_optimize(&cli.flags, claims),
        Command::Replay { trajectories } => cmd_replay(trajectories),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
