use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::LevelFilter;

use pddlkit::config::{Backend, PipelineConfig, Stage};
use pddlkit::pipeline::{self, RunReport, StageStatus};
use pddlkit::render::{render_all, Sources};
use pddlkit::review::{ScriptedGate, TerminalGate};
use pddlkit_core::builder::feedback::{FeedbackMode, ReviewGate};
use pddlkit_core::diagnostics::{
    check_all, check_domain, promote_warnings, resolve_lines, Diagnostic, FileKind,
};
use pddlkit_core::engine::{
    operational_equivalence, parse_plan, solve, validate_plan, SamplerConfig, SearchLimits,
    Strategy, VocabularyMap,
};
use pddlkit_core::pddl::{
    format_domain, format_problem, parse_domain_with_spans, parse_problem_with_spans, Domain,
    ParseError, Problem, SourceMap,
};

#[derive(Parser)]
#[command(
    name = "pddlkit",
    version,
    about = "Build, check and solve PDDL models"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a domain or problem file and print it as JSON.
    Parse { file: PathBuf },
    /// Print a domain or problem file in canonical form.
    Fmt {
        file: PathBuf,
        /// Exit 1 if the file is not already canonical.
        #[arg(long)]
        check: bool,
    },
    /// Report diagnostics for a domain and, optionally, a problem.
    Check {
        domain: PathBuf,
        problem: Option<PathBuf>,
        #[arg(long)]
        deny_warnings: bool,
        #[arg(long)]
        json: bool,
    },
    /// Search for a plan.
    Plan {
        domain: PathBuf,
        problem: PathBuf,
        #[arg(long, value_enum, default_value_t = StrategyArg::Bfs)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 1_000_000)]
        max_expansions: usize,
    },
    /// Simulate a plan file and check that it reaches the goal.
    ValidatePlan {
        domain: PathBuf,
        problem: PathBuf,
        plan: PathBuf,
    },
    /// Compare two domains by seeded random walks on one problem.
    Compare {
        a: PathBuf,
        b: PathBuf,
        problem: PathBuf,
        /// JSON file with `predicates` and `actions` renaming maps.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        walks: usize,
        #[arg(long, default_value_t = 20)]
        max_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the pipeline up to and including domain construction.
    BuildDomain(RunArgs),
    /// Run the pipeline up to and including task construction.
    BuildTask(RunArgs),
    /// Run the pipeline up to and including the critique stage.
    Feedback(RunArgs),
    /// Run every configured stage.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Bfs,
    Gbfs,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Bfs => Strategy::Bfs,
            StrategyArg::Gbfs => Strategy::GoalCount,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding `paths.output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep running stages after one fails.
    #[arg(long)]
    keep_going: bool,
    /// Reviewer answers file, overriding `feedback.script`.
    #[arg(long)]
    answers: Option<PathBuf>,
}

/// Exit status for bad input files, configuration or usage.
const USAGE: u8 = 2;

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: USAGE,
        message: message.into(),
    }
}

fn failed(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Parse { file } => parse(&file),
        Command::Fmt { file, check } => fmt(&file, check),
        Command::Check {
            domain,
            problem,
            deny_warnings,
            json,
        } => check(&domain, problem.as_deref(), deny_warnings, json),
        Command::Plan {
            domain,
            problem,
            strategy,
            max_expansions,
        } => plan(&domain, &problem, strategy.into(), max_expansions),
        Command::ValidatePlan {
            domain,
            problem,
            plan,
        } => validate(&domain, &problem, &plan),
        Command::Compare {
            a,
            b,
            problem,
            map,
            walks,
            max_len,
            seed,
        } => compare(&a, &b, &problem, map.as_deref(), walks, max_len, seed),
        Command::BuildDomain(args) => run(args, Some(Stage::BuildDomain)),
        Command::BuildTask(args) => run(args, Some(Stage::BuildTask)),
        Command::Feedback(args) => run(args, Some(Stage::Feedback)),
        Command::Run(args) => run(args, None),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_error(path: &Path, e: ParseError) -> Failure {
    let (line, col) = e.position();
    failed(format!("{}:{line}:{col}: {e}", path.display()))
}

enum Model {
    Domain(Domain),
    Problem(Problem),
}

/// Files mentioning `(problem` are read as problems, anything else as a domain.
fn load(path: &Path) -> Result<Model, Failure> {
    let text = read(path)?;
    let is_problem = text
        .lines()
        .filter(|l| !l.trim_start().starts_with(';'))
        .any(|l| l.contains("(problem"));
    if is_problem {
        parse_problem_with_spans(&text)
            .map(|(p, _)| Model::Problem(p))
            .map_err(|e| parse_error(path, e))
    } else {
        parse_domain_with_spans(&text)
            .map(|(d, _)| Model::Domain(d))
            .map_err(|e| parse_error(path, e))
    }
}

fn load_domain(path: &Path) -> Result<(Domain, SourceMap), Failure> {
    parse_domain_with_spans(&read(path)?).map_err(|e| parse_error(path, e))
}

fn load_problem(path: &Path) -> Result<(Problem, SourceMap), Failure> {
    parse_problem_with_spans(&read(path)?).map_err(|e| parse_error(path, e))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("value serializes")
}

fn parse(path: &Path) -> Result<u8, Failure> {
    match load(path)? {
        Model::Domain(d) => println!("{}", json(&d)),
        Model::Problem(p) => println!("{}", json(&p)),
    }
    Ok(0)
}

fn fmt(path: &Path, check: bool) -> Result<u8, Failure> {
    let text = match load(path)? {
        Model::Domain(d) => format_domain(&d),
        Model::Problem(p) => format_problem(&p),
    };
    if check {
        return Ok(if read(path)? == text { 0 } else { 1 });
    }
    print!("{text}");
    Ok(0)
}

fn check(
    domain: &Path,
    problem: Option<&Path>,
    deny_warnings: bool,
    as_json: bool,
) -> Result<u8, Failure> {
    let (d, dmap) = load_domain(domain)?;
    let mut diags: Vec<Diagnostic> = match problem {
        Some(pp) => {
            let (p, pmap) = load_problem(pp)?;
            let mut v = check_all(&d, &p);
            resolve_lines(&mut v, FileKind::Problem, &pmap);
            v
        }
        None => check_domain(&d),
    };
    resolve_lines(&mut diags, FileKind::Domain, &dmap);
    if deny_warnings {
        promote_warnings(&mut diags);
    }
    if as_json {
        println!("{}", json(&diags));
    } else {
        let sources = Sources {
            domain: Some(domain),
            problem,
        };
        print!("{}", render_all(&diags, sources));
    }
    Ok(if diags.iter().any(Diagnostic::is_error) {
        1
    } else {
        0
    })
}

fn plan(
    domain: &Path,
    problem: &Path,
    strategy: Strategy,
    max_expansions: usize,
) -> Result<u8, Failure> {
    let (d, _) = load_domain(domain)?;
    let (p, _) = load_problem(problem)?;
    let limits = SearchLimits {
        strategy,
        max_expansions: Some(max_expansions),
    };
    let plan = solve(&d, &p, limits).map_err(|e| failed(e.to_string()))?;
    print!("{}", plan.to_text());
    Ok(0)
}

fn validate(domain: &Path, problem: &Path, plan: &Path) -> Result<u8, Failure> {
    let (d, _) = load_domain(domain)?;
    let (p, _) = load_problem(problem)?;
    let steps = parse_plan(&read(plan)?).map_err(|e| failed(format!("{}: {e}", plan.display())))?;
    let report = validate_plan(&d, &p, &steps);
    println!("{}", json(&report));
    Ok(if report.is_valid() { 0 } else { 1 })
}

fn compare(
    a: &Path,
    b: &Path,
    problem: &Path,
    map: Option<&Path>,
    walks: usize,
    max_len: usize,
    seed: u64,
) -> Result<u8, Failure> {
    let (da, _) = load_domain(a)?;
    let (db, _) = load_domain(b)?;
    let (p, _) = load_problem(problem)?;
    let map: VocabularyMap = match map {
        Some(m) => {
            serde_json::from_str(&read(m)?).map_err(|e| usage(format!("{}: {e}", m.display())))?
        }
        None => VocabularyMap::default(),
    };
    let sampler = SamplerConfig {
        n_walks: walks,
        max_len,
        seed,
        check_goal: true,
    };
    let report =
        operational_equivalence(&da, &db, &p, &map, &sampler).map_err(|e| failed(e.to_string()))?;
    println!("{}", json(&report));
    Ok(if report.agrees() { 0 } else { 1 })
}

fn run(args: RunArgs, upto: Option<Stage>) -> Result<u8, Failure> {
    let mut cfg = PipelineConfig::load(&args.config).map_err(|e| usage(e.to_string()))?;
    if let Some(b) = args.backend {
        cfg.backend = b;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.paths.output = o;
    }
    if let Some(a) = args.answers {
        cfg.feedback.script = Some(a);
    }
    if let Some(last) = upto {
        if !cfg.has(last) {
            return Err(usage(format!(
                "stage `{last}` is not listed in {}",
                args.config.display()
            )));
        }
        cfg.stages.retain(|s| *s <= last);
    }
    let mut scripted;
    let mut terminal;
    let gate: Option<&mut dyn ReviewGate> =
        if cfg.has(Stage::Feedback) && cfg.feedback.mode != FeedbackMode::Llm {
            match &cfg.feedback.script {
                Some(path) => {
                    scripted = ScriptedGate::load(path)
                        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
                    Some(&mut scripted)
                }
                None => {
                    terminal = TerminalGate::stdio();
                    Some(&mut terminal)
                }
            }
        } else {
            None
        };
    let report = pipeline::run(&cfg, args.keep_going, gate).map_err(|e| usage(e.to_string()))?;
    summarize(&report, &cfg.paths.output);
    Ok(report.exit_code() as u8)
}

fn summarize(report: &RunReport, out: &Path) {
    for s in &report.stages {
        let (tag, detail) = match &s.status {
            StageStatus::Ok => ("ok", String::new()),
            StageStatus::Failed { reason } => ("FAILED", format!(": {reason}")),
            StageStatus::Skipped { reason } => ("skipped", format!(": {reason}")),
        };
        println!("{:<13} {tag}{detail}", s.stage.as_str());
        if !s.diagnostics.is_empty() {
            print!("{}", render_all(&s.diagnostics, Sources::default()));
        }
    }
    println!("artifacts in {}", out.display());
}
