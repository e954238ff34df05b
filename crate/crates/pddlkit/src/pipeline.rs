//! Staged end-to-end runs: NL descriptions to domain, task, checks, plan and
//! critique, each stage leaving plain files in the output directory.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::thread;

use log::info;
use serde::{Deserialize, Serialize};

use pddlkit_core::builder::domain::{
    assemble_domain, build_domain_action_by_action, infer_requirements, AbaOutcome, DomainContext,
    NLActionModel, TypeEntry, TypeHierarchy,
};
use pddlkit_core::builder::feedback::{
    domain_feedback, refine_until_accepted, task_feedback, RefineError, ReviewGate, Round,
    TaskReview,
};
use pddlkit_core::builder::task::{extract_task, TaskTriple};
use pddlkit_core::builder::BuildError;
use pddlkit_core::diagnostics::{
    check_all, has_errors, promote_warnings, resolve_lines, Diagnostic, FileKind,
};
use pddlkit_core::engine::{solve, validate_plan, SearchLimits, ValidationReport};
use pddlkit_core::llm::{LlmError, PromptTemplate, ReplayModel};
use pddlkit_core::pddl::{
    format_domain, parse_domain_with_spans, parse_problem_with_spans, Domain, Problem,
};

use crate::config::{Backend, ConfigError, FeedbackTarget, PipelineConfig, Stage};
use crate::gateway::{load_fixture_dir, FixtureError, Gateway, Ledger, LiveModel};
use crate::render::{render_all, Sources};

pub const LEDGER: &str = "ledger.jsonl";
pub const REPORT: &str = "report.json";

/// Failures before any stage runs. The CLI maps these to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum SetupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("cannot prepare output directory {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Failed { reason: String },
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    #[serde(flatten)]
    pub status: StageStatus,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub backend: Backend,
    pub seed: u64,
    pub stages: Vec<StageReport>,
    /// Every file the run wrote, this report included.
    pub artifacts: Vec<String>,
    pub ledger: Option<String>,
    pub tokens_used: u64,
}

impl RunReport {
    pub fn success(&self) -> bool {
        self.stages.iter().all(|s| s.status == StageStatus::Ok)
    }

    pub fn exit_code(&self) -> i32 {
        if self.success() {
            0
        } else {
            1
        }
    }
}

/// Opens the configured backend with the run's budget and a ledger in
/// `out`. Fixture runs record no timestamps.
pub fn open_gateway(cfg: &PipelineConfig, out: &Path) -> Result<Gateway, SetupError> {
    let gateway = match cfg.backend {
        Backend::Fixture => match &cfg.paths.fixtures {
            Some(dir) => Gateway::new(load_fixture_dir(dir)?),
            None => Gateway::new(ReplayModel::new()),
        },
        Backend::Live => {
            let mut llm = cfg.llm.config.clone();
            llm.api_key_env = cfg.llm.key_var().to_string();
            Gateway::new(LiveModel::from_env(llm)?)
        }
    };
    let ledger =
        Ledger::create(&out.join(LEDGER), cfg.backend == Backend::Live).map_err(|source| {
            SetupError::Output {
                path: out.to_path_buf(),
                source,
            }
        })?;
    Ok(gateway
        .with_budget(cfg.limits.token_budget)
        .with_ledger(ledger))
}

struct Loaded<T> {
    value: T,
    text: String,
    path: PathBuf,
}

#[derive(Default)]
struct State {
    domain: Option<Loaded<Domain>>,
    problem: Option<Loaded<Problem>>,
}

type Outcome = Result<StageReport, String>;

struct Run<'a> {
    cfg: &'a PipelineConfig,
    llm: &'a Gateway,
    out: PathBuf,
    state: State,
    written: Vec<String>,
}

fn read(path: &Option<PathBuf>, what: &str) -> Result<String, String> {
    let p = path
        .as_ref()
        .ok_or_else(|| format!("paths.{what} is not set"))?;
    fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))
}

fn build_error(e: BuildError) -> String {
    e.to_string()
}

impl<'a> Run<'a> {
    fn write(&mut self, name: &str, text: &str) -> Result<String, String> {
        let path = self.out.join(name);
        fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(name.to_string())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<String, String> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
        text.push('\n');
        self.write(name, &text)
    }

    fn template(&self, name: &str) -> Result<PromptTemplate, String> {
        let dir = self
            .cfg
            .paths
            .templates
            .as_ref()
            .ok_or("paths.templates is not set")?;
        let path = dir.join(format!("{name}.txt"));
        let body = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        PromptTemplate::new(body).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn types(&self) -> Result<TypeHierarchy, String> {
        if self.cfg.paths.hierarchy.is_some() {
            let text = read(&self.cfg.paths.hierarchy, "hierarchy")?;
            return serde_json::from_str(&text).map_err(|e| format!("hierarchy: {e}"));
        }
        let d = self.domain()?;
        Ok(TypeHierarchy(
            d.value
                .types
                .iter()
                .map(|t| TypeEntry {
                    name: t.name.clone(),
                    parent: t.parent.clone(),
                    description: String::new(),
                })
                .collect(),
        ))
    }

    fn domain(&self) -> Result<&Loaded<Domain>, String> {
        self.state
            .domain
            .as_ref()
            .ok_or_else(|| "no domain available".to_string())
    }

    fn problem(&self) -> Result<&Loaded<Problem>, String> {
        self.state
            .problem
            .as_ref()
            .ok_or_else(|| "no problem available".to_string())
    }

    fn load_inputs(&mut self) -> Result<(), String> {
        if let Some(p) = self.cfg.paths.domain.clone() {
            if !self.cfg.has(Stage::BuildDomain) {
                let text = fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?;
                let (value, _) =
                    parse_domain_with_spans(&text).map_err(|e| format!("{}: {e}", p.display()))?;
                self.state.domain = Some(Loaded {
                    value,
                    text,
                    path: p,
                });
            }
        }
        if let Some(p) = self.cfg.paths.problem.clone() {
            if !self.cfg.has(Stage::BuildTask) {
                let text = fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?;
                let (value, _) =
                    parse_problem_with_spans(&text).map_err(|e| format!("{}: {e}", p.display()))?;
                self.state.problem = Some(Loaded {
                    value,
                    text,
                    path: p,
                });
            }
        }
        Ok(())
    }

    fn finish(
        &self,
        stage: Stage,
        mut diagnostics: Vec<Diagnostic>,
        artifacts: Vec<String>,
        warnings: Vec<String>,
    ) -> StageReport {
        if self.cfg.deny_warnings {
            promote_warnings(&mut diagnostics);
        }
        let status = if has_errors(&diagnostics) {
            let n = diagnostics.iter().filter(|d| d.is_error()).count();
            StageStatus::Failed {
                reason: format!("{n} error diagnostic(s)"),
            }
        } else {
            StageStatus::Ok
        };
        StageReport {
            stage,
            status,
            artifacts,
            diagnostics,
            warnings,
        }
    }

    fn build_domain(&mut self) -> Outcome {
        let desc = read(&self.cfg.paths.domain_desc, "domain_desc")?;
        let model: NLActionModel =
            serde_json::from_str(&read(&self.cfg.paths.action_model, "action_model")?)
                .map_err(|e| format!("action_model: {e}"))?;
        let types = self.types()?;
        let template = self.template("extract_action")?;
        let ctx = DomainContext {
            domain_desc: &desc,
            types: &types,
        };
        let k = self.cfg.limits.candidates;
        let prefix = self.cfg.name.as_str();
        let max_iter = self.cfg.limits.max_iter;
        let llm = self.llm;
        let builds: Vec<Result<AbaOutcome, BuildError>> = if k == 1 {
            vec![build_domain_action_by_action(
                llm, prefix, &model, &ctx, &template, max_iter,
            )]
        } else {
            thread::scope(|s| {
                let hs: Vec<_> = (0..k)
                    .map(|_| {
                        s.spawn(|| {
                            build_domain_action_by_action(
                                llm, prefix, &model, &ctx, &template, max_iter,
                            )
                        })
                    })
                    .collect();
                hs.into_iter()
                    .map(|h| h.join().expect("build thread panicked"))
                    .collect()
            })
        };
        let mut artifacts = Vec::new();
        let mut chosen: Option<(Domain, Vec<Diagnostic>, BuildSummary)> = None;
        for (i, b) in builds.into_iter().enumerate() {
            let b = b.map_err(build_error)?;
            let reqs = infer_requirements(&types, &b.actions);
            let summary = BuildSummary::new(&b);
            let assembled = assemble_domain(
                self.cfg.domain_name(),
                reqs,
                &types,
                b.predicates,
                b.actions,
            )
            .map_err(build_error)?;
            if k > 1 {
                artifacts.push(self.write(
                    &format!("domain.candidate{}.pddl", i + 1),
                    &format_domain(&assembled.domain),
                )?);
            }
            let replace = match &chosen {
                None => true,
                Some((_, diags, _)) => has_errors(diags) && !has_errors(&assembled.diagnostics),
            };
            if replace {
                chosen = Some((assembled.domain, assembled.diagnostics, summary));
            }
        }
        let (domain, diagnostics, summary) = chosen.ok_or("no candidate was built")?;
        let text = format_domain(&domain);
        artifacts.insert(0, self.write("domain.pddl", &text)?);
        let warnings = summary.warnings.clone();
        artifacts.push(self.write_json("build-domain.json", &summary)?);
        self.state.domain = Some(Loaded {
            value: domain,
            text,
            path: self.out.join("domain.pddl"),
        });
        Ok(self.finish(Stage::BuildDomain, diagnostics, artifacts, warnings))
    }

    fn build_task(&mut self) -> Outcome {
        let desc = read(&self.cfg.paths.problem_desc, "problem_desc")?;
        let types = self.types()?;
        let template = self.template("extract_task")?;
        let key = format!("{}/task", self.cfg.name);
        let preds = self.domain()?.value.predicates.clone();
        let out =
            extract_task(self.llm, &key, &desc, &template, &types, &preds).map_err(build_error)?;
        let text = out
            .task
            .generate(self.cfg.domain_name(), &self.cfg.problem_name());
        let artifact = self.write("problem.pddl", &text)?;
        let (value, _) = parse_problem_with_spans(&text)
            .map_err(|e| format!("generated problem does not parse: {e}"))?;
        self.state.problem = Some(Loaded {
            value,
            text,
            path: self.out.join("problem.pddl"),
        });
        Ok(self.finish(
            Stage::BuildTask,
            out.diagnostics,
            vec![artifact],
            out.warnings,
        ))
    }

    fn validate(&mut self) -> Outcome {
        let d = self.domain()?;
        let p = self.problem()?;
        let (_, dmap) = parse_domain_with_spans(&d.text).map_err(|e| e.to_string())?;
        let (_, pmap) = parse_problem_with_spans(&p.text).map_err(|e| e.to_string())?;
        let mut diags = check_all(&d.value, &p.value);
        resolve_lines(&mut diags, FileKind::Domain, &dmap);
        resolve_lines(&mut diags, FileKind::Problem, &pmap);
        if self.cfg.deny_warnings {
            promote_warnings(&mut diags);
        }
        let sources = Sources {
            domain: Some(Path::new(file_name(&d.path))),
            problem: Some(Path::new(file_name(&p.path))),
        };
        let rendered = render_all(&diags, sources);
        let a = self.write("validate.txt", &rendered)?;
        let b = self.write_json("validate.json", &diags)?;
        Ok(self.finish(Stage::Validate, diags, vec![a, b], vec![]))
    }

    fn plan(&mut self) -> Outcome {
        let d = &self.domain()?.value;
        let p = &self.problem()?.value;
        let limits = SearchLimits {
            strategy: self.cfg.strategy,
            max_expansions: self.cfg.limits.max_expansions,
        };
        let mut plan = solve(d, p, limits).map_err(|e| e.to_string())?;
        plan.provenance.seed = Some(self.cfg.seed);
        let check = validate_plan(d, p, &plan.steps);
        let text = plan.to_text();
        let artifact = self.write("plan.txt", &text)?;
        match check {
            ValidationReport::Valid { .. } => {
                Ok(self.finish(Stage::Plan, vec![], vec![artifact], vec![]))
            }
            other => Err(format!("planner output failed validation: {other:?}")),
        }
    }

    fn feedback(&mut self, gate: Option<&mut dyn ReviewGate>) -> Outcome {
        match self.cfg.feedback.target {
            FeedbackTarget::Task => self.task_feedback(gate),
            FeedbackTarget::Domain => self.domain_feedback(gate),
        }
    }

    fn task_feedback(&mut self, mut gate: Option<&mut dyn ReviewGate>) -> Outcome {
        let desc = read(&self.cfg.paths.problem_desc, "problem_desc")?;
        let types = self.types()?;
        let template = self.template("task_feedback")?;
        let preds = self.domain()?.value.predicates.clone();
        let start = TaskTriple::from_problem(&self.problem()?.value);
        let ctx = TaskReview {
            problem_desc: &desc,
            types: &types,
            predicates: &preds,
        };
        let (mode, name, llm) = (self.cfg.feedback.mode, self.cfg.name.clone(), self.llm);
        let result = refine_until_accepted(
            || Ok(start.clone()),
            |m, round| {
                let key = format!("{name}/task_feedback/round{round}");
                task_feedback(llm, &key, &template, mode, &ctx, m, reborrow(&mut gate))
                    .map_err(|e| e.to_string())
            },
            self.cfg.limits.max_rounds,
        );
        let (model, transcript, failure) = refine_parts(result)?;
        let text = model.generate(self.cfg.domain_name(), &self.cfg.problem_name());
        let a = self.write("problem.revised.pddl", &text)?;
        let b = self.write_json("feedback.json", &transcript)?;
        self.stage_from_rounds(transcript, vec![a, b], failure)
    }

    fn domain_feedback(&mut self, mut gate: Option<&mut dyn ReviewGate>) -> Outcome {
        let desc = read(&self.cfg.paths.domain_desc, "domain_desc")?;
        let template = self.template("domain_feedback")?;
        let start = self.domain()?.value.clone();
        let (mode, name, llm) = (self.cfg.feedback.mode, self.cfg.name.clone(), self.llm);
        let result = refine_until_accepted(
            || Ok(start.clone()),
            |m, round| {
                let key = format!("{name}/domain_feedback/round{round}");
                domain_feedback(llm, &key, &desc, &template, mode, m, reborrow(&mut gate))
                    .map_err(|e| e.to_string())
            },
            self.cfg.limits.max_rounds,
        );
        let (model, transcript, failure) = refine_parts(result)?;
        let a = self.write("domain.revised.pddl", &format_domain(&model))?;
        let b = self.write_json("feedback.json", &transcript)?;
        self.stage_from_rounds(transcript, vec![a, b], failure)
    }

    fn stage_from_rounds(
        &self,
        transcript: Vec<Round>,
        artifacts: Vec<String>,
        failure: Option<String>,
    ) -> Outcome {
        let last = transcript.last().map(|r| r.report.clone());
        let (diags, warnings) = last.map_or((vec![], vec![]), |r| (r.diagnostics, r.warnings));
        let mut report = self.finish(Stage::Feedback, diags, artifacts, warnings);
        if let Some(reason) = failure {
            report.status = StageStatus::Failed { reason };
        }
        Ok(report)
    }
}

fn refine_parts<M>(
    r: Result<pddlkit_core::builder::feedback::Refined<M>, RefineError<M, String>>,
) -> Result<(M, Vec<Round>, Option<String>), String> {
    match r {
        Ok(done) => Ok((done.model, done.transcript, None)),
        Err(RefineError::RoundsExhausted {
            rounds,
            last,
            transcript,
            ..
        }) => Ok((
            last,
            transcript,
            Some(format!("no acceptance after {rounds} round(s)")),
        )),
        Err(e) => Err(e.to_string()),
    }
}

fn reborrow<'s>(g: &'s mut Option<&mut dyn ReviewGate>) -> Option<&'s mut dyn ReviewGate> {
    match g {
        Some(g) => Some(&mut **g),
        None => None,
    }
}

fn file_name(p: &Path) -> &str {
    p.file_name().and_then(|n| n.to_str()).unwrap_or("?")
}

/// What each sweep produced, for `build-domain.json`.
#[derive(Clone, Debug, Serialize)]
struct BuildSummary {
    sweeps: Vec<SweepSummary>,
    warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
struct SweepSummary {
    candidates: usize,
    predicates: Vec<String>,
    actions: Vec<String>,
}

impl BuildSummary {
    fn new(b: &AbaOutcome) -> Self {
        BuildSummary {
            sweeps: b
                .sweeps
                .iter()
                .map(|s| SweepSummary {
                    candidates: s.candidates,
                    predicates: s.predicates.iter().map(|p| p.clean.clone()).collect(),
                    actions: s.actions.iter().map(|a| a.name.clone()).collect(),
                })
                .collect(),
            warnings: b.warnings.clone(),
        }
    }
}

/// Runs the configured stages in order. After a failed stage the rest are
/// skipped unless `keep_going`; even then a stage whose inputs are missing
/// is skipped.
pub fn run(
    cfg: &PipelineConfig,
    keep_going: bool,
    gate: Option<&mut dyn ReviewGate>,
) -> Result<RunReport, SetupError> {
    cfg.validate()?;
    let out = cfg.paths.output.clone();
    fs::create_dir_all(&out).map_err(|source| SetupError::Output {
        path: out.clone(),
        source,
    })?;
    let llm = open_gateway(cfg, &out)?;
    let mut run = Run {
        cfg,
        llm: &llm,
        out,
        state: State::default(),
        written: vec![LEDGER.to_string()],
    };
    let mut gate = gate;
    let mut stages = Vec::new();
    let mut failed = false;
    let preload = run.load_inputs();
    for &stage in &cfg.stages {
        if failed && !keep_going {
            stages.push(skipped(stage, "an earlier stage failed"));
            continue;
        }
        info!("stage {stage}");
        let outcome = match &preload {
            Err(e) => Err(e.clone()),
            Ok(()) => match stage {
                Stage::BuildDomain => run.build_domain(),
                Stage::BuildTask => run.build_task(),
                Stage::Validate => run.validate(),
                Stage::Plan => run.plan(),
                Stage::Feedback => run.feedback(reborrow(&mut gate)),
            },
        };
        let report = match outcome {
            Ok(r) => r,
            Err(reason)
                if reason.starts_with("no domain available")
                    || reason.starts_with("no problem available") =>
            {
                skipped(stage, &reason)
            }
            Err(reason) => StageReport {
                stage,
                status: StageStatus::Failed { reason },
                artifacts: vec![],
                diagnostics: vec![],
                warnings: vec![],
            },
        };
        if report.status != StageStatus::Ok {
            failed = true;
        }
        stages.push(report);
    }
    run.written.push(REPORT.to_string());
    let report = RunReport {
        name: cfg.name.clone(),
        backend: cfg.backend,
        seed: cfg.seed,
        stages,
        artifacts: run.written.clone(),
        ledger: Some(LEDGER.to_string()),
        tokens_used: llm.tokens_used(),
    };
    let path = run.out.join(REPORT);
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|source| SetupError::Output { path, source })?;
    Ok(report)
}

fn skipped(stage: Stage, reason: &str) -> StageReport {
    StageReport {
        stage,
        status: StageStatus::Skipped {
            reason: reason.to_string(),
        },
        artifacts: vec![],
        diagnostics: vec![],
        warnings: vec![],
    }
}
