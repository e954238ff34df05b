//! Pipeline configuration: one YAML file, paths relative to it.
//!
//! `${VAR}` is expanded only in `llm.api_key`; anywhere else it is an error,
//! so secrets never end up in configs, reports or ledgers.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_yaml::Value;

use pddlkit_core::builder::feedback::FeedbackMode;
use pddlkit_core::engine::Strategy;
use pddlkit_core::llm::LlmConfig;

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    fn new(msg: impl fmt::Display) -> Self {
        ConfigError(msg.to_string())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Live,
    #[default]
    Fixture,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    BuildDomain,
    BuildTask,
    Validate,
    Plan,
    Feedback,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::BuildDomain,
        Stage::BuildTask,
        Stage::Validate,
        Stage::Plan,
        Stage::Feedback,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::BuildDomain => "build-domain",
            Stage::BuildTask => "build-task",
            Stage::Validate => "validate",
            Stage::Plan => "plan",
            Stage::Feedback => "feedback",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub domain_desc: Option<PathBuf>,
    pub action_model: Option<PathBuf>,
    pub hierarchy: Option<PathBuf>,
    pub problem_desc: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
    /// Existing domain file, used when `build-domain` is not a stage.
    pub domain: Option<PathBuf>,
    /// Existing problem file, used when `build-task` is not a stage.
    pub problem: Option<PathBuf>,
    pub output: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmSection {
    #[serde(flatten)]
    pub config: LlmConfig,
    /// `${VAR}` reference; overrides `api_key_env` when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
}

impl LlmSection {
    /// Environment variable that holds the key.
    pub fn key_var(&self) -> &str {
        match &self.api_key {
            Some(r) => r.trim().trim_start_matches("${").trim_end_matches('}'),
            None => &self.config.api_key_env,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    pub max_iter: usize,
    pub max_rounds: usize,
    pub max_expansions: Option<usize>,
    pub token_budget: Option<u64>,
    /// Independent domain builds issued concurrently.
    pub candidates: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_iter: 2,
            max_rounds: 2,
            max_expansions: Some(1_000_000),
            token_budget: None,
            candidates: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackTarget {
    #[default]
    Task,
    Domain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeedbackSection {
    pub mode: FeedbackMode,
    pub target: FeedbackTarget,
    /// Answers file for human and hybrid modes; stdin when absent.
    pub script: Option<PathBuf>,
}

impl Default for FeedbackSection {
    fn default() -> Self {
        FeedbackSection {
            mode: FeedbackMode::Llm,
            target: FeedbackTarget::Task,
            script: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Run name; prefixes every fixture key.
    pub name: String,
    #[serde(default)]
    pub domain_name: Option<String>,
    #[serde(default)]
    pub problem_name: Option<String>,
    pub paths: Paths,
    #[serde(default)]
    pub llm: LlmSection,
    #[serde(default)]
    pub backend: Backend,
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub deny_warnings: bool,
    #[serde(default)]
    pub feedback: FeedbackSection,
}

fn check_interpolation(v: &Value, path: &str) -> Result<(), ConfigError> {
    match v {
        Value::String(s) if s.contains("${") => {
            if path != "llm.api_key" {
                return Err(ConfigError::new(format!(
                    "`{path}`: `${{...}}` is only allowed in llm.api_key"
                )));
            }
            let t = s.trim();
            let var = t.strip_prefix("${").and_then(|r| r.strip_suffix('}'));
            match var {
                Some(v)
                    if !v.is_empty()
                        && v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') =>
                {
                    Ok(())
                }
                _ => Err(ConfigError::new("llm.api_key must be exactly `${VAR}`")),
            }
        }
        Value::String(_) if path == "llm.api_key" => Err(ConfigError::new(
            "llm.api_key must be a `${VAR}` reference, not a literal key",
        )),
        Value::Mapping(m) => {
            for (k, v) in m {
                let k = k.as_str().unwrap_or("?");
                let p = if path.is_empty() {
                    k.to_string()
                } else {
                    format!("{path}.{k}")
                };
                check_interpolation(v, &p)?;
            }
            Ok(())
        }
        Value::Sequence(s) => s
            .iter()
            .enumerate()
            .try_for_each(|(i, v)| check_interpolation(v, &format!("{path}[{i}]"))),
        _ => Ok(()),
    }
}

impl PipelineConfig {
    pub fn from_yaml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let raw: Value = serde_yaml::from_str(text).map_err(ConfigError::new)?;
        check_interpolation(&raw, "")?;
        let mut cfg: PipelineConfig = serde_yaml::from_value(raw).map_err(ConfigError::new)?;
        cfg.resolve(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let cfg = Self::from_yaml(&text, base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let p = &mut self.paths;
        for slot in [
            &mut p.domain_desc,
            &mut p.action_model,
            &mut p.hierarchy,
            &mut p.problem_desc,
            &mut p.templates,
            &mut p.fixtures,
            &mut p.domain,
            &mut p.problem,
            &mut self.feedback.script,
        ] {
            if let Some(path) = slot.as_mut() {
                *path = base.join(&*path);
            }
        }
        if p.output.as_os_str().is_empty() {
            p.output = PathBuf::from("out");
        }
        p.output = base.join(&p.output);
    }

    pub fn domain_name(&self) -> &str {
        self.domain_name.as_deref().unwrap_or(&self.name)
    }

    pub fn problem_name(&self) -> String {
        self.problem_name
            .clone()
            .unwrap_or_else(|| format!("{}_problem", self.name))
    }

    pub fn has(&self, s: Stage) -> bool {
        self.stages.contains(&s)
    }

    /// Stage order, dependencies and the existence of every path a stage
    /// reads.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.stages.is_empty() {
            return Err(ConfigError::new("no stages requested"));
        }
        if self.stages.windows(2).any(|w| w[0] >= w[1]) {
            let order: Vec<&str> = Stage::ALL.iter().map(|s| s.as_str()).collect();
            return Err(ConfigError::new(format!(
                "stages must be distinct and ordered as {}",
                order.join(", ")
            )));
        }
        self.llm.config.validate().map_err(ConfigError::new)?;
        if self.limits.max_iter == 0 || self.limits.max_rounds == 0 || self.limits.candidates == 0 {
            return Err(ConfigError::new(
                "max_iter, max_rounds and candidates must be at least 1",
            ));
        }
        let p = &self.paths;
        let need = |what: &str, path: &Option<PathBuf>, stage: Stage| -> Result<(), ConfigError> {
            match path {
                Some(path) if path.exists() => Ok(()),
                Some(path) => Err(ConfigError::new(format!(
                    "paths.{what} ({}) does not exist",
                    path.display()
                ))),
                None => Err(ConfigError::new(format!(
                    "stage {stage} needs paths.{what}"
                ))),
            }
        };
        let domain_source = self.has(Stage::BuildDomain) || p.domain.is_some();
        let problem_source = self.has(Stage::BuildTask) || p.problem.is_some();
        if let Some(d) = &p.domain {
            need("domain", &Some(d.clone()), Stage::Validate)?;
        }
        if let Some(d) = &p.problem {
            need("problem", &Some(d.clone()), Stage::Validate)?;
        }
        for &s in &self.stages {
            match s {
                Stage::BuildDomain => {
                    need("domain_desc", &p.domain_desc, s)?;
                    need("action_model", &p.action_model, s)?;
                    need("hierarchy", &p.hierarchy, s)?;
                    need("templates", &p.templates, s)?;
                }
                Stage::BuildTask => {
                    if !domain_source {
                        return Err(ConfigError::new(
                            "build-task needs a domain: add build-domain or paths.domain",
                        ));
                    }
                    need("problem_desc", &p.problem_desc, s)?;
                    need("templates", &p.templates, s)?;
                }
                Stage::Validate | Stage::Plan => {
                    if !domain_source || !problem_source {
                        return Err(ConfigError::new(format!(
                            "{s} needs a domain and a problem (build stages or paths.domain / paths.problem)"
                        )));
                    }
                }
                Stage::Feedback => {
                    need("templates", &p.templates, s)?;
                    match self.feedback.target {
                        FeedbackTarget::Task => {
                            if !problem_source || !domain_source {
                                return Err(ConfigError::new(
                                    "task feedback needs a domain and a problem",
                                ));
                            }
                            need("problem_desc", &p.problem_desc, s)?;
                        }
                        FeedbackTarget::Domain => {
                            if !domain_source {
                                return Err(ConfigError::new("domain feedback needs a domain"));
                            }
                            need("domain_desc", &p.domain_desc, s)?;
                        }
                    }
                    if let Some(script) = &self.feedback.script {
                        need("feedback.script", &Some(script.clone()), s)?;
                    }
                }
            }
        }
        let llm_stages = [Stage::BuildDomain, Stage::BuildTask, Stage::Feedback];
        if self.backend == Backend::Fixture && self.stages.iter().any(|s| llm_stages.contains(s)) {
            need("fixtures", &p.fixtures, self.stages[0])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "name: demo\npaths:\n  output: out\nstages: [validate]\n";

    #[test]
    fn interpolation_only_for_the_key() {
        let base = Path::new("/cfg");
        let ok = format!("{MINIMAL}llm:\n  api_key: \"${{MY_KEY}}\"\n");
        let cfg = PipelineConfig::from_yaml(&ok, base).unwrap();
        assert_eq!(cfg.llm.key_var(), "MY_KEY");
        assert_eq!(cfg.paths.output, Path::new("/cfg/out"));

        let literal = format!("{MINIMAL}llm:\n  api_key: sk-123\n");
        assert!(PipelineConfig::from_yaml(&literal, base).is_err());
        let elsewhere = "name: \"${USER}\"\npaths:\n  output: out\nstages: [validate]\n";
        assert!(PipelineConfig::from_yaml(elsewhere, base)
            .unwrap_err()
            .0
            .contains("only allowed"));
    }

    #[test]
    fn stage_order_and_dependencies() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("d.pddl");
        fs::write(&d, "").unwrap();
        let text = |stages: &str| {
            format!("name: demo\npaths:\n  domain: d.pddl\n  problem: d.pddl\nstages: [{stages}]\n")
        };
        let ok = PipelineConfig::from_yaml(&text("validate, plan"), dir.path()).unwrap();
        assert!(ok.validate().is_ok());
        let swapped = PipelineConfig::from_yaml(&text("plan, validate"), dir.path()).unwrap();
        assert!(swapped.validate().is_err());
        let missing = PipelineConfig::from_yaml(&text("build-domain"), dir.path()).unwrap();
        assert!(missing.validate().unwrap_err().0.contains("domain_desc"));
        assert!(
            PipelineConfig::from_yaml("name: x\npaths: {}\nstages: [fly]\n", dir.path()).is_err()
        );
    }
}
