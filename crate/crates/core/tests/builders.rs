use std::fs;
use std::path::{Path, PathBuf};

use pddlkit_core::builder::domain::{
    assemble_domain, build_domain_action_by_action, extract_predicates, infer_requirements,
    DomainContext, NLActionModel, TypeHierarchy,
};
use pddlkit_core::builder::feedback::{
    domain_feedback, refine_until_accepted, task_feedback, FeedbackMode, Outcome, TaskReview,
    Verdict,
};
use pddlkit_core::builder::task::{
    extract_task, parse_goal, parse_initial, parse_objects, TaskTriple,
};
use pddlkit_core::diagnostics::has_errors;
use pddlkit_core::llm::{extract_sections, headings, PromptTemplate, ReplayModel};
use pddlkit_core::pddl::{parse_domain, Atom, Predicate};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(rel: &str) -> String {
    fs::read_to_string(root().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn store() -> ReplayModel {
    fn walk(dir: &Path, base: &Path, out: &mut Vec<(String, String)>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, base, out);
            } else if p.extension().is_some_and(|x| x == "txt") {
                let key = p.strip_prefix(base).unwrap().with_extension("");
                out.push((
                    key.to_string_lossy().replace('\\', "/"),
                    fs::read_to_string(&p).unwrap(),
                ));
            }
        }
    }
    let mut out = Vec::new();
    let base = root().join("llm");
    walk(&base, &base, &mut out);
    out.into_iter().collect()
}

fn template(name: &str) -> PromptTemplate {
    PromptTemplate::new(read(&format!("templates/{name}.txt"))).unwrap()
}

fn tokens(s: &str) -> Vec<String> {
    s.replace('(', " ( ")
        .replace(')', " ) ")
        .split_whitespace()
        .map(str::to_lowercase)
        .collect()
}

const LOGISTICS_RAW: [&str; 7] = [
    "(truck-at ?t - truck ?l - location): true if the truck ?t is currently at location ?l",
    "(package-at ?p - package ?l - location): true if the package ?p is currently at location ?l",
    "(truck-holding ?t - truck ?p - package): true if the truck ?t is currently holding the package ?p",
    "(truck-has-space ?t - truck): true if the truck ?t has space to load more packages",
    "(plane-at ?a - plane ?l - location): true if the airplane ?a is located at location ?l",
    "(plane-holding ?a - plane ?p - package): true if the airplane ?a is currently holding package ?p",
    "(connected-locations ?l1 - location ?l2 - location ?c - city): ?l1 is connected to ?l2 in city ?c",
];

#[test]
fn logistics_action_by_action_reaches_seven_predicates() {
    let llm = store();
    let model: NLActionModel =
        serde_json::from_str(&read("inputs/logistics/action_model.json")).unwrap();
    let types: TypeHierarchy =
        serde_json::from_str(&read("inputs/logistics/hierarchy.json")).unwrap();
    let desc = read("inputs/logistics/domain_desc.txt");
    let ctx = DomainContext {
        domain_desc: &desc,
        types: &types,
    };
    let out = build_domain_action_by_action(
        &llm,
        "logistics",
        &model,
        &ctx,
        &template("extract_action"),
        2,
    )
    .unwrap();

    let raw: Vec<&str> = out.predicates.iter().map(|p| p.raw.as_str()).collect();
    assert_eq!(raw, LOGISTICS_RAW);
    let clean: Vec<&str> = out.predicates.iter().map(|p| p.clean.as_str()).collect();
    assert_eq!(clean, LOGISTICS_RAW);
    assert_eq!(out.sweeps[0].candidates, 9);
    assert_eq!(out.sweeps[0].predicates, out.sweeps[1].predicates);
    assert_eq!(out.sweeps[0].actions, out.sweeps[1].actions);
    assert!(out.warnings.is_empty(), "{:?}", out.warnings);

    let reqs = infer_requirements(&types, &out.actions);
    let assembled =
        assemble_domain("logistics", reqs, &types, out.predicates, out.actions).unwrap();
    assert!(
        !has_errors(&assembled.diagnostics),
        "{:?}",
        assembled.diagnostics
    );
    let reference = parse_domain(&read("pddl/logistics-domain.pddl")).unwrap();
    assert_eq!(assembled.domain, reference);
}

#[test]
fn blocksworld_predicate_extraction() {
    let llm = store().with(
        "bad",
        "### New Predicates\n1. (a ?x)\n2. (b ?y\n3. (c)\n4. (d ?z - t)\n5. (e)\n",
    );
    let types: TypeHierarchy =
        serde_json::from_str(&read("inputs/blocksworld/types.json")).unwrap();
    let model: NLActionModel =
        serde_json::from_str(&read("inputs/blocksworld/action_model.json")).unwrap();
    let desc = read("inputs/blocksworld/domain_desc.txt");
    let ctx = DomainContext {
        domain_desc: &desc,
        types: &types,
    };
    let t = template("extract_predicates");
    let out = extract_predicates(&llm, "blocksworld/predicates", &ctx, &t, &model).unwrap();
    let names: Vec<&str> = out.predicates.iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names, ["holding", "on_top", "clear", "on_table", "empty"]);
    let stored: Vec<Predicate> =
        serde_json::from_str(&read("inputs/blocksworld/predicates.json")).unwrap();
    assert_eq!(out.predicates, stored);

    let bad = extract_predicates(&llm, "bad", &ctx, &t, &model).unwrap();
    assert_eq!((bad.predicates.len(), bad.warnings.len()), (4, 1));
}

fn blocksworld_vocab() -> (TypeHierarchy, Vec<Predicate>) {
    (
        serde_json::from_str(&read("inputs/blocksworld/types.json")).unwrap(),
        serde_json::from_str(&read("inputs/blocksworld/predicates.json")).unwrap(),
    )
}

#[test]
fn blocksworld_task_generation_matches_reference_tokens() {
    let (types, preds) = blocksworld_vocab();
    let desc = read("inputs/blocksworld/problem_desc.txt");
    let out = extract_task(
        &store(),
        "blocksworld/task",
        &desc,
        &template("extract_task"),
        &types,
        &preds,
    )
    .unwrap();
    assert_eq!(out.task.objects.len(), 4);
    assert_eq!(out.task.init.len(), 7);
    assert!(out.diagnostics.is_empty(), "{:?}", out.diagnostics);
    let text = out.task.generate("blocksworld", "blocksworld_problem");
    assert_eq!(
        tokens(&text),
        tokens(&read("pddl/blocksworld-typed-problem.pddl"))
    );
}

fn candidate() -> TaskTriple {
    let raw = read("inputs/blocksworld/llm_output_task.txt");
    let s = extract_sections(
        &raw,
        &[headings::OBJECTS, headings::INITIAL, headings::GOAL],
    )
    .unwrap();
    TaskTriple {
        objects: parse_objects(&s[headings::OBJECTS]).unwrap(),
        init: parse_initial(&s[headings::INITIAL], &mut Vec::new()).unwrap(),
        goal: parse_goal(&s[headings::GOAL]).unwrap(),
    }
}

#[test]
fn task_feedback_removes_covered_clear_atom() {
    let (types, preds) = blocksworld_vocab();
    let desc = read("inputs/blocksworld/problem_desc.txt");
    let ctx = TaskReview {
        problem_desc: &desc,
        types: &types,
        predicates: &preds,
    };
    let cand = candidate();
    let red_clear = Atom::new("clear", ["red_block"]);
    assert!(cand.init.contains(&red_clear));

    let llm = store();
    let t = template("task_feedback");
    let (revised, report) = task_feedback(
        &llm,
        "blocksworld/task_feedback/round1",
        &t,
        FeedbackMode::Llm,
        &ctx,
        &cand,
        None,
    )
    .unwrap();
    assert_eq!(report.checklist.len(), 8);
    assert_eq!(report.verdict, Verdict::Revise);
    assert_eq!(report.suggestions[0].outcome, Outcome::Applied);
    assert!(!revised.init.contains(&red_clear));
    assert_eq!(revised.init.len(), 7);
    let text = revised.generate("blocksworld", "blocksworld_problem");
    assert_eq!(
        tokens(&text),
        tokens(&read("pddl/blocksworld-typed-problem.pddl"))
    );

    let refined = refine_until_accepted(
        || Ok::<_, String>(cand.clone()),
        |m, round| {
            let key = format!("blocksworld/task_feedback/round{round}");
            task_feedback(&llm, &key, &t, FeedbackMode::Llm, &ctx, m, None)
                .map_err(|e| e.to_string())
        },
        3,
    )
    .unwrap();
    assert_eq!(refined.transcript.len(), 2);
    assert_eq!(refined.model, revised);
}

#[test]
fn domain_feedback_adds_missing_effect() {
    let mutant = parse_domain(&read("pddl/blocksworld-putdown-mutant.pddl")).unwrap();
    let desc = read("inputs/blocksworld/domain_desc.txt");
    let (revised, report) = domain_feedback(
        &store(),
        "blocksworld/domain_feedback/round1",
        &desc,
        &template("domain_feedback"),
        FeedbackMode::Llm,
        &mutant,
        None,
    )
    .unwrap();
    let putdown = revised.action("putdown").unwrap();
    assert!(putdown
        .effects
        .iter()
        .any(|l| l.positive && l.atom.predicate == "arm-empty"));
    assert_eq!(report.applied(), 1);
    assert!(matches!(
        report.suggestions[1].outcome,
        Outcome::Skipped { .. }
    ));
    assert_eq!(report.warnings.len(), 1);
    assert!(!has_errors(&report.diagnostics));
}
