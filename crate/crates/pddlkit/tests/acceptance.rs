//! Acceptance harness. One line per criterion; exits nonzero if any fails.
//!
//! Each criterion carries a wall-clock budget and its exact-match
//! requirement in code. Oracles are written here from scratch and share no
//! code with the engine they check.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pddlkit::gateway::load_fixture_dir;
use pddlkit_core::builder::domain::{
    build_domain_action_by_action, DomainContext, NLActionModel, TypeHierarchy,
};
use pddlkit_core::builder::feedback::{task_feedback, FeedbackMode, Outcome, TaskReview};
use pddlkit_core::builder::task::{
    extract_task, parse_goal, parse_initial, parse_objects, TaskTriple,
};
use pddlkit_core::diagnostics::{check_all, promote_warnings, Code, Severity};
use pddlkit_core::engine::{
    apply, ground, operational_equivalence, solve, validate_plan, SamplerConfig, SearchLimits,
    State, Strategy, VocabularyMap,
};
use pddlkit_core::llm::{extract_sections, headings, PromptTemplate, ReplayModel};
use pddlkit_core::pddl::{
    format_domain, format_problem, parse_domain, parse_problem, Atom, Domain, Literal, Predicate,
    Problem,
};

type Check = fn() -> Result<String, String>;

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Duration,
    check: Check,
}

const CRITERIA: [Criterion; 8] = [
    Criterion {
        id: 1,
        name: "round-trip and idempotent formatting",
        budget: Duration::from_secs(1),
        check: round_trip,
    },
    Criterion {
        id: 2,
        name: "planner matches exhaustive oracle",
        budget: Duration::from_secs(10),
        check: planner,
    },
    Criterion {
        id: 3,
        name: "action-by-action yields the 7 logistics predicates",
        budget: Duration::from_secs(1),
        check: logistics_predicates,
    },
    Criterion {
        id: 4,
        name: "task generation and critique on blocksworld",
        budget: Duration::from_secs(1),
        check: task_and_feedback,
    },
    Criterion {
        id: 5,
        name: "one seeded fault per diagnostic code",
        budget: Duration::from_secs(2),
        check: diagnostics,
    },
    Criterion {
        id: 6,
        name: "operational equivalence",
        budget: Duration::from_secs(30),
        check: equivalence,
    },
    Criterion {
        id: 7,
        name: "transition and frame semantics",
        budget: Duration::from_secs(5),
        check: transitions,
    },
    Criterion {
        id: 8,
        name: "deterministic pipeline output",
        budget: Duration::from_secs(10),
        check: determinism,
    },
];

fn main() -> ExitCode {
    let mut failed = 0;
    for c in &CRITERIA {
        let start = Instant::now();
        let result = (c.check)();
        let took = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if took <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget")),
            Err(e) => (false, e),
        };
        failed += usize::from(!ok);
        println!(
            "{} [{}] {} ({} ms, budget {} ms): {detail}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            took.as_millis(),
            c.budget.as_millis()
        );
    }
    println!(
        "{} of {} criteria passed",
        CRITERIA.len() - failed,
        CRITERIA.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(rel: &str) -> Result<String, String> {
    fs::read_to_string(fixtures().join(rel)).map_err(|e| format!("{rel}: {e}"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn domain(rel: &str) -> Result<Domain, String> {
    parse_domain(&read(rel)?).map_err(|e| format!("{rel}: {e}"))
}

fn problem(rel: &str) -> Result<Problem, String> {
    parse_problem(&read(rel)?).map_err(|e| format!("{rel}: {e}"))
}

fn store() -> Result<ReplayModel, String> {
    load_fixture_dir(&fixtures().join("llm")).map_err(|e| e.to_string())
}

fn template(name: &str) -> Result<PromptTemplate, String> {
    PromptTemplate::new(read(&format!("templates/{name}.txt"))?).map_err(|e| e.to_string())
}

fn json<T: serde::de::DeserializeOwned>(rel: &str) -> Result<T, String> {
    serde_json::from_str(&read(rel)?).map_err(|e| format!("{rel}: {e}"))
}

// 1 ------------------------------------------------------------------------

const DOMAINS: [&str; 5] = [
    "pddl/blocksworld.pddl",
    "pddl/blocksworld-typed.pddl",
    "pddl/blocksworld-pickup.pddl",
    "pddl/blocksworld-eq.pddl",
    "pddl/logistics-domain.pddl",
];

const PROBLEMS: [&str; 4] = [
    "pddl/blocksworld-3.pddl",
    "pddl/blocksworld-typed-problem.pddl",
    "pddl/blocksworld-pickup-problem.pddl",
    "pddl/logistics-problem.pddl",
];

fn round_trip() -> Result<String, String> {
    for rel in DOMAINS {
        let d = domain(rel)?;
        let once = format_domain(&d);
        let back = parse_domain(&once).map_err(|e| format!("{rel} reformatted: {e}"))?;
        ensure(back == d, || format!("{rel}: reparse differs"))?;
        ensure(format_domain(&back) == once, || {
            format!("{rel}: formatting is not idempotent")
        })?;
    }
    for rel in PROBLEMS {
        let p = problem(rel)?;
        let once = format_problem(&p);
        let back = parse_problem(&once).map_err(|e| format!("{rel} reformatted: {e}"))?;
        ensure(back == p, || format!("{rel}: reparse differs"))?;
        ensure(format_problem(&back) == once, || {
            format!("{rel}: formatting is not idempotent")
        })?;
    }
    Ok(format!(
        "{} domains, {} problems byte-exact",
        DOMAINS.len(),
        PROBLEMS.len()
    ))
}

// 2 ------------------------------------------------------------------------

/// Where a block is in the oracle's own state encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Pos {
    Table,
    On(u8),
    Held,
}

type Blocks = Vec<Pos>;

fn is_clear(s: &Blocks, b: usize) -> bool {
    s[b] != Pos::Held && !s.contains(&Pos::On(b as u8))
}

fn successors(s: &Blocks) -> Vec<Blocks> {
    let n = s.len();
    let held = s.iter().position(|p| *p == Pos::Held);
    let mut out = Vec::new();
    match held {
        Some(h) => {
            let mut t = s.clone();
            t[h] = Pos::Table;
            out.push(t);
            for y in (0..n).filter(|&y| y != h && is_clear(s, y)) {
                let mut t = s.clone();
                t[h] = Pos::On(y as u8);
                out.push(t);
            }
        }
        None => {
            for x in (0..n).filter(|&x| is_clear(s, x)) {
                let mut t = s.clone();
                t[x] = Pos::Held;
                out.push(t);
            }
        }
    }
    out
}

/// Shortest plan length by exhaustive breadth-first enumeration.
fn oracle_length(init: &Blocks, goal: &Blocks) -> Option<usize> {
    let mut dist = BTreeMap::from([(init.clone(), 0usize)]);
    let mut queue = VecDeque::from([init.clone()]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        if goal.iter().zip(&s).all(|(g, p)| g == p) {
            return Some(d);
        }
        for t in successors(&s) {
            if !dist.contains_key(&t) {
                dist.insert(t.clone(), d + 1);
                queue.push_back(t);
            }
        }
    }
    None
}

fn random_towers(n: usize, rng: &mut ChaCha8Rng) -> Blocks {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut s = vec![Pos::Table; n];
    for w in order.windows(2) {
        if rng.random_bool(0.5) {
            s[w[1]] = Pos::On(w[0] as u8);
        }
    }
    s
}

fn facts(s: &Blocks) -> Vec<String> {
    let name = |b: usize| format!("b{b}");
    let mut out = Vec::new();
    for (b, p) in s.iter().enumerate() {
        match p {
            Pos::Table => out.push(format!("(on-table {})", name(b))),
            Pos::On(y) => out.push(format!("(on {} {})", name(b), name(*y as usize))),
            Pos::Held => out.push(format!("(holding {})", name(b))),
        }
    }
    out
}

fn instance(init: &Blocks, goal: &Blocks) -> String {
    let objects: Vec<String> = (0..init.len()).map(|b| format!("b{b}")).collect();
    let mut init_facts = facts(init);
    init_facts.extend(
        (0..init.len())
            .filter(|&b| is_clear(init, b))
            .map(|b| format!("(clear b{b})")),
    );
    init_facts.push("(arm-empty)".into());
    format!(
        "(define (problem random) (:domain blocksworld)\n (:objects {})\n (:init {})\n (:goal (and {})))\n",
        objects.join(" "),
        init_facts.join(" "),
        facts(goal).join(" ")
    )
}

const PLANNER_SEED: u64 = 2024;
const PLANNER_INSTANCES: usize = 20;

fn planner() -> Result<String, String> {
    let d = domain("pddl/blocksworld.pddl")?;
    let p = problem("pddl/blocksworld-3.pddl")?;
    let plan = solve(&d, &p, SearchLimits::default()).map_err(|e| format!("blocksworld-3: {e}"))?;
    ensure(plan.len() == 6, || {
        format!("blocksworld-3: plan length {}, want 6", plan.len())
    })?;
    ensure(validate_plan(&d, &p, &plan.steps).is_valid(), || {
        "blocksworld-3: plan does not validate".into()
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(PLANNER_SEED);
    let mut lengths = Vec::new();
    for i in 0..PLANNER_INSTANCES {
        let n = 3 + i % 2;
        let init = random_towers(n, &mut rng);
        let mut goal = random_towers(n, &mut rng);
        while goal == init {
            goal = random_towers(n, &mut rng);
        }
        let text = instance(&init, &goal);
        let prob = parse_problem(&text).map_err(|e| format!("instance {i}: {e}"))?;
        let want = oracle_length(&init, &goal)
            .ok_or_else(|| format!("instance {i}: oracle found no plan"))?;
        let limits = SearchLimits {
            strategy: Strategy::Bfs,
            max_expansions: None,
        };
        let got = solve(&d, &prob, limits).map_err(|e| format!("instance {i}: {e}"))?;
        ensure(got.len() == want, || {
            format!(
                "instance {i}: BFS length {}, oracle {want}\n{text}",
                got.len()
            )
        })?;
        ensure(validate_plan(&d, &prob, &got.steps).is_valid(), || {
            format!("instance {i}: invalid plan")
        })?;
        lengths.push(want);
    }
    Ok(format!(
        "blocksworld-3 plan length 6; {PLANNER_INSTANCES} instances agree, lengths {lengths:?}"
    ))
}

// 3 ------------------------------------------------------------------------

const LOGISTICS_PREDICATES: [&str; 7] = [
    "(truck-at ?t - truck ?l - location): true if the truck ?t is currently at location ?l",
    "(package-at ?p - package ?l - location): true if the package ?p is currently at location ?l",
    "(truck-holding ?t - truck ?p - package): true if the truck ?t is currently holding the package ?p",
    "(truck-has-space ?t - truck): true if the truck ?t has space to load more packages",
    "(plane-at ?a - plane ?l - location): true if the airplane ?a is located at location ?l",
    "(plane-holding ?a - plane ?p - package): true if the airplane ?a is currently holding package ?p",
    "(connected-locations ?l1 - location ?l2 - location ?c - city): ?l1 is connected to ?l2 in city ?c",
];

fn logistics_predicates() -> Result<String, String> {
    let model: NLActionModel = json("inputs/logistics/action_model.json")?;
    let types: TypeHierarchy = json("inputs/logistics/hierarchy.json")?;
    let desc = read("inputs/logistics/domain_desc.txt")?;
    let ctx = DomainContext {
        domain_desc: &desc,
        types: &types,
    };
    let out = build_domain_action_by_action(
        &store()?,
        "logistics",
        &model,
        &ctx,
        &template("extract_action")?,
        2,
    )
    .map_err(|e| e.to_string())?;
    let got: Vec<&str> = out.predicates.iter().map(|p| p.clean.as_str()).collect();
    ensure(got == LOGISTICS_PREDICATES, || {
        format!("predicates differ: {got:#?}")
    })?;
    for (p, want) in out.predicates.iter().zip(LOGISTICS_PREDICATES) {
        let sig = want.split_once(':').map_or(want, |(s, _)| s);
        ensure(p.signature() == sig, || {
            format!("signature {} != {sig}", p.signature())
        })?;
    }
    Ok(format!(
        "7 predicates verbatim after {} sweeps ({} candidates before pruning)",
        out.sweeps.len(),
        out.sweeps[0].candidates
    ))
}

// 4 ------------------------------------------------------------------------

fn tokens(s: &str) -> Vec<String> {
    s.lines()
        .map(|l| l.split(';').next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join(" ")
        .replace('(', " ( ")
        .replace(')', " ) ")
        .split_whitespace()
        .map(str::to_lowercase)
        .collect()
}

fn task_and_feedback() -> Result<String, String> {
    let types: TypeHierarchy = json("inputs/blocksworld/types.json")?;
    let preds: Vec<Predicate> = json("inputs/blocksworld/predicates.json")?;
    let desc = read("inputs/blocksworld/problem_desc.txt")?;
    let llm = store()?;
    let out = extract_task(
        &llm,
        "blocksworld/task",
        &desc,
        &template("extract_task")?,
        &types,
        &preds,
    )
    .map_err(|e| e.to_string())?;
    let text = out.task.generate("blocksworld", "blocksworld_problem");
    let reference = read("pddl/blocksworld-typed-problem.pddl")?;
    ensure(tokens(&text) == tokens(&reference), || {
        format!("generated task differs:\n{text}")
    })?;

    let raw = read("inputs/blocksworld/llm_output_task.txt")?;
    let s = extract_sections(
        &raw,
        &[headings::OBJECTS, headings::INITIAL, headings::GOAL],
    )
    .map_err(|e| e.to_string())?;
    let candidate = TaskTriple {
        objects: parse_objects(&s[headings::OBJECTS]).map_err(|e| e.to_string())?,
        init: parse_initial(&s[headings::INITIAL], &mut Vec::new()).map_err(|e| e.to_string())?,
        goal: parse_goal(&s[headings::GOAL]).map_err(|e| e.to_string())?,
    };
    let ctx = TaskReview {
        problem_desc: &desc,
        types: &types,
        predicates: &preds,
    };
    let (revised, report) = task_feedback(
        &llm,
        "blocksworld/task_feedback/round1",
        &template("task_feedback")?,
        FeedbackMode::Llm,
        &ctx,
        &candidate,
        None,
    )
    .map_err(|e| e.to_string())?;
    let removed: BTreeSet<&Atom> = candidate
        .init
        .iter()
        .filter(|a| !revised.init.contains(a))
        .collect();
    let red = Atom::new("clear", ["red_block"]);
    ensure(removed == BTreeSet::from([&red]), || {
        format!("removed {removed:?}")
    })?;
    ensure(
        revised.objects == candidate.objects && revised.goal == candidate.goal,
        || "objects or goal changed".into(),
    )?;
    ensure(
        report.suggestions.len() == 1 && report.suggestions[0].outcome == Outcome::Applied,
        || format!("suggestions {:?}", report.suggestions),
    )?;
    Ok("task tokens equal the reference; critique removed exactly (clear red_block)".into())
}

// 5 ------------------------------------------------------------------------

enum File {
    Domain,
    Problem,
}

/// One textual fault against the logistics fixtures, and the code it seeds.
const MUTATIONS: [(Code, File, &str, &str); 10] = [
    (
        Code::UndeclaredPredicate,
        File::Domain,
        ":effect (and (not (plane-holding ?a ?p)) (package-at ?p ?l))",
        ":effect (and (not (plane-holding ?a ?p)) (package-at ?p ?l) (plane-ready ?a))",
    ),
    (
        Code::ArityMismatch,
        File::Domain,
        "(truck-at ?t ?l) (package-at ?p ?l) (truck-has-space ?t))",
        "(truck-at ?t ?l) (package-at ?p ?l) (truck-has-space ?t ?l))",
    ),
    (
        Code::TypeError,
        File::Domain,
        "(?t - truck ?l1 - location ?l2 - location ?c - city)",
        "(?t - truck ?l1 - location ?l2 - location ?c - package)",
    ),
    (
        Code::UnboundVariable,
        File::Domain,
        ":precondition (and (plane-at ?a ?l1))",
        ":precondition (and (plane-at ?a ?l1) (plane-at ?a ?l3))",
    ),
    (
        Code::UnusedPredicate,
        File::Domain,
        "    (connected-locations ?l1",
        "    (plane-ready ?a - plane)\n    (connected-locations ?l1",
    ),
    (
        Code::UnknownObjectType,
        File::Problem,
        "city1 city2 - city)",
        "city1 city2 - town)",
    ),
    (
        Code::UnreachableGoalAtom,
        File::Problem,
        "(:goal (and (package-at pkg1 depot2)",
        "(:goal (and (truck-at truck1 depot2)",
    ),
    (
        Code::PredicateOnlyInProblem,
        File::Problem,
        "(plane-at plane1 airport1)",
        "(plane-at plane1 airport1) (plane-ready plane1)",
    ),
    (
        Code::ContradictoryEffect,
        File::Domain,
        ":effect (and (not (plane-holding ?a ?p)) (package-at ?p ?l))",
        ":effect (and (not (plane-holding ?a ?p)) (package-at ?p ?l) (not (package-at ?p ?l)))",
    ),
    (
        Code::DuplicateName,
        File::Problem,
        "pkg1 - package",
        "pkg1 pkg1 - package",
    ),
];

fn diagnostics() -> Result<String, String> {
    for (d, p) in [
        ("pddl/blocksworld.pddl", "pddl/blocksworld-3.pddl"),
        (
            "pddl/blocksworld-typed.pddl",
            "pddl/blocksworld-typed-problem.pddl",
        ),
        ("pddl/blocksworld-eq.pddl", "pddl/blocksworld-3.pddl"),
        ("pddl/logistics-domain.pddl", "pddl/logistics-problem.pddl"),
    ] {
        let errors: Vec<_> = check_all(&domain(d)?, &problem(p)?)
            .into_iter()
            .filter(|x| x.is_error())
            .collect();
        ensure(errors.is_empty(), || format!("{d} + {p}: {errors:?}"))?;
    }
    let (dtext, ptext) = (
        read("pddl/logistics-domain.pddl")?,
        read("pddl/logistics-problem.pddl")?,
    );
    let mut clean = check_all(
        &domain("pddl/logistics-domain.pddl")?,
        &problem("pddl/logistics-problem.pddl")?,
    );
    promote_warnings(&mut clean);
    ensure(clean.is_empty(), || {
        format!("logistics base is not clean under deny-warnings: {clean:?}")
    })?;

    let seen: BTreeSet<Code> = MUTATIONS.iter().map(|m| m.0).collect();
    ensure(seen.len() == Code::ALL.len(), || {
        "mutations do not cover every code".into()
    })?;
    for (code, file, from, to) in &MUTATIONS {
        let (mut dt, mut pt) = (dtext.clone(), ptext.clone());
        let target = match file {
            File::Domain => &mut dt,
            File::Problem => &mut pt,
        };
        ensure(target.matches(from).count() == 1, || {
            format!("{code}: anchor `{from}` not unique")
        })?;
        *target = target.replacen(from, to, 1);
        let d = parse_domain(&dt).map_err(|e| format!("{code}: {e}"))?;
        let p = parse_problem(&pt).map_err(|e| format!("{code}: {e}"))?;
        let mut diags = check_all(&d, &p);
        promote_warnings(&mut diags);
        let codes: BTreeSet<Code> = diags.iter().map(|x| x.code).collect();
        ensure(codes == BTreeSet::from([*code]), || {
            format!("{code}: got {codes:?}")
        })?;
        ensure(diags.iter().all(|x| x.severity == Severity::Error), || {
            format!("{code}: not at error severity")
        })?;
    }
    Ok("4 clean pairs report 0 errors; 10/10 mutations report exactly their code".into())
}

// 6 ------------------------------------------------------------------------

const EQUIVALENCE_SEEDS: u64 = 50;
const EQUIVALENCE_WALKS: usize = 200;

fn equivalence() -> Result<String, String> {
    let d = domain("pddl/blocksworld.pddl")?;
    let p = problem("pddl/blocksworld-3.pddl")?;
    let mut mutant = d.clone();
    let pickup = mutant.action_mut("pickup").ok_or("no pickup action")?;
    let before = pickup.preconditions.len();
    pickup
        .preconditions
        .retain(|l| l.atom.predicate != "arm-empty");
    ensure(pickup.preconditions.len() + 1 == before, || {
        "pickup has no (arm-empty) precondition".into()
    })?;

    let map = VocabularyMap::default();
    let mut caught = 0;
    let seeds = (0..EQUIVALENCE_SEEDS).chain([u64::MAX, 0xDEAD_BEEF]);
    for seed in seeds {
        let sampler = SamplerConfig {
            n_walks: EQUIVALENCE_WALKS,
            seed,
            ..SamplerConfig::default()
        };
        let same = operational_equivalence(&d, &d.clone(), &p, &map, &sampler)
            .map_err(|e| e.to_string())?;
        ensure(same.agrees(), || {
            format!("identical domains disagree at seed {seed}: {same:?}")
        })?;
        if seed < EQUIVALENCE_SEEDS {
            let r = operational_equivalence(&d, &mutant, &p, &map, &sampler)
                .map_err(|e| e.to_string())?;
            caught += usize::from(!r.agrees());
        }
    }
    ensure(caught as u64 == EQUIVALENCE_SEEDS, || {
        format!("mutant caught in {caught}/{EQUIVALENCE_SEEDS} seeds")
    })?;
    Ok(format!(
        "identical domains agree on 52 seeds; mutant caught in {caught}/{EQUIVALENCE_SEEDS} seeds"
    ))
}

// 7 ------------------------------------------------------------------------

const TRANSITION_CHECKS: usize = 1000;

fn instantiate(a: &Atom, binding: &BTreeMap<&str, &str>) -> Atom {
    Atom {
        predicate: a.predicate.clone(),
        args: a
            .args
            .iter()
            .map(|t| binding.get(t.as_str()).map_or(t.clone(), |o| o.to_string()))
            .collect(),
    }
}

fn universe(d: &Domain, objects: &[String]) -> Vec<Atom> {
    let mut out = Vec::new();
    for pred in &d.predicates {
        let mut tuples: Vec<Vec<String>> = vec![vec![]];
        for _ in 0..pred.arity() {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    objects.iter().map(move |o| {
                        let mut t = t.clone();
                        t.push(o.clone());
                        t
                    })
                })
                .collect();
        }
        out.extend(tuples.into_iter().map(|args| Atom {
            predicate: pred.name.clone(),
            args,
        }));
    }
    out
}

fn transitions() -> Result<String, String> {
    let cases = [
        ("pddl/blocksworld.pddl", "(define (problem four) (:domain blocksworld) (:objects a b c d) (:init) (:goal (and (clear a))))"),
        ("pddl/logistics-domain.pddl", &*read("pddl/logistics-problem.pddl")?),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut applied, mut refused) = (0, 0);
    let tasks: Vec<_> = cases
        .iter()
        .map(|(d, p)| {
            let d = domain(d)?;
            let p = parse_problem(p).map_err(|e| e.to_string())?;
            let t = ground(&d, &p).map_err(|e| e.to_string())?;
            let objects: Vec<String> = p.objects.iter().map(|o| o.name.clone()).collect();
            let atoms: BTreeSet<Atom> = universe(&d, &objects).into_iter().collect();
            Ok::<_, String>((d, t, atoms))
        })
        .collect::<Result<_, _>>()?;
    for i in 0..TRANSITION_CHECKS {
        let (d, task, atoms) = &tasks[i % tasks.len()];
        let ga = &task.actions[rng.random_range(0..task.actions.len())];
        let schema = d.action(&ga.schema).ok_or("unknown schema")?;
        let binding: BTreeMap<&str, &str> = ga
            .binding
            .iter()
            .map(|(v, o)| (v.as_str(), o.as_str()))
            .collect();
        let pre: Vec<(bool, Atom)> = schema
            .preconditions
            .iter()
            .map(|l| (l.positive, instantiate(&l.atom, &binding)))
            .collect();

        let mut before: BTreeSet<Atom> = atoms
            .iter()
            .filter(|_| rng.random_bool(0.3))
            .cloned()
            .collect();
        if rng.random_bool(0.5) {
            before.extend(pre.iter().filter(|(pos, _)| *pos).map(|(_, a)| a.clone()));
        }
        let state = before.iter().cloned().fold(State::new(), |mut s, a| {
            s.insert(a);
            s
        });
        let holds = pre.iter().all(|(pos, a)| before.contains(a) == *pos);
        match (apply(&state, ga), holds) {
            (Err(_), false) => refused += 1,
            (Ok(next), true) => {
                let eff: Vec<Literal> = schema
                    .effects
                    .iter()
                    .map(|l| Literal {
                        positive: l.positive,
                        atom: instantiate(&l.atom, &binding),
                    })
                    .collect();
                // Re-evaluate every atom from scratch: added, else kept unless deleted.
                let expected: BTreeSet<Atom> = atoms
                    .iter()
                    .chain(&before)
                    .filter(|a| {
                        let adds = eff.iter().any(|l| l.positive && &l.atom == *a);
                        let dels = eff.iter().any(|l| !l.positive && &l.atom == *a);
                        adds || (before.contains(*a) && !dels)
                    })
                    .cloned()
                    .collect();
                if next.atoms() != &expected {
                    let diff: Vec<_> = next.atoms().symmetric_difference(&expected).collect();
                    return Err(format!("check {i}: {} disagrees on {diff:?}", ga.label()));
                }
                applied += 1;
            }
            (r, holds) => {
                return Err(format!(
                    "check {i}: {} applicability {} but oracle says {holds}",
                    ga.label(),
                    r.is_ok()
                ))
            }
        }
    }
    ensure(applied > 0 && refused > 0, || {
        format!("degenerate sample: {applied} applied, {refused} refused")
    })?;
    Ok(format!(
        "{TRANSITION_CHECKS} checks ({applied} applied, {refused} refused) match the oracle"
    ))
}

// 8 ------------------------------------------------------------------------

fn tree(root: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let p = e.map_err(|e| e.to_string())?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(out)
}

fn determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for run in ["first", "second"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_pddlkit"))
            .args([
                "run",
                "--config",
                "pipelines/logistics.yaml",
                "--backend",
                "fixture",
                "--out",
            ])
            .arg(&out)
            .current_dir(fixtures())
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            format!(
                "{run} run failed: {}",
                String::from_utf8_lossy(&status.stderr)
            )
        })?;
        trees.push(tree(&out)?);
    }
    let (a, b) = (&trees[0], &trees[1]);
    let names: Vec<&String> = a.keys().collect();
    ensure(a.keys().eq(b.keys()), || {
        format!(
            "file sets differ: {names:?} vs {:?}",
            b.keys().collect::<Vec<_>>()
        )
    })?;
    for (k, v) in a {
        ensure(b[k] == *v, || format!("{k} differs between runs"))?;
    }
    let bytes: usize = a.values().map(Vec::len).sum();
    Ok(format!("{} files, {bytes} bytes identical", a.len()))
}
