use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::lexer::{self, Node, Pos};
use super::{
    Action, Atom, Domain, Literal, ObjectDecl, Predicate, Problem, Requirement, TypeDecl,
    TypedParam, EQUALITY, OBJECT,
};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: expected {expected}, found {found}")]
    Syntax {
        line: u32,
        col: u32,
        expected: String,
        found: String,
    },
    #[error("{line}:{col}: unsupported feature `{feature}`")]
    UnsupportedFeature {
        feature: String,
        line: u32,
        col: u32,
    },
    #[error("{line}:{col}: goal has no literal")]
    EmptyGoal { line: u32, col: u32 },
}

impl ParseError {
    pub(crate) fn syntax(pos: Pos, expected: &str, found: &str) -> Self {
        ParseError::Syntax {
            line: pos.line,
            col: pos.col,
            expected: expected.into(),
            found: found.into(),
        }
    }

    fn unsupported(pos: Pos, feature: &str) -> Self {
        ParseError::UnsupportedFeature {
            feature: feature.into(),
            line: pos.line,
            col: pos.col,
        }
    }

    /// `(line, col)` of the offending token.
    pub fn position(&self) -> (u32, u32) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::UnsupportedFeature { line, col, .. }
            | ParseError::EmptyGoal { line, col } => (*line, *col),
        }
    }
}

/// Element path → 1-based source line, for rendering diagnostics.
///
/// Paths look like `action[pickup]/effect/2` or `object[a]`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SourceMap {
    lines: BTreeMap<String, u32>,
}

impl SourceMap {
    fn record(&mut self, path: String, pos: Pos) {
        self.lines.entry(path).or_insert(pos.line);
    }

    /// Line of `path`, falling back to its closest recorded ancestor.
    pub fn line_of(&self, path: &str) -> Option<u32> {
        let mut cur = path;
        loop {
            if let Some(l) = self.lines.get(cur) {
                return Some(*l);
            }
            cur = &cur[..cur.rfind('/')?];
        }
    }
}

pub fn parse_domain(text: &str) -> Result<Domain, ParseError> {
    parse_domain_with_spans(text).map(|(d, _)| d)
}

pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    parse_problem_with_spans(text).map(|(p, _)| p)
}

/// Parses one goal/precondition/effect formula such as `(and (p ?x) (not (q)))`.
pub fn parse_formula(text: &str) -> Result<Vec<Literal>, ParseError> {
    let node = lexer::read(text)?;
    let mut out = Vec::new();
    formula(&node, &mut out)?;
    Ok(out)
}

fn found(node: Option<&Node>) -> String {
    node.map_or_else(|| "end of list".to_string(), Node::describe)
}

fn expect_list<'a>(
    node: Option<&'a Node>,
    at: Pos,
    expected: &str,
) -> Result<&'a [Node], ParseError> {
    match node {
        Some(n) => n
            .list()
            .ok_or_else(|| ParseError::syntax(n.pos, expected, &n.describe())),
        None => Err(ParseError::syntax(at, expected, "end of list")),
    }
}

fn expect_atom<'a>(node: Option<&'a Node>, at: Pos, expected: &str) -> Result<&'a str, ParseError> {
    match node {
        Some(n) => n
            .atom()
            .ok_or_else(|| ParseError::syntax(n.pos, expected, &n.describe())),
        None => Err(ParseError::syntax(at, expected, "end of list")),
    }
}

fn expect_name<'a>(node: Option<&'a Node>, at: Pos, expected: &str) -> Result<&'a str, ParseError> {
    let name = expect_atom(node, at, expected)?;
    if name.starts_with(':') || name.starts_with('?') || name == "-" {
        let pos = node.map_or(at, |n| n.pos);
        return Err(ParseError::syntax(pos, expected, &format!("`{name}`")));
    }
    Ok(name)
}

/// Opens `(define (<kind> NAME) ...)`; returns the name and the remaining sections.
fn header<'a>(root: &'a Node, kind: &str) -> Result<(&'a str, &'a [Node]), ParseError> {
    let items = root.list().unwrap_or_default();
    let kw = expect_atom(items.first(), root.pos, "`define`")?;
    if kw != "define" {
        return Err(ParseError::syntax(
            items[0].pos,
            "`define`",
            &format!("`{kw}`"),
        ));
    }
    let head = expect_list(items.get(1), root.pos, &format!("`({kind} NAME)`"))?;
    let head_pos = items[1].pos;
    match head.first().and_then(Node::atom) {
        Some(k) if k == kind => {}
        _ => {
            return Err(ParseError::syntax(
                head_pos,
                &format!("`{kind}`"),
                &found(head.first()),
            ))
        }
    }
    let name = expect_name(head.get(1), head_pos, "a name")?;
    if let Some(extra) = head.get(2) {
        return Err(ParseError::syntax(extra.pos, "`)`", &extra.describe()));
    }
    Ok((name, &items[2..]))
}

fn section_keyword<'a>(
    node: &'a Node,
    expected: &str,
) -> Result<(&'a str, &'a [Node]), ParseError> {
    let items = node
        .list()
        .ok_or_else(|| ParseError::syntax(node.pos, expected, &node.describe()))?;
    let kw = expect_atom(items.first(), node.pos, expected)?;
    Ok((kw, &items[1..]))
}

fn requirement_list(items: &[Node], at: Pos) -> Result<Vec<Requirement>, ParseError> {
    let mut out = Vec::new();
    for n in items {
        let kw = expect_atom(Some(n), at, "a requirement flag")?;
        match Requirement::from_keyword(kw) {
            Some(r) => {
                if !out.contains(&r) {
                    out.push(r);
                }
            }
            None if kw.starts_with(':') => return Err(ParseError::unsupported(n.pos, kw)),
            None => {
                return Err(ParseError::syntax(
                    n.pos,
                    "a requirement flag",
                    &format!("`{kw}`"),
                ))
            }
        }
    }
    Ok(out)
}

/// `a b - t c` style list. Entries without a type get [`OBJECT`].
fn typed_list<'a>(
    items: &'a [Node],
    what: &str,
    variables: bool,
) -> Result<Vec<(&'a str, String, Pos)>, ParseError> {
    let mut out: Vec<(&str, String, Pos)> = Vec::new();
    let mut pending = 0usize;
    let mut i = 0;
    while i < items.len() {
        let n = &items[i];
        let tok = match n.atom() {
            Some(t) => t,
            None => {
                if n.head() == Some("either") {
                    return Err(ParseError::unsupported(n.pos, "either"));
                }
                return Err(ParseError::syntax(n.pos, what, &n.describe()));
            }
        };
        if tok == "-" {
            if pending == 0 {
                return Err(ParseError::syntax(n.pos, what, "`-`"));
            }
            let ty_node = items.get(i + 1);
            if let Some(t) = ty_node {
                if t.head() == Some("either") {
                    return Err(ParseError::unsupported(t.pos, "either"));
                }
            }
            let ty = expect_name(ty_node, n.pos, "a type name")?;
            let len = out.len();
            for entry in &mut out[len - pending..] {
                entry.1 = ty.to_string();
            }
            pending = 0;
            i += 2;
            continue;
        }
        if variables != tok.starts_with('?') || tok.starts_with(':') || (variables && tok.len() < 2)
        {
            return Err(ParseError::syntax(n.pos, what, &format!("`{tok}`")));
        }
        out.push((tok, OBJECT.to_string(), n.pos));
        pending += 1;
        i += 1;
    }
    Ok(out)
}

fn formula(node: &Node, out: &mut Vec<Literal>) -> Result<(), ParseError> {
    let items = node
        .list()
        .ok_or_else(|| ParseError::syntax(node.pos, "a formula", &node.describe()))?;
    let Some(first) = items.first() else {
        return Ok(());
    };
    let Some(head) = first.atom() else {
        return Err(ParseError::syntax(
            first.pos,
            "a predicate name",
            &first.describe(),
        ));
    };
    match head {
        "and" => {
            for sub in &items[1..] {
                formula(sub, out)?;
            }
            Ok(())
        }
        "not" => {
            if items.len() != 2 {
                return Err(ParseError::syntax(
                    node.pos,
                    "`(not ATOM)`",
                    "a malformed negation",
                ));
            }
            let inner = &items[1];
            if let Some(h) = inner.head() {
                if is_connective(h) {
                    return match unsupported_connective(h) {
                        Some(f) => Err(ParseError::unsupported(inner.pos, f)),
                        None => Err(ParseError::syntax(
                            inner.pos,
                            "an atom",
                            &format!("`({h} ...)`"),
                        )),
                    };
                }
            }
            out.push(Literal::neg(atom(inner)?));
            Ok(())
        }
        h => {
            if let Some(f) = unsupported_connective(h) {
                return Err(ParseError::unsupported(first.pos, f));
            }
            out.push(Literal::pos(atom(node)?));
            Ok(())
        }
    }
}

fn is_connective(h: &str) -> bool {
    h == "and" || h == "not" || unsupported_connective(h).is_some()
}

fn unsupported_connective(head: &str) -> Option<&'static str> {
    Some(match head {
        "or" | "imply" => ":disjunctive-preconditions",
        "exists" => ":existential-preconditions",
        "forall" => ":universal-preconditions",
        "when" => ":conditional-effects",
        "increase" | "decrease" | "assign" | "scale-up" | "scale-down" | "<" | ">" | "<="
        | ">=" => ":numeric-fluents",
        _ => return None,
    })
}

fn atom(node: &Node) -> Result<Atom, ParseError> {
    let items = node
        .list()
        .ok_or_else(|| ParseError::syntax(node.pos, "an atom", &node.describe()))?;
    let pred = expect_atom(items.first(), node.pos, "a predicate name")?;
    if pred.starts_with('?') || pred.starts_with(':') || pred == "-" {
        return Err(ParseError::syntax(
            items[0].pos,
            "a predicate name",
            &format!("`{pred}`"),
        ));
    }
    let mut args = Vec::with_capacity(items.len() - 1);
    for a in &items[1..] {
        match a.atom() {
            Some(t) if t != "-" && !t.starts_with(':') => args.push(t.to_string()),
            Some(t) => return Err(ParseError::syntax(a.pos, "a term", &format!("`{t}`"))),
            None if pred == EQUALITY => {
                return Err(ParseError::unsupported(a.pos, ":numeric-fluents"))
            }
            None => return Err(ParseError::syntax(a.pos, "a term", "a list")),
        }
    }
    if pred == EQUALITY && args.len() != 2 {
        return Err(ParseError::syntax(
            node.pos,
            "two terms for `=`",
            &format!("{} terms", args.len()),
        ));
    }
    Ok(Atom {
        predicate: pred.to_string(),
        args,
    })
}

fn record_literals(map: &mut SourceMap, base: &str, node: &Node) {
    let mut idx = 0usize;
    let mut stack = alloc::vec![node];
    // Depth-first in source order; literal indices match `formula` flattening.
    let mut order = Vec::new();
    while let Some(n) = stack.pop() {
        match n.head() {
            Some("and") => {
                for sub in n.list().unwrap_or_default()[1..].iter().rev() {
                    stack.push(sub);
                }
            }
            Some(_) => order.push(n.pos),
            None => {}
        }
    }
    for pos in order {
        map.record(format!("{base}/{idx}"), pos);
        idx += 1;
    }
}

fn section_feature(kw: &str) -> Option<&'static str> {
    Some(match kw {
        ":constants" => ":constants",
        ":functions" => ":numeric-fluents",
        ":derived" => ":derived-predicates",
        ":durative-action" => ":durative-actions",
        ":constraints" => ":constraints",
        ":metric" => ":numeric-fluents",
        ":timed-initial-literals" => ":timed-initial-literals",
        _ => return None,
    })
}

pub fn parse_domain_with_spans(text: &str) -> Result<(Domain, SourceMap), ParseError> {
    let root = lexer::read(text)?;
    let (name, sections) = header(&root, "domain")?;
    let mut map = SourceMap::default();
    map.record("domain".into(), root.pos);
    let mut domain = Domain::new(name);

    for sec in sections {
        let (kw, body) = section_keyword(sec, "a domain section")?;
        match kw {
            ":requirements" => {
                map.record("requirements".into(), sec.pos);
                for r in requirement_list(body, sec.pos)? {
                    if !domain.requirements.contains(&r) {
                        domain.requirements.push(r);
                    }
                }
            }
            ":types" => {
                map.record("types".into(), sec.pos);
                for (tname, parent, pos) in typed_list(body, "a type name", false)? {
                    if tname == OBJECT {
                        continue;
                    }
                    map.record(format!("type[{tname}]"), pos);
                    domain.types.push(TypeDecl {
                        name: tname.into(),
                        parent,
                    });
                }
            }
            ":predicates" => {
                map.record("predicates".into(), sec.pos);
                for p in body {
                    let items = p.list().ok_or_else(|| {
                        ParseError::syntax(p.pos, "a predicate signature", &p.describe())
                    })?;
                    let pname = expect_name(items.first(), p.pos, "a predicate name")?;
                    let params = typed_list(&items[1..], "a variable", true)?
                        .into_iter()
                        .map(|(n, t, _)| TypedParam::new(n, t))
                        .collect::<Vec<_>>();
                    map.record(format!("predicate[{pname}]"), p.pos);
                    let desc = p.comment.clone().unwrap_or_default();
                    domain.predicates.push(Predicate::new(
                        pname,
                        params,
                        desc,
                        &text[p.start..p.end],
                    ));
                }
            }
            ":action" => {
                let action = parse_action(sec, body, &mut map)?;
                domain.actions.push(action);
            }
            other => {
                return Err(match section_feature(other) {
                    Some(f) => ParseError::unsupported(sec.pos, f),
                    None => ParseError::syntax(sec.pos, "a domain section", &format!("`{other}`")),
                })
            }
        }
    }
    Ok((domain, map))
}

fn parse_action(sec: &Node, body: &[Node], map: &mut SourceMap) -> Result<Action, ParseError> {
    let name = expect_name(body.first(), sec.pos, "an action name")?;
    let base = format!("action[{name}]");
    map.record(base.clone(), sec.pos);
    let mut action = Action {
        name: name.to_string(),
        params: Vec::new(),
        preconditions: Vec::new(),
        effects: Vec::new(),
    };
    let mut seen: Vec<&str> = Vec::new();
    let mut i = 1;
    while i < body.len() {
        let key_node = &body[i];
        let key = expect_atom(Some(key_node), sec.pos, "an action field")?;
        if seen.contains(&key) {
            return Err(ParseError::syntax(
                key_node.pos,
                "a new action field",
                &format!("repeated `{key}`"),
            ));
        }
        let value = body.get(i + 1).ok_or_else(|| {
            ParseError::syntax(key_node.pos, &format!("a value for `{key}`"), "end of list")
        })?;
        match key {
            ":parameters" => {
                let items = expect_list(Some(value), key_node.pos, "a parameter list")?;
                map.record(format!("{base}/parameters"), value.pos);
                for (n, t, _) in typed_list(items, "a variable", true)? {
                    action.params.push(TypedParam::new(n, t));
                }
            }
            ":precondition" => {
                map.record(format!("{base}/precondition"), value.pos);
                record_literals(map, &format!("{base}/precondition"), value);
                formula(value, &mut action.preconditions)?;
            }
            ":effect" => {
                map.record(format!("{base}/effect"), value.pos);
                record_literals(map, &format!("{base}/effect"), value);
                formula(value, &mut action.effects)?;
            }
            other => {
                return Err(ParseError::syntax(
                    key_node.pos,
                    "`:parameters`, `:precondition` or `:effect`",
                    &format!("`{other}`"),
                ))
            }
        }
        seen.push(key);
        i += 2;
    }
    Ok(action)
}

pub fn parse_problem_with_spans(text: &str) -> Result<(Problem, SourceMap), ParseError> {
    let root = lexer::read(text)?;
    let (name, sections) = header(&root, "problem")?;
    let mut map = SourceMap::default();
    map.record("problem".into(), root.pos);
    let mut domain_name: Option<String> = None;
    let mut objects = Vec::new();
    let mut init = Vec::new();
    let mut goal: Option<(Vec<Literal>, Pos)> = None;

    for sec in sections {
        let (kw, body) = section_keyword(sec, "a problem section")?;
        match kw {
            ":domain" => {
                domain_name =
                    Some(expect_name(body.first(), sec.pos, "a domain name")?.to_string());
            }
            ":requirements" => {
                requirement_list(body, sec.pos)?;
            }
            ":objects" => {
                map.record("objects".into(), sec.pos);
                for (n, t, pos) in typed_list(body, "an object name", false)? {
                    map.record(format!("object[{n}]"), pos);
                    objects.push(ObjectDecl::new(n, t));
                }
            }
            ":init" => {
                map.record("init".into(), sec.pos);
                for (idx, a) in body.iter().enumerate() {
                    match a.head() {
                        Some("not") => {
                            return Err(ParseError::syntax(
                                a.pos,
                                "a positive atom",
                                "a negated literal",
                            ))
                        }
                        Some("=") => {
                            return Err(ParseError::unsupported(a.pos, ":numeric-fluents"))
                        }
                        Some("and") => {
                            return Err(ParseError::syntax(a.pos, "an atom", "`(and ...)`"))
                        }
                        _ => {}
                    }
                    map.record(format!("init/{idx}"), a.pos);
                    init.push(atom(a)?);
                }
            }
            ":goal" => {
                map.record("goal".into(), sec.pos);
                let mut lits = Vec::new();
                if let Some(f) = body.first() {
                    record_literals(&mut map, "goal", f);
                    formula(f, &mut lits)?;
                }
                if let Some(extra) = body.get(1) {
                    return Err(ParseError::syntax(extra.pos, "`)`", &extra.describe()));
                }
                goal = Some((lits, sec.pos));
            }
            other => {
                return Err(match section_feature(other) {
                    Some(f) => ParseError::unsupported(sec.pos, f),
                    None => ParseError::syntax(sec.pos, "a problem section", &format!("`{other}`")),
                })
            }
        }
    }

    let domain_name = domain_name
        .ok_or_else(|| ParseError::syntax(root.pos, "a `(:domain NAME)` section", "none"))?;
    let goal = match goal {
        Some((lits, _)) if !lits.is_empty() => lits,
        Some((_, pos)) => {
            return Err(ParseError::EmptyGoal {
                line: pos.line,
                col: pos.col,
            })
        }
        None => {
            return Err(ParseError::EmptyGoal {
                line: root.pos.line,
                col: root.pos.col,
            })
        }
    };
    Ok((
        Problem {
            name: name.to_string(),
            domain_name,
            objects,
            init,
            goal,
        },
        map,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const PICKUP_DOMAIN: &str = "(define (domain blocksworld)
    (:requirements :strips)
    (:predicates (clear ?x) (on-table ?x) (arm-empty) (holding ?x) (on ?x ?y))
    (:action pickup
        :parameters (?ob)
        :precondition (and (clear ?ob) (on-table ?ob) (arm-empty))
        :effect (and (holding ?ob) (not (clear ?ob)) (not (on-table ?ob)) (not (arm-empty)))
    ))";

    #[test]
    fn pickup_only_domain() {
        let d = parse_domain(PICKUP_DOMAIN).unwrap();
        assert_eq!(d.name, "blocksworld");
        assert_eq!(d.requirements, vec![Requirement::Strips]);
        assert_eq!(d.predicates.len(), 5);
        assert_eq!(d.actions.len(), 1);
        let a = &d.actions[0];
        assert_eq!(a.name, "pickup");
        assert_eq!(a.params, vec![TypedParam::new("?ob", OBJECT)]);
        assert_eq!(a.preconditions.len(), 3);
        assert_eq!(a.effects[1], Literal::neg(Atom::new("clear", ["?ob"])));
        assert_eq!(d.predicates[4].arity(), 2);
        assert_eq!(d.predicates[2].raw, "(arm-empty)");
    }

    #[test]
    fn minimal_domain() {
        let d = parse_domain("(define (domain d))").unwrap();
        assert_eq!(d.name, "d");
        assert!(d.predicates.is_empty() && d.actions.is_empty());
    }

    #[test]
    fn arity_faults_are_not_parse_errors() {
        let d = parse_domain(
            "(define (domain d) (:predicates (clear ?x))
               (:action a :parameters (?x ?y) :precondition (clear ?x ?y) :effect ()))",
        )
        .unwrap();
        let expected = Action {
            name: "a".into(),
            params: vec![TypedParam::new("?x", OBJECT), TypedParam::new("?y", OBJECT)],
            preconditions: vec![Literal::pos(Atom::new("clear", ["?x", "?y"]))],
            effects: vec![],
        };
        assert_eq!(d.actions[0], expected);
    }

    #[test]
    fn case_folds_and_strips_comments() {
        let d =
            parse_domain("(DEFINE (Domain BW) ; hello\n (:PREDICATES (On ?X ?Y) ; x sits on y\n))")
                .unwrap();
        assert_eq!(d.name, "bw");
        assert_eq!(d.predicates[0].name, "on");
        assert_eq!(d.predicates[0].desc, "x sits on y");
        assert_eq!(d.predicates[0].raw, "(On ?X ?Y)");
    }

    #[test]
    fn typed_lists_group_types() {
        let d = parse_domain(
            "(define (domain l) (:requirements :strips :typing)
               (:types truck plane - vehicle package)
               (:predicates (at ?v - vehicle ?a ?b - location)))",
        )
        .unwrap();
        assert_eq!(
            d.types[0],
            TypeDecl {
                name: "truck".into(),
                parent: "vehicle".into()
            }
        );
        assert_eq!(
            d.types[2],
            TypeDecl {
                name: "package".into(),
                parent: OBJECT.into()
            }
        );
        let ps: Vec<_> = d.predicates[0]
            .params
            .iter()
            .map(|p| p.type_name.as_str())
            .collect();
        assert_eq!(ps, ["vehicle", "location", "location"]);
    }

    #[test]
    fn unsupported_features() {
        let cases = [
            ("(define (domain d) (:requirements :disjunctive-preconditions))", ":disjunctive-preconditions"),
            ("(define (domain d) (:functions (f)))", ":numeric-fluents"),
            ("(define (domain d) (:action a :parameters () :precondition (or (p) (q)) :effect ()))", ":disjunctive-preconditions"),
            ("(define (domain d) (:action a :parameters () :precondition () :effect (when (p) (q))))", ":conditional-effects"),
            ("(define (domain d) (:action a :parameters () :precondition (forall (?x) (p ?x)) :effect ()))", ":universal-preconditions"),
        ];
        for (src, feat) in cases {
            match parse_domain(src) {
                Err(ParseError::UnsupportedFeature { feature, .. }) => {
                    assert_eq!(feature, feat, "{src}")
                }
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_domain("(define (domain d)\n  (:action a :parameters (x) :effect ()))")
            .unwrap_err();
        assert_eq!(err.position(), (2, 27));
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn pickup_only_problem() {
        let p = parse_problem(
            "(define (problem blocksworld-problem)
   (:domain blocksworld)
   (:objects A B C) ; Blocks
   (:init (ontable A) (ontable B) (on C A) (clear B) (clear C)) ; Initial state
   (:goal (and (on A B) (on B C)))) ; Goal state",
        )
        .unwrap();
        let names: Vec<_> = p.objects.iter().map(|o| o.name.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        assert!(p.objects.iter().all(|o| o.type_name == OBJECT));
        assert_eq!(p.init.len(), 5);
        assert_eq!(
            p.goal,
            vec![
                Literal::pos(Atom::new("on", ["a", "b"])),
                Literal::pos(Atom::new("on", ["b", "c"]))
            ]
        );
    }

    #[test]
    fn empty_init_and_empty_goal() {
        let p = parse_problem("(define (problem p) (:domain d) (:init) (:goal (q)))").unwrap();
        assert!(p.init.is_empty());
        for src in [
            "(define (problem p) (:domain d) (:goal))",
            "(define (problem p) (:domain d) (:goal (and)))",
            "(define (problem p) (:domain d))",
        ] {
            assert!(
                matches!(parse_problem(src), Err(ParseError::EmptyGoal { .. })),
                "{src}"
            );
        }
    }

    #[test]
    fn init_must_be_positive() {
        let err = parse_problem("(define (problem p) (:domain d) (:init (not (q))) (:goal (q)))")
            .unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn source_map_resolves_ancestors() {
        let (_, map) = parse_domain_with_spans(PICKUP_DOMAIN).unwrap();
        assert_eq!(map.line_of("action[pickup]/effect/1"), Some(7));
        assert_eq!(map.line_of("action[pickup]/precondition/0"), Some(6));
        assert_eq!(map.line_of("action[pickup]/parameters/?ob"), Some(5));
        assert_eq!(map.line_of("predicate[on]"), Some(3));
        assert_eq!(map.line_of("nowhere"), None);
    }

    #[test]
    fn equality_atoms() {
        let lits = parse_formula("(and (not (= ?x ?y)) (on ?x ?y))").unwrap();
        assert!(lits[0].atom.is_equality() && !lits[0].positive);
        assert!(parse_formula("(= ?x)").is_err());
    }
}
