//! Canonical pretty-printer. Output is deterministic and follows declaration
//! order; three-space indentation, one predicate/object/atom per line.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::{Atom, Domain, Literal, ObjectDecl, Problem, Requirement, TypedParam, OBJECT};

const INDENT: &str = "   ";

pub fn format_atom(atom: &Atom) -> String {
    let mut out = String::with_capacity(2 + atom.predicate.len() + atom.args.len() * 4);
    out.push('(');
    out.push_str(&atom.predicate);
    for a in &atom.args {
        out.push(' ');
        out.push_str(a);
    }
    out.push(')');
    out
}

pub fn format_literal(lit: &Literal) -> String {
    if lit.positive {
        format_atom(&lit.atom)
    } else {
        alloc::format!("(not {})", format_atom(&lit.atom))
    }
}

fn conjunction(lits: &[Literal]) -> String {
    let mut out = String::from("(and");
    for l in lits {
        out.push(' ');
        out.push_str(&format_literal(l));
    }
    out.push(')');
    out
}

fn params(ps: &[TypedParam], typed: bool) -> String {
    let mut out = String::new();
    for (i, p) in ps.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&p.name);
        if typed || p.type_name != OBJECT {
            out.push_str(" - ");
            out.push_str(&p.type_name);
        }
    }
    out
}

pub fn format_domain(d: &Domain) -> String {
    let typed = d.has_requirement(Requirement::Typing) || !d.types.is_empty();
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", d.name);
    if !d.requirements.is_empty() {
        let reqs: Vec<&str> = d.requirements.iter().map(|r| r.keyword()).collect();
        let _ = writeln!(out, "{INDENT}(:requirements {})", reqs.join(" "));
    }
    if !d.types.is_empty() {
        let _ = writeln!(out, "{INDENT}(:types");
        for t in &d.types {
            let _ = writeln!(out, "{INDENT}{INDENT}{} - {}", t.name, t.parent);
        }
        let _ = writeln!(out, "{INDENT})");
    }
    if !d.predicates.is_empty() {
        let _ = writeln!(out, "{INDENT}(:predicates");
        for p in &d.predicates {
            let _ = write!(out, "{INDENT}{INDENT}({}", p.name);
            if !p.params.is_empty() {
                let _ = write!(out, " {}", params(&p.params.0, typed));
            }
            out.push(')');
            if !p.desc.is_empty() {
                let desc: Vec<&str> = p.desc.lines().map(str::trim).collect();
                let _ = write!(out, " ; {}", desc.join(" "));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "{INDENT})");
    }
    for a in &d.actions {
        let _ = writeln!(out, "{INDENT}(:action {}", a.name);
        let _ = writeln!(
            out,
            "{INDENT}{INDENT}:parameters ({})",
            params(&a.params, typed)
        );
        let _ = writeln!(
            out,
            "{INDENT}{INDENT}:precondition {}",
            conjunction(&a.preconditions)
        );
        let _ = writeln!(out, "{INDENT}{INDENT}:effect {}", conjunction(&a.effects));
        let _ = writeln!(out, "{INDENT})");
    }
    out.push_str(")\n");
    out
}

/// `name - type`, one object per line.
pub fn format_objects(objects: &[ObjectDecl]) -> String {
    let lines: Vec<String> = objects
        .iter()
        .map(|o| alloc::format!("{} - {}", o.name, o.type_name))
        .collect();
    lines.join("\n")
}

/// One atom per line; empty input gives an empty block.
pub fn format_initial(init: &[Atom]) -> String {
    let lines: Vec<String> = init.iter().map(format_atom).collect();
    lines.join("\n")
}

/// Always wrapped in `(and ...)`, even for a single literal.
pub fn format_goal(goal: &[Literal]) -> String {
    conjunction(goal)
}

fn block(out: &mut String, head: &str, body: &str) {
    let _ = writeln!(out, "{INDENT}({head}");
    for line in body.lines() {
        let line = line.trim();
        if !line.is_empty() {
            let _ = writeln!(out, "{INDENT}{INDENT}{line}");
        }
    }
    let _ = writeln!(out, "{INDENT})");
}

/// Lays out a problem file from already-formatted parts: define/problem,
/// `:domain`, `:objects`, `:init`, `:goal`.
pub fn generate_task(
    domain: &str,
    problem: &str,
    objects: &str,
    initial: &str,
    goal: &str,
) -> String {
    let mut out = String::new();
    out.push_str("(define\n");
    let _ = writeln!(out, "{INDENT}(problem {problem})");
    let _ = writeln!(out, "{INDENT}(:domain {domain})");
    block(&mut out, ":objects", objects);
    block(&mut out, ":init", initial);
    block(&mut out, ":goal", goal);
    out.push_str(")\n");
    out
}

pub fn format_problem(p: &Problem) -> String {
    generate_task(
        &p.domain_name,
        &p.name,
        &format_objects(&p.objects),
        &format_initial(&p.init),
        &format_goal(&p.goal),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem, Action, Predicate};
    use alloc::vec;

    #[test]
    fn zero_actions_have_no_action_block() {
        let mut d = Domain::new("d");
        d.predicates.push(Predicate::new("p", Vec::new(), "", ""));
        let text = format_domain(&d);
        assert!(!text.contains("(:action"));
        assert_eq!(parse_domain(&text).unwrap(), d);
    }

    #[test]
    fn goal_is_always_a_conjunction() {
        let g = vec![Literal::pos(Atom::new(
            "on_top",
            ["red_block", "green_block"],
        ))];
        assert_eq!(format_goal(&g), "(and (on_top red_block green_block))");
    }

    #[test]
    fn empty_init_is_an_empty_block() {
        assert_eq!(format_initial(&[]), "");
        let p = Problem {
            name: "p".into(),
            domain_name: "d".into(),
            objects: vec![],
            init: vec![],
            goal: vec![Literal::neg(Atom::new("q", ["a"]))],
        };
        let text = format_problem(&p);
        assert_eq!(parse_problem(&text).unwrap(), p);
    }

    #[test]
    fn typed_domain_prints_types() {
        let mut d = Domain::new("t");
        d.requirements.push(Requirement::Typing);
        d.actions.push(Action {
            name: "go".into(),
            params: vec![TypedParam::new("?x", "object")],
            preconditions: vec![],
            effects: vec![],
        });
        let text = format_domain(&d);
        assert!(text.contains(":parameters (?x - object)"), "{text}");
        assert!(text.contains(":precondition (and)"));
    }
}
