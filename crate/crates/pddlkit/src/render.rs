//! Human-readable diagnostics, compiler style.

use std::fmt::Write;
use std::path::Path;

use pddlkit_core::diagnostics::{Diagnostic, FileKind};

/// Source files the diagnostics point into.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sources<'a> {
    pub domain: Option<&'a Path>,
    pub problem: Option<&'a Path>,
}

impl<'a> Sources<'a> {
    fn file(&self, kind: FileKind) -> Option<&'a Path> {
        match kind {
            FileKind::Domain => self.domain,
            FileKind::Problem => self.problem,
        }
    }
}

/// ```text
/// error[ArityMismatch]: `truck-has-space` takes 1 argument(s), got 2
///   --> domain.pddl:18 (action[load_truck]/precondition/2)
///   = help: ...
/// ```
pub fn render(d: &Diagnostic, sources: Sources<'_>) -> String {
    let mut out = format!("{}[{}]: {}\n", d.severity, d.code, d.message);
    let file = sources.file(d.location.file).map_or_else(
        || format!("<{}>", kind(d.location.file)),
        |p| p.display().to_string(),
    );
    let line = d.location.line.map(|l| format!(":{l}")).unwrap_or_default();
    let _ = writeln!(out, "  --> {file}{line} ({})", d.location.path);
    if let Some(s) = &d.suggestion {
        let _ = writeln!(out, "  = help: {s}");
    }
    out
}

fn kind(k: FileKind) -> &'static str {
    match k {
        FileKind::Domain => "domain",
        FileKind::Problem => "problem",
    }
}

pub fn render_all(diags: &[Diagnostic], sources: Sources<'_>) -> String {
    let mut out = String::new();
    for d in diags {
        out.push_str(&render(d, sources));
    }
    let errors = diags.iter().filter(|d| d.is_error()).count();
    let _ = writeln!(
        out,
        "{errors} error(s), {} warning(s)",
        diags.len() - errors
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use pddlkit_core::diagnostics::Code;

    #[test]
    fn file_and_line() {
        let mut d = Diagnostic::new(
            Code::ArityMismatch,
            FileKind::Domain,
            "action[a]/precondition/0",
            "bad arity",
        )
        .with_suggestion("drop an argument");
        d.location.line = Some(7);
        let s = render(
            &d,
            Sources {
                domain: Some(Path::new("d.pddl")),
                problem: None,
            },
        );
        assert_eq!(
            s,
            "error[ArityMismatch]: bad arity\n  --> d.pddl:7 (action[a]/precondition/0)\n  = help: drop an argument\n"
        );
        d.location.file = FileKind::Problem;
        d.location.line = None;
        assert!(render(&d, Sources::default()).contains("--> <problem> ("));
    }
}
