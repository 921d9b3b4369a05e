use std::fmt::Write;

use super::{InitialDefault, Literal, SortDef, SymbolKind, SystemDescription};

fn join<T: ToString>(items: &[T], sep: &str) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

fn body(lits: &[Literal]) -> String {
    if lits.is_empty() {
        String::new()
    } else {
        format!(" if {}", join(lits, ", "))
    }
}

fn default_line(d: &InitialDefault) -> String {
    format!(
        "{}: {}{}{}.",
        d.priority,
        if d.positive { "" } else { "-" },
        d.head,
        body(&d.body)
    )
}

/// Canonical text form. Parsing the output yields an equal description.
pub fn print_domain(desc: &SystemDescription) -> String {
    let mut out = String::new();
    let sig = &desc.signature;
    out.push_str("sorts:\n");
    for (name, def) in &sig.sorts {
        match def {
            SortDef::Enumerated(ms) => writeln!(out, "  {name} = {{{}}}", ms.join(", ")),
            SortDef::Union(ch) => writeln!(out, "  {name} = {}", ch.join(" + ")),
        }
        .expect("write to string");
    }
    let sections = [
        (SymbolKind::Static, "statics"),
        (SymbolKind::BasicFluent, "fluents basic"),
        (SymbolKind::DefinedFluent, "fluents defined"),
        (SymbolKind::AgentAction, "actions agent"),
        (SymbolKind::ExogenousAction, "actions exogenous"),
    ];
    for (kind, header) in sections {
        let syms: Vec<_> = sig.symbols().filter(|(k, _, _)| *k == kind).collect();
        if syms.is_empty() {
            continue;
        }
        writeln!(out, "{header}:").ok();
        for (_, name, args) in syms {
            if args.is_empty() {
                writeln!(out, "  {name}").ok();
            } else {
                writeln!(out, "  {name}({})", args.join(", ")).ok();
            }
        }
    }
    if !desc.facts.is_empty() {
        out.push_str("facts:\n");
        for f in &desc.facts {
            writeln!(out, "  {f}.").ok();
        }
    }
    if !desc.axioms.is_empty() {
        out.push_str("axioms:\n");
        for a in &desc.axioms {
            writeln!(out, "  {a}").ok();
        }
    }
    if !desc.defaults.is_empty() {
        out.push_str("defaults:\n");
        for d in &desc.defaults {
            writeln!(out, "  {}", default_line(d)).ok();
        }
    }
    if let Some(r) = &desc.refinement {
        out.push_str("refinement:\n");
        for c in &r.counterparts {
            let comps: Vec<String> = c.components.iter().map(|(f, g)| format!("{f}: {g}")).collect();
            writeln!(out, "  counterpart {} of {} = {{{}}}", c.fine, c.coarse, comps.join(", ")).ok();
        }
        if !r.magnified.is_empty() {
            writeln!(out, "  magnify {}", r.magnified.join(", ")).ok();
        }
        if let Some((s, f)) = &r.observer {
            writeln!(out, "  observer {s} via {f}").ok();
        }
        if !r.observe.is_empty() {
            writeln!(out, "  observe {}", r.observe.join(", ")).ok();
        }
        for t in &r.tests {
            let head = if t.args.is_empty() {
                t.fluent.clone()
            } else {
                format!("{}({})", t.fluent, join(&t.args, ", "))
            };
            writeln!(out, "  test {head} by {}{}.", t.observer, body(&t.body)).ok();
        }
        if !r.facts.is_empty() {
            out.push_str("fine facts:\n");
            for f in &r.facts {
                writeln!(out, "  {f}.").ok();
            }
        }
        if !r.axioms.is_empty() {
            out.push_str("fine axioms:\n");
            for a in &r.axioms {
                writeln!(out, "  {a}").ok();
            }
        }
    }
    out
}
