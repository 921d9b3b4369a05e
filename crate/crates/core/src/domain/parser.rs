use std::collections::{BTreeMap, BTreeSet};

use super::{
    Atom, Axiom, AxiomKind, Diagnostic, InitialDefault, DomainError, Literal, Signature, SortDef, Span,
    SymbolKind, SystemDescription, Term, UNIVERSE,
};
use crate::multires::{Counterpart, RefinementSpec, TestSpec};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u32),
    Punct(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

const PUNCT: [&str; 11] = ["!=", "(", ")", ",", "{", "}", ":", "+", "=", "-", "."];

fn lex(line: &str, lineno: usize) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '%' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            if i < chars.len() && chars[i] == '*' {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), col });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse().map_err(|_| Diagnostic {
                span: Span { line: lineno, col },
                message: format!("integer `{text}` out of range"),
            })?;
            out.push(Token { tok: Tok::Int(n), col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCT.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                out.push(Token { tok: Tok::Punct(p), col });
                i += p.len();
            }
            None => {
                return Err(Diagnostic {
                    span: Span { line: lineno, col },
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl<'a> Cursor<'a> {
    fn new(toks: &'a [Token], line: usize, end_col: usize) -> Self {
        Cursor { toks, pos: 0, line, end_col }
    }

    fn span(&self) -> Span {
        let col = self.toks.get(self.pos).map_or(self.end_col, |t| t.col);
        Span { line: self.line, col }
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(Diagnostic { span: self.span(), message: message.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.tok)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, k: &str) -> bool {
        if self.is_keyword(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(format!("expected `{p}`"))
        }
    }

    fn expect_keyword(&mut self, k: &str) -> PResult<()> {
        if self.eat_keyword(k) {
            Ok(())
        } else {
            self.err(format!("expected `{k}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) if !is_reserved(s) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn lower_ident(&mut self, what: &str) -> PResult<String> {
        let span = self.span();
        let s = self.ident()?;
        if is_var_name(&s) {
            return Err(Diagnostic { span, message: format!("expected {what}, found variable `{s}`") });
        }
        Ok(s)
    }

    fn int(&mut self) -> PResult<u32> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => self.err("expected integer"),
        }
    }

    fn finish(&mut self) -> PResult<()> {
        self.eat_punct(".");
        if self.at_end() {
            Ok(())
        } else {
            self.err("unexpected trailing input")
        }
    }

    fn term(&mut self) -> PResult<Term> {
        let s = self.ident()?;
        Ok(if is_var_name(&s) { Term::Var(s) } else { Term::Const(s) })
    }

    fn atom(&mut self) -> PResult<Atom> {
        let pred = self.lower_ident("predicate")?;
        let mut args = Vec::new();
        if self.eat_punct("(") {
            loop {
                args.push(self.term()?);
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        Ok(Atom { pred, args })
    }

    fn signed_atom(&mut self) -> PResult<(Atom, bool)> {
        let positive = !self.eat_punct("-");
        Ok((self.atom()?, positive))
    }

    fn body_literal(&mut self) -> PResult<Literal> {
        if matches!(self.peek(), Some(Tok::Ident(_)))
            && matches!(self.peek2(), Some(Tok::Punct("=")) | Some(Tok::Punct("!=")))
        {
            let a = self.term()?;
            let eq = self.eat_punct("=");
            if !eq {
                self.expect_punct("!=")?;
            }
            let b = self.term()?;
            return Ok(if eq { Literal::Eq(a, b) } else { Literal::Neq(a, b) });
        }
        let (atom, positive) = self.signed_atom()?;
        Ok(Literal::Atom { atom, positive })
    }

    fn body(&mut self) -> PResult<Vec<Literal>> {
        let mut out = Vec::new();
        if self.eat_keyword("if") {
            loop {
                out.push(self.body_literal()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        Ok(out)
    }

    fn axiom(&mut self) -> PResult<Axiom> {
        if self.eat_keyword("impossible") {
            let action = self.atom()?;
            if self.is_punct(",") {
                return self.err("multi-action executability conditions are not supported");
            }
            let body = self.body()?;
            self.finish()?;
            return Ok(Axiom::impossible(action, body));
        }
        let (first, positive) = self.signed_atom()?;
        if self.eat_keyword("causes") {
            if !positive {
                return self.err("causal law trigger must be a positive action atom");
            }
            let (head, hpos) = self.signed_atom()?;
            let body = self.body()?;
            self.finish()?;
            return Ok(Axiom::causal(first, head, hpos, body));
        }
        let body = self.body()?;
        self.finish()?;
        Ok(Axiom::constraint(first, positive, body))
    }
}

fn is_reserved(s: &str) -> bool {
    matches!(s, "if" | "causes" | "impossible")
}

pub(crate) fn is_var_name(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_uppercase() || c == '_')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Sorts,
    Symbols(SymbolKind),
    Facts,
    Axioms,
    Defaults,
    Refinement,
    FineFacts,
    FineAxioms,
}

fn section_header(line: &str) -> Option<Section> {
    let body = line.split('%').next()?.trim();
    let name = body.strip_suffix(':')?.split_whitespace().collect::<Vec<_>>().join(" ");
    Some(match name.as_str() {
        "sorts" => Section::Sorts,
        "statics" => Section::Symbols(SymbolKind::Static),
        "fluents basic" => Section::Symbols(SymbolKind::BasicFluent),
        "fluents defined" => Section::Symbols(SymbolKind::DefinedFluent),
        "actions agent" => Section::Symbols(SymbolKind::AgentAction),
        "actions exogenous" => Section::Symbols(SymbolKind::ExogenousAction),
        "facts" => Section::Facts,
        "axioms" => Section::Axioms,
        "defaults" => Section::Defaults,
        "refinement" => Section::Refinement,
        "fine facts" => Section::FineFacts,
        "fine axioms" => Section::FineAxioms,
        _ => return None,
    })
}

#[derive(Default)]
struct Spans {
    sorts: Vec<Span>,
    symbols: BTreeMap<String, Span>,
    facts: Vec<Span>,
    axioms: Vec<Span>,
    defaults: Vec<Span>,
    refinement: Option<Span>,
    counterparts: Vec<Span>,
    magnified: Vec<Span>,
}

/// Parses and validates a domain description. On failure every diagnostic
/// found is returned, each carrying a line and column.
pub fn parse_domain(text: &str) -> Result<SystemDescription, DomainError> {
    let mut desc = SystemDescription::default();
    let mut spans = Spans::default();
    let mut diags = Vec::new();
    let mut section = Section::Preamble;
    let mut refinement: Option<RefinementSpec> = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        if let Some(s) = section_header(raw) {
            if matches!(s, Section::FineFacts | Section::FineAxioms) && refinement.is_none() {
                diags.push(Diagnostic {
                    span: Span { line: lineno, col: 1 },
                    message: "fine sections must follow `refinement:`".into(),
                });
            }
            if s == Section::Refinement {
                if refinement.is_some() {
                    diags.push(Diagnostic {
                        span: Span { line: lineno, col: 1 },
                        message: "duplicate `refinement:` block".into(),
                    });
                }
                refinement.get_or_insert_with(RefinementSpec::default);
                spans.refinement = Some(Span { line: lineno, col: 1 });
            }
            section = s;
            continue;
        }
        let toks = match lex(raw, lineno) {
            Ok(t) => t,
            Err(d) => {
                diags.push(d);
                continue;
            }
        };
        if toks.is_empty() {
            continue;
        }
        let end_col = raw.chars().count() + 1;
        let mut c = Cursor::new(&toks, lineno, end_col);
        let span = c.span();
        let res: PResult<()> = (|| {
            match section {
                Section::Preamble => c.err("statement outside of any section"),
                Section::Sorts => {
                    let name = c.lower_ident("sort name")?;
                    c.expect_punct("=")?;
                    let def = if c.eat_punct("{") {
                        let mut ms = Vec::new();
                        if !c.eat_punct("}") {
                            loop {
                                ms.push(c.lower_ident("constant")?);
                                if c.eat_punct("}") {
                                    break;
                                }
                                c.expect_punct(",")?;
                            }
                        }
                        SortDef::Enumerated(ms)
                    } else {
                        let mut parts = vec![c.lower_ident("sort name")?];
                        while c.eat_punct("+") {
                            parts.push(c.lower_ident("sort name")?);
                        }
                        SortDef::Union(parts)
                    };
                    c.finish()?;
                    desc.signature.sorts.push((name, def));
                    spans.sorts.push(span);
                    Ok(())
                }
                Section::Symbols(kind) => {
                    let name = c.lower_ident("symbol name")?;
                    let mut args = Vec::new();
                    if c.eat_punct("(") {
                        loop {
                            args.push(c.lower_ident("sort name")?);
                            if c.eat_punct(")") {
                                break;
                            }
                            c.expect_punct(",")?;
                        }
                    }
                    c.finish()?;
                    if desc.signature.symbol(&name).is_some() || spans.symbols.contains_key(&name) {
                        return Err(Diagnostic {
                            span,
                            message: format!("duplicate declaration of `{name}`"),
                        });
                    }
                    spans.symbols.insert(name.clone(), span);
                    desc.signature.declare(kind, &name, args);
                    Ok(())
                }
                Section::Facts => {
                    let a = c.atom()?;
                    c.finish()?;
                    desc.facts.push(a);
                    spans.facts.push(span);
                    Ok(())
                }
                Section::Axioms => {
                    let ax = c.axiom()?;
                    desc.axioms.push(ax);
                    spans.axioms.push(span);
                    Ok(())
                }
                Section::Defaults => {
                    let priority = c.int()?;
                    c.expect_punct(":")?;
                    let (head, positive) = c.signed_atom()?;
                    let body = c.body()?;
                    c.finish()?;
                    desc.defaults.push(InitialDefault { priority, head, positive, body });
                    spans.defaults.push(span);
                    Ok(())
                }
                Section::Refinement => {
                    let r = refinement.as_mut().expect("refinement block open");
                    refinement_statement(&mut c, r, &mut spans, span)
                }
                Section::FineFacts => {
                    let a = c.atom()?;
                    c.finish()?;
                    if let Some(r) = refinement.as_mut() {
                        r.facts.push(a);
                    }
                    Ok(())
                }
                Section::FineAxioms => {
                    let ax = c.axiom()?;
                    if let Some(r) = refinement.as_mut() {
                        r.axioms.push(ax);
                    }
                    Ok(())
                }
            }
        })();
        if let Err(d) = res {
            diags.push(d);
        }
    }
    desc.refinement = refinement;
    if diags.is_empty() {
        validate(&desc, &spans, &mut diags);
    }
    if diags.is_empty() {
        Ok(desc)
    } else {
        Err(DomainError::Invalid(diags))
    }
}

fn refinement_statement(
    c: &mut Cursor<'_>,
    r: &mut RefinementSpec,
    spans: &mut Spans,
    span: Span,
) -> PResult<()> {
    if c.eat_keyword("counterpart") {
        let fine = c.lower_ident("sort name")?;
        c.expect_keyword("of")?;
        let coarse = c.lower_ident("sort name")?;
        c.expect_punct("=")?;
        c.expect_punct("{")?;
        let mut components = Vec::new();
        if !c.eat_punct("}") {
            loop {
                let f = c.lower_ident("constant")?;
                c.expect_punct(":")?;
                let g = c.lower_ident("constant")?;
                components.push((f, g));
                if c.eat_punct("}") {
                    break;
                }
                c.expect_punct(",")?;
            }
        }
        c.finish()?;
        r.counterparts.push(Counterpart { coarse, fine, components });
        spans.counterparts.push(span);
    } else if c.eat_keyword("magnify") {
        loop {
            r.magnified.push(c.lower_ident("symbol name")?);
            spans.magnified.push(span);
            if !c.eat_punct(",") {
                break;
            }
        }
        c.finish()?;
    } else if c.eat_keyword("observer") {
        let sort = c.lower_ident("sort name")?;
        c.expect_keyword("via")?;
        let fluent = c.lower_ident("fluent name")?;
        c.finish()?;
        r.observer = Some((sort, fluent));
    } else if c.eat_keyword("observe") {
        loop {
            r.observe.push(c.lower_ident("fluent name")?);
            if !c.eat_punct(",") {
                break;
            }
        }
        c.finish()?;
    } else if c.eat_keyword("test") {
        let atom = c.atom()?;
        c.expect_keyword("by")?;
        let observer = c.ident()?;
        if !is_var_name(&observer) {
            return c.err("test observer must be a variable");
        }
        let body = c.body()?;
        c.finish()?;
        r.tests.push(TestSpec { fluent: atom.pred, args: atom.args, observer, body });
    } else {
        return c.err("expected `counterpart`, `magnify`, `observer`, `observe` or `test`");
    }
    Ok(())
}

struct Checker<'a> {
    sig: &'a Signature,
    members: BTreeMap<String, BTreeSet<String>>,
    constants: BTreeSet<String>,
}

impl<'a> Checker<'a> {
    fn new(sig: &'a Signature) -> Self {
        let mut members: BTreeMap<String, BTreeSet<String>> =
            sig.sorts.iter().map(|(n, _)| (n.clone(), sig.members(n))).collect();
        members.insert(UNIVERSE.to_owned(), sig.members(UNIVERSE));
        let constants = members[UNIVERSE].clone();
        Checker { sig, members, constants }
    }

    /// Checks arity and argument sorts of `atom`, recording variable sorts.
    fn atom(
        &self,
        atom: &Atom,
        span: Span,
        vars: &mut BTreeMap<String, Vec<String>>,
        diags: &mut Vec<Diagnostic>,
    ) -> Option<SymbolKind> {
        let err = |m: String, diags: &mut Vec<Diagnostic>| diags.push(Diagnostic { span, message: m });
        let sorts: Vec<String> = if let Some((_, args)) = self.sig.symbol(&atom.pred) {
            args.clone()
        } else if self.sig.has_sort(&atom.pred) {
            vec![atom.pred.clone()]
        } else {
            err(format!("undeclared symbol `{}`", atom.pred), diags);
            return None;
        };
        if sorts.len() != atom.args.len() {
            err(
                format!(
                    "arity mismatch: `{}` expects {} argument(s), got {}",
                    atom.pred,
                    sorts.len(),
                    atom.args.len()
                ),
                diags,
            );
            return None;
        }
        for (t, s) in atom.args.iter().zip(&sorts) {
            match t {
                Term::Var(v) => vars.entry(v.clone()).or_default().push(s.clone()),
                Term::Const(k) => {
                    if !self.constants.contains(k) {
                        err(format!("undeclared constant `{k}`"), diags);
                    } else if !self.members.get(s).is_some_and(|m| m.contains(k)) {
                        err(format!("constant `{k}` is not of sort `{s}`"), diags);
                    }
                }
            }
        }
        self.sig.kind_of(&atom.pred)
    }

    fn body(
        &self,
        body: &[Literal],
        span: Span,
        vars: &mut BTreeMap<String, Vec<String>>,
        diags: &mut Vec<Diagnostic>,
    ) {
        for l in body {
            match l {
                Literal::Atom { atom, .. } => {
                    if let Some(k) = self.atom(atom, span, vars, diags) {
                        if k.is_action() {
                            diags.push(Diagnostic {
                                span,
                                message: format!("action `{}` cannot appear in a body", atom.pred),
                            });
                        }
                    }
                }
                Literal::Eq(a, b) | Literal::Neq(a, b) => {
                    for t in [a, b] {
                        if let Term::Const(k) = t {
                            if !self.constants.contains(k) {
                                diags.push(Diagnostic {
                                    span,
                                    message: format!("undeclared constant `{k}`"),
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    fn safety(&self, all_vars: &BTreeSet<String>, vars: &BTreeMap<String, Vec<String>>, span: Span, diags: &mut Vec<Diagnostic>) {
        for v in all_vars {
            if !vars.contains_key(v) {
                diags.push(Diagnostic { span, message: format!("unsafe variable `{v}`") });
            }
        }
    }
}

/// Validates a description built in code. Diagnostics carry no position.
pub fn validate_description(desc: &SystemDescription) -> Result<(), DomainError> {
    let blank = Span::default();
    let spans = Spans {
        sorts: vec![blank; desc.signature.sorts.len()],
        symbols: BTreeMap::new(),
        facts: vec![blank; desc.facts.len()],
        axioms: vec![blank; desc.axioms.len()],
        defaults: vec![blank; desc.defaults.len()],
        refinement: None,
        counterparts: desc.refinement.as_ref().map_or(Vec::new(), |r| vec![blank; r.counterparts.len()]),
        magnified: desc.refinement.as_ref().map_or(Vec::new(), |r| vec![blank; r.magnified.len()]),
    };
    let mut diags = Vec::new();
    validate(desc, &spans, &mut diags);
    if diags.is_empty() {
        Ok(())
    } else {
        Err(DomainError::Invalid(diags))
    }
}

fn validate(desc: &SystemDescription, spans: &Spans, diags: &mut Vec<Diagnostic>) {
    let sig = &desc.signature;
    let mut seen = BTreeSet::new();
    for ((name, def), span) in sig.sorts.iter().zip(&spans.sorts) {
        let span = *span;
        if name == UNIVERSE {
            diags.push(Diagnostic { span, message: format!("`{UNIVERSE}` is reserved") });
        }
        if !seen.insert(name.clone()) {
            diags.push(Diagnostic { span, message: format!("duplicate declaration of `{name}`") });
        }
        match def {
            SortDef::Enumerated(ms) if ms.is_empty() => {
                diags.push(Diagnostic { span, message: format!("empty sort `{name}`") })
            }
            SortDef::Enumerated(ms) => {
                let mut local = BTreeSet::new();
                for m in ms {
                    if !local.insert(m) {
                        diags.push(Diagnostic { span, message: format!("duplicate member `{m}` in sort `{name}`") });
                    }
                }
            }
            SortDef::Union(children) => {
                for ch in children {
                    if sig.sort(ch).is_none() {
                        diags.push(Diagnostic { span, message: format!("undeclared sort `{ch}`") });
                    }
                }
            }
        }
    }
    if let Some(name) = sort_cycle(sig) {
        diags.push(Diagnostic {
            span: spans.sorts.first().copied().unwrap_or_default(),
            message: format!("cyclic sort hierarchy at `{name}`"),
        });
    }
    for (kind, name, args) in sig.symbols() {
        let span = spans.symbols.get(name).copied().unwrap_or_default();
        if sig.sort(name).is_some() {
            diags.push(Diagnostic { span, message: format!("duplicate declaration of `{name}`") });
        }
        for a in args {
            if !sig.has_sort(a) {
                diags.push(Diagnostic { span, message: format!("undeclared sort `{a}`") });
            }
        }
        debug_assert_eq!(sig.kind_of(name), Some(kind));
    }
    if !diags.is_empty() {
        return;
    }
    let ck = Checker::new(sig);
    for (f, span) in desc.facts.iter().zip(&spans.facts) {
        let mut vars = BTreeMap::new();
        match ck.atom(f, *span, &mut vars, diags) {
            Some(SymbolKind::Static) => {}
            Some(_) => diags.push(Diagnostic { span: *span, message: format!("fact `{f}` is not a static") }),
            None => {}
        }
        if !vars.is_empty() {
            diags.push(Diagnostic { span: *span, message: format!("fact `{f}` must be ground") });
        }
    }
    for (ax, span) in desc.axioms.iter().zip(&spans.axioms) {
        check_axiom(&ck, ax, *span, diags);
    }
    for (d, span) in desc.defaults.iter().zip(&spans.defaults) {
        let span = *span;
        let mut vars = BTreeMap::new();
        match ck.atom(&d.head, span, &mut vars, diags) {
            Some(SymbolKind::BasicFluent) => {}
            Some(_) => diags.push(Diagnostic {
                span,
                message: format!("default head `{}` must be a basic fluent", d.head.pred),
            }),
            None => {}
        }
        ck.body(&d.body, span, &mut vars, diags);
        let mut all: BTreeSet<String> = d.head.vars().map(str::to_owned).collect();
        for l in &d.body {
            for t in l.terms() {
                if let Term::Var(v) = t {
                    all.insert(v.clone());
                }
            }
        }
        ck.safety(&all, &vars, span, diags);
    }
    if let Some(r) = &desc.refinement {
        let span = spans.refinement.unwrap_or_default();
        for (cp, cspan) in r.counterparts.iter().zip(&spans.counterparts) {
            let cspan = *cspan;
            match sig.sort(&cp.coarse) {
                Some(SortDef::Enumerated(_)) => {}
                Some(SortDef::Union(_)) => diags.push(Diagnostic {
                    span: cspan,
                    message: format!("counterpart of union sort `{}`; magnify its enumerated children", cp.coarse),
                }),
                None => diags.push(Diagnostic { span: cspan, message: format!("undeclared sort `{}`", cp.coarse) }),
            }
            let members = sig.members(&cp.coarse);
            for (_, g) in &cp.components {
                if !members.contains(g) {
                    diags.push(Diagnostic {
                        span: cspan,
                        message: format!("undeclared constant `{g}` in sort `{}`", cp.coarse),
                    });
                }
            }
        }
        for (m, mspan) in r.magnified.iter().zip(&spans.magnified) {
            if sig.symbol(m).is_none() {
                diags.push(Diagnostic { span: *mspan, message: format!("undeclared symbol `{m}`") });
            }
        }
        if let Some((s, _)) = &r.observer {
            if !sig.has_sort(s) {
                diags.push(Diagnostic { span, message: format!("undeclared sort `{s}`") });
            }
        }
    }
}

fn check_axiom(ck: &Checker<'_>, ax: &Axiom, span: Span, diags: &mut Vec<Diagnostic>) {
    let mut vars = BTreeMap::new();
    match &ax.kind {
        AxiomKind::Causal { action, head, .. } => {
            if let Some(k) = ck.atom(action, span, &mut vars, diags) {
                if !k.is_action() {
                    diags.push(Diagnostic { span, message: format!("`{}` is not an action", action.pred) });
                }
            }
            if let Some(k) = ck.atom(head, span, &mut vars, diags) {
                if k != SymbolKind::BasicFluent {
                    diags.push(Diagnostic {
                        span,
                        message: format!("causal law head `{}` must be a basic fluent", head.pred),
                    });
                }
            }
        }
        AxiomKind::Constraint { head, .. } => {
            if let Some(k) = ck.atom(head, span, &mut vars, diags) {
                if k.is_action() {
                    diags.push(Diagnostic {
                        span,
                        message: format!("state constraint head `{}` must be a domain literal", head.pred),
                    });
                }
            } else if ck.sig.has_sort(&head.pred) {
                diags.push(Diagnostic { span, message: format!("sort `{}` cannot be a head", head.pred) });
            }
        }
        AxiomKind::Executability { action } => {
            if let Some(k) = ck.atom(action, span, &mut vars, diags) {
                if !k.is_action() {
                    diags.push(Diagnostic { span, message: format!("`{}` is not an action", action.pred) });
                }
            }
        }
    }
    ck.body(&ax.body, span, &mut vars, diags);
    ck.safety(&ax.vars(), &vars, span, diags);
}

fn sort_cycle(sig: &Signature) -> Option<String> {
    fn visit(
        sig: &Signature,
        n: &str,
        state: &mut BTreeMap<String, u8>,
    ) -> Option<String> {
        match state.get(n) {
            Some(1) => return Some(n.to_owned()),
            Some(2) => return None,
            _ => {}
        }
        state.insert(n.to_owned(), 1);
        if let Some(SortDef::Union(ch)) = sig.sort(n) {
            for c in ch {
                if let Some(x) = visit(sig, c, state) {
                    return Some(x);
                }
            }
        }
        state.insert(n.to_owned(), 2);
        None
    }
    let mut state = BTreeMap::new();
    sig.sorts.iter().find_map(|(n, _)| visit(sig, n, &mut state))
}

fn single_line(text: &str) -> Result<Vec<Token>, DomainError> {
    lex(text, 1).map_err(|_| DomainError::BadTerm(text.to_owned()))
}

/// Parses a ground action or atom such as `move(rob1, library)`.
pub fn parse_ground_term(text: &str) -> Result<Atom, DomainError> {
    let toks = single_line(text)?;
    let mut c = Cursor::new(&toks, 1, text.len() + 1);
    let a = c.atom().map_err(|_| DomainError::BadTerm(text.to_owned()))?;
    if !c.at_end() || a.vars().next().is_some() {
        return Err(DomainError::BadTerm(text.to_owned()));
    }
    Ok(a)
}

/// Parses a ground literal such as `-in_hand(rob1, book1)`.
pub fn parse_ground_literal(text: &str) -> Result<(Atom, bool), DomainError> {
    let mut v = parse_ground_literals(text)?;
    if v.len() == 1 {
        Ok(v.remove(0))
    } else {
        Err(DomainError::BadTerm(text.to_owned()))
    }
}

/// Parses a comma-separated conjunction of ground literals.
pub fn parse_ground_literals(text: &str) -> Result<Vec<(Atom, bool)>, DomainError> {
    let toks = single_line(text)?;
    let mut c = Cursor::new(&toks, 1, text.len() + 1);
    let bad = || DomainError::BadTerm(text.to_owned());
    let mut out = Vec::new();
    while !c.at_end() {
        let (a, pos) = c.signed_atom().map_err(|_| bad())?;
        if a.vars().next().is_some() {
            return Err(bad());
        }
        out.push((a, pos));
        if !c.eat_punct(",") {
            break;
        }
    }
    c.eat_punct(".");
    if !c.at_end() {
        return Err(bad());
    }
    Ok(out)
}
