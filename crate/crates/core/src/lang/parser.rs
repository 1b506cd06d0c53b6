use std::collections::HashMap;

use super::lexer::{tokenize, Tok, Token};
use super::{ParseDiagnostic, SourceSpan};
use crate::kb::{Atom, HornClause, KnowledgeBase, PropLiteral, PropRule, Term};

pub(crate) struct DocumentOutput {
    pub kb: KnowledgeBase,
    pub diagnostics: Vec<ParseDiagnostic>,
    pub clause_spans: Vec<SourceSpan>,
    pub prop_spans: Vec<SourceSpan>,
}

type PResult<T> = Result<T, ParseDiagnostic>;
/// Atoms of a clause with their spans, for arity checks.
type Sites = Vec<(Atom, SourceSpan)>;

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.pos)
    }

    fn peek_tok(&self) -> Option<&'t Tok> {
        self.peek().map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&'t Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<&'t Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    /// Span used for errors at the current position; at end of input the last token.
    fn here(&self) -> SourceSpan {
        self.peek()
            .or_else(|| self.toks.last())
            .map(|t| t.span.clone())
            .expect("errors are only raised when at least one token exists")
    }

    fn unexpected(&self, what: &str) -> ParseDiagnostic {
        match self.peek() {
            Some(t) => ParseDiagnostic::error(format!("expected {what}, found {}", t.tok.describe()), t.span.clone()),
            None => ParseDiagnostic::error(format!("expected {what}, found end of input"), self.here()),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<&'t Token> {
        match self.peek() {
            Some(t) if t.tok == tok => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    /// Skips past the next `.` so parsing can resume at the following statement.
    fn recover(&mut self) {
        while let Some(t) = self.next() {
            if t.tok == Tok::Dot {
                break;
            }
        }
    }

    fn span_between(&self, first: &SourceSpan, last: &SourceSpan) -> SourceSpan {
        SourceSpan {
            file: first.file.clone(),
            start: first.start,
            end: last.end,
            start_line: first.start_line,
            start_col: first.start_col,
            end_line: last.end_line,
            end_col: last.end_col,
        }
    }

    fn args(&mut self, open: &Token) -> PResult<Vec<Term>> {
        let mut args = vec![self.term()?];
        loop {
            match self.peek_tok() {
                Some(Tok::Comma) => {
                    self.pos += 1;
                    args.push(self.term()?);
                }
                Some(Tok::RParen) => {
                    self.pos += 1;
                    return Ok(args);
                }
                Some(other) => {
                    return Err(ParseDiagnostic::error(
                        format!("unclosed '(' (found {})", other.describe()),
                        open.span.clone(),
                    ))
                }
                None => {
                    return Err(ParseDiagnostic::error(
                        "unclosed '(' at end of input",
                        open.span.clone(),
                    ))
                }
            }
        }
    }

    fn functor_term(&mut self, name: String) -> PResult<Term> {
        if let Some(open) = self.peek().filter(|t| t.tok == Tok::LParen) {
            self.pos += 1;
            if self.peek_tok() == Some(&Tok::RParen) {
                return Err(ParseDiagnostic::error(
                    "empty argument list; write the bare name instead",
                    open.span.clone(),
                ));
            }
            let args = self.args(open)?;
            Ok(Term::Compound(name, args))
        } else {
            Ok(Term::Sym(name))
        }
    }

    fn term(&mut self) -> PResult<Term> {
        let Some(t) = self.peek() else {
            return Err(self.unexpected("a term"));
        };
        match &t.tok {
            Tok::Var(v) => {
                self.pos += 1;
                Ok(Term::Var(v.clone()))
            }
            Tok::Num(n) => {
                self.pos += 1;
                Ok(Term::num(*n))
            }
            Tok::Str(s) => {
                self.pos += 1;
                Ok(Term::Str(s.clone()))
            }
            Tok::Ident(s) | Tok::QSym(s) => {
                self.pos += 1;
                self.functor_term(s.clone())
            }
            Tok::LBracket => {
                self.pos += 1;
                self.list(t)
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn list(&mut self, open: &Token) -> PResult<Term> {
        if self.peek_tok() == Some(&Tok::RBracket) {
            self.pos += 1;
            return Ok(Term::nil());
        }
        let mut items = vec![self.term()?];
        loop {
            match self.peek_tok() {
                Some(Tok::Comma) => {
                    self.pos += 1;
                    items.push(self.term()?);
                }
                Some(Tok::Pipe) => {
                    self.pos += 1;
                    let tail = self.term()?;
                    if self.peek_tok() != Some(&Tok::RBracket) {
                        return Err(ParseDiagnostic::error("unclosed '['", open.span.clone()));
                    }
                    self.pos += 1;
                    return Ok(Term::list_with_tail(items, tail));
                }
                Some(Tok::RBracket) => {
                    self.pos += 1;
                    return Ok(Term::list(items));
                }
                _ => return Err(ParseDiagnostic::error("unclosed '['", open.span.clone())),
            }
        }
    }

    fn atom(&mut self) -> PResult<(Atom, SourceSpan)> {
        let Some(t) = self.peek() else {
            return Err(self.unexpected("an atom"));
        };
        let name = match &t.tok {
            Tok::Ident(s) | Tok::QSym(s) => s.clone(),
            Tok::Var(v) => {
                return Err(ParseDiagnostic::error(
                    format!("variable {v} cannot be used as a predicate"),
                    t.span.clone(),
                ))
            }
            _ => return Err(self.unexpected("an atom")),
        };
        self.pos += 1;
        let term = self.functor_term(name)?;
        let last = &self.toks[self.pos - 1].span;
        let span = self.span_between(&t.span, last);
        let atom = Atom::from_term(&term)
            .ok_or_else(|| ParseDiagnostic::error("the empty list is not a predicate", t.span.clone()))?;
        Ok((atom, span))
    }

    fn prop_literal(&mut self) -> PResult<PropLiteral> {
        let name = match self.peek_tok() {
            Some(Tok::Ident(s) | Tok::Var(s)) => s.clone(),
            _ => return Err(self.unexpected("a proposition name")),
        };
        self.pos += 1;
        let mut lit = PropLiteral::new(name);
        if self.peek_tok() == Some(&Tok::Question) && matches!(self.peek_at(1), Some(Tok::Str(_))) {
            self.pos += 1;
            if let Some(Tok::Str(q)) = self.next().map(|t| &t.tok) {
                lit.question = Some(q.clone());
            }
        }
        Ok(lit)
    }

    fn prop_rule(&mut self, start: &Token) -> PResult<(PropRule, SourceSpan)> {
        let mut antecedents = vec![self.prop_literal()?];
        while self.peek_tok() == Some(&Tok::Amp) {
            self.pos += 1;
            antecedents.push(self.prop_literal()?);
        }
        self.expect(Tok::Implies, "'->'")?;
        let consequent = match self.peek_tok() {
            Some(Tok::Ident(s) | Tok::Var(s)) => s.clone(),
            _ => return Err(self.unexpected("a proposition name")),
        };
        self.pos += 1;
        if self.peek_tok() == Some(&Tok::Question) {
            let q_tok = self.next().expect("peeked");
            let text = match self.next().map(|t| &t.tok) {
                Some(Tok::Str(s)) => s.clone(),
                _ => {
                    self.pos -= 1;
                    return Err(self.unexpected("question text"));
                }
            };
            match antecedents.iter_mut().find(|a| a.question.is_none()) {
                Some(a) => a.question = Some(text),
                None => {
                    return Err(ParseDiagnostic::error(
                        "every antecedent already has a question",
                        q_tok.span.clone(),
                    ))
                }
            }
        }
        let end = self.expect(Tok::Dot, "'.'")?;
        let span = self.span_between(&start.span, &end.span);
        let rule =
            PropRule::try_new(antecedents, consequent).map_err(|msg| ParseDiagnostic::error(msg, span.clone()))?;
        Ok((rule, span))
    }

    fn directive(&mut self, at: &Token, kb: &mut KnowledgeBase) -> PResult<()> {
        let key = match self.peek_tok() {
            Some(Tok::Ident(k)) if k == "name" || k == "version" => k.clone(),
            _ => {
                return Err(ParseDiagnostic::error(
                    "unknown directive; expected @name or @version",
                    at.span.clone(),
                ));
            }
        };
        self.pos += 1;
        let value = match self.peek_tok() {
            Some(Tok::Str(s)) => s.clone(),
            _ => return Err(self.unexpected("a string")),
        };
        self.pos += 1;
        self.expect(Tok::Dot, "'.'")?;
        if key == "name" {
            kb.name = Some(value);
        } else {
            kb.version = Some(value);
        }
        Ok(())
    }

    fn clause(&mut self) -> PResult<(HornClause, SourceSpan, Sites)> {
        let (head, head_span) = self.atom()?;
        let mut sites = vec![(head.clone(), head_span.clone())];
        let mut body = Vec::new();
        if self.peek_tok() == Some(&Tok::Arrow) {
            self.pos += 1;
            loop {
                let (a, s) = self.atom()?;
                sites.push((a.clone(), s));
                body.push(a);
                match self.peek_tok() {
                    Some(Tok::Comma) => self.pos += 1,
                    _ => break,
                }
            }
        }
        let end = self.expect(Tok::Dot, "'.' at end of clause")?;
        let span = self.span_between(&head_span, &end.span);
        Ok((HornClause { head, body }, span, sites))
    }
}

pub(crate) fn parse_document(text: &str, file: &str) -> DocumentOutput {
    let mut diagnostics = Vec::new();
    let toks = tokenize(text, file, &mut diagnostics);
    let lex_errors: Vec<usize> = diagnostics.iter().map(|d| d.span.start).collect();
    let mut p = Parser { toks: &toks, pos: 0 };
    let mut kb = KnowledgeBase::new();
    let mut clause_spans = Vec::new();
    let mut prop_spans = Vec::new();
    let mut arity_sites: HashMap<String, (usize, SourceSpan)> = HashMap::new();

    while !p.at_end() {
        let start = p.peek().expect("not at end");
        let stmt_start = p.pos;
        let is_prop = matches!(&start.tok, Tok::Ident(k) if k == "prop")
            && matches!(p.peek_at(1), Some(Tok::Ident(_) | Tok::Var(_)));
        let result = match &start.tok {
            Tok::At => {
                p.pos += 1;
                p.directive(start, &mut kb)
            }
            _ if is_prop => {
                p.pos += 1;
                p.prop_rule(start).map(|(rule, span)| {
                    kb.prop_rules.push(rule);
                    prop_spans.push(span);
                })
            }
            _ => p.clause().map(|(clause, span, sites)| {
                for (atom, site) in sites {
                    match arity_sites.get(&atom.pred) {
                        Some((arity, first)) if *arity != atom.arity() => {
                            diagnostics.push(ParseDiagnostic::warning(
                                format!(
                                    "predicate {} used with arity {} here and arity {} at {}:{}",
                                    atom.pred,
                                    atom.arity(),
                                    arity,
                                    first.start_line,
                                    first.start_col
                                ),
                                site,
                            ));
                        }
                        Some(_) => {}
                        None => {
                            arity_sites.insert(atom.pred.clone(), (atom.arity(), site));
                        }
                    }
                }
                kb.clauses.push(clause);
                clause_spans.push(span);
            }),
        };
        if let Err(d) = result {
            // A bad token already reported by the lexer explains this error.
            let from = p.toks[stmt_start].span.start;
            let to = if d.message.contains("end of input") {
                usize::MAX
            } else {
                d.span.start
            };
            if !lex_errors.iter().any(|&o| o >= from && o <= to) {
                diagnostics.push(d);
            }
            let terminated = p.pos > stmt_start && p.toks[p.pos - 1].tok == Tok::Dot;
            if !terminated {
                p.recover();
            }
        }
    }
    diagnostics.sort_by_key(|d| d.span.start);
    DocumentOutput {
        kb,
        diagnostics,
        clause_spans,
        prop_spans,
    }
}

/// Parses a single goal such as `?- handle_event(E).`
pub fn parse_query(text: &str) -> Result<crate::kb::Atom, ParseDiagnostic> {
    let mut diagnostics = Vec::new();
    let toks = tokenize(text, "<query>", &mut diagnostics);
    if let Some(d) = diagnostics.into_iter().next() {
        return Err(d);
    }
    let mut p = Parser { toks: &toks, pos: 0 };
    if p.at_end() {
        return Err(ParseDiagnostic::error(
            "empty query",
            SourceSpan {
                file: "<query>".into(),
                start: 0,
                end: text.len().max(1),
                start_line: 1,
                start_col: 1,
                end_line: 1,
                end_col: 1,
            },
        ));
    }
    if p.peek_tok() == Some(&Tok::Query) {
        p.pos += 1;
    }
    let (atom, _) = p.atom()?;
    if p.peek_tok() == Some(&Tok::Dot) {
        p.pos += 1;
    }
    if let Some(t) = p.peek() {
        return Err(ParseDiagnostic::error("single goal expected", t.span.clone()));
    }
    Ok(atom)
}
