//! Textual knowledge-base language.
//!
//! ```text
//! clause    := atom "<-" atom ("," atom)* "." | atom "."
//! prop      := "prop" plit ("&" plit)* "->" ident [ "?" string ] "."
//! plit      := ident [ "?" string ]
//! directive := "@" ("name" | "version") string "."
//! atom      := ident [ "(" term ("," term)* ")" ]
//! term      := Var | number | string | ident [ "(" term ("," term)* ")" ]
//!            | "[" [ term ("," term)* [ "|" term ] ] "]"
//! table     := "table" ident ":" NEWLINE csv-header NEWLINE (csv-row NEWLINE)*   (ends at a blank line)
//! ```
//!
//! Identifiers starting with a lowercase letter are constant symbols or
//! predicate names, identifiers starting with an uppercase letter are
//! variables. Symbols that are not plain identifiers are single-quoted.
//! A trailing `? "text"` after the consequent of a `prop` rule attaches the
//! question to the first antecedent that has none. `#` starts a comment.

mod lexer;
mod parser;

use std::fmt;

use serde::Serialize;

use crate::kb::{Atom, FactStore, KnowledgeBase, NumericTable};

pub use parser::parse_query;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub file: String,
    /// Byte offsets into the source, `start..end`.
    pub start: usize,
    pub end: usize,
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
}

impl SourceSpan {
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        text.get(self.start..self.end).unwrap_or("")
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start_line, self.start_col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
}

impl ParseDiagnostic {
    pub(crate) fn error(message: impl Into<String>, span: SourceSpan) -> Self {
        ParseDiagnostic {
            severity: Severity::Error,
            message: message.into(),
            span,
        }
    }

    pub(crate) fn warning(message: impl Into<String>, span: SourceSpan) -> Self {
        ParseDiagnostic {
            severity: Severity::Warning,
            message: message.into(),
            span,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {sev}: {}", self.span, self.message)
    }
}

/// Result of parsing a `.kb` document.
#[derive(Debug, Clone)]
pub struct ParsedKb {
    pub kb: KnowledgeBase,
    /// Numeric tables declared with `table` blocks.
    pub store: FactStore,
    pub diagnostics: Vec<ParseDiagnostic>,
    /// Source span of each clause, parallel to `kb.clauses`.
    pub clause_spans: Vec<SourceSpan>,
    pub prop_spans: Vec<SourceSpan>,
}

impl ParsedKb {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(ParseDiagnostic::is_error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &ParseDiagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }

    pub fn into_parts(self) -> (KnowledgeBase, FactStore, Vec<ParseDiagnostic>) {
        (self.kb, self.store, self.diagnostics)
    }
}

pub fn parse_kb(text: &str) -> ParsedKb {
    parse_kb_named("<input>", text)
}

pub fn parse_kb_named(file: &str, text: &str) -> ParsedKb {
    let mut diagnostics = Vec::new();
    let mut store = FactStore::new();
    let masked = extract_tables(text, file, &mut store, &mut diagnostics);
    let mut out = parser::parse_document(&masked, file);
    diagnostics.append(&mut out.diagnostics);
    diagnostics.sort_by_key(|d| (d.span.start, d.severity == Severity::Warning));
    ParsedKb {
        kb: out.kb,
        store,
        diagnostics,
        clause_spans: out.clause_spans,
        prop_spans: out.prop_spans,
    }
}

/// Deterministic text form; `parse_kb(serialize_kb(kb)).kb == kb`.
pub fn serialize_kb(kb: &KnowledgeBase) -> String {
    use fmt::Write as _;
    let mut out = String::from("# knowledge base\n");
    let quoted = |key: &str, v: &str, out: &mut String| {
        let _ = writeln!(out, "@{key} {}.", crate::kb::Term::str(v));
    };
    if let Some(n) = &kb.name {
        quoted("name", n, &mut out);
    }
    if let Some(v) = &kb.version {
        quoted("version", v, &mut out);
    }
    for c in &kb.clauses {
        let _ = writeln!(out, "{c}");
    }
    for r in &kb.prop_rules {
        let _ = writeln!(out, "{r}");
    }
    out
}

/// Parses a single atom, e.g. for command-line goals.
pub fn parse_atom(text: &str) -> Result<Atom, ParseDiagnostic> {
    parse_query(text)
}

/// Pulls `table <name>:` blocks out of the text into `store`, returning the
/// text with those lines blanked so token positions stay valid.
fn extract_tables(text: &str, file: &str, store: &mut FactStore, diags: &mut Vec<ParseDiagnostic>) -> String {
    let mut masked = String::with_capacity(text.len());
    let mut offset = 0usize;
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let mut i = 0;
    let blank = |line: &str| -> String { line.chars().map(|c| if c == '\n' { '\n' } else { ' ' }).collect() };
    let line_span = |offset: usize, line_no: usize, line: &str| {
        let content = line.trim_end_matches(['\n', '\r']);
        SourceSpan {
            file: file.to_string(),
            start: offset,
            end: offset + content.len().max(1),
            start_line: line_no,
            start_col: 1,
            end_line: line_no,
            end_col: content.chars().count().max(1),
        }
    };
    // Span of the `k`-th comma-separated cell, without surrounding spaces.
    let cell_span = |offset: usize, line_no: usize, line: &str, k: usize| {
        let mut start = 0;
        for (n, cell) in line.split(',').enumerate() {
            if n == k {
                let lead = cell.len() - cell.trim_start().len();
                let a = start + lead;
                let b = (a + cell.trim().len()).max(a + 1).min(line.len().max(a + 1));
                let col = line[..a].chars().count() + 1;
                return SourceSpan {
                    file: file.to_string(),
                    start: offset + a,
                    end: offset + b,
                    start_line: line_no,
                    start_col: col,
                    end_line: line_no,
                    end_col: col + cell.trim().chars().count().max(1) - 1,
                };
            }
            start += cell.len() + 1;
        }
        line_span(offset, line_no, line)
    };
    while i < lines.len() {
        let line = lines[i];
        let trimmed = line.trim();
        let header = trimmed
            .strip_prefix("table ")
            .and_then(|rest| rest.strip_suffix(':'))
            .map(str::trim);
        let Some(name) = header else {
            masked.push_str(line);
            offset += line.len();
            i += 1;
            continue;
        };
        let header_span = line_span(offset, i + 1, line);
        if !crate::kb::is_plain_symbol(name) {
            diags.push(ParseDiagnostic::error(
                format!("invalid table name {name:?}"),
                header_span.clone(),
            ));
        }
        masked.push_str(&blank(line));
        offset += line.len();
        i += 1;
        let mut table: Option<NumericTable> = None;
        let mut ok = true;
        while i < lines.len() {
            let line = lines[i];
            let content = line.trim();
            if content.is_empty() {
                break;
            }
            let span = line_span(offset, i + 1, line);
            let (row_offset, row_no) = (offset, i + 1);
            masked.push_str(&blank(line));
            offset += line.len();
            i += 1;
            if content.starts_with('#') {
                continue;
            }
            let cells: Vec<&str> = content.split(',').map(str::trim).collect();
            match &mut table {
                None => {
                    if cells.iter().any(|c| c.is_empty()) {
                        diags.push(ParseDiagnostic::error("empty column label", span));
                        ok = false;
                    }
                    table = Some(NumericTable::new(cells.iter().map(|c| c.to_string()).collect()));
                }
                Some(t) => {
                    let parsed: Result<Vec<f64>, usize> = cells
                        .iter()
                        .enumerate()
                        .map(|(k, c)| c.parse::<f64>().map_err(|_| k))
                        .collect();
                    match parsed {
                        Ok(row) => {
                            if let Err(msg) = t.push_row(row) {
                                diags.push(ParseDiagnostic::error(msg, span));
                                ok = false;
                            }
                        }
                        Err(k) => {
                            let span = cell_span(row_offset, row_no, line.trim_end_matches(['\n', '\r']), k);
                            diags.push(ParseDiagnostic::error("table cell is not a number", span));
                            ok = false;
                        }
                    }
                }
            }
        }
        match table {
            Some(t) if ok => {
                let _ = store.insert_table(name, t);
            }
            Some(_) => {}
            None => diags.push(ParseDiagnostic::error(
                format!("table {name} has no header row"),
                header_span,
            )),
        }
    }
    masked
}
