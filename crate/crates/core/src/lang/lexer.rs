use super::{ParseDiagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Var(String),
    QSym(String),
    Num(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Pipe,
    Dot,
    Amp,
    Question,
    Arrow,
    Implies,
    Query,
    At,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Var(s) => format!("'{s}'"),
            Tok::QSym(s) => format!("'{s}'"),
            Tok::Num(n) => format!("number {n}"),
            Tok::Str(_) => "string".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Pipe => "'|'".into(),
            Tok::Dot => "'.'".into(),
            Tok::Amp => "'&'".into(),
            Tok::Question => "'?'".into(),
            Tok::Arrow => "'<-'".into(),
            Tok::Implies => "'->'".into(),
            Tok::Query => "'?-'".into(),
            Tok::At => "'@'".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    text: &'a str,
    file: &'a str,
    pos: usize,
    line: usize,
    col: usize,
    prev: (usize, usize),
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.text[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.prev = (self.line, self.col);
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn mark(&self) -> (usize, usize, usize) {
        (self.pos, self.line, self.col)
    }

    /// Span from a mark to the current position; the end column is that of the last char consumed.
    fn span_from(&self, (start, line, col): (usize, usize, usize)) -> SourceSpan {
        SourceSpan {
            file: self.file.to_string(),
            start,
            end: self.pos,
            start_line: line,
            start_col: col,
            end_line: self.prev.0,
            end_col: self.prev.1,
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn tokenize(text: &str, file: &str, diags: &mut Vec<ParseDiagnostic>) -> Vec<Token> {
    let mut cur = Cursor {
        text,
        file,
        pos: 0,
        line: 1,
        col: 1,
        prev: (1, 1),
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let m = cur.mark();
        let tok = match c {
            '(' => {
                cur.bump();
                Tok::LParen
            }
            ')' => {
                cur.bump();
                Tok::RParen
            }
            '[' => {
                cur.bump();
                Tok::LBracket
            }
            ']' => {
                cur.bump();
                Tok::RBracket
            }
            ',' => {
                cur.bump();
                Tok::Comma
            }
            '|' => {
                cur.bump();
                Tok::Pipe
            }
            '.' => {
                cur.bump();
                Tok::Dot
            }
            '&' => {
                cur.bump();
                Tok::Amp
            }
            '@' => {
                cur.bump();
                Tok::At
            }
            '?' => {
                cur.bump();
                if cur.peek() == Some('-') {
                    cur.bump();
                    Tok::Query
                } else {
                    Tok::Question
                }
            }
            '<' if cur.peek2() == Some('-') => {
                cur.bump();
                cur.bump();
                Tok::Arrow
            }
            '-' if cur.peek2() == Some('>') => {
                cur.bump();
                cur.bump();
                Tok::Implies
            }
            '-' if cur.peek2().is_some_and(|d| d.is_ascii_digit()) => lex_number(&mut cur, m, diags),
            d if d.is_ascii_digit() => lex_number(&mut cur, m, diags),
            '"' | '\'' => match lex_quoted(&mut cur, c) {
                Ok(s) if c == '"' => Tok::Str(s),
                Ok(s) => Tok::QSym(s),
                Err(msg) => {
                    diags.push(ParseDiagnostic::error(msg, cur.span_from(m)));
                    continue;
                }
            },
            c if c.is_ascii_alphabetic() => {
                while cur.peek().is_some_and(is_ident_char) {
                    cur.bump();
                }
                let word = &text[m.0..cur.pos];
                if c.is_ascii_uppercase() {
                    Tok::Var(word.to_string())
                } else {
                    Tok::Ident(word.to_string())
                }
            }
            other => {
                cur.bump();
                diags.push(ParseDiagnostic::error(
                    format!("unexpected character {other:?}"),
                    cur.span_from(m),
                ));
                continue;
            }
        };
        out.push(Token {
            tok,
            span: cur.span_from(m),
        });
    }
    out
}

fn lex_number(cur: &mut Cursor<'_>, m: (usize, usize, usize), diags: &mut Vec<ParseDiagnostic>) -> Tok {
    if cur.peek() == Some('-') {
        cur.bump();
    }
    while cur.peek().is_some_and(|d| d.is_ascii_digit()) {
        cur.bump();
    }
    if cur.peek() == Some('.') && cur.peek2().is_some_and(|d| d.is_ascii_digit()) {
        cur.bump();
        while cur.peek().is_some_and(|d| d.is_ascii_digit()) {
            cur.bump();
        }
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let save = (cur.pos, cur.line, cur.col);
        cur.bump();
        if matches!(cur.peek(), Some('+' | '-')) {
            cur.bump();
        }
        if cur.peek().is_some_and(|d| d.is_ascii_digit()) {
            while cur.peek().is_some_and(|d| d.is_ascii_digit()) {
                cur.bump();
            }
        } else {
            cur.pos = save.0;
            cur.line = save.1;
            cur.col = save.2;
            cur.prev = (save.1, save.2 - 1);
        }
    }
    let text = &cur.text[m.0..cur.pos];
    match text.parse::<f64>() {
        Ok(n) if n.is_finite() => Tok::Num(if n == 0.0 { 0.0 } else { n }),
        _ => {
            diags.push(ParseDiagnostic::error(
                format!("number {text} is not finite"),
                cur.span_from(m),
            ));
            Tok::Num(0.0)
        }
    }
}

fn lex_quoted(cur: &mut Cursor<'_>, quote: char) -> Result<String, String> {
    cur.bump();
    let mut s = String::new();
    loop {
        match cur.bump() {
            None => return Err("unterminated quoted text".into()),
            Some('\n') => return Err("unterminated quoted text".into()),
            Some('\\') => match cur.bump() {
                Some('n') => s.push('\n'),
                Some('t') => s.push('\t'),
                Some(c @ ('\\' | '"' | '\'')) => s.push(c),
                Some(c) => return Err(format!("unknown escape \\{c}")),
                None => return Err("unterminated quoted text".into()),
            },
            Some(c) if c == quote => return Ok(s),
            Some(c) => s.push(c),
        }
    }
}
