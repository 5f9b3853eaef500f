//! Indentation-aware tokenizer for the rule-program subset.

use std::fmt;

use super::ast::Span;
use super::Diagnostic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Def,
    If,
    Elif,
    Else,
    For,
    While,
    In,
    Not,
    And,
    Or,
    Is,
    Return,
    Pass,
    Break,
    Continue,
    True,
    False,
    None,
}

impl Keyword {
    fn from_ident(s: &str) -> Option<Keyword> {
        Some(match s {
            "def" => Keyword::Def,
            "if" => Keyword::If,
            "elif" => Keyword::Elif,
            "else" => Keyword::Else,
            "for" => Keyword::For,
            "while" => Keyword::While,
            "in" => Keyword::In,
            "not" => Keyword::Not,
            "and" => Keyword::And,
            "or" => Keyword::Or,
            "is" => Keyword::Is,
            "return" => Keyword::Return,
            "pass" => Keyword::Pass,
            "break" => Keyword::Break,
            "continue" => Keyword::Continue,
            "True" => Keyword::True,
            "False" => Keyword::False,
            "None" => Keyword::None,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Def => "def",
            Keyword::If => "if",
            Keyword::Elif => "elif",
            Keyword::Else => "else",
            Keyword::For => "for",
            Keyword::While => "while",
            Keyword::In => "in",
            Keyword::Not => "not",
            Keyword::And => "and",
            Keyword::Or => "or",
            Keyword::Is => "is",
            Keyword::Return => "return",
            Keyword::Pass => "pass",
            Keyword::Break => "break",
            Keyword::Continue => "continue",
            Keyword::True => "True",
            Keyword::False => "False",
            Keyword::None => "None",
        }
    }
}

/// Host-language keywords that are recognised only to be rejected.
const RESERVED: &[&str] = &[
    "class", "import", "from", "lambda", "try", "except", "finally", "with", "yield", "global", "nonlocal", "del",
    "assert", "raise", "async", "await", "as",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Name(String),
    Int(i64),
    Str(String),
    Keyword(Keyword),
    /// A host-language keyword outside the subset.
    Reserved(String),
    Op(&'static str),
    /// An operator outside the subset (`**`, `|`, `@`, ...).
    Unsupported(String),
    Newline,
    Indent,
    Dedent,
    /// Trivia; the parser skips these.
    Comment(String),
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Name(n) => write!(f, "name '{n}'"),
            TokenKind::Int(i) => write!(f, "integer {i}"),
            TokenKind::Str(_) => write!(f, "string literal"),
            TokenKind::Keyword(k) => write!(f, "'{}'", k.as_str()),
            TokenKind::Reserved(k) => write!(f, "'{k}'"),
            TokenKind::Op(o) => write!(f, "'{o}'"),
            TokenKind::Unsupported(o) => write!(f, "'{o}'"),
            TokenKind::Newline => write!(f, "end of line"),
            TokenKind::Indent => write!(f, "indent"),
            TokenKind::Dedent => write!(f, "dedent"),
            TokenKind::Comment(_) => write!(f, "comment"),
            TokenKind::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

// Longest first so that greedy matching works.
const OPERATORS: &[&str] = &[
    "//=", "**=", "->", "+=", "-=", "*=", "/=", "%=", "==", "!=", "<=", ">=", "//", "**", "(", ")", "[", "]", "{",
    "}", ",", ":", ".", ";", "=", "<", ">", "+", "-", "*", "/", "%",
];

const UNSUPPORTED_OPS: &[&str] = &["**=", "**", "//=", "/=", "%="];

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    tokens: Vec<Token>,
    indents: Vec<usize>,
    indent_char: Option<char>,
    depth: usize,
    _src: &'a str,
}

pub fn lex(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut lx = Lexer {
        chars: source.replace("\r\n", "\n").replace('\r', "\n").chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        tokens: Vec::new(),
        indents: vec![0],
        indent_char: None,
        depth: 0,
        _src: source,
    };
    lx.run()?;
    Ok(lx.tokens)
}

impl Lexer<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn push(&mut self, kind: TokenKind, span: Span) {
        self.tokens.push(Token { kind, span });
    }

    fn err<T>(&self, span: Span, msg: impl Into<String>) -> Result<T, Diagnostic> {
        Err(Diagnostic { span, message: msg.into() })
    }

    fn last_is_line_end(&self) -> bool {
        matches!(
            self.tokens.iter().rev().find(|t| !matches!(t.kind, TokenKind::Comment(_))),
            None | Some(Token { kind: TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent, .. })
        )
    }

    fn run(&mut self) -> Result<(), Diagnostic> {
        let mut at_line_start = true;
        loop {
            if at_line_start && self.depth == 0 {
                at_line_start = false;
                if self.handle_indentation()? {
                    continue;
                }
            }
            let Some(c) = self.peek() else { break };
            let span = self.span();
            match c {
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        if !self.last_is_line_end() {
                            self.push(TokenKind::Newline, span);
                        }
                        at_line_start = true;
                    }
                }
                ' ' | '\t' | '\x0c' => {
                    self.bump();
                }
                '\\' if self.peek_at(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '#' => {
                    let mut text = String::new();
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        text.push(c);
                        self.bump();
                    }
                    self.push(TokenKind::Comment(text), span);
                }
                '\'' | '"' => self.string(c, span)?,
                c if c.is_ascii_digit() => self.number(span)?,
                c if c.is_alphabetic() || c == '_' => {
                    let mut ident = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_alphanumeric() || c == '_' {
                            ident.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let kind = if let Some(k) = Keyword::from_ident(&ident) {
                        TokenKind::Keyword(k)
                    } else if RESERVED.contains(&ident.as_str()) {
                        TokenKind::Reserved(ident)
                    } else {
                        TokenKind::Name(ident)
                    };
                    self.push(kind, span);
                }
                _ => self.operator(span)?,
            }
        }
        let end = self.span();
        if !self.last_is_line_end() {
            self.push(TokenKind::Newline, end);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(TokenKind::Dedent, end);
        }
        self.push(TokenKind::Eof, end);
        Ok(())
    }

    /// Measures leading whitespace of a logical line and emits INDENT/DEDENT.
    /// Returns true when the line was blank or comment-only and fully consumed.
    fn handle_indentation(&mut self) -> Result<bool, Diagnostic> {
        let start = self.span();
        let mut width = 0usize;
        let mut has_tab = false;
        let mut has_space = false;
        while let Some(c) = self.peek() {
            match c {
                ' ' => {
                    has_space = true;
                    width += 1;
                }
                '\t' => {
                    has_tab = true;
                    width += 1;
                }
                '\x0c' => {}
                _ => break,
            }
            self.bump();
        }
        match self.peek() {
            None => return Ok(false),
            Some('\n') => {
                self.bump();
                return Ok(true);
            }
            Some('#') => return Ok(false),
            _ => {}
        }
        if has_tab && has_space {
            return self.err(start, "indentation mixes tabs and spaces");
        }
        if width > 0 {
            let c = if has_tab { '\t' } else { ' ' };
            match self.indent_char {
                None => self.indent_char = Some(c),
                Some(prev) if prev != c => return self.err(start, "inconsistent use of tabs and spaces in indentation"),
                _ => {}
            }
        }
        let current = *self.indents.last().unwrap();
        let span = self.span();
        if width > current {
            self.indents.push(width);
            self.push(TokenKind::Indent, span);
        } else if width < current {
            while *self.indents.last().unwrap() > width {
                self.indents.pop();
                self.push(TokenKind::Dedent, span);
            }
            if *self.indents.last().unwrap() != width {
                return self.err(span, "unindent does not match any outer indentation level");
            }
        }
        Ok(false)
    }

    fn string(&mut self, quote: char, span: Span) -> Result<(), Diagnostic> {
        let triple = self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote);
        let n = if triple { 3 } else { 1 };
        for _ in 0..n {
            self.bump();
        }
        let mut value = String::new();
        loop {
            let Some(c) = self.peek() else {
                return self.err(span, "unterminated string literal");
            };
            if c == quote {
                if !triple {
                    self.bump();
                    break;
                }
                if self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote) {
                    for _ in 0..3 {
                        self.bump();
                    }
                    break;
                }
                value.push(c);
                self.bump();
                continue;
            }
            if c == '\n' && !triple {
                return self.err(span, "unterminated string literal");
            }
            if c == '\\' {
                self.bump();
                let Some(e) = self.bump() else {
                    return self.err(span, "unterminated string literal");
                };
                match e {
                    'n' => value.push('\n'),
                    't' => value.push('\t'),
                    'r' => value.push('\r'),
                    '0' => value.push('\0'),
                    '\\' => value.push('\\'),
                    '\'' => value.push('\''),
                    '"' => value.push('"'),
                    '\n' => {}
                    'x' => {
                        let hex: String = (0..2).filter_map(|_| self.bump()).collect();
                        match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                            Some(ch) if hex.len() == 2 => value.push(ch),
                            _ => return self.err(span, "invalid \\x escape"),
                        }
                    }
                    other => {
                        value.push('\\');
                        value.push(other);
                    }
                }
                continue;
            }
            value.push(c);
            self.bump();
        }
        self.push(TokenKind::Str(value), span);
        Ok(())
    }

    fn number(&mut self, span: Span) -> Result<(), Diagnostic> {
        let mut digits = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == '_' {
                if c != '_' {
                    digits.push(c);
                }
                self.bump();
            } else {
                break;
            }
        }
        if matches!(self.peek(), Some(c) if c == '.' || c.is_alphabetic()) && self.peek() != Some('.') {
            return self.err(span, "malformed number literal");
        }
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            return self.err(span, "floating-point literals are not supported");
        }
        match digits.parse::<i64>() {
            Ok(v) => {
                self.push(TokenKind::Int(v), span);
                Ok(())
            }
            Err(_) => self.err(span, "integer literal out of range"),
        }
    }

    fn operator(&mut self, span: Span) -> Result<(), Diagnostic> {
        for op in OPERATORS {
            let len = op.chars().count();
            if op.chars().enumerate().all(|(k, ch)| self.peek_at(k) == Some(ch)) {
                for _ in 0..len {
                    self.bump();
                }
                match *op {
                    "(" | "[" | "{" => self.depth += 1,
                    ")" | "]" | "}" => self.depth = self.depth.saturating_sub(1),
                    _ => {}
                }
                let kind = if UNSUPPORTED_OPS.contains(op) {
                    TokenKind::Unsupported(op.to_string())
                } else {
                    TokenKind::Op(op)
                };
                self.push(kind, span);
                return Ok(());
            }
        }
        let c = self.bump().unwrap();
        if matches!(c, '@' | '&' | '|' | '^' | '~' | '!' | '$' | '?' | '`') {
            self.push(TokenKind::Unsupported(c.to_string()), span);
            Ok(())
        } else {
            self.err(span, format!("unexpected character {c:?}"))
        }
    }
}
