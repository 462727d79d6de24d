use std::fmt;

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Str(String),
    Number(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Equals,
    Plus,
    Minus,
    Star,
    Dot,
    Semicolon,
    Eof,
}

impl TokenKind {
    /// Source-like spelling, used by the pretty printer and shuffle tests.
    pub fn spelling(&self) -> String {
        match self {
            TokenKind::Ident(s) => s.clone(),
            TokenKind::Str(s) => quote(s),
            TokenKind::Number(n) => format_number(*n),
            TokenKind::LParen => "(".into(),
            TokenKind::RParen => ")".into(),
            TokenKind::LBracket => "[".into(),
            TokenKind::RBracket => "]".into(),
            TokenKind::Comma => ",".into(),
            TokenKind::Equals => "=".into(),
            TokenKind::Plus => "+".into(),
            TokenKind::Minus => "-".into(),
            TokenKind::Star => "*".into(),
            TokenKind::Dot => ".".into(),
            TokenKind::Semicolon => ";".into(),
            TokenKind::Eof => String::new(),
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Str(s) => write!(f, "string {}", quote(s)),
            TokenKind::Number(n) => write!(f, "number {}", format_number(*n)),
            TokenKind::Eof => f.write_str("end of input"),
            other => write!(f, "`{}`", other.spelling()),
        }
    }
}

/// Double-quoted form of a string literal, escaping quotes and backslashes.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_number(n: f64) -> String {
    let s = format!("{n:?}");
    s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offset of the first character.
    pub offset: usize,
}

/// Split source text into tokens. `#` starts a comment running to the end of
/// the line. The final token is always `Eof`.
pub fn tokenize(source: &str) -> Result<Vec<Token>, SyntaxError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = match c {
            b'(' => Some(TokenKind::LParen),
            b')' => Some(TokenKind::RParen),
            b'[' => Some(TokenKind::LBracket),
            b']' => Some(TokenKind::RBracket),
            b',' => Some(TokenKind::Comma),
            b'=' => Some(TokenKind::Equals),
            b'+' => Some(TokenKind::Plus),
            b'-' => Some(TokenKind::Minus),
            b'*' => Some(TokenKind::Star),
            b';' => Some(TokenKind::Semicolon),
            b'.' if !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => Some(TokenKind::Dot),
            _ => None,
        };
        if let Some(kind) = simple {
            tokens.push(Token { kind, offset: start });
            i += 1;
            continue;
        }
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'"' | b'\'' => {
                let (text, next) = lex_string(source, i)?;
                tokens.push(Token {
                    kind: TokenKind::Str(text),
                    offset: start,
                });
                i = next;
            }
            b'0'..=b'9' | b'.' => {
                let (value, next) = lex_number(source, i)?;
                tokens.push(Token {
                    kind: TokenKind::Number(value),
                    offset: start,
                });
                i = next;
            }
            b'a'..=b'z' | b'_' => {
                while i < bytes.len() && matches!(bytes[i], b'a'..=b'z' | b'0'..=b'9' | b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(source[start..i].to_owned()),
                    offset: start,
                });
            }
            _ => {
                let ch = source[i..].chars().next().unwrap_or('?');
                return Err(SyntaxError::new(
                    start,
                    format!("unexpected character {ch:?}"),
                    expected_primary(),
                ));
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        offset: source.len(),
    });
    Ok(tokens)
}

pub(crate) fn expected_primary() -> Vec<String> {
    ["identifier", "string", "number", "`[`", "`(`", "`-`"]
        .into_iter()
        .map(String::from)
        .collect()
}

fn lex_string(source: &str, start: usize) -> Result<(String, usize), SyntaxError> {
    let quote_char = source.as_bytes()[start] as char;
    let mut out = String::new();
    let mut chars = source[start + 1..].char_indices();
    while let Some((off, c)) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some((_, escaped)) => out.push(escaped),
                None => break,
            },
            '\n' => break,
            c if c == quote_char => return Ok((out, start + 1 + off + 1)),
            c => out.push(c),
        }
    }
    Err(SyntaxError::new(
        start,
        "unterminated string literal".into(),
        vec![format!("`{quote_char}`")],
    ))
}

fn lex_number(source: &str, start: usize) -> Result<(f64, usize), SyntaxError> {
    let bytes = source.as_bytes();
    let mut i = start;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    source[start..i]
        .parse::<f64>()
        .map(|v| (v, i))
        .map_err(|_| SyntaxError::new(start, format!("malformed number `{}`", &source[start..i]), vec!["number".into()]))
}
