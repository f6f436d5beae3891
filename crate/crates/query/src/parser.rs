use std::fmt;

use crate::ast::{Clause, Comparator, FilterExpr, Namespace, Operand};
use crate::attribute_is_numeric;
use crate::lexer::{tokenize, Tok, Token};

/// Failure to parse, located at the byte offset of the first invalid token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(offset: usize, message: impl Into<String>) -> Self {
        Self {
            offset,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at offset {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for ParseError {}

pub fn parse_filter(text: &str) -> Result<FilterExpr, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    if p.peek().tok == Tok::Eof {
        return Ok(FilterExpr::match_all());
    }
    let mut clauses = vec![p.clause()?];
    loop {
        let t = p.next();
        match &t.tok {
            Tok::Eof => break,
            Tok::Ident(w) if w.eq_ignore_ascii_case("AND") => clauses.push(p.clause()?),
            _ => return Err(ParseError::new(t.start, "expected AND or end of filter")),
        }
    }
    Ok(FilterExpr { clauses })
}

/// Parse raw bytes; invalid UTF-8 is reported at its first bad byte.
pub fn parse_filter_bytes(bytes: &[u8]) -> Result<FilterExpr, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ParseError::new(e.valid_up_to(), "invalid UTF-8"))?;
    parse_filter(text)
}

pub(crate) struct Parser {
    pub tokens: Vec<Token>,
    pub pos: usize,
}

impl Parser {
    pub fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    pub fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    /// `[namespace "."] (ident | backtick)`; returns the key's start offset.
    pub fn key(&mut self) -> Result<(Namespace, String, usize), ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Backtick(k) => Ok((Namespace::Attributes, k, t.start)),
            Tok::Ident(word) => {
                if let Some(prefix) = word.strip_suffix('.') {
                    if let Some(ns) = Namespace::from_prefix(prefix) {
                        let next = self.peek().clone();
                        if let Tok::Backtick(k) = next.tok {
                            if next.start == t.end {
                                self.next();
                                return Ok((ns, k, t.start));
                            }
                        }
                    }
                }
                match word.split_once('.') {
                    Some((prefix, rest)) if !rest.is_empty() => match Namespace::from_prefix(prefix) {
                        Some(ns) => Ok((ns, rest.to_string(), t.start)),
                        None => Ok((Namespace::Attributes, word, t.start)),
                    },
                    Some(_) => Err(ParseError::new(t.end, "expected key after '.'")),
                    None => Ok((Namespace::Attributes, word, t.start)),
                }
            }
            Tok::Eof => Err(ParseError::new(t.start, "expected key")),
            _ => Err(ParseError::new(t.start, "expected key")),
        }
    }

    fn comparator(&mut self) -> Result<(Comparator, usize), ParseError> {
        let t = self.next();
        let cmp = match &t.tok {
            Tok::Op("=") => Comparator::Eq,
            Tok::Op("!=") => Comparator::Ne,
            Tok::Op("<") => Comparator::Lt,
            Tok::Op("<=") => Comparator::Le,
            Tok::Op(">") => Comparator::Gt,
            Tok::Op(">=") => Comparator::Ge,
            Tok::Ident(w) if w.eq_ignore_ascii_case("LIKE") => Comparator::Like,
            Tok::Ident(w) if w.eq_ignore_ascii_case("ILIKE") => Comparator::ILike,
            Tok::Ident(w) if w.eq_ignore_ascii_case("IN") => Comparator::In,
            _ => return Err(ParseError::new(t.start, "expected comparator")),
        };
        Ok((cmp, t.start))
    }

    fn value(&mut self, cmp: Comparator) -> Result<(Operand, usize), ParseError> {
        let t = self.next();
        let start = t.start;
        if cmp == Comparator::In {
            if t.tok != Tok::LParen {
                return Err(ParseError::new(start, if t.tok == Tok::Eof { "expected value" } else { "expected '('" }));
            }
            let mut items = Vec::new();
            if self.peek().tok == Tok::RParen {
                self.next();
                return Ok((Operand::List(items), start));
            }
            loop {
                let item = self.next();
                match item.tok {
                    Tok::Str(s) => items.push(s),
                    _ => return Err(ParseError::new(item.start, "expected string value")),
                }
                let sep = self.next();
                match sep.tok {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    _ => return Err(ParseError::new(sep.start, "expected ',' or ')'")),
                }
            }
            return Ok((Operand::List(items), start));
        }
        match t.tok {
            Tok::Str(s) => Ok((Operand::Str(s), start)),
            Tok::Num(n) => Ok((Operand::Num(n), start)),
            _ => Err(ParseError::new(start, "expected value")),
        }
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        let (namespace, key, key_at) = self.key()?;
        let (comparator, cmp_at) = self.comparator()?;
        let (operand, value_at) = self.value(comparator)?;
        check_clause(namespace, &key, comparator, &operand, key_at, cmp_at, value_at)?;
        Ok(Clause {
            namespace,
            key,
            comparator,
            operand,
        })
    }
}

/// Type rules: metrics and numeric attributes compare numbers with the six
/// ordering comparators; params, tags and string attributes take strings with
/// `= != LIKE ILIKE`; `IN` is reserved for `attributes.run_id`.
fn check_clause(
    ns: Namespace,
    key: &str,
    cmp: Comparator,
    operand: &Operand,
    key_at: usize,
    cmp_at: usize,
    value_at: usize,
) -> Result<(), ParseError> {
    let numeric = match ns {
        Namespace::Metrics => true,
        Namespace::Params | Namespace::Tags => false,
        Namespace::Attributes => match attribute_is_numeric(key) {
            Some(n) => n,
            None => return Err(ParseError::new(key_at, format!("unknown attribute {key:?}"))),
        },
    };
    if key.is_empty() {
        return Err(ParseError::new(key_at, "empty key"));
    }
    if cmp == Comparator::In {
        if ns != Namespace::Attributes || key != "run_id" {
            return Err(ParseError::new(cmp_at, "IN is only supported for attributes.run_id"));
        }
        return Ok(());
    }
    if numeric {
        if !cmp.is_ordering() {
            return Err(ParseError::new(cmp_at, format!("{cmp} is not supported for numeric keys")));
        }
        if !matches!(operand, Operand::Num(_)) {
            return Err(ParseError::new(value_at, "expected numeric value"));
        }
    } else {
        if !cmp.is_string_op() {
            return Err(ParseError::new(cmp_at, format!("{cmp} is not supported for string keys")));
        }
        if !matches!(operand, Operand::Str(_)) {
            return Err(ParseError::new(value_at, "expected string value"));
        }
    }
    Ok(())
}

fn plain_key(key: &str) -> bool {
    let mut segments = key.split('.');
    let first_ok = key
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    first_ok && segments.all(|s| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
}

pub(crate) fn print_key(ns: Namespace, key: &str) -> String {
    if plain_key(key) {
        format!("{ns}.{key}")
    } else {
        format!("{ns}.`{}`", key.replace('`', "``"))
    }
}

fn print_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        if ch == '"' || ch == '\\' {
            out.push('\\');
        }
        out.push(ch);
    }
    out.push('"');
    out
}

/// Canonical text: namespaced keys, single spaces, double-quoted strings.
pub fn print_filter(expr: &FilterExpr) -> String {
    expr.clauses
        .iter()
        .map(|c| {
            let value = match &c.operand {
                Operand::Str(s) => print_str(s),
                Operand::Num(n) => format!("{n}"),
                Operand::List(items) => {
                    format!("({})", items.iter().map(|s| print_str(s)).collect::<Vec<_>>().join(", "))
                }
            };
            format!("{} {} {}", print_key(c.namespace, &c.key), c.comparator, value)
        })
        .collect::<Vec<_>>()
        .join(" AND ")
}
