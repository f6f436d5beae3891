use crate::parser::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// `[A-Za-z_][A-Za-z0-9_.]*`, also used for keywords.
    Ident(String),
    Backtick(String),
    Str(String),
    Num(f64),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
}

pub(crate) fn tokenize(input: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.') {
                    i += 1;
                }
                Tok::Ident(input[start..i].to_string())
            }
            b'`' => {
                let (text, next) = quoted(input, i, b'`')?;
                i = next;
                Tok::Backtick(text)
            }
            b'"' | b'\'' => {
                let (text, next) = quoted(input, i, c)?;
                i = next;
                Tok::Str(text)
            }
            b'0'..=b'9' | b'+' | b'-' => {
                let (value, next) = number(input, i)?;
                i = next;
                Tok::Num(value)
            }
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b',' => {
                i += 1;
                Tok::Comma
            }
            b'=' => {
                i += 1;
                Tok::Op("=")
            }
            b'!' if bytes.get(i + 1) == Some(&b'=') => {
                i += 2;
                Tok::Op("!=")
            }
            b'<' | b'>' => {
                let op = match (c, bytes.get(i + 1)) {
                    (b'<', Some(b'=')) => "<=",
                    (b'>', Some(b'=')) => ">=",
                    (b'<', _) => "<",
                    _ => ">",
                };
                i += op.len();
                Tok::Op(op)
            }
            _ => {
                let ch = input[i..].chars().next().unwrap_or('?');
                return Err(ParseError::new(i, format!("unexpected character {ch:?}")));
            }
        };
        out.push(Token { tok, start, end: i });
    }
    out.push(Token {
        tok: Tok::Eof,
        start: bytes.len(),
        end: bytes.len(),
    });
    Ok(out)
}

/// Quoted text starting at `open`. Backticks escape themselves by doubling;
/// string literals use backslash escapes.
fn quoted(input: &str, open: usize, quote: u8) -> Result<(String, usize), ParseError> {
    let mut text = String::new();
    let mut chars = input[open + 1..].char_indices().peekable();
    while let Some((rel, ch)) = chars.next() {
        let at = open + 1 + rel;
        if quote == b'`' {
            if ch == '`' {
                if matches!(chars.peek(), Some((_, '`'))) {
                    chars.next();
                    text.push('`');
                    continue;
                }
                return Ok((text, at + 1));
            }
            text.push(ch);
        } else if ch == quote as char {
            return Ok((text, at + 1));
        } else if ch == '\\' {
            match chars.next() {
                Some((_, 'n')) => text.push('\n'),
                Some((_, 't')) => text.push('\t'),
                Some((_, 'r')) => text.push('\r'),
                Some((_, other)) => text.push(other),
                None => break,
            }
        } else {
            text.push(ch);
        }
    }
    let what = if quote == b'`' { "backtick" } else { "quote" };
    Err(ParseError::new(open, format!("unterminated {what}")))
}

/// `[+-]?digits(.digits)?`
fn number(input: &str, start: usize) -> Result<(f64, usize), ParseError> {
    let bytes = input.as_bytes();
    let mut i = start;
    if matches!(bytes[i], b'+' | b'-') {
        i += 1;
    }
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i == int_start {
        return Err(ParseError::new(start, "expected digits"));
    }
    if i < bytes.len() && bytes[i] == b'.' {
        let frac = i + 1;
        i = frac;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == frac {
            return Err(ParseError::new(i, "expected digits after decimal point"));
        }
    }
    if i < bytes.len() && (bytes[i].is_ascii_alphabetic() || bytes[i] == b'_' || bytes[i] == b'.') {
        return Err(ParseError::new(i, "malformed number"));
    }
    let value: f64 = input[start..i]
        .parse()
        .map_err(|_| ParseError::new(start, "malformed number"))?;
    if !value.is_finite() {
        return Err(ParseError::new(start, "number out of range"));
    }
    Ok((value, i))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks("metrics.fidelity >= -0.5 AND params.`a b` = 'x'"),
            vec![
                Tok::Ident("metrics.fidelity".into()),
                Tok::Op(">="),
                Tok::Num(-0.5),
                Tok::Ident("AND".into()),
                Tok::Ident("params.".into()),
                Tok::Backtick("a b".into()),
                Tok::Op("="),
                Tok::Str("x".into()),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn escapes() {
        assert_eq!(toks(r#""a\"b\\c""#)[0], Tok::Str("a\"b\\c".into()));
        assert_eq!(toks("`x``y`")[0], Tok::Backtick("x`y".into()));
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(tokenize("a = 'open").unwrap_err().offset, 4);
        assert_eq!(tokenize("a = 1.").unwrap_err().offset, 6);
        assert_eq!(tokenize("a ~ 1").unwrap_err().offset, 2);
        assert_eq!(tokenize("a = 12x").unwrap_err().offset, 6);
    }
}
