use std::cmp::Ordering;
use std::fmt;

use qtrack_core::Run;

use crate::ast::Namespace;
use crate::attribute_is_numeric;
use crate::lexer::{tokenize, Tok};
use crate::parser::{print_key, ParseError, Parser};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderTerm {
    pub namespace: Namespace,
    pub key: String,
    pub descending: bool,
}

impl fmt::Display for OrderTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = if self.descending { "DESC" } else { "ASC" };
        write!(f, "{} {dir}", print_key(self.namespace, &self.key))
    }
}

/// Sort keys, most significant first. Ties always fall back to run_id ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderBySpec(pub Vec<OrderTerm>);

impl Default for OrderBySpec {
    fn default() -> Self {
        OrderBySpec(vec![OrderTerm {
            namespace: Namespace::Attributes,
            key: "start_time".into(),
            descending: true,
        }])
    }
}

impl OrderBySpec {
    /// Parse wire-form terms such as `"metrics.fidelity DESC"`; an empty list
    /// yields the default order.
    pub fn parse<S: AsRef<str>>(terms: &[S]) -> Result<Self, ParseError> {
        if terms.is_empty() {
            return Ok(Self::default());
        }
        terms.iter().map(|t| parse_order_by(t.as_ref())).collect::<Result<_, _>>().map(OrderBySpec)
    }

    pub fn to_wire(&self) -> Vec<String> {
        self.0.iter().map(|t| t.to_string()).collect()
    }
}

/// One `key [ASC|DESC]` term.
pub fn parse_order_by(text: &str) -> Result<OrderTerm, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let (namespace, key, key_at) = p.key()?;
    if namespace == Namespace::Attributes && attribute_is_numeric(&key).is_none() {
        return Err(ParseError::new(key_at, format!("unknown attribute {key:?}")));
    }
    let t = p.next();
    let descending = match &t.tok {
        Tok::Eof => false,
        Tok::Ident(w) if w.eq_ignore_ascii_case("ASC") => false,
        Tok::Ident(w) if w.eq_ignore_ascii_case("DESC") => true,
        _ => return Err(ParseError::new(t.start, "expected ASC, DESC or end of term")),
    };
    if t.tok != Tok::Eof {
        let end = p.next();
        if end.tok != Tok::Eof {
            return Err(ParseError::new(end.start, "expected end of term"));
        }
    }
    Ok(OrderTerm {
        namespace,
        key,
        descending,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SortValue {
    Num(f64),
    Str(String),
}

impl SortValue {
    fn cmp(&self, other: &SortValue) -> Ordering {
        match (self, other) {
            (SortValue::Num(a), SortValue::Num(b)) => a.total_cmp(b),
            (SortValue::Str(a), SortValue::Str(b)) => a.cmp(b),
            (SortValue::Num(_), SortValue::Str(_)) => Ordering::Less,
            (SortValue::Str(_), SortValue::Num(_)) => Ordering::Greater,
        }
    }

    pub fn of(run: &Run, namespace: Namespace, key: &str) -> Option<SortValue> {
        match namespace {
            Namespace::Params => run.params.get(key).cloned().map(SortValue::Str),
            Namespace::Tags => run.tags.get(key).cloned().map(SortValue::Str),
            Namespace::Metrics => run.latest_metric(key).map(|p| SortValue::Num(p.value)),
            Namespace::Attributes => match key {
                "run_id" => Some(SortValue::Str(run.run_id.clone())),
                "experiment_id" => Some(SortValue::Str(run.experiment_id.clone())),
                "status" => Some(SortValue::Str(run.status.as_str().into())),
                "start_time" => Some(SortValue::Num(run.start_time as f64)),
                "end_time" => run.end_time.map(|t| SortValue::Num(t as f64)),
                _ => None,
            },
        }
    }
}

/// Total order over runs: each term in turn (missing values last in either
/// direction), then run_id ascending.
pub fn compare_runs(spec: &OrderBySpec, a: &Run, b: &Run) -> Ordering {
    for term in &spec.0 {
        let va = SortValue::of(a, term.namespace, &term.key);
        let vb = SortValue::of(b, term.namespace, &term.key);
        let ord = match (va, vb) {
            (None, None) => Ordering::Equal,
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (Some(x), Some(y)) => {
                let o = x.cmp(&y);
                if term.descending {
                    o.reverse()
                } else {
                    o
                }
            }
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    a.run_id.cmp(&b.run_id)
}
