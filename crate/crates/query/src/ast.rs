use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Namespace {
    Params,
    Metrics,
    Tags,
    Attributes,
}

impl Namespace {
    pub fn as_str(self) -> &'static str {
        match self {
            Namespace::Params => "params",
            Namespace::Metrics => "metrics",
            Namespace::Tags => "tags",
            Namespace::Attributes => "attributes",
        }
    }

    pub fn from_prefix(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "params" => Some(Namespace::Params),
            "metrics" => Some(Namespace::Metrics),
            "tags" => Some(Namespace::Tags),
            "attributes" => Some(Namespace::Attributes),
            _ => None,
        }
    }
}

impl fmt::Display for Namespace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Like,
    ILike,
    In,
}

impl Comparator {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Like => "LIKE",
            Comparator::ILike => "ILIKE",
            Comparator::In => "IN",
        }
    }

    pub fn is_ordering(self) -> bool {
        matches!(
            self,
            Comparator::Eq | Comparator::Ne | Comparator::Lt | Comparator::Le | Comparator::Gt | Comparator::Ge
        )
    }

    pub fn is_string_op(self) -> bool {
        matches!(self, Comparator::Eq | Comparator::Ne | Comparator::Like | Comparator::ILike)
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Str(String),
    Num(f64),
    List(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub namespace: Namespace,
    pub key: String,
    pub comparator: Comparator,
    pub operand: Operand,
}

/// Conjunction of clauses; no clauses matches everything.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterExpr {
    pub clauses: Vec<Clause>,
}

impl FilterExpr {
    pub fn match_all() -> Self {
        Self::default()
    }

    pub fn is_match_all(&self) -> bool {
        self.clauses.is_empty()
    }
}
