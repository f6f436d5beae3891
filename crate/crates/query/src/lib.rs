//! The run-search language: a conjunction of `key comparator value` clauses.
//!
//! ```text
//! filter := clause ("AND" clause)*
//! clause := key cmp value
//! key    := [namespace "."] (ident | `backtick quoted`)
//! cmp    := = | != | < | <= | > | >= | LIKE | ILIKE | IN
//! value  := 'string' | "string" | number | "(" string ("," string)* ")"
//! ```
//!
//! Namespaces are `params`, `metrics`, `tags` and `attributes`; a key with no
//! namespace is an attribute. Keywords are case-insensitive and the empty
//! filter matches every run.

mod ast;
mod eval;
mod lexer;
mod order;
mod parser;
mod search;

pub use ast::{Clause, Comparator, FilterExpr, Namespace, Operand};
pub use eval::{eval_clause, eval_filter, like_match};
pub use order::{compare_runs, parse_order_by, OrderBySpec, OrderTerm, SortValue};
pub use parser::{parse_filter, parse_filter_bytes, print_filter, ParseError};
pub use search::{search_runs, QueryError};

/// Attribute keys and whether they compare numerically.
pub const ATTRIBUTES: &[(&str, bool)] = &[
    ("run_id", false),
    ("experiment_id", false),
    ("status", false),
    ("start_time", true),
    ("end_time", true),
];

pub(crate) fn attribute_is_numeric(key: &str) -> Option<bool> {
    ATTRIBUTES.iter().find(|(k, _)| *k == key).map(|(_, n)| *n)
}
