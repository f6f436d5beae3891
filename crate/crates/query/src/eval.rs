use qtrack_core::Run;

use crate::ast::{Clause, Comparator, FilterExpr, Namespace, Operand};

pub fn eval_filter(expr: &FilterExpr, run: &Run) -> bool {
    expr.clauses.iter().all(|c| eval_clause(c, run))
}

/// A clause whose key is absent on the run is false, whatever the comparator.
pub fn eval_clause(clause: &Clause, run: &Run) -> bool {
    match clause.namespace {
        Namespace::Params => run.params.get(&clause.key).is_some_and(|v| compare_str(v, clause)),
        Namespace::Tags => run.tags.get(&clause.key).is_some_and(|v| compare_str(v, clause)),
        Namespace::Metrics => run
            .latest_metric(&clause.key)
            .is_some_and(|p| compare_num(p.value, clause)),
        Namespace::Attributes => match clause.key.as_str() {
            "run_id" => compare_str(&run.run_id, clause),
            "experiment_id" => compare_str(&run.experiment_id, clause),
            "status" => compare_str(run.status.as_str(), clause),
            "start_time" => compare_num(run.start_time as f64, clause),
            "end_time" => run.end_time.is_some_and(|t| compare_num(t as f64, clause)),
            _ => false,
        },
    }
}

fn compare_str(actual: &str, clause: &Clause) -> bool {
    match (&clause.operand, clause.comparator) {
        (Operand::Str(s), Comparator::Eq) => actual == s,
        (Operand::Str(s), Comparator::Ne) => actual != s,
        (Operand::Str(s), Comparator::Like) => like_match(actual, s),
        (Operand::Str(s), Comparator::ILike) => like_match(&actual.to_lowercase(), &s.to_lowercase()),
        (Operand::List(items), Comparator::In) => items.iter().any(|i| i == actual),
        _ => false,
    }
}

fn compare_num(actual: f64, clause: &Clause) -> bool {
    let Operand::Num(n) = clause.operand else {
        return false;
    };
    match clause.comparator {
        Comparator::Eq => actual == n,
        Comparator::Ne => actual != n,
        Comparator::Lt => actual < n,
        Comparator::Le => actual <= n,
        Comparator::Gt => actual > n,
        Comparator::Ge => actual >= n,
        _ => false,
    }
}

/// SQL-style LIKE where `%` matches any run of characters (including none).
/// Every other character matches itself.
pub fn like_match(text: &str, pattern: &str) -> bool {
    let text: Vec<char> = text.chars().collect();
    let pat: Vec<char> = pattern.chars().collect();
    let (mut t, mut p) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while t < text.len() {
        if p < pat.len() && pat[p] == '%' {
            star = Some((p, t));
            p += 1;
        } else if p < pat.len() && pat[p] == text[t] {
            p += 1;
            t += 1;
        } else if let Some((sp, st)) = star {
            p = sp + 1;
            t = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    pat[p..].iter().all(|&c| c == '%')
}
