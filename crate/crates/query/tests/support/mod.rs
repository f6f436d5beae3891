//! Random corpora and a reference ordering for checking search results
//! against a brute-force scan. Shared with the workspace acceptance suite.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BTreeMap;

use proptest::prelude::*;
use qtrack_core::{MetricPoint, Run, RunStatus};
use qtrack_query::{Clause, Comparator, FilterExpr, Namespace, Operand};
use rand::seq::IndexedRandom;
use rand::Rng;

pub const SHOTS: &[&str] = &["500", "1000", "2000", "50"];
pub const BACKENDS: &[&str] = &["mock-q50", "qx-vtt", "Mock-Q5", "sim"];
pub const TEAMS: &[&str] = &["alpha", "Beta", "gamma"];
pub const METRIC_VALUES: &[f64] = &[0.8, 0.9, 0.92, 0.95, 0.5, -1.0, 0.0, 3.25];

fn hex_id(rng: &mut impl Rng) -> String {
    format!("{:032x}", rng.random::<u128>())
}

/// `n` runs spread over `experiment_ids` with overlapping values so filters
/// and sort keys collide often.
pub fn random_runs(rng: &mut impl Rng, n: usize, experiment_ids: &[String]) -> Vec<Run> {
    (0..n)
        .map(|_| {
            let exp = experiment_ids.choose(rng).unwrap().clone();
            let start = 1_700_000_000_000 + rng.random_range(0..50i64) * 1000;
            let mut run = Run::new(hex_id(rng), exp, start);
            if rng.random_bool(0.85) {
                run.params.insert("shots".into(), SHOTS.choose(rng).unwrap().to_string());
            }
            if rng.random_bool(0.6) {
                run.params.insert("backend".into(), BACKENDS.choose(rng).unwrap().to_string());
            }
            if rng.random_bool(0.5) {
                run.tags.insert("team".into(), TEAMS.choose(rng).unwrap().to_string());
            }
            if rng.random_bool(0.3) {
                run.tags.insert("Training info".into(), "Qiskit on Qx".into());
            }
            for key in ["fidelity", "loss"] {
                if rng.random_bool(0.7) {
                    let points = (0..rng.random_range(1..4))
                        .map(|_| {
                            MetricPoint::new(
                                key,
                                *METRIC_VALUES.choose(rng).unwrap(),
                                start + rng.random_range(0..3i64),
                                rng.random_range(0..3i64),
                            )
                            .unwrap()
                        })
                        .collect();
                    run.metrics.insert(key.into(), points);
                }
            }
            match rng.random_range(0..4) {
                0 => {}
                1 => {
                    run.status = RunStatus::Finished;
                    run.end_time = Some(start + rng.random_range(0..20i64) * 1000);
                }
                2 => {
                    run.status = RunStatus::Failed;
                    run.end_time = Some(start + rng.random_range(0..20i64) * 1000);
                }
                _ => {
                    run.status = RunStatus::Killed;
                    run.end_time = Some(start);
                }
            }
            run
        })
        .collect()
}

fn kw(rng: &mut impl Rng, word: &str) -> String {
    match rng.random_range(0..3) {
        0 => word.to_uppercase(),
        1 => word.to_lowercase(),
        _ => word
            .chars()
            .enumerate()
            .map(|(i, c)| if i % 2 == 0 { c.to_ascii_uppercase() } else { c.to_ascii_lowercase() })
            .collect(),
    }
}

fn quote(rng: &mut impl Rng, s: &str) -> String {
    if rng.random_bool(0.5) {
        format!("'{s}'")
    } else {
        format!("\"{s}\"")
    }
}

fn string_value(rng: &mut impl Rng, vocab: &[&str], like: bool) -> String {
    let base = vocab.choose(rng).unwrap().to_string();
    if !like {
        return base;
    }
    match rng.random_range(0..4) {
        0 => format!("{}%", &base[..1]),
        1 => format!("%{}", &base[base.len() - 1..]),
        2 => "%".into(),
        _ => base,
    }
}

fn string_clause(rng: &mut impl Rng, key: &str, vocab: &[&str]) -> String {
    let (op, like) = match rng.random_range(0..4) {
        0 => ("=".to_string(), false),
        1 => ("!=".to_string(), false),
        2 => (kw(rng, "LIKE"), true),
        _ => (kw(rng, "ILIKE"), true),
    };
    let v = string_value(rng, vocab, like);
    format!("{key} {op} {}", quote(rng, &v))
}

fn numeric_op(rng: &mut impl Rng) -> &'static str {
    ["=", "!=", "<", "<=", ">", ">="][rng.random_range(0..6)]
}

/// Random conjunctive filter text over the vocabulary of [`random_runs`].
/// Zero clauses yields the empty (match-all) filter.
pub fn random_filter(rng: &mut impl Rng, runs: &[Run]) -> String {
    let n = rng.random_range(0..4);
    let mut clauses = Vec::new();
    for _ in 0..n {
        let c = match rng.random_range(0..10) {
            0 | 1 => string_clause(rng, "params.shots", SHOTS),
            2 => string_clause(rng, "params.backend", BACKENDS),
            3 => string_clause(rng, "tags.team", TEAMS),
            4 => string_clause(rng, "tags.`Training info`", &["Qiskit on Qx", "other"]),
            5 | 6 => {
                let key = if rng.random_bool(0.5) { "metrics.fidelity" } else { "metrics.loss" };
                format!("{key} {} {}", numeric_op(rng), METRIC_VALUES.choose(rng).unwrap())
            }
            7 => {
                let status = ["RUNNING", "FINISHED", "FAILED", "KILLED"].choose(rng).unwrap();
                let key = if rng.random_bool(0.5) { "status" } else { "attributes.status" };
                let op = ["=", "!="][rng.random_range(0..2)];
                format!("{key} {op} {}", quote(rng, status))
            }
            8 => {
                let key = if rng.random_bool(0.5) { "start_time" } else { "attributes.end_time" };
                let t = 1_700_000_000_000i64 + rng.random_range(0..60i64) * 1000;
                format!("{key} {} {t}", numeric_op(rng))
            }
            _ => {
                if rng.random_bool(0.5) && !runs.is_empty() {
                    let mut ids = Vec::new();
                    for _ in 0..rng.random_range(1..6) {
                        let id = runs.choose(rng).unwrap().run_id.clone();
                        ids.push(quote(rng, &id));
                    }
                    format!("run_id {} ({})", kw(rng, "IN"), ids.join(", "))
                } else {
                    let missing = ["metrics.absent > 0", "params.absent = 'x'", "tags.absent != 'y'"];
                    missing.choose(rng).unwrap().to_string()
                }
            }
        };
        clauses.push(c);
    }
    let sep = format!(" {} ", kw(rng, "AND"));
    clauses.join(&sep)
}

pub fn random_order(rng: &mut impl Rng) -> Vec<String> {
    let keys = [
        "metrics.fidelity",
        "metrics.loss",
        "params.shots",
        "params.backend",
        "tags.team",
        "start_time",
        "attributes.end_time",
        "status",
    ];
    (0..rng.random_range(0..3))
        .map(|_| {
            let dir = ["", " ASC", " DESC", " desc"][rng.random_range(0..4)];
            format!("{}{dir}", keys.choose(rng).unwrap())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum RefVal {
    Num(u64),
    Str(String),
}

/// Variant order puts present values before missing ones.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum RefKey {
    Asc(RefVal),
    Desc(Reverse<RefVal>),
    Missing,
}

/// Map an f64 to a u64 whose unsigned order matches numeric order.
fn ordered_bits(x: f64) -> u64 {
    let bits = x.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

fn latest(points: &[MetricPoint]) -> f64 {
    let mut best = &points[0];
    for p in &points[1..] {
        let newer = (p.step, p.timestamp) > (best.step, best.timestamp)
            || ((p.step, p.timestamp) == (best.step, best.timestamp) && p.value > best.value);
        if newer {
            best = p;
        }
    }
    best.value
}

fn ref_value(run: &Run, term: &str) -> Option<RefVal> {
    let (key, _) = split_term(term);
    match key {
        "metrics.fidelity" | "metrics.loss" => run
            .metrics
            .get(&key["metrics.".len()..])
            .map(|p| RefVal::Num(ordered_bits(latest(p)))),
        "params.shots" | "params.backend" => run.params.get(&key["params.".len()..]).cloned().map(RefVal::Str),
        "tags.team" => run.tags.get("team").cloned().map(RefVal::Str),
        "start_time" => Some(RefVal::Num(ordered_bits(run.start_time as f64))),
        "attributes.end_time" => run.end_time.map(|t| RefVal::Num(ordered_bits(t as f64))),
        "status" => Some(RefVal::Str(run.status.to_string())),
        other => panic!("reference sort does not know {other}"),
    }
}

fn split_term(term: &str) -> (&str, bool) {
    let mut parts = term.split_whitespace();
    let key = parts.next().unwrap();
    let desc = parts.next().is_some_and(|d| d.eq_ignore_ascii_case("desc"));
    (key, desc)
}

/// Sort by decorated keys: each term, then run_id. An empty order means
/// start_time descending.
pub fn reference_sort(runs: &mut [Run], order: &[String]) {
    let default = vec!["start_time DESC".to_string()];
    let order = if order.is_empty() { &default } else { order };
    runs.sort_by_cached_key(|run| {
        let keys: Vec<RefKey> = order
            .iter()
            .map(|term| match (ref_value(run, term), split_term(term).1) {
                (None, _) => RefKey::Missing,
                (Some(v), false) => RefKey::Asc(v),
                (Some(v), true) => RefKey::Desc(Reverse(v)),
            })
            .collect();
        (keys, run.run_id.clone())
    });
}

// ---- AST generation for printer round trips ---------------------------------

fn arb_key() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z_][a-zA-Z0-9_]{0,8}(\\.[a-zA-Z0-9_]{1,4}){0,2}",
        "\\PC{1,12}",
        "[ `.'\"a-z%]{1,8}",
    ]
}

fn arb_string() -> impl Strategy<Value = String> {
    prop_oneof!["[a-zA-Z0-9 %_]{0,10}", "\\PC{0,10}", "[\"'\\\\`\n\t]{0,6}"]
}

fn arb_number() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        (-1000i64..1000).prop_map(|x| x as f64),
        (-1e6f64..1e6),
    ]
}

pub fn arb_clause() -> impl Strategy<Value = Clause> {
    let string_ops = prop_oneof![
        Just(Comparator::Eq),
        Just(Comparator::Ne),
        Just(Comparator::Like),
        Just(Comparator::ILike)
    ];
    let numeric_ops = prop_oneof![
        Just(Comparator::Eq),
        Just(Comparator::Ne),
        Just(Comparator::Lt),
        Just(Comparator::Le),
        Just(Comparator::Gt),
        Just(Comparator::Ge)
    ];
    prop_oneof![
        (prop_oneof![Just(Namespace::Params), Just(Namespace::Tags)], arb_key(), string_ops.clone(), arb_string())
            .prop_map(|(namespace, key, comparator, s)| Clause {
                namespace,
                key,
                comparator,
                operand: Operand::Str(s),
            }),
        (arb_key(), numeric_ops.clone(), arb_number()).prop_map(|(key, comparator, n)| Clause {
            namespace: Namespace::Metrics,
            key,
            comparator,
            operand: Operand::Num(n),
        }),
        (prop_oneof![Just("run_id"), Just("experiment_id"), Just("status")], string_ops, arb_string()).prop_map(
            |(key, comparator, s)| Clause {
                namespace: Namespace::Attributes,
                key: key.into(),
                comparator,
                operand: Operand::Str(s),
            }
        ),
        (prop_oneof![Just("start_time"), Just("end_time")], numeric_ops, arb_number()).prop_map(
            |(key, comparator, n)| Clause {
                namespace: Namespace::Attributes,
                key: key.into(),
                comparator,
                operand: Operand::Num(n),
            }
        ),
        proptest::collection::vec(arb_string(), 0..4).prop_map(|items| Clause {
            namespace: Namespace::Attributes,
            key: "run_id".into(),
            comparator: Comparator::In,
            operand: Operand::List(items),
        }),
    ]
}

pub fn arb_filter() -> impl Strategy<Value = FilterExpr> {
    proptest::collection::vec(arb_clause(), 0..5).prop_map(|clauses| FilterExpr { clauses })
}

/// Byte strings for fuzzing: pure noise plus mutations of valid filters.
pub fn fuzz_input(rng: &mut impl Rng) -> Vec<u8> {
    const SEEDS: &[&str] = &[
        "metrics.fidelity > 0.9 AND params.shots = \"500\"",
        "run_id IN ('a', 'b')",
        "tags.`Training info` ILIKE 'qiskit%'",
        "params.shots <",
        "status = 'FINISHED' and start_time >= -12.5",
    ];
    match rng.random_range(0..3) {
        0 => (0..rng.random_range(0..64)).map(|_| rng.random()).collect(),
        1 => {
            let alphabet = b"params.metrics.tags.attributes `'\"()=<>!,ANDLIKEIN0123456789.-+ \t\n\\%";
            (0..rng.random_range(0..80))
                .map(|_| *alphabet.choose(rng).unwrap())
                .collect()
        }
        _ => {
            let mut bytes = SEEDS.choose(rng).unwrap().as_bytes().to_vec();
            for _ in 0..rng.random_range(1..5) {
                if bytes.is_empty() {
                    break;
                }
                let at = rng.random_range(0..bytes.len());
                match rng.random_range(0..3) {
                    0 => bytes[at] = rng.random(),
                    1 => {
                        bytes.remove(at);
                    }
                    _ => bytes.truncate(at),
                }
            }
            bytes
        }
    }
}

/// Fresh random run ids for `n` runs that all share one start time.
pub fn ties(n: usize, exp: &str) -> Vec<Run> {
    (0..n)
        .map(|i| {
            let mut r = Run::new(format!("{i:032x}"), exp.to_string(), 5);
            r.params = BTreeMap::from([("shots".to_string(), "500".to_string())]);
            r
        })
        .collect()
}

/// Independent clause semantics, used to check eval_filter itself.
pub fn reference_clause(c: &Clause, r: &Run) -> bool {
    let text = |v: &str| match (&c.operand, c.comparator) {
        (Operand::Str(s), Comparator::Eq) => v == s,
        (Operand::Str(s), Comparator::Ne) => v != s,
        (Operand::Str(s), Comparator::Like) => reference_like(v, s, false),
        (Operand::Str(s), Comparator::ILike) => reference_like(v, s, true),
        (Operand::List(l), Comparator::In) => l.iter().any(|x| x == v),
        _ => unreachable!(),
    };
    let num = |v: f64| {
        let Operand::Num(n) = c.operand else { unreachable!() };
        match c.comparator {
            Comparator::Eq => v == n,
            Comparator::Ne => v != n,
            Comparator::Lt => v < n,
            Comparator::Le => v <= n,
            Comparator::Gt => v > n,
            Comparator::Ge => v >= n,
            _ => unreachable!(),
        }
    };
    match c.namespace {
        Namespace::Params => r.params.get(&c.key).is_some_and(|v| text(v)),
        Namespace::Tags => r.tags.get(&c.key).is_some_and(|v| text(v)),
        Namespace::Metrics => r.metrics.get(&c.key).is_some_and(|pts| {
            let mut sorted = pts.clone();
            sorted.sort_by(|a, b| (a.step, a.timestamp).cmp(&(b.step, b.timestamp)).then(a.value.total_cmp(&b.value)));
            num(sorted.last().unwrap().value)
        }),
        Namespace::Attributes => match c.key.as_str() {
            "run_id" => text(&r.run_id),
            "status" => text(r.status.as_str()),
            "start_time" => num(r.start_time as f64),
            "end_time" => r.end_time.is_some_and(|t| num(t as f64)),
            _ => unreachable!(),
        },
    }
}

/// LIKE by recursive descent over characters.
pub fn reference_like(v: &str, p: &str, fold: bool) -> bool {
    fn go(v: &[char], p: &[char]) -> bool {
        match p.split_first() {
            None => v.is_empty(),
            Some(('%', rest)) => (0..=v.len()).any(|i| go(&v[i..], rest)),
            Some((c, rest)) => v.first() == Some(c) && go(&v[1..], rest),
        }
    }
    let (v, p) = if fold { (v.to_lowercase(), p.to_lowercase()) } else { (v.to_string(), p.to_string()) };
    go(&v.chars().collect::<Vec<_>>(), &p.chars().collect::<Vec<_>>())
}

/// Reference verdict for a whole filter: every clause must hold.
pub fn reference_matches(expr: &FilterExpr, r: &Run) -> bool {
    expr.clauses.iter().all(|c| reference_clause(c, r))
}
