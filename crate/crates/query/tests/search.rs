mod support;

use std::collections::BTreeMap;

use proptest::prelude::*;
use qtrack_core::{MetricPoint, Run, RunStatus};
use qtrack_query::*;
use qtrack_storage::{Store, StoreError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn store_with(runs: &[Run]) -> (tempfile::TempDir, Store, String) {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path(), true).unwrap();
    let exp = store.create_experiment("search", BTreeMap::new()).unwrap();
    for r in runs {
        let mut r = r.clone();
        r.experiment_id = exp.experiment_id.clone();
        store.put_run(&r).unwrap();
    }
    (dir, store, exp.experiment_id)
}

fn fidelity_run(id: u8, fidelity: f64, start: i64) -> Run {
    let mut r = Run::new(format!("{id:032x}"), String::new(), start);
    r.metrics
        .insert("fidelity".into(), vec![MetricPoint::new("fidelity", fidelity, start, 0).unwrap()]);
    r
}

fn all_pages(store: &Store, exps: &[String], filter: &str, order: &OrderBySpec, page: usize) -> Vec<Run> {
    let mut out = Vec::new();
    let mut token = None;
    loop {
        let p = search_runs(store, exps, filter, order, page, token.as_deref()).unwrap();
        assert!(p.items.len() <= page);
        out.extend(p.items);
        match p.next_page_token {
            Some(t) => token = Some(t),
            None => return out,
        }
    }
}

#[test]
fn fidelity_threshold_ordered_desc() {
    let runs = vec![fidelity_run(1, 0.8, 10), fidelity_run(2, 0.92, 20), fidelity_run(3, 0.95, 30)];
    let (_d, store, exp) = store_with(&runs);

    // brute force over the three runs
    let mut expected: Vec<&Run> = runs.iter().filter(|r| r.metrics["fidelity"][0].value > 0.9).collect();
    expected.sort_by(|a, b| b.metrics["fidelity"][0].value.total_cmp(&a.metrics["fidelity"][0].value));
    let expected: Vec<&str> = expected.iter().map(|r| r.run_id.as_str()).collect();
    assert_eq!(expected, vec![runs[2].run_id.as_str(), runs[1].run_id.as_str()]);

    let order = OrderBySpec::parse(&["metrics.fidelity DESC"]).unwrap();
    let page = search_runs(&store, &[exp], "metrics.fidelity > 0.9", &order, 100, None).unwrap();
    let got: Vec<&str> = page.items.iter().map(|r| r.run_id.as_str()).collect();
    assert_eq!(got, expected);
    assert!(page.next_page_token.is_none());
}

#[test]
fn empty_filter_default_order() {
    let runs = vec![fidelity_run(1, 0.8, 10), fidelity_run(2, 0.92, 30), fidelity_run(3, 0.95, 20)];
    let (_d, store, exp) = store_with(&runs);
    let page = search_runs(&store, &[exp], "", &OrderBySpec::default(), 100, None).unwrap();
    let starts: Vec<i64> = page.items.iter().map(|r| r.start_time).collect();
    assert_eq!(starts, vec![30, 20, 10]);
}

#[test]
fn status_filter_over_running_runs_is_empty() {
    let runs = vec![fidelity_run(1, 0.8, 10), fidelity_run(2, 0.9, 11)];
    let (_d, store, exp) = store_with(&runs);
    let page = search_runs(&store, &[exp], r#"attributes.status = "FINISHED""#, &OrderBySpec::default(), 100, None)
        .unwrap();
    assert!(page.items.is_empty());
    assert!(runs.iter().all(|r| r.status == RunStatus::Running));
}

#[test]
fn errors_propagate() {
    let (_d, store, exp) = store_with(&support::ties(5, ""));
    let order = OrderBySpec::default();
    match search_runs(&store, std::slice::from_ref(&exp), "params.shots <", &order, 10, None) {
        Err(QueryError::Parse(e)) => assert_eq!(e.offset, 14),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        search_runs(&store, std::slice::from_ref(&exp), "", &order, 10, Some("garbage")),
        Err(QueryError::Store(StoreError::InvalidToken(_)))
    ));
    // a token from one query is not valid for another
    let p = search_runs(&store, std::slice::from_ref(&exp), "", &order, 2, None).unwrap();
    let token = p.next_page_token.unwrap();
    assert!(search_runs(&store, std::slice::from_ref(&exp), "params.shots = '500'", &order, 2, Some(&token)).is_err());
    assert!(matches!(
        search_runs(&store, std::slice::from_ref(&exp), "", &order, 1001, None),
        Err(QueryError::Store(StoreError::Invalid(_)))
    ));
    assert!(matches!(
        search_runs(&store, &[qtrack_core::new_id()], "", &order, 10, None),
        Err(QueryError::Store(StoreError::NotFound { .. }))
    ));
}

#[test]
fn ties_break_on_run_id() {
    let (_d, store, exp) = store_with(&support::ties(7, ""));
    let got = all_pages(&store, &[exp], "", &OrderBySpec::default(), 3);
    let ids: Vec<_> = got.iter().map(|r| r.run_id.clone()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}

/// Search over a random corpus equals a brute-force scan with eval_filter
/// followed by the reference sort, for every page size.
#[test]
fn search_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path(), true).unwrap();
    let exps: Vec<String> = (0..2)
        .map(|i| store.create_experiment(&format!("e{i}"), BTreeMap::new()).unwrap().experiment_id)
        .collect();
    let runs = support::random_runs(&mut rng, 200, &exps);
    for r in &runs {
        store.put_run(r).unwrap();
    }
    for i in 0..60 {
        let filter = support::random_filter(&mut rng, &runs);
        let order_text = support::random_order(&mut rng);
        let order = OrderBySpec::parse(&order_text).unwrap();
        let scope: Vec<String> = if i % 3 == 0 { exps[..1].to_vec() } else { exps.clone() };

        let expr = parse_filter(&filter).unwrap_or_else(|e| panic!("{filter}: {e}"));
        let mut expected: Vec<Run> = runs
            .iter()
            .filter(|r| scope.contains(&r.experiment_id) && eval_filter(&expr, r))
            .cloned()
            .collect();
        support::reference_sort(&mut expected, &order_text);

        let page_size = [1, 7, 100, 1000][i % 4];
        let got = all_pages(&store, &scope, &filter, &order, page_size);
        let got_ids: Vec<_> = got.iter().map(|r| &r.run_id).collect();
        let want_ids: Vec<_> = expected.iter().map(|r| &r.run_id).collect();
        assert_eq!(got_ids, want_ids, "filter {filter:?} order {order_text:?}");
    }
}

#[test]
fn eval_matches_reference_semantics() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let exps = vec!["e".repeat(32)];
    let runs = support::random_runs(&mut rng, 300, &exps);
    for _ in 0..300 {
        let text = support::random_filter(&mut rng, &runs);
        let expr = parse_filter(&text).unwrap();
        for r in &runs {
            let want = support::reference_matches(&expr, r);
            assert_eq!(eval_filter(&expr, r), want, "{text} on {}", r.run_id);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn print_parse_round_trip(expr in support::arb_filter()) {
        let text = print_filter(&expr);
        let back = parse_filter(&text).map_err(|e| TestCaseError::fail(format!("{text:?}: {e}")))?;
        prop_assert_eq!(back, expr);
    }

    #[test]
    fn like_agrees_with_reference(v in "[ab%]{0,8}", p in "[ab%]{0,6}") {
        prop_assert_eq!(like_match(&v, &p), support::reference_like(&v, &p, false));
    }

    #[test]
    fn parser_total_on_arbitrary_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
        match parse_filter_bytes(&bytes) {
            Ok(_) => {}
            Err(e) => prop_assert!(e.offset <= bytes.len()),
        }
    }
}
