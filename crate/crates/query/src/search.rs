use std::sync::Arc;

use qtrack_core::Run;
use qtrack_storage::{check_max_results, page_token, RunPage, Store, StoreError};
use thiserror::Error;

use crate::eval::eval_filter;
use crate::order::{compare_runs, OrderBySpec};
use crate::parser::{parse_filter, print_filter, ParseError};

#[derive(Debug, Error)]
pub enum QueryError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Runs of `experiment_ids` passing the filter, sorted and paginated.
///
/// Page tokens are bound to the experiment set, the canonical filter and the
/// order, so a token is only valid for the query that issued it.
pub fn search_runs(
    store: &Store,
    experiment_ids: &[String],
    filter_text: &str,
    order_by: &OrderBySpec,
    max_results: usize,
    page_token: Option<&str>,
) -> Result<RunPage, QueryError> {
    let filter = parse_filter(filter_text)?;
    let max_results = check_max_results(max_results)?;

    let mut ids = experiment_ids.to_vec();
    ids.sort();
    ids.dedup();
    let mut runs: Vec<Arc<Run>> = store
        .runs_in(&ids)?
        .into_iter()
        .filter(|r| eval_filter(&filter, r))
        .collect();
    runs.sort_by(|a, b| compare_runs(order_by, a, b));

    let context = format!(
        "search\0{}\0{}\0{}",
        ids.join(","),
        print_filter(&filter),
        order_by.to_wire().join(",")
    );
    let (page, next_page_token) = page_token::paginate(&runs, max_results, page_token, &context)?;
    Ok(RunPage {
        items: page.into_iter().map(|r| (*r).clone()).collect(),
        next_page_token,
    })
}
