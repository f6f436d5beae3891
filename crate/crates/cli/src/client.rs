use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use qtrack_core::{Experiment, Run};
use qtrack_server::{ApiError, SearchRequest};
use qtrack_storage::{RunPage, MAX_RESULTS_CAP};
use reqwest::blocking::{RequestBuilder, Response};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.').remove(b'~');

/// Blocking client for the `/api/v1` protocol.
pub struct Client {
    base: String,
    http: reqwest::blocking::Client,
    token: Option<String>,
}

impl Client {
    pub fn new(uri: &str, token: Option<String>) -> Client {
        Client {
            base: uri.trim_end_matches('/').to_string(),
            http: reqwest::blocking::Client::new(),
            token,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}/api/v1{}", self.base, path)
    }

    fn send(&self, req: RequestBuilder) -> Result<Response, CliError> {
        let req = match &self.token {
            Some(t) => req.bearer_auth(t),
            None => req,
        };
        let resp = req
            .send()
            .map_err(|e| CliError::Domain(format!("cannot reach tracking server at {}: {e}", self.base)))?;
        if resp.status().is_success() {
            return Ok(resp);
        }
        let status = resp.status();
        let text = resp.text().unwrap_or_default();
        Err(match serde_json::from_str::<ApiError>(&text) {
            Ok(e) => CliError::Api(e),
            Err(_) => CliError::Domain(format!("server answered {status}: {text}")),
        })
    }

    fn json<T: DeserializeOwned>(resp: Response) -> Result<T, CliError> {
        resp.json()
            .map_err(|e| CliError::Domain(format!("unreadable server response: {e}")))
    }

    pub fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, CliError> {
        Self::json(self.send(self.http.get(self.url(path)))?)
    }

    pub fn post<T: DeserializeOwned>(&self, path: &str, body: &impl Serialize) -> Result<T, CliError> {
        Self::json(self.send(self.http.post(self.url(path)).json(body))?)
    }

    pub fn experiments(&self) -> Result<Vec<Experiment>, CliError> {
        let mut v: Value = self.get("/experiments")?;
        serde_json::from_value(v["experiments"].take())
            .map_err(|e| CliError::Domain(format!("unreadable server response: {e}")))
    }

    pub fn experiment_by_name(&self, name: &str) -> Result<Experiment, CliError> {
        let q = utf8_percent_encode(name, SEGMENT);
        self.get(&format!("/experiments?name={q}"))
    }

    pub fn create_experiment(&self, name: &str) -> Result<Experiment, CliError> {
        self.post("/experiments", &serde_json::json!({ "name": name }))
    }

    pub fn run(&self, run_id: &str) -> Result<Run, CliError> {
        self.get(&format!("/runs/{}", utf8_percent_encode(run_id, SEGMENT)))
    }

    /// Every matching run, following page tokens to the end.
    pub fn search_all(
        &self,
        experiment_ids: Vec<String>,
        filter: Option<String>,
        order_by: Option<Vec<String>>,
    ) -> Result<Vec<Run>, CliError> {
        let mut req = SearchRequest {
            experiment_ids,
            filter,
            order_by,
            max_results: Some(MAX_RESULTS_CAP),
            page_token: None,
        };
        let mut out = Vec::new();
        loop {
            let page: RunPage = self.post("/runs/search", &req)?;
            out.extend(page.items);
            match page.next_page_token {
                Some(t) => req.page_token = Some(t),
                None => return Ok(out),
            }
        }
    }

    pub fn artifact(&self, run_id: &str, path: &str) -> Result<Vec<u8>, CliError> {
        let encoded: Vec<String> = path.split('/').map(|s| utf8_percent_encode(s, SEGMENT).to_string()).collect();
        let url = self.url(&format!("/runs/{run_id}/artifacts/{}", encoded.join("/")));
        let resp = self.send(self.http.get(url))?;
        resp.bytes()
            .map(|b| b.to_vec())
            .map_err(|e| CliError::Domain(format!("artifact download failed: {e}")))
    }
}
