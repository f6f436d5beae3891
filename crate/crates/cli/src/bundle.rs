//! Export bundles: `manifest.json`, `runs/<run_id>.json` and
//! `blobs/<sha256>`, all canonical JSON or raw bytes.

use std::fs;
use std::path::Path;

use qtrack_core::{Experiment, Run};
use qtrack_storage::{sha256_hex, Store};
use serde::{Deserialize, Serialize};

use crate::client::Client;
use crate::CliError;

pub const BUNDLE_FORMAT: &str = "qtrack-export";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub experiment: Experiment,
    pub run_ids: Vec<String>,
    pub blobs: Vec<String>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Domain(format!("{}: {e}", path.display()))
}

/// Refuse a non-empty target unless `force`; with `force`, clear only what a
/// previous export wrote.
pub fn prepare_out_dir(out: &Path, force: bool) -> Result<(), CliError> {
    if out.exists() {
        let non_empty = fs::read_dir(out).map_err(|e| io_err(out, e))?.next().is_some();
        if non_empty && !force {
            return Err(CliError::Usage(format!(
                "output directory {} is not empty (use --force to overwrite)",
                out.display()
            )));
        }
        for name in ["runs", "blobs"] {
            let p = out.join(name);
            if p.exists() {
                fs::remove_dir_all(&p).map_err(|e| io_err(&p, e))?;
            }
        }
        let m = out.join("manifest.json");
        if m.exists() {
            fs::remove_file(&m).map_err(|e| io_err(&m, e))?;
        }
    }
    for d in [out.join("runs"), out.join("blobs")] {
        fs::create_dir_all(&d).map_err(|e| io_err(&d, e))?;
    }
    Ok(())
}

/// Download every run of `experiment` and its artifact blobs into `out`.
pub fn export(client: &Client, experiment: &Experiment, out: &Path) -> Result<Manifest, CliError> {
    let runs = client.search_all(vec![experiment.experiment_id.clone()], None, None)?;
    let mut blobs = std::collections::BTreeSet::new();
    for run in &runs {
        for a in &run.artifacts {
            if blobs.contains(&a.sha256) {
                continue;
            }
            let bytes = client.artifact(&run.run_id, &a.path)?;
            if sha256_hex(&bytes) != a.sha256 {
                return Err(CliError::Domain(format!(
                    "artifact {} of run {} does not match its digest",
                    a.path, run.run_id
                )));
            }
            let p = out.join("blobs").join(&a.sha256);
            fs::write(&p, bytes).map_err(|e| io_err(&p, e))?;
            blobs.insert(a.sha256.clone());
        }
        let p = out.join("runs").join(format!("{}.json", run.run_id));
        fs::write(&p, serde_json::to_vec(run).expect("run serializes")).map_err(|e| io_err(&p, e))?;
    }
    let manifest = Manifest {
        format: BUNDLE_FORMAT.into(),
        version: BUNDLE_VERSION,
        experiment: experiment.clone(),
        run_ids: runs.iter().map(|r| r.run_id.clone()).collect(),
        blobs: blobs.into_iter().collect(),
    };
    let p = out.join("manifest.json");
    let bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    fs::write(&p, bytes).map_err(|e| io_err(&p, e))?;
    Ok(manifest)
}

pub fn read_manifest(bundle: &Path) -> Result<Manifest, CliError> {
    let p = bundle.join("manifest.json");
    let bytes = fs::read(&p).map_err(|e| io_err(&p, e))?;
    let m: Manifest = serde_json::from_slice(&bytes).map_err(|e| io_err(&p, e))?;
    if m.format != BUNDLE_FORMAT || m.version != BUNDLE_VERSION {
        return Err(CliError::Domain(format!(
            "{}: unsupported bundle {} v{}",
            p.display(),
            m.format,
            m.version
        )));
    }
    Ok(m)
}

/// Load a bundle into `store`, keeping experiment and run ids.
pub fn import(bundle: &Path, store: &Store) -> Result<Manifest, CliError> {
    let m = read_manifest(bundle)?;
    let runs: Vec<Run> = m
        .run_ids
        .iter()
        .map(|id| {
            let p = bundle.join("runs").join(format!("{id}.json"));
            let bytes = fs::read(&p).map_err(|e| io_err(&p, e))?;
            let run: Run = serde_json::from_slice(&bytes).map_err(|e| io_err(&p, e))?;
            if run.run_id != *id || run.experiment_id != m.experiment.experiment_id {
                return Err(io_err(&p, "run does not belong to this bundle"));
            }
            Ok(run)
        })
        .collect::<Result<_, _>>()?;
    store.put_experiment(&m.experiment).map_err(CliError::from)?;
    for sha in &m.blobs {
        let p = bundle.join("blobs").join(sha);
        let bytes = fs::read(&p).map_err(|e| io_err(&p, e))?;
        if sha256_hex(&bytes) != *sha {
            return Err(io_err(&p, "blob does not match its name"));
        }
        store.write_blob(sha, &bytes).map_err(CliError::from)?;
    }
    for run in &runs {
        store.put_run(run).map_err(CliError::from)?;
    }
    Ok(m)
}
