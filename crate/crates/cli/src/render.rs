use std::collections::BTreeSet;
use std::fmt::Write as _;

use qtrack_core::{CalibrationDiff, Experiment, Run};

/// Left-aligned columns separated by two spaces.
pub fn table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(headers).chain(rows.iter().map(|r| r.as_slice())) {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// RFC 4180 CSV with CRLF line endings.
pub fn csv(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut w = ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(headers).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 cells")
}

pub fn experiment_rows(exps: &[Experiment]) -> (Vec<String>, Vec<Vec<String>>) {
    let headers = ["experiment_id", "name", "creation_time"].map(String::from).to_vec();
    let rows = exps
        .iter()
        .map(|e| vec![e.experiment_id.clone(), e.name.clone(), e.creation_time.to_string()])
        .collect();
    (headers, rows)
}

/// Flat run table: attributes, then one column per param, latest metric and tag.
pub fn run_rows(runs: &[Run]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut params = BTreeSet::new();
    let mut metrics = BTreeSet::new();
    let mut tags = BTreeSet::new();
    for r in runs {
        params.extend(r.params.keys().cloned());
        metrics.extend(r.metrics.keys().cloned());
        tags.extend(r.tags.keys().cloned());
    }
    let mut headers: Vec<String> = ["run_id", "experiment_id", "status", "start_time", "end_time"]
        .map(String::from)
        .to_vec();
    headers.extend(params.iter().map(|k| format!("params.{k}")));
    headers.extend(metrics.iter().map(|k| format!("metrics.{k}")));
    headers.extend(tags.iter().map(|k| format!("tags.{k}")));

    let rows = runs
        .iter()
        .map(|r| {
            let mut row = vec![
                r.run_id.clone(),
                r.experiment_id.clone(),
                r.status.to_string(),
                r.start_time.to_string(),
                r.end_time.map(|t| t.to_string()).unwrap_or_default(),
            ];
            row.extend(params.iter().map(|k| r.params.get(k).cloned().unwrap_or_default()));
            row.extend(
                metrics
                    .iter()
                    .map(|k| r.latest_metric(k).map(|p| p.value.to_string()).unwrap_or_default()),
            );
            row.extend(tags.iter().map(|k| r.tags.get(k).cloned().unwrap_or_default()));
            row
        })
        .collect();
    (headers, rows)
}

pub fn run_detail(r: &Run) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "run_id         {}", r.run_id);
    let _ = writeln!(s, "experiment_id  {}", r.experiment_id);
    let _ = writeln!(s, "status         {}", r.status);
    let _ = writeln!(s, "start_time     {}", r.start_time);
    let _ = writeln!(
        s,
        "end_time       {}",
        r.end_time.map(|t| t.to_string()).unwrap_or_else(|| "-".into())
    );
    section(&mut s, "params", r.params.iter().map(|(k, v)| format!("{k} = {v}")));
    section(&mut s, "tags", r.tags.iter().map(|(k, v)| format!("{k} = {v}")));
    section(
        &mut s,
        "metrics",
        r.metrics.iter().map(|(k, pts)| {
            let last = r.latest_metric(k).map(|p| p.value.to_string()).unwrap_or_default();
            format!("{k} = {last} ({} points)", pts.len())
        }),
    );
    section(
        &mut s,
        "artifacts",
        r.artifacts
            .iter()
            .map(|a| format!("{}  {} bytes  {}  sha256:{}", a.path, a.size_bytes, a.media_type, a.sha256)),
    );
    let p = &r.provenance;
    let mut prov = Vec::new();
    if let Some(c) = &p.circuit {
        prov.push(format!(
            "circuit {} ({} qubits, depth {}, digest {})",
            c.name, c.qubit_count, c.depth, c.digest
        ));
    }
    if let Some(c) = &p.compilation {
        prov.push(format!(
            "compilation {} {} (opt level {})",
            c.compiler_name, c.compiler_version, c.optimization_level
        ));
    }
    if let Some(c) = &p.calibration {
        prov.push(format!(
            "calibration {} on {} ({} qubits)",
            c.calibration_set_id, c.device_name, c.qubit_count
        ));
    }
    if let Some(e) = &p.execution {
        prov.push(format!(
            "execution on {}: {} shots, {} outcomes",
            e.backend_name,
            e.shots,
            e.counts.len()
        ));
    }
    section(&mut s, "provenance", prov.into_iter());
    s
}

fn section(s: &mut String, title: &str, lines: impl Iterator<Item = String>) {
    let lines: Vec<String> = lines.collect();
    let _ = writeln!(s, "{title}:");
    if lines.is_empty() {
        let _ = writeln!(s, "  (none)");
    }
    for l in lines {
        let _ = writeln!(s, "  {l}");
    }
}

pub fn calibration_diff(d: &CalibrationDiff) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "base   {}", d.base_id);
    let _ = writeln!(s, "other  {}", d.other_id);
    if d.base_id == d.other_id {
        let _ = writeln!(s, "note: identical calibration set");
    }
    let headers = ["qubit", "d_t1_us", "d_t2_us", "d_readout_fidelity"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = d
        .qubit_deltas
        .iter()
        .map(|q| {
            vec![
                q.qubit_index.to_string(),
                q.d_t1_us.to_string(),
                q.d_t2_us.to_string(),
                q.d_readout_fidelity.to_string(),
            ]
        })
        .collect();
    s.push('\n');
    s.push_str(&table(&headers, &rows));
    let headers = ["gate", "qubits", "d_fidelity"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = d
        .gate_deltas
        .iter()
        .map(|g| {
            let qs: Vec<String> = g.qubit_indices.iter().map(|q| q.to_string()).collect();
            vec![g.gate_name.clone(), qs.join(","), g.d_fidelity.to_string()]
        })
        .collect();
    s.push('\n');
    s.push_str(&table(&headers, &rows));
    if !d.added_qubits.is_empty() {
        let _ = writeln!(s, "\nonly in other: qubits {:?}", d.added_qubits);
    }
    if !d.removed_qubits.is_empty() {
        let _ = writeln!(s, "\nonly in base: qubits {:?}", d.removed_qubits);
    }
    s
}
