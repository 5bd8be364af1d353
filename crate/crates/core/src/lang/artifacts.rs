use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::translate::ConfigBundle;
use crate::rcode::{encode, render_listing, RcodeProgram};

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn table<R: AsRef<[String]>>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.as_ref())?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn task_table(b: &ConfigBundle) -> Result<Vec<u8>, csv::Error> {
    table(
        &["unique_id", "name", "node", "local_id"],
        b.topology.tasks.values().map(|t| vec![t.unique_id.to_string(), t.name.clone(), t.node.to_string(), t.local_id.to_string()]),
    )
}

pub fn logical_table(b: &ConfigBundle) -> Result<Vec<u8>, csv::Error> {
    table(
        &["unique_id", "name", "members"],
        b.topology.groups.values().map(|g| {
            let m: Vec<String> = g.members.iter().map(|x| x.to_string()).collect();
            vec![g.unique_id.to_string(), g.name.clone(), m.join(";")]
        }),
    )
}

pub fn alpha_table(b: &ConfigBundle) -> Result<Vec<u8>, csv::Error> {
    table(
        &["task", "threshold", "factor"],
        b.alpha.iter().map(|(t, (th, f))| vec![t.to_string(), th.to_string(), f.to_string()]),
    )
}

pub fn timeouts_table(b: &ConfigBundle) -> Result<Vec<u8>, csv::Error> {
    let t = &b.timeouts;
    let mut rows = vec![
        ("MIA_SEND_TIMEOUT".to_string(), t.mia_send as i64),
        ("TAIA_RECV_TIMEOUT".into(), t.taia_recv as i64),
        ("MIA_RECV_TIMEOUT".into(), t.mia_recv as i64),
        ("TAIA_SEND_TIMEOUT".into(), t.taia_send as i64),
        ("TEIF_TIMEOUT".into(), t.teif as i64),
        ("I'M_ALIVE_CLEAR_TIMEOUT".into(), t.ia_clear as i64),
        ("I'M_ALIVE_SET_TIMEOUT".into(), t.ia_set as i64),
    ];
    rows.extend(b.extra_timeouts.iter().map(|(k, v)| (k.clone(), *v)));
    table(&["name", "ticks"], rows.into_iter().map(|(k, v)| vec![k, v.to_string()]))
}

pub fn identifiers_table(b: &ConfigBundle) -> Result<Vec<u8>, csv::Error> {
    table(&["name", "value"], b.constants.iter().map(|(k, v)| vec![k.clone(), v.to_string()]))
}

/// File names, contents and the transcript line announcing each.
pub fn artifact_files(p: &RcodeProgram, b: &ConfigBundle, stem: &str) -> Result<Vec<(String, Vec<u8>, String)>, csv::Error> {
    let rcode = format!("{}.rcode", stem);
    let lst = format!("{}.lst", stem);
    Ok(vec![
        (rcode.clone(), encode(p), format!("Output written in file {}.", rcode)),
        (lst.clone(), render_listing(p).into_bytes(), format!("Listing written in file {}.", lst)),
        ("LogicalTable.csv".into(), logical_table(b)?, "Logicals written in file LogicalTable.csv.".into()),
        ("TaskTable.csv".into(), task_table(b)?, "Tasks written in file TaskTable.csv.".into()),
        ("Timeouts.csv".into(), timeouts_table(b)?, "Time-outs written in file Timeouts.csv.".into()),
        ("Identifiers.csv".into(), identifiers_table(b)?, "Identifiers written in file Identifiers.csv.".into()),
        ("AlphaTable.csv".into(), alpha_table(b)?, "Alpha-count parameters written in file AlphaTable.csv.".into()),
    ])
}

/// Writes every artifact into `outdir` and returns the transcript lines.
pub fn emit_artifacts(p: &RcodeProgram, b: &ConfigBundle, outdir: &Path, stem: &str) -> Result<Vec<String>, ArtifactError> {
    fs::create_dir_all(outdir).map_err(|source| ArtifactError::Io { path: outdir.to_path_buf(), source })?;
    let mut lines = Vec::new();
    for (name, bytes, msg) in artifact_files(p, b, stem)? {
        let path = outdir.join(&name);
        fs::write(&path, bytes).map_err(|source| ArtifactError::Io { path, source })?;
        lines.push(msg);
    }
    Ok(lines)
}
