//! JSON-lines dataset files: one example per line with the fields
//! `id`, `claim`, `evidence`, `evidence_labels` and `label`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use causalwalk_core::synth::{GeneratedExample, Label, Splits};
use causalwalk_core::{ClaimEvidenceGraph, FeaturizerConfig};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub claim: String,
    pub evidence: Vec<String>,
    pub evidence_labels: Vec<u8>,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub has_shortcut: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shortcut_agrees: Option<bool>,
}

impl From<&GeneratedExample> for Record {
    fn from(e: &GeneratedExample) -> Self {
        Self {
            id: e.id.clone(),
            claim: e.claim.clone(),
            evidence: e.evidence.clone(),
            evidence_labels: e.evidence_flags.iter().map(|f| u8::from(*f)).collect(),
            label: e.label.as_str().to_string(),
            has_shortcut: Some(e.has_shortcut),
            shortcut_agrees: Some(e.shortcut_agrees),
        }
    }
}

impl Record {
    pub fn label(&self) -> Option<Label> {
        Label::parse(&self.label)
    }

    pub fn to_graph(&self, featurizer: &FeaturizerConfig) -> causalwalk_core::Result<ClaimEvidenceGraph> {
        let label = self
            .label()
            .ok_or_else(|| causalwalk_core::Error::Config(format!("unknown label {:?}", self.label)))?;
        let flags: Vec<bool> = self.evidence_labels.iter().map(|v| *v != 0).collect();
        causalwalk_core::graph::build_graph(&self.claim, &self.evidence, featurizer)?
            .with_label(label.index())
            .with_evidence_flags(&flags)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.evidence.len() != self.evidence_labels.len() {
            return Err(format!(
                "{} evidences but {} evidence labels",
                self.evidence.len(),
                self.evidence_labels.len()
            ));
        }
        if self.evidence_labels.iter().any(|v| *v > 1) {
            return Err("evidence labels must be 0 or 1".into());
        }
        if self.label().is_none() {
            return Err(format!("unknown label {:?}", self.label));
        }
        Ok(())
    }
}

pub fn split_path(dir: &Path, split: &str) -> PathBuf {
    dir.join(format!("{split}.jsonl"))
}

pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse = |message: String| CliError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let record: Record = serde_json::from_str(&line).map_err(|e| parse(e.to_string()))?;
        record.check().map_err(parse)?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_splits(dir: &Path, splits: &Splits) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for name in Splits::NAMES {
        let examples = splits.get(name).expect("known split");
        let records: Vec<Record> = examples.iter().map(Record::from).collect();
        write_records(&split_path(dir, name), &records)?;
    }
    Ok(())
}

/// Reads one split and featurizes it.
pub fn load_graphs(dir: &Path, split: &str, featurizer: &FeaturizerConfig) -> Result<Vec<ClaimEvidenceGraph>> {
    let path = split_path(dir, split);
    read_records(&path)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.to_graph(featurizer).map_err(|e| CliError::Parse {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
