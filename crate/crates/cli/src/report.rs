//! CSV artifacts. Headers are fixed:
//!
//! * `train_log.csv`: `epoch,loss_walk,loss_causal,loss_total,dev_accuracy`
//! * `metrics.csv`: `split,mode,class,accuracy,precision,recall,count,mean_transition_entropy`
//!   (one row per class)
//! * `ablation_runs.csv`: `variant,seed,split,accuracy,mean_transition_entropy,train_seconds`
//! * `ablation_summary.csv`: `variant,split,seeds,mean_accuracy,std_accuracy,mean_entropy,std_entropy`

use std::path::Path;

use causalwalk_core::synth::Label;
use causalwalk_core::walk::train::EpochMetrics;
use serde::Serialize;

use crate::commands::{AblationReport, SplitMetrics};
use crate::error::{io_err, Result};

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Serialize)]
struct TrainRow {
    epoch: usize,
    loss_walk: f64,
    loss_causal: f64,
    loss_total: f64,
    dev_accuracy: Option<f64>,
}

pub fn write_train_log(path: &Path, history: &[EpochMetrics]) -> Result<()> {
    write_rows(
        path,
        history.iter().map(|h| TrainRow {
            epoch: h.epoch,
            loss_walk: h.loss_walk,
            loss_causal: h.loss_causal,
            loss_total: h.loss_total,
            dev_accuracy: h.dev_accuracy,
        }),
    )
}

#[derive(Serialize)]
struct MetricsRow<'a> {
    split: &'a str,
    mode: &'static str,
    class: &'static str,
    accuracy: f64,
    precision: f64,
    recall: f64,
    count: usize,
    mean_transition_entropy: f64,
}

pub fn write_metrics(path: &Path, results: &[SplitMetrics]) -> Result<()> {
    let rows = results.iter().flat_map(|r| {
        let m = &r.metrics;
        (0..m.precision.len()).map(move |c| MetricsRow {
            split: &r.split,
            mode: r.mode.name(),
            class: Label::from_index(c).map_or("?", Label::as_str),
            accuracy: m.accuracy,
            precision: m.precision[c],
            recall: m.recall[c],
            count: m.count,
            mean_transition_entropy: m.mean_transition_entropy,
        })
    });
    write_rows(path, rows)
}

pub fn write_ablation(dir: &Path, report: &AblationReport) -> Result<()> {
    write_rows(&dir.join("ablation_runs.csv"), &report.runs)?;
    write_rows(&dir.join("ablation_summary.csv"), &report.summary)
}
