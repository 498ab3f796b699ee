//! Machine-readable run reports and CSV emitters for training curves,
//! prune sweeps, quantization sweeps, and the cross-run summary tables.
//!
//! Numbers are written with Rust's shortest round-trip float formatting,
//! so identical runs emit byte-identical files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::Result;
use crate::network::accuracy;
use crate::pruner::{prune_at, PruneResult, PruneSweepConfig};
use crate::quantizer::QuantReport;
use crate::scalar::Scalar;
use crate::trainer::{CellSummary, TrainHistory};

/// Which pipeline stage failed, with enough context to retrace it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureRecord {
    pub stage: String,
    pub combo: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitAccuracy {
    pub val: f64,
    pub test: f64,
}

/// Files a combo run leaves behind, relative to the report's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComboArtifacts {
    pub model: String,
    pub pruned_model: String,
    pub train_history: String,
    pub prune_curve: String,
    pub quant_curve_unpruned: String,
    pub quant_curve_pruned: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComboReport {
    pub combo: String,
    /// Winning C grid value; the combo routes it to ridge or lasso.
    pub selected_c: f64,
    pub selected_d: f64,
    pub selected_lr: f64,
    pub unpruned: SplitAccuracy,
    pub pruned: SplitAccuracy,
    pub prune_ratio: f64,
    pub prune_selected_step: usize,
    pub prune_flagged: bool,
    /// Coarsest width whose sweep accuracy stayed within tolerance of the
    /// full-precision row, measured on the pruned artifact.
    pub quant_selected_bits: Option<u32>,
    pub quant_accuracy: Option<f64>,
    /// Artifact-defined storage metric: 32 * nonzeros_before divided by
    /// selected_bits * nonzeros_after.
    pub quant_ratio: Option<f64>,
    /// SHA-256 of the pruned model file the quantized rows derive from.
    pub pruned_model_sha256: String,
    pub artifacts: ComboArtifacts,
    pub cells: Vec<CellSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub seed: u64,
    pub config_hash: String,
    /// Minibatch scaling convention ("mean").
    pub scaling: String,
    /// Hidden layer widths; depth is their count.
    pub arch: Vec<usize>,
    pub combos: Vec<ComboReport>,
    pub failure: Option<FailureRecord>,
}

impl RunReport {
    pub fn depth(&self) -> usize {
        self.arch.len()
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn write_train_history<W: Write>(out: W, history: &TrainHistory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "epoch", "lr", "hinge", "l2", "l1", "data_dep", "total", "train_acc", "val_acc",
    ])?;
    for r in history {
        w.write_record([
            r.epoch.to_string(),
            fmt_f64(r.lr),
            fmt_f64(r.hinge),
            fmt_f64(r.l2_term),
            fmt_f64(r.l1_term),
            fmt_f64(r.data_dep_term),
            fmt_f64(r.total),
            fmt_f64(r.train_acc),
            fmt_f64(r.val_acc),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The sweep curve with test accuracy recomputed at every step, so both
/// validation (used for selection) and test numbers are on record.
pub fn write_prune_curve<T: Scalar, W: Write>(
    out: W,
    model: &crate::network::Mlp<T>,
    result: &PruneResult<T>,
    config: &PruneSweepConfig,
    test: &Dataset<T>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "thresholds", "nonzeros", "val_acc", "test_acc"])?;
    for row in &result.curve {
        let test_acc = accuracy(&prune_at(model, row.step, config), test)?;
        let thresholds =
            row.thresholds.iter().map(|t| fmt_f64(*t)).collect::<Vec<_>>().join(";");
        w.write_record([
            row.step.to_string(),
            thresholds,
            row.nonzeros.to_string(),
            fmt_f64(row.val_acc),
            fmt_f64(test_acc),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_quant_curve<W: Write>(out: W, report: &QuantReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["T", "F", "acc", "margin", "loss", "gamma", "gamma_q", "cond"])?;
    for row in &report.rows {
        w.write_record([
            row.total_bits.map_or_else(|| "full".to_string(), |t| t.to_string()),
            row.frac_bits.map_or_else(|| "-".to_string(), |f| f.to_string()),
            fmt_f64(row.accuracy),
            fmt_f64(row.margin),
            fmt_f64(row.loss),
            fmt_f64(row.gamma),
            fmt_f64(row.gamma_q),
            (row.condition_holds as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Combo column order: first appearance across the report list.
fn combo_order(reports: &[&RunReport]) -> Vec<String> {
    let mut order = Vec::new();
    for report in reports {
        for combo in &report.combos {
            if !order.iter().any(|c| c == &combo.combo) {
                order.push(combo.combo.clone());
            }
        }
    }
    order
}

/// One accuracy table over all reports plus one compression table per
/// architecture depth. Returns the paths written.
pub fn emit_tables(reports: &[RunReport], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let all: Vec<&RunReport> = reports.iter().collect();
    let combos = combo_order(&all);
    let acc_path = out_dir.join("accuracy.csv");
    {
        let mut w = csv::Writer::from_writer(File::create(&acc_path)?);
        let mut header = vec!["dataset".to_string()];
        for c in &combos {
            header.push(format!("{c}_unpruned"));
            header.push(format!("{c}_pruned"));
        }
        w.write_record(&header)?;
        for report in reports {
            let mut row = vec![report.label.clone()];
            for c in &combos {
                match report.combos.iter().find(|cr| &cr.combo == c) {
                    Some(cr) => {
                        row.push(fmt_f64(cr.unpruned.test));
                        row.push(fmt_f64(cr.pruned.test));
                    }
                    None => {
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    written.push(acc_path);

    let mut by_depth: BTreeMap<usize, Vec<&RunReport>> = BTreeMap::new();
    for report in reports {
        by_depth.entry(report.depth()).or_default().push(report);
    }
    for (depth, group) in by_depth {
        let combos = combo_order(&group);
        let path = out_dir.join(format!("compression_depth{depth}.csv"));
        let mut w = csv::Writer::from_writer(File::create(&path)?);
        let mut header = vec!["dataset".to_string()];
        for c in &combos {
            header.push(format!("{c}_prune_ratio"));
            header.push(format!("{c}_quant_ratio"));
        }
        w.write_record(&header)?;
        for report in group {
            let mut row = vec![report.label.clone()];
            for c in &combos {
                match report.combos.iter().find(|cr| &cr.combo == c) {
                    Some(cr) => {
                        row.push(fmt_f64(cr.prune_ratio));
                        row.push(cr.quant_ratio.map(fmt_f64).unwrap_or_default());
                    }
                    None => {
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

pub fn save_report(path: impl AsRef<Path>, report: &RunReport) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}

pub fn load_report(path: impl AsRef<Path>) -> Result<RunReport> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
