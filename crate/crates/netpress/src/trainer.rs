//! SGD training with a 1/epoch learning-rate decay, best-validation
//! snapshotting, and a hyperparameter grid searched over (C, D, lr).
//!
//! Minibatch gradients use mean scaling (1/|batch|) for the per-sample
//! terms while weight penalties apply once per step. Reports label this
//! choice "mean" so runs stay comparable.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::network::{accuracy, forward, init_mlp, Mlp};
use crate::objective::{
    data_dependent_penalty, gradients_scaled, multiclass_hinge, weight_penalties, PenaltyScope,
    RegularizerSpec,
};
use crate::scalar::Scalar;
use crate::seed::rng_for;

#[derive(Debug, Clone)]
pub struct TrainConfig<T> {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: T,
    pub seed: u64,
    pub spec: RegularizerSpec<T>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub hinge: f64,
    pub l2_term: f64,
    pub l1_term: f64,
    pub data_dep_term: f64,
    pub total: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

pub type TrainHistory = Vec<EpochRecord>;

/// lr0 / epoch, the schedule used for every run. `epoch` starts at 1.
pub fn lr_at_epoch<T: Scalar>(lr0: T, epoch: usize) -> T {
    debug_assert!(epoch >= 1);
    lr0 / T::from_usize(epoch).expect("epoch fits in T")
}

fn check_dims<T: Scalar>(model: &Mlp<T>, data: &Dataset<T>) -> Result<()> {
    if model.input_dim() != data.n_features() {
        return Err(Error::DimMismatch { expected: model.input_dim(), got: data.n_features() });
    }
    if data.n_classes() > model.n_classes() {
        return Err(Error::BadConfig(format!(
            "dataset has {} classes but the model outputs {}",
            data.n_classes(),
            model.n_classes()
        )));
    }
    Ok(())
}

// One pass over a dataset collecting the objective value (sum form) and
// accuracy together, so history rows need no second sweep.
fn eval_split<T: Scalar>(
    model: &Mlp<T>,
    data: &Dataset<T>,
    spec: &RegularizerSpec<T>,
) -> Result<(f64, f64, f64, f64, f64, f64)> {
    let mut hinge = T::zero();
    let mut data_dep = T::zero();
    let mut hits = 0usize;
    for i in 0..data.len() {
        let trace = forward(model, data.row(i))?;
        hinge += multiclass_hinge(&trace.scores, data.label(i));
        data_dep += data_dependent_penalty(&trace, spec);
        if crate::network::predict_from_scores(&trace.scores) == data.label(i) {
            hits += 1;
        }
    }
    let (l2, l1) = weight_penalties(model, spec);
    let total = hinge + data_dep + l2 + l1;
    Ok((
        hinge.to_f64_lossy(),
        l2.to_f64_lossy(),
        l1.to_f64_lossy(),
        data_dep.to_f64_lossy(),
        total.to_f64_lossy(),
        hits as f64 / data.len() as f64,
    ))
}

/// Train with per-epoch reshuffling and return the epoch snapshot that
/// scored best on validation (earliest epoch wins ties), along with the
/// per-epoch history. Deterministic for a fixed (config, data) pair.
pub fn train<T: Scalar>(
    model: Mlp<T>,
    train_set: &Dataset<T>,
    val_set: &Dataset<T>,
    config: &TrainConfig<T>,
) -> Result<(Mlp<T>, TrainHistory)> {
    if config.epochs == 0 || config.batch_size == 0 {
        return Err(Error::BadConfig("epochs and batch_size must be >= 1".into()));
    }
    if !(config.lr0 > T::zero()) {
        return Err(Error::BadConfig("lr0 must be positive".into()));
    }
    check_dims(&model, train_set)?;
    check_dims(&model, val_set)?;

    let mut model = model;
    let has_mask = model.layers().any(|l| l.mask.is_some());
    let mut shuffle_rng = rng_for(config.seed, "shuffle");
    let mut indices: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, Mlp<T>)> = None;

    for epoch in 1..=config.epochs {
        let lr = lr_at_epoch(config.lr0, epoch);
        indices.shuffle(&mut shuffle_rng);
        for chunk in indices.chunks(config.batch_size) {
            let batch = train_set.subset(chunk);
            let scale = T::one() / T::from_usize(chunk.len()).expect("batch fits in T");
            let grads = gradients_scaled(&model, &batch, &config.spec, scale)?;
            for (layer, grad) in model.layers_mut().zip(&grads.layers) {
                for (w, &g) in layer.weights.as_mut_slice().iter_mut().zip(grad.weights.as_slice())
                {
                    *w -= lr * g;
                }
                for (b, &g) in layer.biases.iter_mut().zip(&grad.biases) {
                    *b -= lr * g;
                }
            }
            if has_mask {
                model.enforce_masks();
            }
        }

        let (hinge, l2, l1, data_dep, total, train_acc) =
            eval_split(&model, train_set, &config.spec)?;
        if !total.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let val_acc = accuracy(&model, val_set)?;
        history.push(EpochRecord {
            epoch,
            lr: lr.to_f64_lossy(),
            hinge,
            l2_term: l2,
            l1_term: l1,
            data_dep_term: data_dep,
            total,
            train_acc,
            val_acc,
        });
        if best.as_ref().is_none_or(|(b, _)| val_acc > *b) {
            best = Some((val_acc, model.clone()));
        }
    }

    let (_, best_model) = best.expect("epochs >= 1");
    Ok((best_model, history))
}

/// Regularizer combination: hinge always on, optionally one weight penalty
/// (W2 = ridge, W1 = lasso) and one pre-activation scope (LCL = classifier
/// scores, LCA = scores plus all hidden pre-activations).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Combo {
    pub w2: bool,
    pub w1: bool,
    pub scope: PenaltyScope,
}

impl Combo {
    /// The C grid feeds W2's ridge coefficient or W1's lasso coefficient.
    pub fn uses_c(&self) -> bool {
        self.w1 || self.w2
    }

    pub fn uses_d(&self) -> bool {
        self.scope != PenaltyScope::None
    }

    pub fn spec<T: Scalar>(&self, c: T, d: T) -> RegularizerSpec<T> {
        RegularizerSpec {
            c: if self.w2 { c } else { T::zero() },
            l1: if self.w1 { c } else { T::zero() },
            d: if self.uses_d() { d } else { T::zero() },
            scope: self.scope,
        }
    }
}

impl FromStr for Combo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Combo> {
        let mut hinge = false;
        let mut w1 = false;
        let mut w2 = false;
        let mut scope: Option<PenaltyScope> = None;
        for tok in s.split('+').map(str::trim) {
            match tok {
                "H" if !hinge => hinge = true,
                "W1" if !w1 && !w2 => w1 = true,
                "W2" if !w1 && !w2 => w2 = true,
                "LCL" if scope.is_none() => scope = Some(PenaltyScope::LastLayer),
                "LCA" if scope.is_none() => scope = Some(PenaltyScope::AllLayers),
                _ => {
                    return Err(Error::BadConfig(format!(
                        "bad combo {s:?}: unknown or repeated token {tok:?}"
                    )))
                }
            }
        }
        if !hinge {
            return Err(Error::BadConfig(format!("bad combo {s:?}: must include H")));
        }
        Ok(Combo { w1, w2, scope: scope.unwrap_or(PenaltyScope::None) })
    }
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "H")?;
        if self.w2 {
            write!(f, "+W2")?;
        }
        if self.w1 {
            write!(f, "+W1")?;
        }
        match self.scope {
            PenaltyScope::None => Ok(()),
            PenaltyScope::LastLayer => write!(f, "+LCL"),
            PenaltyScope::AllLayers => write!(f, "+LCA"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridConfig<T> {
    pub combo: Combo,
    pub grid_c: Vec<T>,
    pub grid_d: Vec<T>,
    pub grid_lr: Vec<T>,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

/// One grid cell's outcome; `val_acc` is None when the cell diverged.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSummary {
    pub c: f64,
    pub d: f64,
    pub lr0: f64,
    pub val_acc: Option<f64>,
    pub error: Option<String>,
}

pub struct GridOutcome<T> {
    pub model: Mlp<T>,
    pub config: TrainConfig<T>,
    pub history: TrainHistory,
    pub val_acc: f64,
    pub cells: Vec<CellSummary>,
}

fn sorted_grid<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut v: Vec<T> = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite grid values"));
    v.dedup();
    v
}

/// Train one model per applicable (C, D, lr) cell and return the best by
/// validation accuracy. Cells are laid out in ascending (C, D, lr) order
/// and ties keep the earliest cell, so equal accuracies resolve toward the
/// smaller C, then D, then lr. All cells share the same seed-derived init.
pub fn grid_search<T: Scalar>(
    train_set: &Dataset<T>,
    val_set: &Dataset<T>,
    hidden_widths: &[usize],
    grid: &GridConfig<T>,
) -> Result<GridOutcome<T>> {
    let c_values = if grid.combo.uses_c() { sorted_grid(&grid.grid_c) } else { vec![T::zero()] };
    let d_values = if grid.combo.uses_d() { sorted_grid(&grid.grid_d) } else { vec![T::zero()] };
    let lr_values = sorted_grid(&grid.grid_lr);
    if c_values.is_empty() || d_values.is_empty() || lr_values.is_empty() {
        return Err(Error::BadConfig("empty hyperparameter grid".into()));
    }

    let mut widths = Vec::with_capacity(hidden_widths.len() + 2);
    widths.push(train_set.n_features());
    widths.extend_from_slice(hidden_widths);
    widths.push(train_set.n_classes());

    let mut cells = Vec::new();
    for &c in &c_values {
        for &d in &d_values {
            for &lr in &lr_values {
                cells.push((c, d, lr));
            }
        }
    }

    let runs: Vec<(CellSummary, Option<(Mlp<T>, TrainConfig<T>, TrainHistory)>)> = cells
        .par_iter()
        .map(|&(c, d, lr)| {
            let config = TrainConfig {
                epochs: grid.epochs,
                batch_size: grid.batch_size,
                lr0: lr,
                seed: grid.seed,
                spec: grid.combo.spec(c, d),
            };
            let summary_base = CellSummary {
                c: c.to_f64_lossy(),
                d: d.to_f64_lossy(),
                lr0: lr.to_f64_lossy(),
                val_acc: None,
                error: None,
            };
            match init_mlp(&widths, grid.seed)
                .and_then(|m| train(m, train_set, val_set, &config))
            {
                Ok((model, history)) => {
                    let val_acc = history
                        .iter()
                        .map(|r| r.val_acc)
                        .fold(f64::NEG_INFINITY, f64::max);
                    (
                        CellSummary { val_acc: Some(val_acc), ..summary_base },
                        Some((model, config, history)),
                    )
                }
                Err(e) => (
                    CellSummary { error: Some(e.to_string()), ..summary_base },
                    None,
                ),
            }
        })
        .collect();

    let mut summaries = Vec::with_capacity(runs.len());
    let mut best: Option<(f64, Mlp<T>, TrainConfig<T>, TrainHistory)> = None;
    for (summary, outcome) in runs {
        if let (Some(acc), Some((model, config, history))) = (summary.val_acc, outcome) {
            // strict > keeps the earliest (smallest C, D, lr) on ties
            if best.as_ref().is_none_or(|(b, ..)| acc > *b) {
                best = Some((acc, model, config, history));
            }
        }
        summaries.push(summary);
    }
    match best {
        Some((val_acc, model, config, history)) => Ok(GridOutcome {
            model,
            config,
            history,
            val_acc,
            cells: summaries,
        }),
        None => Err(Error::AllCellsDiverged),
    }
}
