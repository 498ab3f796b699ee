//! Magnitude pruning with a per-layer threshold sweep.
//!
//! Each layer gets its own schedule from its minimum threshold up to its
//! largest weight magnitude. A sweep evaluates every step on validation
//! data and keeps the sparsest model whose accuracy stays within
//! tolerance of the unpruned baseline. Pruned weights are frozen by the
//! layer mask so later fine-tuning cannot resurrect them.

use rayon::prelude::*;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::network::{accuracy, Layer, Mlp};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct PruneSweepConfig {
    /// Smallest magnitude worth keeping; applied even at step 0.
    pub t_min: f64,
    /// Number of schedule steps between t_min and each layer's max |w|.
    pub steps: usize,
    /// Absolute validation-accuracy drop allowed when selecting a step.
    pub tolerance: f64,
}

impl Default for PruneSweepConfig {
    fn default() -> Self {
        PruneSweepConfig { t_min: 1e-3, steps: 50, tolerance: 0.01 }
    }
}

impl PruneSweepConfig {
    fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0) || self.steps < 1 || !(self.tolerance >= 0.0) {
            return Err(Error::BadConfig(
                "prune sweep needs t_min > 0, steps >= 1, tolerance >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PruneStepRow {
    pub step: usize,
    /// One threshold per layer, hidden layers first.
    pub thresholds: Vec<f64>,
    pub nonzeros: usize,
    pub val_acc: f64,
}

#[derive(Debug)]
pub struct PruneResult<T> {
    pub curve: Vec<PruneStepRow>,
    pub selected_step: usize,
    pub pruned_model: Mlp<T>,
    pub ratio: f64,
    /// True when the ratio hit the divide-by-zero guard.
    pub ratio_flagged: bool,
    /// True when no step met the tolerance and step 0 was forced.
    pub tolerance_failed: bool,
    pub base_val_acc: f64,
}

/// Evenly spaced thresholds t_k = t_min + k * (max|w| - t_min) / steps for
/// k = 1..=steps. Collapses to the single value t_min when the layer's
/// largest magnitude does not exceed t_min.
pub fn threshold_schedule<T: Scalar>(layer: &Layer<T>, config: &PruneSweepConfig) -> Vec<f64> {
    assert!(!layer.weights.as_slice().is_empty(), "layer must have weights");
    let max_abs = layer
        .weights
        .as_slice()
        .iter()
        .map(|w| w.abs().to_f64_lossy())
        .fold(0.0f64, f64::max);
    if max_abs <= config.t_min {
        return vec![config.t_min];
    }
    let span = max_abs - config.t_min;
    (1..=config.steps)
        .map(|k| config.t_min + k as f64 * span / config.steps as f64)
        .collect()
}

fn threshold_at(schedule: &[f64], step: usize, config: &PruneSweepConfig) -> f64 {
    if step == 0 {
        config.t_min
    } else {
        // degenerate layers have short schedules; clamp to their top
        schedule[step.min(schedule.len()) - 1]
    }
}

/// Zero and mask every weight with |w| < the layer's step-k threshold.
/// Step 0 prunes only below t_min. Biases are never touched. Previously
/// masked weights stay masked.
pub fn prune_at<T: Scalar>(model: &Mlp<T>, step: usize, config: &PruneSweepConfig) -> Mlp<T> {
    let mut pruned = model.clone();
    for layer in pruned.layers_mut() {
        let schedule = threshold_schedule(layer, config);
        let t = threshold_at(&schedule, step, config);
        let weights = layer.weights.as_mut_slice();
        let mut mask = layer
            .mask
            .take()
            .unwrap_or_else(|| vec![true; weights.len()]);
        for (w, alive) in weights.iter_mut().zip(mask.iter_mut()) {
            if w.abs().to_f64_lossy() < t {
                *w = T::zero();
                *alive = false;
            }
        }
        layer.mask = Some(mask);
    }
    pruned
}

/// Nonzero weight count before / after, biases excluded. When the pruned
/// model has no nonzeros left the before-count is reported and flagged
/// instead of dividing by zero.
pub fn compression_ratio<T: Scalar>(before: &Mlp<T>, after: &Mlp<T>) -> (f64, bool) {
    assert_eq!(before.widths(), after.widths(), "architectures must match");
    let b = before.nonzero_weights();
    let a = after.nonzero_weights();
    if a == 0 {
        (b as f64, true)
    } else {
        (b as f64 / a as f64, false)
    }
}

/// Evaluate all steps 0..=steps on validation data and keep the largest
/// step whose accuracy is within tolerance of the unpruned model. When
/// even step 0 misses the bar it is selected anyway and flagged.
pub fn sweep_and_select<T: Scalar>(
    model: &Mlp<T>,
    val: &Dataset<T>,
    config: &PruneSweepConfig,
) -> Result<PruneResult<T>> {
    config.validate()?;
    let base_val_acc = accuracy(model, val)?;

    let curve: Vec<PruneStepRow> = (0..=config.steps)
        .into_par_iter()
        .map(|step| -> Result<PruneStepRow> {
            let pruned = prune_at(model, step, config);
            let thresholds = pruned
                .layers()
                .map(|l| threshold_at(&threshold_schedule(l, config), step, config))
                .collect();
            Ok(PruneStepRow {
                step,
                thresholds,
                nonzeros: pruned.nonzero_weights(),
                val_acc: accuracy(&pruned, val)?,
            })
        })
        .collect::<Result<_>>()?;

    let selected = curve
        .iter()
        .rev()
        .find(|row| row.val_acc >= base_val_acc - config.tolerance)
        .map(|row| row.step);
    let (selected_step, tolerance_failed) = match selected {
        Some(step) => (step, false),
        None => (0, true),
    };
    let pruned_model = prune_at(model, selected_step, config);
    let (ratio, ratio_flagged) = compression_ratio(model, &pruned_model);
    Ok(PruneResult {
        curve,
        selected_step,
        pruned_model,
        ratio,
        ratio_flagged,
        tolerance_failed,
        base_val_acc,
    })
}
