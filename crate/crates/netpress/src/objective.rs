//! Training objective: multiclass hinge loss, optional L2/L1 weight
//! penalties, and a data-dependent penalty on pre-activations, plus the
//! standalone capacity functional the penalty descends from.
//!
//! The objective is a sum over samples (no averaging); minibatch callers
//! pass an explicit `data_scale` to `gradients_scaled`.

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::network::{forward, ForwardTrace, Layer, Mlp};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyScope {
    /// No pre-activation penalty at all.
    None,
    /// Penalize classifier scores only.
    LastLayer,
    /// Penalize classifier scores and every hidden pre-activation.
    AllLayers,
}

impl PenaltyScope {
    pub fn as_str(&self) -> &'static str {
        match self {
            PenaltyScope::None => "none",
            PenaltyScope::LastLayer => "last_layer",
            PenaltyScope::AllLayers => "all_layers",
        }
    }
}

impl std::str::FromStr for PenaltyScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<PenaltyScope> {
        match s {
            "none" => Ok(PenaltyScope::None),
            "last_layer" => Ok(PenaltyScope::LastLayer),
            "all_layers" => Ok(PenaltyScope::AllLayers),
            other => Err(Error::BadConfig(format!("unknown penalty scope {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RegularizerSpec<T> {
    /// L2 weight coefficient.
    pub c: T,
    /// Pre-activation (data-dependent) coefficient; ignored when scope is None.
    pub d: T,
    /// L1 weight coefficient.
    pub l1: T,
    pub scope: PenaltyScope,
}

impl<T: Scalar> RegularizerSpec<T> {
    pub fn zero() -> Self {
        RegularizerSpec { c: T::zero(), d: T::zero(), l1: T::zero(), scope: PenaltyScope::None }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LossBreakdown<T> {
    pub hinge: T,
    pub l2_term: T,
    pub l1_term: T,
    pub data_dep_term: T,
    pub total: T,
}

/// Σ_{j≠y} max(0, 1 − s_y + s_j)
pub fn multiclass_hinge<T: Scalar>(scores: &[T], label: usize) -> T {
    let sy = scores[label];
    let mut loss = T::zero();
    for (j, &sj) in scores.iter().enumerate() {
        if j == label {
            continue;
        }
        let m = T::one() - sy + sj;
        if m > T::zero() {
            loss += m;
        }
    }
    loss
}

/// (D/2)·Σ scores² for last-layer scope, plus (D/2)·Σ hidden pre-activations²
/// for all-layers scope. One sample's worth.
pub fn data_dependent_penalty<T: Scalar>(trace: &ForwardTrace<T>, spec: &RegularizerSpec<T>) -> T {
    if spec.scope == PenaltyScope::None {
        return T::zero();
    }
    let half = T::from_f64_lossy(0.5);
    let mut sq: T = trace.scores.iter().map(|&s| s * s).sum();
    if spec.scope == PenaltyScope::AllLayers {
        for a in &trace.pre_activations {
            sq += a.iter().map(|&v| v * v).sum();
        }
    }
    half * spec.d * sq
}

/// ((C/2)·Σw², l1·Σ|w|) over all layers; biases are never penalized.
pub fn weight_penalties<T: Scalar>(model: &Mlp<T>, spec: &RegularizerSpec<T>) -> (T, T) {
    let half = T::from_f64_lossy(0.5);
    let mut sq = T::zero();
    let mut abs = T::zero();
    for layer in model.layers() {
        for &w in layer.weights.as_slice() {
            sq += w * w;
            abs += w.abs();
        }
    }
    (half * spec.c * sq, spec.l1 * abs)
}

/// Full objective on a batch: hinge and data-dependent terms summed over
/// samples, weight penalties added once.
pub fn full_objective<T: Scalar>(
    model: &Mlp<T>,
    batch: &Dataset<T>,
    spec: &RegularizerSpec<T>,
) -> Result<LossBreakdown<T>> {
    if batch.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut hinge = T::zero();
    let mut data_dep = T::zero();
    for i in 0..batch.len() {
        let trace = forward(model, batch.row(i))?;
        let label = batch.label(i);
        if label >= trace.scores.len() {
            return Err(Error::BadConfig(format!(
                "label {label} out of range for {} model outputs",
                trace.scores.len()
            )));
        }
        hinge += multiclass_hinge(&trace.scores, label);
        data_dep += data_dependent_penalty(&trace, spec);
    }
    let (l2_term, l1_term) = weight_penalties(model, spec);
    Ok(LossBreakdown {
        hinge,
        l2_term,
        l1_term,
        data_dep_term: data_dep,
        total: hinge + l2_term + l1_term + data_dep,
    })
}

#[derive(Debug, Clone)]
pub struct LayerGrad<T> {
    pub weights: Matrix<T>,
    pub biases: Vec<T>,
}

/// Gradient layers in the same order as `Mlp::layers()`: hidden layers
/// first, classifier last.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub layers: Vec<LayerGrad<T>>,
}

/// Exact subgradient of `full_objective` on the batch. Kinks resolve to 0:
/// hinge terms contribute only where strictly active, ReLU passes gradient
/// only where the pre-activation is strictly positive, and |w| has
/// subgradient 0 at w = 0.
pub fn gradients<T: Scalar>(
    model: &Mlp<T>,
    batch: &Dataset<T>,
    spec: &RegularizerSpec<T>,
) -> Result<Gradients<T>> {
    gradients_scaled(model, batch, spec, T::one())
}

/// Like `gradients`, but the per-sample terms (hinge + data-dependent) are
/// multiplied by `data_scale` while weight penalties stay unscaled. The
/// trainer passes 1/|batch|.
pub fn gradients_scaled<T: Scalar>(
    model: &Mlp<T>,
    batch: &Dataset<T>,
    spec: &RegularizerSpec<T>,
    data_scale: T,
) -> Result<Gradients<T>> {
    if batch.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut grads: Vec<LayerGrad<T>> = model
        .layers()
        .map(|l| LayerGrad {
            weights: Matrix::zeros(l.out_dim(), l.in_dim()),
            biases: vec![T::zero(); l.out_dim()],
        })
        .collect();
    let n_hidden = model.hidden.len();
    let k = model.n_classes();
    let with_scores = spec.scope != PenaltyScope::None;
    let with_hidden_pre = spec.scope == PenaltyScope::AllLayers;

    for i in 0..batch.len() {
        let x = batch.row(i);
        let trace = forward(model, x)?;
        let label = batch.label(i);
        if label >= k {
            return Err(Error::BadConfig(format!(
                "label {label} out of range for {k} model outputs"
            )));
        }

        // d(loss_i)/d(scores)
        let mut delta = vec![T::zero(); k];
        let sy = trace.scores[label];
        for (j, &sj) in trace.scores.iter().enumerate() {
            if j != label && T::one() - sy + sj > T::zero() {
                delta[j] += T::one();
                delta[label] -= T::one();
            }
            if with_scores {
                delta[j] += spec.d * sj;
            }
        }
        for d in delta.iter_mut() {
            *d *= data_scale;
        }

        let z_last: &[T] = trace.activations.last().map_or(x, Vec::as_slice);
        let cgrad = &mut grads[n_hidden];
        cgrad.weights.rank1_add(T::one(), &delta, z_last);
        for (b, &d) in cgrad.biases.iter_mut().zip(&delta) {
            *b += d;
        }

        // backprop through hidden layers
        let mut dz = vec![T::zero(); model.classifier.in_dim()];
        model.classifier.weights.matvec_t(&delta, &mut dz);
        for h in (0..n_hidden).rev() {
            let a = &trace.pre_activations[h];
            let mut da = vec![T::zero(); a.len()];
            for ((dav, &dzv), &av) in da.iter_mut().zip(&dz).zip(a) {
                if av > T::zero() {
                    *dav = dzv;
                }
                if with_hidden_pre {
                    *dav += data_scale * spec.d * av;
                }
            }
            let z_in: &[T] = if h == 0 { x } else { trace.activations[h - 1].as_slice() };
            let hgrad = &mut grads[h];
            hgrad.weights.rank1_add(T::one(), &da, z_in);
            for (b, &d) in hgrad.biases.iter_mut().zip(&da) {
                *b += d;
            }
            if h > 0 {
                dz = vec![T::zero(); model.hidden[h].in_dim()];
                model.hidden[h].weights.matvec_t(&da, &mut dz);
            }
        }
    }

    // weight penalties, added once per batch
    if spec.c > T::zero() || spec.l1 > T::zero() {
        for (grad, layer) in grads.iter_mut().zip(model.layers()) {
            for (g, &w) in grad.weights.as_mut_slice().iter_mut().zip(layer.weights.as_slice()) {
                *g += spec.c * w + spec.l1 * l1_subgrad(w);
            }
        }
    }
    Ok(Gradients { layers: grads })
}

// sign(w) with the kink at 0 resolved to 0; f64::signum would give ±1 there.
fn l1_subgrad<T: Scalar>(w: T) -> T {
    if w > T::zero() {
        T::one()
    } else if w < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Capacity functional of a single-output affine classifier:
/// Σ_i (w·x_i + b)² + C·‖w‖².
pub fn vc_gamma<T: Scalar>(weights: &[T], bias: T, data: &Dataset<T>, c: T) -> Result<T> {
    if weights.len() != data.n_features() {
        return Err(Error::DimMismatch { expected: data.n_features(), got: weights.len() });
    }
    let mut total = T::zero();
    for i in 0..data.len() {
        let mut s = bias;
        for (&w, &x) in weights.iter().zip(data.row(i)) {
            s += w * x;
        }
        total += s * s;
    }
    let norm_sq: T = weights.iter().map(|&w| w * w).sum();
    Ok(total + c * norm_sq)
}

/// Multi-output version: the functional summed over the layer's rows, with
/// each row's bias. Used for classifier layers (one row per class).
pub fn vc_gamma_layer<T: Scalar>(layer: &Layer<T>, data: &Dataset<T>, c: T) -> Result<T> {
    let mut total = T::zero();
    for r in 0..layer.out_dim() {
        total += vc_gamma(layer.weights.row(r), layer.biases[r], data, c)?;
    }
    Ok(total)
}
