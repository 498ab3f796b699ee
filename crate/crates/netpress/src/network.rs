//! Feedforward model: zero or more ReLU hidden layers and a linear
//! classifier layer on top.

use rand::Rng;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::scalar::Scalar;
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weights: Matrix<T>,
    pub biases: Vec<T>,
    /// Pruning mask; `false` marks a weight frozen at zero. `None` means
    /// nothing has been pruned. Indexed like the row-major weight data.
    pub mask: Option<Vec<bool>>,
}

impl<T: Scalar> Layer<T> {
    pub fn new(weights: Matrix<T>, biases: Vec<T>) -> Self {
        assert_eq!(weights.rows(), biases.len(), "one bias per output unit");
        Layer { weights, biases, mask: None }
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn nonzeros(&self) -> usize {
        self.weights.as_slice().iter().filter(|&&w| w != T::zero()).count()
    }

    /// Zero out weights wherever the mask says pruned.
    pub fn enforce_mask(&mut self) {
        if let Some(mask) = &self.mask {
            for (w, &alive) in self.weights.as_mut_slice().iter_mut().zip(mask) {
                if !alive {
                    *w = T::zero();
                }
            }
        }
    }

    /// a = W x + b
    pub fn affine(&self, x: &[T], out: &mut [T]) {
        self.weights.matvec(x, out);
        for (o, &b) in out.iter_mut().zip(&self.biases) {
            *o += b;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub hidden: Vec<Layer<T>>,
    pub classifier: Layer<T>,
}

#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    /// Per hidden layer, the affine outputs a_h before ReLU.
    pub pre_activations: Vec<Vec<T>>,
    /// Per hidden layer, max(0, a_h).
    pub activations: Vec<Vec<T>>,
    /// Classifier layer outputs, one per class.
    pub scores: Vec<T>,
}

impl<T: Scalar> Mlp<T> {
    pub fn depth(&self) -> usize {
        self.hidden.len()
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.first().unwrap_or(&self.classifier).in_dim()
    }

    pub fn n_classes(&self) -> usize {
        self.classifier.out_dim()
    }

    /// [input, hidden..., classes]
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(self.hidden.iter().map(Layer::out_dim));
        w.push(self.n_classes());
        w
    }

    /// All parameter layers, hidden first, classifier last.
    pub fn layers(&self) -> impl Iterator<Item = &Layer<T>> {
        self.hidden.iter().chain(std::iter::once(&self.classifier))
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Layer<T>> {
        self.hidden.iter_mut().chain(std::iter::once(&mut self.classifier))
    }

    pub fn nonzero_weights(&self) -> usize {
        self.layers().map(Layer::nonzeros).sum()
    }

    pub fn enforce_masks(&mut self) {
        for layer in self.layers_mut() {
            layer.enforce_mask();
        }
    }
}

/// Symmetric uniform init with scale sqrt(6/(fan_in+fan_out)), biases zero.
/// `layer_widths` is [n_features, hidden..., n_classes]; a two-entry list
/// gives a pure linear classifier.
pub fn init_mlp<T: Scalar>(layer_widths: &[usize], seed: u64) -> Result<Mlp<T>> {
    if layer_widths.len() < 2 {
        return Err(Error::BadConfig(
            "need at least [input, output] layer widths".into(),
        ));
    }
    if layer_widths.contains(&0) {
        return Err(Error::BadConfig("layer widths must be positive".into()));
    }
    let mut rng = rng_for(seed, "init");
    let mut make_layer = |fan_out: usize, fan_in: usize| {
        let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_out * fan_in)
            .map(|_| T::from_f64_lossy((rng.gen::<f64>() * 2.0 - 1.0) * s))
            .collect();
        Layer::new(Matrix::from_vec(fan_out, fan_in, data), vec![T::zero(); fan_out])
    };
    let layers: Vec<Layer<T>> = layer_widths
        .windows(2)
        .map(|w| make_layer(w[1], w[0]))
        .collect();
    let mut layers = layers;
    let classifier = layers.pop().expect("at least one layer");
    Ok(Mlp { hidden: layers, classifier })
}

pub fn forward<T: Scalar>(model: &Mlp<T>, x: &[T]) -> Result<ForwardTrace<T>> {
    if x.len() != model.input_dim() {
        return Err(Error::DimMismatch { expected: model.input_dim(), got: x.len() });
    }
    let mut pre_activations = Vec::with_capacity(model.hidden.len());
    let mut activations = Vec::with_capacity(model.hidden.len());
    let mut cur: &[T] = x;
    for layer in &model.hidden {
        let mut a = vec![T::zero(); layer.out_dim()];
        layer.affine(cur, &mut a);
        let z: Vec<T> = a.iter().map(|&v| v.max(T::zero())).collect();
        pre_activations.push(a);
        activations.push(z);
        cur = activations.last().expect("just pushed").as_slice();
    }
    let mut scores = vec![T::zero(); model.n_classes()];
    model.classifier.affine(cur, &mut scores);
    Ok(ForwardTrace { pre_activations, activations, scores })
}

/// Argmax with ties broken toward the lowest class index.
pub fn predict_from_scores<T: Scalar>(scores: &[T]) -> usize {
    let mut best = 0;
    for (j, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = j;
        }
    }
    best
}

pub fn predict<T: Scalar>(model: &Mlp<T>, x: &[T]) -> Result<usize> {
    Ok(predict_from_scores(&forward(model, x)?.scores))
}

/// Fraction of samples whose predicted class matches the label.
pub fn accuracy<T: Scalar>(model: &Mlp<T>, data: &Dataset<T>) -> Result<f64> {
    let mut hits = 0usize;
    for i in 0..data.len() {
        if predict(model, data.row(i))? == data.label(i) {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}
