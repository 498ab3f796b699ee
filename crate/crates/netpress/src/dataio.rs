//! LIBSVM-format parsing, train/val/test splitting, and feature
//! standardization. Datasets are dense: the corpora this crate targets top
//! out at a few hundred features, so sparse storage buys nothing.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::scalar::Scalar;
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    features: Matrix<T>,
    labels: Vec<usize>,
    n_classes: usize,
    /// Sorted distinct original labels; index in this table = class index.
    label_map: Vec<f64>,
}

impl<T: Scalar> Dataset<T> {
    /// Caller-supplied parts, validated: every label must be a valid class
    /// index and the label map must have one entry per class.
    pub fn from_parts(
        features: Matrix<T>,
        labels: Vec<usize>,
        label_map: Vec<f64>,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::DimMismatch { expected: features.rows(), got: labels.len() });
        }
        if features.rows() == 0 {
            return Err(Error::EmptyInput);
        }
        let n_classes = label_map.len();
        if let Some(bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::BadConfig(format!(
                "label index {bad} out of range for {n_classes} classes"
            )));
        }
        Ok(Dataset { features, labels, n_classes, label_map })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.features.row(i)
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_map(&self) -> &[f64] {
        &self.label_map
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset<T> {
        let mut m = Matrix::zeros(idx.len(), self.n_features());
        let mut labels = Vec::with_capacity(idx.len());
        for (out, &i) in idx.iter().enumerate() {
            m.row_mut(out).copy_from_slice(self.features.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features: m,
            labels,
            n_classes: self.n_classes,
            label_map: self.label_map.clone(),
        }
    }

    /// Append a constant-1 feature to every sample (bias absorption).
    pub fn augment(&self) -> Dataset<T> {
        let n = self.n_features();
        let mut m = Matrix::zeros(self.len(), n + 1);
        for i in 0..self.len() {
            m.row_mut(i)[..n].copy_from_slice(self.features.row(i));
            m.row_mut(i)[n] = T::one();
        }
        Dataset {
            features: m,
            labels: self.labels.clone(),
            n_classes: self.n_classes,
            label_map: self.label_map.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

/// Parse one LIBSVM text document.
///
/// Line format: `<label> <index>:<value> ...` with 1-based strictly
/// ascending indices; absent entries are zero. Labels are remapped to
/// 0-based class indices by sorted order of the distinct original labels.
/// `n_features_hint` widens the matrix when trailing features never occur.
pub fn parse_libsvm<T: Scalar>(text: &str, n_features_hint: Option<usize>) -> Result<Dataset<T>> {
    let mut sets = parse_libsvm_splits(&[text], n_features_hint)?;
    Ok(sets.pop().expect("one input, one output"))
}

/// Parse several documents (e.g. pre-split train/val/test files) with one
/// shared label map and feature width.
pub fn parse_libsvm_splits<T: Scalar>(
    texts: &[&str],
    n_features_hint: Option<usize>,
) -> Result<Vec<Dataset<T>>> {
    struct RawFile {
        labels: Vec<f64>,
        rows: Vec<Vec<(usize, f64)>>,
    }

    let mut raw_files = Vec::with_capacity(texts.len());
    let mut max_index = n_features_hint.unwrap_or(0);
    let mut distinct: Vec<f64> = Vec::new();

    for text in texts {
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let lineno = lineno + 1;
            let mut tokens = line.split_ascii_whitespace();
            let label_tok = tokens.next().expect("non-empty line has a token");
            let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad label {label_tok:?}"),
            })?;
            if !label.is_finite() {
                return Err(Error::Parse { line: lineno, msg: "non-finite label".into() });
            }
            let mut row = Vec::new();
            let mut prev_index = 0usize;
            for tok in tokens {
                let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                    line: lineno,
                    msg: format!("expected index:value, got {tok:?}"),
                })?;
                let idx: usize = idx_s.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad feature index {idx_s:?}"),
                })?;
                if idx == 0 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "feature indices are 1-based".into(),
                    });
                }
                if idx <= prev_index {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("feature index {idx} not ascending"),
                    });
                }
                let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad feature value {val_s:?}"),
                })?;
                prev_index = idx;
                row.push((idx, val));
            }
            max_index = max_index.max(prev_index);
            if !distinct.contains(&label) {
                distinct.push(label);
            }
            labels.push(label);
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        raw_files.push(RawFile { labels, rows });
    }

    distinct.sort_by(|a, b| a.partial_cmp(b).expect("labels are finite"));
    let class_of = |orig: f64| distinct.iter().position(|&d| d == orig).expect("seen label");

    let mut out = Vec::with_capacity(raw_files.len());
    for raw in raw_files {
        let mut m = Matrix::zeros(raw.rows.len(), max_index);
        for (r, row) in raw.rows.iter().enumerate() {
            let dst = m.row_mut(r);
            for &(idx, val) in row {
                dst[idx - 1] = T::from_f64_lossy(val);
            }
        }
        let labels = raw.labels.iter().map(|&l| class_of(l)).collect();
        out.push(Dataset {
            features: m,
            labels,
            n_classes: distinct.len(),
            label_map: distinct.clone(),
        });
    }
    Ok(out)
}

/// Serialize back to LIBSVM text (original labels, nonzero entries only).
/// `parse_libsvm(to_libsvm(d))` reproduces `d` exactly.
pub fn to_libsvm<T: Scalar>(ds: &Dataset<T>) -> String {
    let mut out = String::new();
    for i in 0..ds.len() {
        out.push_str(&format!("{}", ds.label_map[ds.labels[i]]));
        for (j, &v) in ds.features.row(i).iter().enumerate() {
            if v != T::zero() {
                out.push_str(&format!(" {}:{}", j + 1, v.to_f64_lossy()));
            }
        }
        out.push('\n');
    }
    out
}

/// Disjoint row partition by shuffled indices; sizes are
/// floor(M*train), floor(M*val), remainder.
pub fn split<T: Scalar>(
    ds: &Dataset<T>,
    spec: &SplitSpec,
) -> Result<(Dataset<T>, Dataset<T>, Dataset<T>)> {
    let f = [spec.train_fraction, spec.val_fraction, spec.test_fraction];
    if f.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::BadConfig("split fractions must lie in [0, 1]".into()));
    }
    if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::BadConfig("split fractions must sum to 1".into()));
    }
    let m = ds.len();
    let n_train = (m as f64 * spec.train_fraction).floor() as usize;
    let n_val = (m as f64 * spec.val_fraction).floor() as usize;
    let n_test = m - n_train - n_val;
    if n_train == 0 {
        return Err(Error::EmptySplit { which: "train" });
    }
    if n_val == 0 {
        return Err(Error::EmptySplit { which: "val" });
    }
    if n_test == 0 {
        return Err(Error::EmptySplit { which: "test" });
    }

    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut rng_for(spec.seed, "split"));
    let train = ds.subset(&idx[..n_train]);
    let val = ds.subset(&idx[n_train..n_train + n_val]);
    let test = ds.subset(&idx[n_train + n_val..]);
    Ok((train, val, test))
}

/// Per-feature affine transform fitted on the training split.
#[derive(Debug, Clone)]
pub struct Scaler<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> Scaler<T> {
    /// Population mean/std per feature; std floored at 1e-12 so constant
    /// features pass through as zeros instead of dividing by zero.
    pub fn fit(train: &Dataset<T>) -> Scaler<T> {
        let m = train.len();
        let n = train.n_features();
        let minv = T::one() / T::from_usize(m).expect("dataset fits in T");
        let mut mean = vec![T::zero(); n];
        for i in 0..m {
            for (acc, &v) in mean.iter_mut().zip(train.row(i)) {
                *acc += v;
            }
        }
        for v in mean.iter_mut() {
            *v *= minv;
        }
        let mut var = vec![T::zero(); n];
        for i in 0..m {
            for ((acc, &mu), &v) in var.iter_mut().zip(&mean).zip(train.row(i)) {
                let d = v - mu;
                *acc += d * d;
            }
        }
        let floor = T::from_f64_lossy(1e-12);
        let std = var.iter().map(|&v| (v * minv).sqrt().max(floor)).collect();
        Scaler { mean, std }
    }

    pub fn apply(&self, ds: &Dataset<T>) -> Dataset<T> {
        let mut out = ds.clone();
        for i in 0..out.len() {
            let row = out.features.row_mut(i);
            for ((v, &mu), &sd) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - mu) / sd;
            }
        }
        out
    }
}

/// Fit on `train`, apply to train and every dataset in `others`.
pub fn standardize<T: Scalar>(
    train: &Dataset<T>,
    others: &[&Dataset<T>],
) -> (Dataset<T>, Vec<Dataset<T>>, Scaler<T>) {
    let scaler = Scaler::fit(train);
    let scaled_train = scaler.apply(train);
    let scaled_others = others.iter().map(|d| scaler.apply(d)).collect();
    (scaled_train, scaled_others, scaler)
}
