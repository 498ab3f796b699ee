//! Model persistence: versioned JSON with weights stored as scientific
//! decimal strings carrying 18 significant digits, enough for bit-exact
//! f64 round trips under correctly rounded parsing.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::network::{Layer, Mlp};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;

/// Where a stored model came from. Every field is optional so partial
/// pipelines (a bare `train` run, a quantized copy) record what they know.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub combo: Option<String>,
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub l1: Option<f64>,
    pub scope: Option<String>,
    /// Minibatch scaling convention used in training ("mean").
    pub scaling: Option<String>,
    pub config_hash: Option<String>,
    /// Free-form note: which artifact or stage produced this file.
    pub source: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    rows: usize,
    cols: usize,
    weights: Vec<String>,
    biases: Vec<String>,
    mask: Option<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    widths: Vec<usize>,
    hidden: Vec<LayerFile>,
    classifier: LayerFile,
    provenance: Provenance,
}

fn encode<T: Scalar>(v: T) -> String {
    // 17 digits after the point in scientific form = 18 significant digits
    format!("{:.17e}", v.to_f64_lossy())
}

fn decode<T: Scalar>(s: &str) -> Result<T> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::CorruptModel(format!("bad weight literal {s:?}")))?;
    Ok(T::from_f64_lossy(v))
}

fn layer_to_file<T: Scalar>(layer: &Layer<T>) -> LayerFile {
    LayerFile {
        rows: layer.weights.rows(),
        cols: layer.weights.cols(),
        weights: layer.weights.as_slice().iter().map(|&w| encode(w)).collect(),
        biases: layer.biases.iter().map(|&b| encode(b)).collect(),
        mask: layer.mask.clone(),
    }
}

fn layer_from_file<T: Scalar>(file: &LayerFile) -> Result<Layer<T>> {
    if file.weights.len() != file.rows * file.cols {
        return Err(Error::CorruptModel(format!(
            "layer claims {}x{} but stores {} weights",
            file.rows,
            file.cols,
            file.weights.len()
        )));
    }
    if file.biases.len() != file.rows {
        return Err(Error::CorruptModel(format!(
            "layer with {} rows stores {} biases",
            file.rows,
            file.biases.len()
        )));
    }
    if let Some(mask) = &file.mask {
        if mask.len() != file.weights.len() {
            return Err(Error::CorruptModel("mask length differs from weight count".into()));
        }
    }
    let weights = file.weights.iter().map(|s| decode(s)).collect::<Result<Vec<T>>>()?;
    let biases = file.biases.iter().map(|s| decode(s)).collect::<Result<Vec<T>>>()?;
    let mut layer = Layer::new(Matrix::from_vec(file.rows, file.cols, weights), biases);
    layer.mask = file.mask.clone();
    Ok(layer)
}

pub fn save_model<T: Scalar>(
    path: impl AsRef<Path>,
    model: &Mlp<T>,
    provenance: &Provenance,
) -> Result<()> {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        widths: model.widths(),
        hidden: model.hidden.iter().map(layer_to_file).collect(),
        classifier: layer_to_file(&model.classifier),
        provenance: provenance.clone(),
    };
    fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<(Mlp<T>, Provenance)> {
    let text = fs::read_to_string(path)?;
    // check the version before trusting the rest of the schema
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let found = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::CorruptModel("missing format_version".into()))?
        as u32;
    if found != FORMAT_VERSION {
        return Err(Error::ModelVersion { found, expected: FORMAT_VERSION });
    }
    let file: ModelFile = serde_json::from_value(value)?;
    let model = Mlp {
        hidden: file.hidden.iter().map(layer_from_file).collect::<Result<Vec<_>>>()?,
        classifier: layer_from_file(&file.classifier)?,
    };
    if model.widths() != file.widths {
        return Err(Error::CorruptModel(format!(
            "widths field {:?} does not match stored layers {:?}",
            file.widths,
            model.widths()
        )));
    }
    Ok((model, file.provenance))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}
