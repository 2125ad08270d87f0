//! JSON checkpoint layout.
//!
//! A network snapshot is
//!
//! ```json
//! {
//!   "layer_sizes": [3, 4, 1],
//!   "hidden": "relu",
//!   "output": "linear",
//!   "tensors": [
//!     {"layer": 0, "kind": "weight", "shape": [4, 3], "values": [...]},
//!     {"layer": 0, "kind": "bias",   "shape": [4],    "values": [...]},
//!     ...
//!   ]
//! }
//! ```
//!
//! with values stored row-major. Optimizer snapshots use the same tensor
//! records with kinds `m_weight`, `v_weight`, `m_bias` and `v_bias`.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig};
use super::mlp::{Activation, Mlp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub layer: usize,
    pub kind: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSnapshot {
    pub layer_sizes: Vec<usize>,
    pub hidden: Activation,
    pub output: Activation,
    pub tensors: Vec<TensorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamSnapshot {
    pub config: AdamConfig,
    pub step: u64,
    pub tensors: Vec<TensorRecord>,
}

fn matrix_record(layer: usize, kind: &str, m: &Array2<f64>) -> TensorRecord {
    TensorRecord {
        layer,
        kind: kind.to_string(),
        shape: vec![m.nrows(), m.ncols()],
        values: m.iter().copied().collect(),
    }
}

fn vector_record(layer: usize, kind: &str, v: &Array1<f64>) -> TensorRecord {
    TensorRecord {
        layer,
        kind: kind.to_string(),
        shape: vec![v.len()],
        values: v.to_vec(),
    }
}

fn find<'a>(tensors: &'a [TensorRecord], layer: usize, kind: &str) -> Result<&'a TensorRecord> {
    tensors
        .iter()
        .find(|t| t.layer == layer && t.kind == kind)
        .ok_or_else(|| Error::Config(format!("snapshot lacks {kind} tensor for layer {layer}")))
}

fn to_matrix(t: &TensorRecord) -> Result<Array2<f64>> {
    match t.shape[..] {
        [r, c] => Array2::from_shape_vec((r, c), t.values.clone())
            .map_err(|e| Error::Config(format!("layer {} {}: {e}", t.layer, t.kind))),
        _ => Err(Error::Config(format!("layer {} {} is not a matrix", t.layer, t.kind))),
    }
}

fn to_vector(t: &TensorRecord) -> Result<Array1<f64>> {
    match t.shape[..] {
        [n] if n == t.values.len() => Ok(Array1::from_vec(t.values.clone())),
        _ => Err(Error::Config(format!("layer {} {} has a bad shape", t.layer, t.kind))),
    }
}

impl Mlp {
    pub fn snapshot(&self) -> MlpSnapshot {
        let mut tensors = Vec::with_capacity(2 * self.weights().len());
        for (l, (w, b)) in self.weights().iter().zip(self.biases()).enumerate() {
            tensors.push(matrix_record(l, "weight", w));
            tensors.push(vector_record(l, "bias", b));
        }
        MlpSnapshot {
            layer_sizes: self.layer_sizes().to_vec(),
            hidden: self.hidden_activation(),
            output: self.output_activation(),
            tensors,
        }
    }

    pub fn from_snapshot(snap: &MlpSnapshot) -> Result<Self> {
        let layers = snap.layer_sizes.len().saturating_sub(1);
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for l in 0..layers {
            weights.push(to_matrix(find(&snap.tensors, l, "weight")?)?);
            biases.push(to_vector(find(&snap.tensors, l, "bias")?)?);
        }
        let net = Mlp::from_parameters(weights, biases, snap.hidden, snap.output)?;
        if net.layer_sizes() != snap.layer_sizes.as_slice() {
            return Err(Error::Config("snapshot layer sizes disagree with its tensors".into()));
        }
        Ok(net)
    }
}

impl Adam {
    pub fn snapshot(&self) -> AdamSnapshot {
        let mut tensors = Vec::new();
        for l in 0..self.m_weights.len() {
            tensors.push(matrix_record(l, "m_weight", &self.m_weights[l]));
            tensors.push(matrix_record(l, "v_weight", &self.v_weights[l]));
            tensors.push(vector_record(l, "m_bias", &self.m_biases[l]));
            tensors.push(vector_record(l, "v_bias", &self.v_biases[l]));
        }
        AdamSnapshot {
            config: self.config,
            step: self.step,
            tensors,
        }
    }

    /// Restores optimizer state for `net`; shapes must match.
    pub fn from_snapshot(snap: &AdamSnapshot, net: &Mlp) -> Result<Self> {
        let mut opt = Adam::new(net, snap.config)?;
        opt.step = snap.step;
        for l in 0..net.weights().len() {
            let mw = to_matrix(find(&snap.tensors, l, "m_weight")?)?;
            let vw = to_matrix(find(&snap.tensors, l, "v_weight")?)?;
            let mb = to_vector(find(&snap.tensors, l, "m_bias")?)?;
            let vb = to_vector(find(&snap.tensors, l, "v_bias")?)?;
            if mw.dim() != opt.m_weights[l].dim()
                || vw.dim() != opt.v_weights[l].dim()
                || mb.dim() != opt.m_biases[l].dim()
                || vb.dim() != opt.v_biases[l].dim()
            {
                return Err(Error::Architecture(format!("optimizer tensors of layer {l}")));
            }
            opt.m_weights[l] = mw;
            opt.v_weights[l] = vw;
            opt.m_biases[l] = mb;
            opt.v_biases[l] = vb;
        }
        Ok(opt)
    }
}
