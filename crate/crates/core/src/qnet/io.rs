use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Layer, NetworkParams, QnetError};

/// Provenance recorded next to the weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelMeta {
    pub seed: u64,
    pub trained_on_pattern: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    architecture: Vec<usize>,
    activation: String,
    layers: Vec<LayerDoc>,
    seed: u64,
    trained_on_pattern: Option<String>,
}

/// Write the network as a JSON document. Values round-trip exactly: the
/// serializer emits the shortest decimal that reproduces each float.
pub fn save_params(path: &Path, params: &NetworkParams, meta: &ModelMeta) -> Result<(), QnetError> {
    let doc = ModelDoc {
        architecture: params.sizes(),
        activation: "relu".to_string(),
        layers: params
            .layers()
            .iter()
            .map(|layer| LayerDoc {
                w: layer
                    .weights
                    .rows()
                    .into_iter()
                    .map(|r| r.to_vec())
                    .collect(),
                b: layer.bias.to_vec(),
            })
            .collect(),
        seed: meta.seed,
        trained_on_pattern: meta.trained_on_pattern.clone(),
    };
    let body = serde_json::to_string(&doc)?;
    std::fs::write(path, body)?;
    Ok(())
}

/// Read a network back, checking the declared architecture against the
/// stored tensors. Missing files, malformed documents, and architecture
/// mismatches are reported as distinct errors.
pub fn load_params(path: &Path) -> Result<(NetworkParams, ModelMeta), QnetError> {
    let body = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            QnetError::MissingFile(path.to_path_buf())
        } else {
            QnetError::Io(e)
        }
    })?;
    let doc: ModelDoc = serde_json::from_str(&body)?;
    if doc.activation != "relu" {
        return Err(QnetError::ArchitectureMismatch(format!(
            "unsupported activation '{}'",
            doc.activation
        )));
    }
    if doc.architecture.len() != doc.layers.len() + 1 {
        return Err(QnetError::ArchitectureMismatch(format!(
            "{} declared sizes for {} layers",
            doc.architecture.len(),
            doc.layers.len()
        )));
    }
    let mut layers = Vec::with_capacity(doc.layers.len());
    for (k, layer) in doc.layers.iter().enumerate() {
        let (fan_in, fan_out) = (doc.architecture[k], doc.architecture[k + 1]);
        if layer.w.len() != fan_out
            || layer.w.iter().any(|row| row.len() != fan_in)
            || layer.b.len() != fan_out
        {
            return Err(QnetError::ArchitectureMismatch(format!(
                "layer {k} tensors do not match declared sizes {fan_in}→{fan_out}"
            )));
        }
        let flat: Vec<f64> = layer.w.iter().flatten().copied().collect();
        let weights =
            Array2::from_shape_vec((fan_out, fan_in), flat).expect("dimensions checked above");
        layers.push(Layer {
            weights,
            bias: Array1::from(layer.b.clone()),
        });
    }
    let params = NetworkParams::from_layers(layers)
        .map_err(|e| QnetError::ArchitectureMismatch(e.to_string()))?;
    Ok((
        params,
        ModelMeta {
            seed: doc.seed,
            trained_on_pattern: doc.trained_on_pattern,
        },
    ))
}
