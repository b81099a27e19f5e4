//! Named tensor container and the canonical tensor manifest.
//!
//! Tensor names follow the usual PyTorch module naming (`weight` is stored
//! `[out, in]`), so a training implementation can export its state dict
//! directly. The manifest order below is also the payload order of the
//! weight file.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::hyper::{HiloHyperParams, BOX_HEAD_OUTPUTS};
use super::HiloError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Expected `(name, shape)` pairs, in payload order.
pub fn manifest(hp: &HiloHyperParams) -> Vec<(String, Vec<usize>)> {
    let d = hp.d_model;
    let ff = hp.ff_dim;
    let mut m: Vec<(String, Vec<usize>)> = Vec::new();
    let mut push = |name: String, shape: Vec<usize>| m.push((name, shape));

    push("input_mlp.0.weight".into(), vec![d, hp.input_dim()]);
    push("input_mlp.0.bias".into(), vec![d]);
    push("input_mlp.2.weight".into(), vec![d, d]);
    push("input_mlp.2.bias".into(), vec![d]);
    push("null_token".into(), vec![1, d]);

    let block = |push: &mut dyn FnMut(String, Vec<usize>), prefix: &str, attn: &str| {
        push(format!("{prefix}.{attn}.in_proj_weight"), vec![3 * d, d]);
        push(format!("{prefix}.{attn}.in_proj_bias"), vec![3 * d]);
        push(format!("{prefix}.{attn}.out_proj.weight"), vec![d, d]);
        push(format!("{prefix}.{attn}.out_proj.bias"), vec![d]);
        push(format!("{prefix}.linear1.weight"), vec![ff, d]);
        push(format!("{prefix}.linear1.bias"), vec![ff]);
        push(format!("{prefix}.linear2.weight"), vec![d, ff]);
        push(format!("{prefix}.linear2.bias"), vec![d]);
        push(format!("{prefix}.norm1.weight"), vec![d]);
        push(format!("{prefix}.norm1.bias"), vec![d]);
        push(format!("{prefix}.norm2.weight"), vec![d]);
        push(format!("{prefix}.norm2.bias"), vec![d]);
    };
    for i in 0..hp.n_enc_layers {
        block(&mut push, &format!("encoder.layers.{i}"), "self_attn");
    }
    push("encoder.norm.weight".into(), vec![d]);
    push("encoder.norm.bias".into(), vec![d]);
    for i in 0..hp.n_dec_layers {
        block(&mut push, &format!("decoder.layers.{i}"), "cross_attn");
    }
    push("decoder.norm.weight".into(), vec![d]);
    push("decoder.norm.bias".into(), vec![d]);
    push("query_embed".into(), vec![hp.n_queries, d]);
    push("box_head.0.weight".into(), vec![d, d]);
    push("box_head.0.bias".into(), vec![d]);
    push("box_head.2.weight".into(), vec![BOX_HEAD_OUTPUTS, d]);
    push("box_head.2.bias".into(), vec![BOX_HEAD_OUTPUTS]);
    push("class_head.weight".into(), vec![hp.n_classes + 1, d]);
    push("class_head.bias".into(), vec![hp.n_classes + 1]);
    m
}

/// All model parameters as named tensors.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HiloWeights {
    pub tensors: Vec<Tensor>,
}

impl HiloWeights {
    /// Fills every tensor from `f(name, flat_index)`, in manifest order.
    pub fn from_fn(hp: &HiloHyperParams, mut f: impl FnMut(&str, usize) -> f32) -> Self {
        let tensors = manifest(hp)
            .into_iter()
            .map(|(name, shape)| {
                let n: usize = shape.iter().product();
                let data = (0..n).map(|i| f(&name, i)).collect();
                Tensor { name, shape, data }
            })
            .collect();
        Self { tensors }
    }

    pub fn zeros(hp: &HiloHyperParams) -> Self {
        Self::from_fn(hp, |_, _| 0.0)
    }

    /// Identity-friendly initialization: layer-norm gains one, everything else
    /// from `f`. Mirrors how a freshly constructed network looks.
    pub fn init_with(hp: &HiloHyperParams, mut f: impl FnMut(&str, usize) -> f32) -> Self {
        Self::from_fn(hp, |name, i| {
            if name.contains("norm") && name.ends_with(".weight") {
                1.0
            } else {
                f(name, i)
            }
        })
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    /// Checks names, shapes and data lengths against the manifest and
    /// returns the total parameter count.
    pub fn validate(&self, hp: &HiloHyperParams) -> Result<usize, HiloError> {
        hp.validate()?;
        let expected = manifest(hp);
        for t in &self.tensors {
            if t.data.len() != t.numel() {
                return Err(HiloError::Shape {
                    name: t.name.clone(),
                    expected: t.shape.clone(),
                    found: vec![t.data.len()],
                });
            }
            if !expected.iter().any(|(n, _)| *n == t.name) {
                return Err(HiloError::UnexpectedTensor(t.name.clone()));
            }
        }
        for (name, shape) in &expected {
            let t = self.get(name).ok_or_else(|| HiloError::MissingTensor(name.clone()))?;
            if t.shape != *shape {
                return Err(HiloError::Shape {
                    name: name.clone(),
                    expected: shape.clone(),
                    found: t.shape.clone(),
                });
            }
        }
        if self.tensors.len() != expected.len() {
            return Err(HiloError::UnexpectedTensor("duplicate tensor name".into()));
        }
        Ok(self.param_count())
    }

    /// Reorders tensors into manifest order (no-op for valid weights built
    /// by this crate).
    pub fn canonicalize(&mut self, hp: &HiloHyperParams) {
        let order = manifest(hp);
        self.tensors
            .sort_by_key(|t| order.iter().position(|(n, _)| *n == t.name).unwrap_or(usize::MAX));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_param_count_is_lightweight() {
        let hp = HiloHyperParams::default();
        let w = HiloWeights::zeros(&hp);
        let n = w.validate(&hp).unwrap();
        assert_eq!(n, 146_508);
        // within a factor of two of a ~186k-parameter model
        assert!(n > 93_000 && n < 373_000);
    }

    #[test]
    fn wrong_query_rows_is_shape_error() {
        let hp = HiloHyperParams::default();
        let mut w = HiloWeights::zeros(&hp);
        let q = w.get_mut("query_embed").unwrap();
        q.shape = vec![19, hp.d_model];
        q.data.truncate(19 * hp.d_model);
        assert!(matches!(w.validate(&hp), Err(HiloError::Shape { .. })));
    }

    #[test]
    fn missing_and_unexpected() {
        let hp = HiloHyperParams::tiny();
        let mut w = HiloWeights::zeros(&hp);
        w.tensors.retain(|t| t.name != "null_token");
        assert!(matches!(w.validate(&hp), Err(HiloError::MissingTensor(_))));

        let mut w = HiloWeights::zeros(&hp);
        w.tensors.push(Tensor {
            name: "extra".into(),
            shape: vec![1],
            data: vec![0.0],
        });
        assert!(matches!(w.validate(&hp), Err(HiloError::UnexpectedTensor(_))));
    }
}
