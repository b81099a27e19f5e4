//! Minimal dense layers on row-major `f32` matrices.

use alloc::vec;
use alloc::vec::Vec;

use super::weights::HiloWeights;
use super::HiloError;
use crate::math::{expf, sqrtf};

const LN_EPS: f32 = 1e-5;

/// Row-major matrix: `rows x cols`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f32] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn add_assign(&mut self, other: &Mat) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn relu(mut self) -> Self {
        for v in &mut self.data {
            *v = v.max(0.0);
        }
        self
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

fn fetch(w: &HiloWeights, name: &str) -> Result<Vec<f32>, HiloError> {
    w.get(name)
        .map(|t| t.data.clone())
        .ok_or_else(|| HiloError::MissingTensor(name.into()))
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    // Four partial sums let the compiler vectorize without fast-math.
    let mut acc = [0.0f32; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in 4 * chunks..a.len() {
        s += a[j] * b[j];
    }
    s
}

/// `y = x W^T + b` with `W` stored `[out, in]`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Linear {
    pub fn load(w: &HiloWeights, prefix: &str, in_dim: usize, out_dim: usize) -> Result<Self, HiloError> {
        Ok(Self {
            in_dim,
            out_dim,
            weight: fetch(w, &alloc::format!("{prefix}.weight"))?,
            bias: fetch(w, &alloc::format!("{prefix}.bias"))?,
        })
    }

    pub fn forward(&self, x: &Mat) -> Mat {
        debug_assert_eq!(x.cols, self.in_dim);
        let mut y = Mat::zeros(x.rows, self.out_dim);
        for r in 0..x.rows {
            let xr = x.row(r);
            let yr = y.row_mut(r);
            for (o, out) in yr.iter_mut().enumerate() {
                let wr = &self.weight[o * self.in_dim..(o + 1) * self.in_dim];
                *out = self.bias[o] + dot(wr, xr);
            }
        }
        y
    }
}

#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gain: Vec<f32>,
    pub bias: Vec<f32>,
}

impl LayerNorm {
    pub fn load(w: &HiloWeights, prefix: &str) -> Result<Self, HiloError> {
        Ok(Self {
            gain: fetch(w, &alloc::format!("{prefix}.weight"))?,
            bias: fetch(w, &alloc::format!("{prefix}.bias"))?,
        })
    }

    pub fn forward(&self, x: &Mat) -> Mat {
        let mut y = x.clone();
        let n = x.cols as f32;
        for r in 0..x.rows {
            let row = y.row_mut(r);
            let mean = row.iter().sum::<f32>() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / n;
            let inv = 1.0 / sqrtf(var + LN_EPS);
            for (i, v) in row.iter_mut().enumerate() {
                *v = (*v - mean) * inv * self.gain[i] + self.bias[i];
            }
        }
        y
    }
}

/// Multi-head scaled dot-product attention with packed input projection
/// (`in_proj_weight` is `[3d, d]`: query, key, value blocks).
#[derive(Clone, Debug)]
pub struct MultiHeadAttention {
    d_model: usize,
    n_heads: usize,
    q: Linear,
    k: Linear,
    v: Linear,
    out: Linear,
}

impl MultiHeadAttention {
    pub fn load(w: &HiloWeights, prefix: &str, d_model: usize, n_heads: usize) -> Result<Self, HiloError> {
        let in_w = fetch(w, &alloc::format!("{prefix}.in_proj_weight"))?;
        let in_b = fetch(w, &alloc::format!("{prefix}.in_proj_bias"))?;
        let block = |i: usize| Linear {
            in_dim: d_model,
            out_dim: d_model,
            weight: in_w[i * d_model * d_model..(i + 1) * d_model * d_model].to_vec(),
            bias: in_b[i * d_model..(i + 1) * d_model].to_vec(),
        };
        Ok(Self {
            d_model,
            n_heads,
            q: block(0),
            k: block(1),
            v: block(2),
            out: Linear::load(w, &alloc::format!("{prefix}.out_proj"), d_model, d_model)?,
        })
    }

    pub fn forward(&self, query: &Mat, memory: &Mat) -> Mat {
        let q = self.q.forward(query);
        let k = self.k.forward(memory);
        let v = self.v.forward(memory);
        let dh = self.d_model / self.n_heads;
        let scale = 1.0 / sqrtf(dh as f32);
        let mut ctx = Mat::zeros(query.rows, self.d_model);
        let mut scores = vec![0.0f32; memory.rows];
        for h in 0..self.n_heads {
            let span = h * dh..(h + 1) * dh;
            for t in 0..query.rows {
                let qt = &q.row(t)[span.clone()];
                let mut max = f32::NEG_INFINITY;
                for (s, score) in scores.iter_mut().enumerate() {
                    *score = dot(qt, &k.row(s)[span.clone()]) * scale;
                    max = max.max(*score);
                }
                let mut denom = 0.0f32;
                for score in scores.iter_mut() {
                    *score = expf(*score - max);
                    denom += *score;
                }
                let out = &mut ctx.row_mut(t)[span.clone()];
                for (s, &p) in scores.iter().enumerate() {
                    let p = p / denom;
                    for (o, vv) in out.iter_mut().zip(&v.row(s)[span.clone()]) {
                        *o += p * vv;
                    }
                }
            }
        }
        self.out.forward(&ctx)
    }
}

/// `linear2(relu(linear1(x)))`
#[derive(Clone, Debug)]
pub struct FeedForward {
    pub linear1: Linear,
    pub linear2: Linear,
}

impl FeedForward {
    pub fn forward(&self, x: &Mat) -> Mat {
        self.linear2.forward(&self.linear1.forward(x).relu())
    }
}
