//! Minimal dense networks with hand-derived backpropagation, a diagonal
//! Gaussian policy head and Adam.

mod adam;
mod dense;
mod gaussian;

pub use adam::{AdamConfig, AdamState};
pub use dense::{Activation, DenseNet, ForwardCache, Layer};
pub use gaussian::{GaussianHead, LOG_STD_MAX, LOG_STD_MIN};

use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid layout: {0}")]
    Layout(String),
}

/// Global L2 norm over several gradient vectors.
pub fn grad_norm(grads: &[&[f32]]) -> f32 {
    grads.iter().flat_map(|g| g.iter()).map(|g| (*g as f64) * (*g as f64)).sum::<f64>().sqrt() as f32
}

/// Scale all gradients so their joint norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_grad_norm(grads: &mut [&mut [f32]], max_norm: f32) -> f32 {
    let norm = grads.iter().flat_map(|g| g.iter()).map(|g| (*g as f64) * (*g as f64)).sum::<f64>().sqrt() as f32;
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grads.iter_mut() {
            for v in g.iter_mut() {
                *v *= s;
            }
        }
    }
    norm
}

/// SHA-256 over the little-endian bytes of a parameter vector.
pub fn checksum(params: &[f32]) -> String {
    let mut h = Sha256::new();
    for p in params {
        h.update(p.to_le_bytes());
    }
    hex::encode(h.finalize())
}
