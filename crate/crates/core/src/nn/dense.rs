use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NnError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f32) -> f32 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn slope_from_output(self, y: f32) -> f32 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    /// Offset of the row-major `outputs × inputs` weight block in the parameter vector.
    pub weight_offset: usize,
    pub bias_offset: usize,
}

/// Fully connected network with all parameters in one flat vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
    params: Vec<f32>,
}

/// Activations of every layer for a batch, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub batch: usize,
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    pub acts: Vec<Vec<f32>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f32] {
        self.acts.last().expect("non-empty cache")
    }
}

impl DenseNet {
    /// `dims = [input, hidden.., output]`; hidden layers use `hidden`, the last
    /// layer `output`. Weights are uniform with standard deviation
    /// `gain / sqrt(fan_in)`, using `output_gain` for the final layer.
    pub fn new(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        hidden_gain: f32,
        output_gain: f32,
        rng: &mut impl Rng,
    ) -> DenseNet {
        let mut net = DenseNet::zeros(dims, hidden, output);
        let n = net.layers.len();
        for (i, layer) in net.layers.clone().iter().enumerate() {
            let gain = if i + 1 == n { output_gain } else { hidden_gain };
            let bound = gain * (3.0 / layer.inputs as f32).sqrt();
            for w in &mut net.params[layer.weight_offset..layer.weight_offset + layer.inputs * layer.outputs] {
                *w = rng.gen_range(-bound..=bound);
            }
        }
        net
    }

    pub fn zeros(dims: &[usize], hidden: Activation, output: Activation) -> DenseNet {
        assert!(dims.len() >= 2, "a network needs input and output sizes");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        let mut offset = 0;
        for (i, pair) in dims.windows(2).enumerate() {
            let activation = if i + 2 == dims.len() { output } else { hidden };
            let weight_offset = offset;
            offset += pair[0] * pair[1];
            let bias_offset = offset;
            offset += pair[1];
            layers.push(Layer { inputs: pair[0], outputs: pair[1], activation, weight_offset, bias_offset });
        }
        DenseNet { layers, params: vec![0.0; offset] }
    }

    pub fn from_parts(layers: Vec<Layer>, params: Vec<f32>) -> Result<DenseNet, NnError> {
        let mut offset = 0;
        for (i, l) in layers.iter().enumerate() {
            if i > 0 && layers[i - 1].outputs != l.inputs {
                return Err(NnError::ShapeMismatch { expected: layers[i - 1].outputs, got: l.inputs });
            }
            if l.weight_offset != offset || l.bias_offset != offset + l.inputs * l.outputs {
                return Err(NnError::Layout(format!("layer {i} offsets are not contiguous")));
            }
            offset = l.bias_offset + l.outputs;
        }
        if offset != params.len() {
            return Err(NnError::ShapeMismatch { expected: offset, got: params.len() });
        }
        Ok(DenseNet { layers, params })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f32] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("layers").outputs
    }

    pub fn weights(&self, layer: usize) -> &[f32] {
        let l = &self.layers[layer];
        &self.params[l.weight_offset..l.weight_offset + l.inputs * l.outputs]
    }

    pub fn bias(&self, layer: usize) -> &[f32] {
        let l = &self.layers[layer];
        &self.params[l.bias_offset..l.bias_offset + l.outputs]
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &[f32]) -> Result<Vec<f32>, NnError> {
        Ok(self.forward_batch(x, 1)?.acts.pop().expect("output"))
    }

    /// Forward pass over `batch` row-major samples.
    pub fn forward_batch(&self, x: &[f32], batch: usize) -> Result<ForwardCache, NnError> {
        if x.len() != batch * self.input_dim() {
            return Err(NnError::ShapeMismatch { expected: batch * self.input_dim(), got: x.len() });
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for layer in &self.layers {
            let input = acts.last().expect("input");
            let mut out = vec![0.0f32; batch * layer.outputs];
            let bias = &self.params[layer.bias_offset..layer.bias_offset + layer.outputs];
            for row in out.chunks_exact_mut(layer.outputs) {
                row.copy_from_slice(bias);
            }
            let w = &self.params[layer.weight_offset..];
            // out (B×o) += input (B×i) · Wᵀ (i×o)
            unsafe {
                matrixmultiply::sgemm(
                    batch,
                    layer.inputs,
                    layer.outputs,
                    1.0,
                    input.as_ptr(),
                    layer.inputs as isize,
                    1,
                    w.as_ptr(),
                    1,
                    layer.inputs as isize,
                    1.0,
                    out.as_mut_ptr(),
                    layer.outputs as isize,
                    1,
                );
            }
            if layer.activation != Activation::Identity {
                for v in &mut out {
                    *v = layer.activation.apply(*v);
                }
            }
            acts.push(out);
        }
        Ok(ForwardCache { batch, acts })
    }

    /// Reverse pass. Parameter gradients are accumulated into `grads`
    /// (same layout as the parameters); returns `∂L/∂x`.
    pub fn backward(&self, cache: &ForwardCache, d_out: &[f32], grads: &mut [f32]) -> Result<Vec<f32>, NnError> {
        let batch = cache.batch;
        if d_out.len() != batch * self.output_dim() {
            return Err(NnError::ShapeMismatch { expected: batch * self.output_dim(), got: d_out.len() });
        }
        if grads.len() != self.params.len() {
            return Err(NnError::ShapeMismatch { expected: self.params.len(), got: grads.len() });
        }
        let mut delta = d_out.to_vec();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.acts[li];
            let output = &cache.acts[li + 1];
            if layer.activation != Activation::Identity {
                for (d, y) in delta.iter_mut().zip(output) {
                    *d *= layer.activation.slope_from_output(*y);
                }
            }
            // dW (o×i) += deltaᵀ (o×B) · input (B×i)
            unsafe {
                matrixmultiply::sgemm(
                    layer.outputs,
                    batch,
                    layer.inputs,
                    1.0,
                    delta.as_ptr(),
                    1,
                    layer.outputs as isize,
                    input.as_ptr(),
                    layer.inputs as isize,
                    1,
                    1.0,
                    grads[layer.weight_offset..].as_mut_ptr(),
                    layer.inputs as isize,
                    1,
                );
            }
            let db = &mut grads[layer.bias_offset..layer.bias_offset + layer.outputs];
            for row in delta.chunks_exact(layer.outputs) {
                for (g, d) in db.iter_mut().zip(row) {
                    *g += d;
                }
            }
            // dX (B×i) = delta (B×o) · W (o×i)
            let mut dx = vec![0.0f32; batch * layer.inputs];
            unsafe {
                matrixmultiply::sgemm(
                    batch,
                    layer.outputs,
                    layer.inputs,
                    1.0,
                    delta.as_ptr(),
                    layer.outputs as isize,
                    1,
                    self.params[layer.weight_offset..].as_ptr(),
                    layer.inputs as isize,
                    1,
                    0.0,
                    dx.as_mut_ptr(),
                    layer.inputs as isize,
                    1,
                );
            }
            delta = dx;
        }
        Ok(delta)
    }
}
