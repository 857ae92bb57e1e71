use hfplp::nn::{Activation, DenseNet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Layer-by-layer evaluation in f64 with explicit loops.
pub fn naive_forward(net: &DenseNet, x: &[f32]) -> Vec<f64> {
    let mut a: Vec<f64> = x.iter().map(|v| *v as f64).collect();
    for (li, layer) in net.layers().iter().enumerate() {
        let w = net.weights(li);
        let b = net.bias(li);
        let mut out = vec![0.0f64; layer.outputs];
        for o in 0..layer.outputs {
            let mut s = b[o] as f64;
            for i in 0..layer.inputs {
                s += w[o * layer.inputs + i] as f64 * a[i];
            }
            out[o] = match layer.activation {
                Activation::Relu => s.max(0.0),
                Activation::Tanh => s.tanh(),
                Activation::Identity => s,
            };
        }
        a = out;
    }
    a
}

pub fn random_net(rng: &mut ChaCha8Rng, act: Activation) -> DenseNet {
    let depth = rng.gen_range(1..=3);
    let mut dims = vec![rng.gen_range(1..=16)];
    for _ in 0..depth {
        dims.push(rng.gen_range(1..=16));
    }
    let mut net = DenseNet::new(&dims, act, Activation::Identity, 1.4, 1.0, rng);
    for p in net.params_mut() {
        *p += rng.gen_range(-0.1..0.1);
    }
    net
}

/// Which ReLU units are active for each sample; finite differences are only
/// valid when this pattern is identical at both stencil points.
fn relu_pattern(net: &DenseNet, x: &[f32], batch: usize) -> Vec<bool> {
    let mut pattern = Vec::new();
    let i = net.input_dim();
    for b in 0..batch {
        let mut a: Vec<f64> = x[b * i..(b + 1) * i].iter().map(|v| *v as f64).collect();
        for (li, layer) in net.layers().iter().enumerate() {
            let (w, bias) = (net.weights(li), net.bias(li));
            a = (0..layer.outputs)
                .map(|o| {
                    let s = bias[o] as f64 + (0..layer.inputs).map(|k| w[o * layer.inputs + k] as f64 * a[k]).sum::<f64>();
                    if layer.activation == Activation::Relu {
                        pattern.push(s > 0.0);
                        s.max(0.0)
                    } else if layer.activation == Activation::Tanh {
                        s.tanh()
                    } else {
                        s
                    }
                })
                .collect();
        }
    }
    pattern
}

/// Worst relative error between backprop and central differences for one net.
pub fn gradient_check(rng: &mut ChaCha8Rng, act: Activation) -> f64 {
    let mut net = random_net(rng, act);
    let batch = 3;
    let x: Vec<f32> = (0..batch * net.input_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let coeff: Vec<f32> = (0..batch * net.output_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let loss = |n: &DenseNet| -> f64 {
        let (i, o) = (n.input_dim(), n.output_dim());
        (0..batch)
            .flat_map(|b| naive_forward(n, &x[b * i..(b + 1) * i]).into_iter().zip(&coeff[b * o..(b + 1) * o]).collect::<Vec<_>>())
            .map(|(y, c)| y * *c as f64)
            .sum()
    };
    let cache = net.forward_batch(&x, batch).unwrap();
    let mut grads = vec![0.0f32; net.param_count()];
    net.backward(&cache, &coeff, &mut grads).unwrap();
    let h = 1e-3f32;
    let mut worst = 0.0f64;
    for i in 0..net.param_count() {
        let orig = net.params()[i];
        net.params_mut()[i] = orig + h;
        let up = loss(&net);
        let up_pattern = relu_pattern(&net, &x, batch);
        net.params_mut()[i] = orig - h;
        let down = loss(&net);
        let kink = up_pattern != relu_pattern(&net, &x, batch);
        net.params_mut()[i] = orig;
        if kink {
            continue;
        }
        let fd = (up - down) / (2.0 * h as f64);
        let an = grads[i] as f64;
        let err = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-2);
        worst = worst.max(err);
    }
    worst
}

