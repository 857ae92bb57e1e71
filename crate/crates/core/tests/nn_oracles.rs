mod common;

use common::nn::{gradient_check, naive_forward, random_net};
use hfplp::nn::{Activation, DenseNet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn batched_forward_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for act in [Activation::Relu, Activation::Tanh] {
        for _ in 0..20 {
            let net = random_net(&mut rng, act);
            let batch = rng.gen_range(1..6);
            let x: Vec<f32> = (0..batch * net.input_dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let cache = net.forward_batch(&x, batch).unwrap();
            for b in 0..batch {
                let expect = naive_forward(&net, &x[b * net.input_dim()..(b + 1) * net.input_dim()]);
                let got = &cache.output()[b * net.output_dim()..(b + 1) * net.output_dim()];
                for (g, e) in got.iter().zip(&expect) {
                    assert!((*g as f64 - e).abs() < 1e-5 * (1.0 + e.abs()), "{g} vs {e}");
                }
            }
        }
    }
}

#[test]
fn forward_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let net = DenseNet::new(&[120, 128, 64, 32, 7], Activation::Relu, Activation::Identity, 1.4, 1.0, &mut rng);
    let x: Vec<f32> = (0..120).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let a = net.forward(&x).unwrap();
    let b = net.forward(&x).unwrap();
    assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}

#[test]
fn backprop_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for act in [Activation::Relu, Activation::Tanh] {
        for n in 0..50 {
            let err = gradient_check(&mut rng, act);
            assert!(err < 1e-3, "{act:?} net {n}: relative error {err}");
        }
    }
}
