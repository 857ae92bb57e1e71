use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hfplp::env::{ActionMode, SimParams, VecEnv};
use hfplp::evalkit::{run_scenario, Controller, Scenario, ScenarioKind};
use hfplp::par::Execution;
use hfplp::trainer::{decide, PolicyStack};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn rollout(c: &mut Criterion) {
    let params = SimParams::default();
    let stack = PolicyStack::new_stage1(ActionMode::Hybrid, -0.7, &mut ChaCha8Rng::seed_from_u64(0));
    let mut g = c.benchmark_group("rollout_64envs_10steps");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let mut venv = VecEnv::new(&params, ActionMode::Hybrid, 64, 5, exec).unwrap();
                venv.reset_all();
                for _ in 0..10 {
                    let d = decide(&stack, venv.envs(), false).unwrap();
                    venv.step(&d.actions).unwrap();
                }
            })
        });
    }
    g.finish();
}

fn evaluation(c: &mut Criterion) {
    let params = SimParams::default();
    let stack = PolicyStack::new_stage1(ActionMode::Hybrid, -0.7, &mut ChaCha8Rng::seed_from_u64(0));
    let ctrl = Controller::new(&stack, false);
    let s = Scenario { duration_s: Some(1.0), ..Scenario::new("nominal", ScenarioKind::Nominal, 1.0, (1..=8).collect()) };
    let mut g = c.benchmark_group("eval_8trials_1s");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| run_scenario(ctrl, &s, &params, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, rollout, evaluation);
criterion_main!(benches);
