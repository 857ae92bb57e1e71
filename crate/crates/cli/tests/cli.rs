use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
seed = 3

[ppo]
num_envs = 4
horizon = 8
epochs = 1
minibatches = 2
observer_holdout_envs = 1


[eval]
seeds = [7, 8]
payloads_kg = [0.0, 5.0]
kp_sweep_n_m_per_rad = [10.0, 20.0]
"#;

fn hfplp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hfplp")).args(args).env("RUST_LOG", "warn").env("HFPLP_THREADS", "2").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn single_error_line(o: &Output, category: &str) -> String {
    assert!(!o.status.success());
    let e = stderr(o);
    let lines: Vec<&str> = e.lines().collect();
    assert_eq!(lines.len(), 1, "{e}");
    assert!(lines[0].starts_with(&format!("error[{category}]: ")), "{e}");
    lines[0].to_string()
}

fn write_config(dir: &Path) -> String {
    let p = dir.join("tiny.toml");
    std::fs::write(&p, TINY).unwrap();
    p.display().to_string()
}

#[test]
fn usage_errors_are_one_line() {
    single_error_line(&hfplp(&["train", "nonsense"]), "usage");
    single_error_line(&hfplp(&["eval", "nominal"]), "usage");
    let l = single_error_line(&hfplp(&["train", "daac", "--iters", "1"]), "usage");
    assert!(l.contains("--stage1"));
    let help = hfplp(&["--help"]);
    assert!(help.status.success());
    assert!(stdout(&help).contains("train"));
}

#[test]
fn bad_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "[ppo]\nhorizon = \"long\"\n").unwrap();
    let l = single_error_line(&hfplp(&["train", "hfplp", "--config", p.to_str().unwrap()]), "config");
    assert!(l.contains("ppo.horizon"), "{l}");
    std::fs::write(&p, "[ppo]\nnot_a_key = 1\n").unwrap();
    let l = single_error_line(&hfplp(&["train", "hfplp", "--config", p.to_str().unwrap()]), "config");
    assert!(l.contains("not_a_key"), "{l}");
    std::fs::write(&p, "[observer]\nsample_period_s = 0.001\n").unwrap();
    single_error_line(&hfplp(&["train", "hfplp", "--config", p.to_str().unwrap()]), "config");
}

#[test]
fn missing_or_corrupt_checkpoint_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.ckpt");
    single_error_line(&hfplp(&["inspect", p.to_str().unwrap()]), "checkpoint");
    std::fs::write(&p, b"not a checkpoint").unwrap();
    single_error_line(&hfplp(&["inspect", p.to_str().unwrap()]), "checkpoint");
}

#[test]
fn tampered_checkpoint_fails_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let o = hfplp(&["train", "hfplp", "--config", &cfg, "--out", dir.path().to_str().unwrap(), "--iters", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let p = dir.path().join("stage1.ckpt");
    let mut bytes = std::fs::read(&p).unwrap();
    let n = bytes.len();
    bytes[n - 10] ^= 0x40;
    std::fs::write(&p, bytes).unwrap();
    let l = single_error_line(&hfplp(&["inspect", p.to_str().unwrap()]), "checkpoint");
    assert!(l.to_lowercase().contains("checksum"), "{l}");
}

#[test]
fn train_inspect_eval_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("runs");
    let out_s = out.to_str().unwrap();

    let o = hfplp(&["train", "hfplp", "--config", &cfg, "--out", out_s, "--iters", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s1 = out.join("stage1.ckpt");
    let s1_s = s1.to_str().unwrap();
    let log = std::fs::read_to_string(out.join("stage1_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2);

    // same seed and config: byte-identical log
    let again = dir.path().join("again");
    let o = hfplp(&["train", "hfplp", "--config", &cfg, "--out", again.to_str().unwrap(), "--iters", "2"]);
    assert!(o.status.success());
    assert_eq!(log, std::fs::read_to_string(again.join("stage1_log.jsonl")).unwrap());

    // resume extends the run
    let o = hfplp(&["train", "hfplp", "--config", &cfg, "--out", out_s, "--iters", "3", "--resume", s1_s]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(out.join("stage1_log.jsonl")).unwrap().lines().count(), 3);

    let o = hfplp(&["inspect", s1_s]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("iteration 3"));
    assert!(text.contains("tensor hfplp_actor.l0.weight 256x120"));

    let o = hfplp(&["train", "daac", "--config", &cfg, "--out", out_s, "--iters", "1", "--stage1", s1_s]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s2 = out.join("stage2.ckpt");
    let o = hfplp(&["inspect", s2.to_str().unwrap()]);
    let text = stdout(&o);
    assert!(text.contains("use_observer true"));
    assert!(text.contains("tensor daac_actor.") && text.contains("tensor observer_net1.") && text.contains("tensor observer_net2."));

    // ablation: the force-estimate slot stays zero
    let o = hfplp(&["train", "daac-no-observer", "--config", &cfg, "--out", out_s, "--iters", "1", "--stage1", s1_s]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ab = dir.path().join("ablation");
    let o = hfplp(&["eval", "push", "--checkpoint", out.join("stage2_no_observer.ckpt").to_str().unwrap(), "--out", ab.to_str().unwrap(), "--trials", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = std::fs::read_to_string(ab.join("traces").join("push__hfplp-daac-no-observer__seed7.jsonl")).unwrap();
    assert!(trace.lines().count() > 1);
    assert!(trace.lines().all(|l| l.contains("\"f_ext_est\":[0.0,0.0]")));

    // a second-stage checkpoint cannot seed another second stage
    let o = hfplp(&["train", "daac", "--config", &cfg, "--out", out_s, "--iters", "1", "--stage1", s2.to_str().unwrap()]);
    single_error_line(&o, "usage");

    let ev = dir.path().join("eval");
    let o = hfplp(&["eval", "nominal", "--checkpoint", s2.to_str().unwrap(), "--out", ev.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = std::fs::read_to_string(ev.join("nominal.tsv")).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.lines().nth(1).unwrap().starts_with("nominal\thfplp-daac\t"));
    assert!(ev.join("traces").join("nominal__hfplp-daac__seed7.jsonl").exists());

    let o = hfplp(&["eval", "payload-sweep", "--checkpoint", s1_s, "--out", ev.to_str().unwrap(), "--trials", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(ev.join("payload-sweep.tsv")).unwrap().lines().count(), 3);

    let o = hfplp(&["eval", "nowhere", "--checkpoint", s1_s, "--out", ev.to_str().unwrap()]);
    let l = single_error_line(&o, "usage");
    assert!(l.contains("nominal"));

    let sw = dir.path().join("sweep");
    let o = hfplp(&["sweep", "pd-sweep", "--checkpoint", s1_s, "--checkpoint", s2.to_str().unwrap(), "--out", sw.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = std::fs::read_to_string(sw.join("pd-sweep.tsv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4);
    assert!(rows.contains("\thfplp\t") && rows.contains("\thfplp-daac\t"));

    // an eval config with different physics is refused
    let other = dir.path().join("other.toml");
    std::fs::write(&other, format!("{TINY}\n[actuator]\nkp_n_m_per_rad = 30.0\n")).unwrap();
    let o = hfplp(&["eval", "nominal", "--checkpoint", s1_s, "--config", other.to_str().unwrap()]);
    single_error_line(&o, "config");
}
