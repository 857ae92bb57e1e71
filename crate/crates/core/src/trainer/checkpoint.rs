//! Checkpoint file: a text header (magic, format version, metadata, tensor
//! manifest) terminated by `end`, the training config verbatim, then the
//! little-endian f32 blob.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::env::ActionMode;
use crate::nn::{AdamConfig, AdamState, DenseNet};

use super::policy::PolicyStack;

pub const MAGIC: &str = "HFPLP-DAAC";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CheckpointError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("corrupt checkpoint: {0}")]
    CorruptFile(String),
    #[error("checkpoint version mismatch: {0}")]
    VersionMismatch(String),
    #[error("checkpoint checksum mismatch: header says {expected}, data hashes to {got}")]
    ChecksumMismatch { expected: String, got: String },
}

/// One named tensor in the manifest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into the blob.
    pub offset: usize,
}

impl TensorEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parsed header, enough to describe a file without building networks.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub version: u32,
    pub stage: u32,
    pub mode: ActionMode,
    pub use_observer: bool,
    pub iteration: usize,
    pub config_digest: String,
    pub blob_sha256: String,
    pub adam: Vec<(String, u64, AdamConfig)>,
    pub tensors: Vec<TensorEntry>,
}

impl Manifest {
    pub fn param_count(&self) -> usize {
        self.tensors.iter().filter(|t| !t.name.contains(".adam_")).map(TensorEntry::len).sum()
    }
}

/// Everything a training run needs to continue.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub stack: PolicyStack,
    pub iteration: usize,
    /// Named optimizer states, restored on resume.
    pub optimizers: Vec<(String, AdamState)>,
    /// The workbench configuration text used for training.
    pub config_text: String,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn mode_name(mode: ActionMode) -> &'static str {
    match mode {
        ActionMode::Hybrid => "hybrid",
        ActionMode::PositionOnly => "position-only",
    }
}

fn net_tensors<'a>(prefix: &str, net: &'a DenseNet, out: &mut Vec<(String, Vec<usize>, &'a [f32])>) {
    for (i, l) in net.layers().iter().enumerate() {
        out.push((format!("{prefix}.l{i}.weight"), vec![l.outputs, l.inputs], net.weights(i)));
        out.push((format!("{prefix}.l{i}.bias"), vec![l.outputs], net.bias(i)));
    }
}

fn stack_tensors(stack: &PolicyStack) -> Vec<(String, Vec<usize>, &[f32])> {
    let mut out = Vec::new();
    net_tensors("hfplp_actor", &stack.hfplp_actor.net, &mut out);
    out.push(("hfplp_actor.log_std".into(), vec![stack.hfplp_actor.head.dim()], stack.hfplp_actor.head.log_std()));
    net_tensors("hfplp_critic", &stack.hfplp_critic.net, &mut out);
    if let Some(d) = &stack.daac {
        net_tensors("daac_actor", &d.actor.net, &mut out);
        out.push(("daac_actor.log_std".into(), vec![d.actor.head.dim()], d.actor.head.log_std()));
        net_tensors("daac_critic", &d.critic.net, &mut out);
        net_tensors("observer_net1", &d.observer.net1, &mut out);
        net_tensors("observer_net2", &d.observer.net2, &mut out);
    }
    out
}

/// Serialize to bytes. Identical inputs give identical bytes.
pub fn encode(ckpt: &Checkpoint) -> Vec<u8> {
    let mut tensors: Vec<(String, Vec<usize>, &[f32])> = stack_tensors(&ckpt.stack);
    for (name, s) in &ckpt.optimizers {
        tensors.push((format!("{name}.adam_m"), vec![s.first.len()], &s.first));
        tensors.push((format!("{name}.adam_v"), vec![s.second.len()], &s.second));
    }
    let mut blob = Vec::with_capacity(tensors.iter().map(|t| t.2.len() * 4).sum());
    let mut manifest = String::new();
    for (name, shape, data) in &tensors {
        let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
        writeln!(manifest, "tensor {name} {} {}", dims.join("x"), blob.len()).expect("string write");
        for v in data.iter() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut h = String::new();
    writeln!(h, "{MAGIC}").expect("string write");
    writeln!(h, "format_version {FORMAT_VERSION}").expect("string write");
    writeln!(h, "stage {}", ckpt.stack.stage()).expect("string write");
    writeln!(h, "mode {}", mode_name(ckpt.stack.mode)).expect("string write");
    if let Some(d) = &ckpt.stack.daac {
        writeln!(h, "use_observer {}", d.use_observer).expect("string write");
    }
    writeln!(h, "iteration {}", ckpt.iteration).expect("string write");
    writeln!(h, "config_digest {}", digest(ckpt.config_text.as_bytes())).expect("string write");
    writeln!(h, "config_bytes {}", ckpt.config_text.len()).expect("string write");
    writeln!(h, "blob_bytes {}", blob.len()).expect("string write");
    writeln!(h, "blob_sha256 {}", digest(&blob)).expect("string write");
    for (name, s) in &ckpt.optimizers {
        let c = s.config;
        writeln!(h, "adam {name} {} {:?} {:?} {:?} {:?}", s.steps, c.learning_rate, c.beta1, c.beta2, c.epsilon)
            .expect("string write");
    }
    h.push_str(&manifest);
    h.push_str("end\n");
    let mut bytes = h.into_bytes();
    bytes.extend_from_slice(ckpt.config_text.as_bytes());
    bytes.extend_from_slice(&blob);
    bytes
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), CheckpointError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    // write-then-rename so a crash never leaves a half-written checkpoint
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, encode(ckpt)).map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: std::io::Error) -> CheckpointError {
    CheckpointError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn corrupt(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::CorruptFile(msg.into())
}

/// Header, config text and verified blob.
pub fn parse(bytes: &[u8]) -> Result<(Manifest, String, Vec<u8>), CheckpointError> {
    let end = bytes.windows(5).position(|w| w == b"\nend\n").ok_or_else(|| corrupt("header terminator not found"))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| corrupt("header is not UTF-8"))?;
    let mut lines = header.lines();
    if lines.next() != Some(MAGIC) {
        return Err(corrupt("missing magic string"));
    }
    let mut m = Manifest {
        version: 0,
        stage: 0,
        mode: ActionMode::Hybrid,
        use_observer: true,
        iteration: 0,
        config_digest: String::new(),
        blob_sha256: String::new(),
        adam: Vec::new(),
        tensors: Vec::new(),
    };
    let (mut config_bytes, mut blob_bytes) = (None, None);
    for line in lines {
        let f: Vec<&str> = line.split(' ').collect();
        let num = |s: &str| s.parse::<usize>().map_err(|_| corrupt(format!("bad number in `{line}`")));
        let need = |n: usize| if f.len() == n { Ok(()) } else { Err(corrupt(format!("malformed line `{line}`"))) };
        match f[0] {
            "format_version" => {
                need(2)?;
                m.version = num(f[1])? as u32;
                if m.version != FORMAT_VERSION {
                    return Err(CheckpointError::VersionMismatch(format!(
                        "format version {} (this build reads {FORMAT_VERSION})",
                        m.version
                    )));
                }
            }
            "stage" => {
                need(2)?;
                m.stage = num(f[1])? as u32;
            }
            "mode" => {
                need(2)?;
                m.mode = match f[1] {
                    "hybrid" => ActionMode::Hybrid,
                    "position-only" => ActionMode::PositionOnly,
                    other => return Err(corrupt(format!("unknown mode `{other}`"))),
                };
            }
            "use_observer" => {
                need(2)?;
                m.use_observer = f[1] == "true";
            }
            "iteration" => {
                need(2)?;
                m.iteration = num(f[1])?;
            }
            "config_digest" => {
                need(2)?;
                m.config_digest = f[1].to_string();
            }
            "config_bytes" => {
                need(2)?;
                config_bytes = Some(num(f[1])?);
            }
            "blob_bytes" => {
                need(2)?;
                blob_bytes = Some(num(f[1])?);
            }
            "blob_sha256" => {
                need(2)?;
                m.blob_sha256 = f[1].to_string();
            }
            "adam" => {
                need(7)?;
                let fl = |s: &str| s.parse::<f32>().map_err(|_| corrupt(format!("bad float in `{line}`")));
                let cfg = AdamConfig { learning_rate: fl(f[3])?, beta1: fl(f[4])?, beta2: fl(f[5])?, epsilon: fl(f[6])? };
                m.adam.push((f[1].to_string(), num(f[2])? as u64, cfg));
            }
            "tensor" => {
                need(4)?;
                let shape = f[2].split('x').map(num).collect::<Result<Vec<_>, _>>()?;
                m.tensors.push(TensorEntry { name: f[1].to_string(), shape, offset: num(f[3])? });
            }
            other => return Err(corrupt(format!("unknown header key `{other}`"))),
        }
    }
    if m.version == 0 {
        return Err(corrupt("missing format_version"));
    }
    let config_len = config_bytes.ok_or_else(|| corrupt("missing config_bytes"))?;
    let blob_len = blob_bytes.ok_or_else(|| corrupt("missing blob_bytes"))?;
    let body = &bytes[end + 5..];
    if body.len() != config_len + blob_len {
        return Err(corrupt(format!("expected {} bytes after the header, found {}", config_len + blob_len, body.len())));
    }
    let config = std::str::from_utf8(&body[..config_len]).map_err(|_| corrupt("config is not UTF-8"))?.to_string();
    let blob = body[config_len..].to_vec();
    let mut expected_offset = 0;
    for t in &m.tensors {
        if t.offset != expected_offset {
            return Err(corrupt(format!("tensor {} at offset {}, expected {expected_offset}", t.name, t.offset)));
        }
        expected_offset += t.len() * 4;
    }
    if expected_offset != blob_len {
        return Err(corrupt(format!("manifest covers {expected_offset} bytes, blob has {blob_len}")));
    }
    let got = digest(&blob);
    if got != m.blob_sha256 {
        return Err(CheckpointError::ChecksumMismatch { expected: m.blob_sha256.clone(), got });
    }
    if digest(config.as_bytes()) != m.config_digest {
        return Err(CheckpointError::ChecksumMismatch { expected: m.config_digest.clone(), got: digest(config.as_bytes()) });
    }
    Ok((m, config, blob))
}

fn read_f32(blob: &[u8], t: &TensorEntry) -> Vec<f32> {
    blob[t.offset..t.offset + t.len() * 4]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

/// Decode a checkpoint. With `expected_mode`, the networks are checked
/// against that architecture rather than the one named in the header.
pub fn decode(bytes: &[u8], expected_mode: Option<ActionMode>) -> Result<Checkpoint, CheckpointError> {
    let (m, config_text, blob) = parse(bytes)?;
    if m.stage != 1 && m.stage != 2 {
        return Err(corrupt(format!("unknown stage {}", m.stage)));
    }
    let mode = expected_mode.unwrap_or(m.mode);
    let mut stack = PolicyStack::template(mode, m.stage == 2);
    if let Some(d) = &mut stack.daac {
        d.use_observer = m.use_observer;
    }
    let expected: Vec<(String, Vec<usize>)> = stack_tensors(&stack).into_iter().map(|(n, s, _)| (n, s)).collect();
    let find = |name: &str| m.tensors.iter().find(|t| t.name == name);
    let mut values = Vec::with_capacity(expected.len());
    for (name, shape) in &expected {
        let t = find(name).ok_or_else(|| CheckpointError::VersionMismatch(format!("tensor {name} is missing")))?;
        if &t.shape != shape {
            return Err(CheckpointError::VersionMismatch(format!(
                "tensor {name} has shape {:?}, architecture expects {:?}",
                t.shape, shape
            )));
        }
        values.push(read_f32(&blob, t));
    }
    for t in &m.tensors {
        let known = expected.iter().any(|(n, _)| n == &t.name) || t.name.ends_with(".adam_m") || t.name.ends_with(".adam_v");
        if !known {
            return Err(CheckpointError::VersionMismatch(format!("unexpected tensor {}", t.name)));
        }
    }
    let mut it = values.into_iter();
    let fill_net = |net: &mut DenseNet, it: &mut std::vec::IntoIter<Vec<f32>>| {
        for i in 0..net.layers().len() {
            let l = net.layers()[i].clone();
            let w = it.next().expect("weight");
            let b = it.next().expect("bias");
            net.params_mut()[l.weight_offset..l.weight_offset + w.len()].copy_from_slice(&w);
            net.params_mut()[l.bias_offset..l.bias_offset + b.len()].copy_from_slice(&b);
        }
    };
    fill_net(&mut stack.hfplp_actor.net, &mut it);
    stack.hfplp_actor.head.log_std_mut().copy_from_slice(&it.next().expect("log_std"));
    fill_net(&mut stack.hfplp_critic.net, &mut it);
    if let Some(d) = &mut stack.daac {
        fill_net(&mut d.actor.net, &mut it);
        d.actor.head.log_std_mut().copy_from_slice(&it.next().expect("log_std"));
        fill_net(&mut d.critic.net, &mut it);
        fill_net(&mut d.observer.net1, &mut it);
        fill_net(&mut d.observer.net2, &mut it);
    }
    let mut optimizers = Vec::new();
    for (name, steps, config) in &m.adam {
        let get = |suffix: &str| {
            find(&format!("{name}.{suffix}"))
                .map(|t| read_f32(&blob, t))
                .ok_or_else(|| corrupt(format!("optimizer {name} lacks {suffix}")))
        };
        let (first, second) = (get("adam_m")?, get("adam_v")?);
        if first.len() != second.len() {
            return Err(corrupt(format!("optimizer {name} moments differ in length")));
        }
        optimizers.push((name.clone(), AdamState { config: *config, first, second, steps: *steps }));
    }
    Ok(Checkpoint { stack, iteration: m.iteration, optimizers, config_text })
}

pub fn load_checkpoint(path: &Path, expected_mode: Option<ActionMode>) -> Result<Checkpoint, CheckpointError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    decode(&bytes, expected_mode)
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CheckpointError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(parse(&bytes)?.0)
}
