use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::mlp::{Dense, Mlp};
use super::ppo::PolicyParams;

pub const MAGIC: &[u8; 8] = b"ADRFCKPT";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub name: String,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub actor_sizes: Vec<usize>,
    pub critic_sizes: Vec<usize>,
    pub embed_dim: usize,
    /// Hex digest of the config parts that fix the network's inputs.
    pub fingerprint: String,
    pub step: u64,
    pub arrays: Vec<ArraySpec>,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u16),
    #[error("file truncated while reading {0}")]
    Truncated(String),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("shape mismatch in {field}: expected {expected}, found {found}")]
    Shape { field: String, expected: String, found: String },
    #[error("config fingerprint {found} does not match checkpoint {expected}")]
    Fingerprint { expected: String, found: String },
}

fn named_arrays<'a>(prefix: &str, net: &'a Mlp<f32>) -> Vec<(String, &'a [f32])> {
    net.layers
        .iter()
        .enumerate()
        .flat_map(|(i, l)| {
            [
                (format!("{prefix}.{i}.weights"), l.weights.as_slice()),
                (format!("{prefix}.{i}.bias"), l.bias.as_slice()),
            ]
        })
        .collect()
}

pub fn to_bytes(params: &PolicyParams, embed_dim: usize, fingerprint: &str, step: u64) -> Vec<u8> {
    let mut arrays = named_arrays("actor", &params.actor);
    arrays.extend(named_arrays("critic", &params.critic));
    let header = CheckpointHeader {
        actor_sizes: params.actor.sizes(),
        critic_sizes: params.critic.sizes(),
        embed_dim,
        fingerprint: fingerprint.to_string(),
        step,
        arrays: arrays.iter().map(|(n, a)| ArraySpec { name: n.clone(), len: a.len() }).collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(14 + json.len() + 4 * params.actor.param_count() + 4 * params.critic.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, a) in &arrays {
        for v in *a {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], CheckpointError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| CheckpointError::Truncated(what.to_string()))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }
}

fn build_net(sizes: &[usize], field: &str, arrays: &mut impl Iterator<Item = (ArraySpec, Vec<f32>)>) -> Result<Mlp<f32>, CheckpointError> {
    if sizes.len() < 2 {
        return Err(CheckpointError::Shape { field: field.into(), expected: "at least 2 sizes".into(), found: format!("{sizes:?}") });
    }
    let mut layers = Vec::new();
    for (i, w) in sizes.windows(2).enumerate() {
        let mut next = |part: &str, len: usize| {
            let name = format!("{field}.{i}.{part}");
            let (spec, data) = arrays
                .next()
                .ok_or_else(|| CheckpointError::Shape { field: name.clone(), expected: "present".into(), found: "missing".into() })?;
            if spec.name != name || data.len() != len {
                return Err(CheckpointError::Shape { field: name, expected: format!("{len} values"), found: format!("{} ({} values)", spec.name, data.len()) });
            }
            Ok(data)
        };
        let weights = next("weights", w[0] * w[1])?;
        let bias = next("bias", w[1])?;
        layers.push(Dense { inputs: w[0], outputs: w[1], weights, bias });
    }
    Ok(Mlp { layers })
}

pub fn from_bytes(bytes: &[u8]) -> Result<(PolicyParams, CheckpointHeader), CheckpointError> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u16::from_le_bytes(r.take(2, "version")?.try_into().unwrap());
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let header_len = u32::from_le_bytes(r.take(4, "header length")?.try_into().unwrap()) as usize;
    let header: CheckpointHeader =
        serde_json::from_slice(r.take(header_len, "header")?).map_err(|e| CheckpointError::Header(e.to_string()))?;
    let mut arrays = Vec::new();
    for spec in &header.arrays {
        let raw = r.take(spec.len.checked_mul(4).ok_or_else(|| CheckpointError::Header("array too large".into()))?, &spec.name)?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        arrays.push((spec.clone(), data));
    }
    if r.at != bytes.len() {
        return Err(CheckpointError::Header(format!("{} trailing bytes", bytes.len() - r.at)));
    }
    let mut it = arrays.into_iter();
    let actor = build_net(&header.actor_sizes, "actor", &mut it)?;
    let critic = build_net(&header.critic_sizes, "critic", &mut it)?;
    if it.next().is_some() {
        return Err(CheckpointError::Header("unexpected extra arrays".into()));
    }
    if actor.input_dim() != critic.input_dim() {
        return Err(CheckpointError::Shape {
            field: "critic_sizes[0]".into(),
            expected: actor.input_dim().to_string(),
            found: critic.input_dim().to_string(),
        });
    }
    Ok((PolicyParams { actor, critic }, header))
}

pub fn save_checkpoint(path: &Path, params: &PolicyParams, embed_dim: usize, fingerprint: &str, step: u64) -> Result<(), CheckpointError> {
    let io = |source| CheckpointError::Io { path: path.to_path_buf(), source };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(&to_bytes(params, embed_dim, fingerprint, step)).map_err(io)?;
    f.flush().map_err(io)
}

pub fn load_checkpoint(path: &Path) -> Result<(PolicyParams, CheckpointHeader), CheckpointError> {
    let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io { path: path.to_path_buf(), source })?;
    from_bytes(&bytes)
}

impl CheckpointHeader {
    /// Confirms the checkpoint fits a run whose goal embedding has `embed_dim`
    /// entries and whose config digest is `fingerprint`.
    pub fn check_compatible(&self, embed_dim: usize, fingerprint: &str) -> Result<(), CheckpointError> {
        if self.embed_dim != embed_dim {
            return Err(CheckpointError::Shape {
                field: "embed_dim".into(),
                expected: embed_dim.to_string(),
                found: self.embed_dim.to_string(),
            });
        }
        if self.fingerprint != fingerprint {
            return Err(CheckpointError::Fingerprint { expected: self.fingerprint.clone(), found: fingerprint.into() });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let p = PolicyParams::new(20, 6, 8);
        let bytes = to_bytes(&p, 4, "abc", 77);
        let (q, h) = from_bytes(&bytes).unwrap();
        assert_eq!(h.step, 77);
        assert_eq!(h.actor_sizes, vec![20, 6, 6, 17]);
        for (a, b) in p.actor.arrays().iter().chain(p.critic.arrays().iter()).zip(q.actor.arrays().iter().chain(q.critic.arrays().iter())) {
            assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(to_bytes(&q, 4, "abc", 77), bytes);
    }

    #[test]
    fn corruption_is_rejected() {
        let p = PolicyParams::new(5, 3, 1);
        let bytes = to_bytes(&p, 2, "f", 0);
        for cut in [0, 5, 9, 20, bytes.len() - 1] {
            assert!(from_bytes(&bytes[..cut]).is_err(), "cut at {cut}");
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(from_bytes(&bad), Err(CheckpointError::BadMagic)));
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(matches!(from_bytes(&bad), Err(CheckpointError::Version(9))));
    }

    #[test]
    fn embed_dimension_mismatch_names_the_field() {
        let p = PolicyParams::new(5, 3, 1);
        let (_, h) = from_bytes(&to_bytes(&p, 2, "f", 0)).unwrap();
        let err = h.check_compatible(3, "f").unwrap_err();
        assert!(err.to_string().contains("embed_dim"), "{err}");
        assert!(matches!(h.check_compatible(2, "g"), Err(CheckpointError::Fingerprint { .. })));
    }
}
