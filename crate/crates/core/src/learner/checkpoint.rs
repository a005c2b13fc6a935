//! Portable policy files: magic, header length, JSON header, then the flat
//! parameter vector as little-endian `f64`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::policy::PolicyParams;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"WIPEPOL1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyHeader {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub hidden: Vec<usize>,
    pub param_count: usize,
    /// Parameter order inside the flat vector.
    pub layout: String,
    pub config_hash: String,
}

pub fn encode_policy(policy: &PolicyParams, config_hash: &str) -> Result<Vec<u8>> {
    let header = PolicyHeader {
        obs_dim: policy.obs_dim(),
        act_dim: policy.act_dim(),
        hidden: policy.hidden(),
        param_count: policy.param_count(),
        layout: "actor(w,b per layer), log_std, critic(w,b per layer); row-major".into(),
        config_hash: config_hash.into(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(16 + json.len() + 8 * header.param_count);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in policy.to_flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_policy(bytes: &[u8]) -> Result<(PolicyParams, PolicyHeader)> {
    let corrupt = |m: &str| Error::config(format!("policy checkpoint: {m}"));
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes.get(16..16 + hlen).ok_or_else(|| corrupt("truncated header"))?;
    let header: PolicyHeader = serde_json::from_slice(body)?;
    let data = &bytes[16 + hlen..];
    if data.len() != 8 * header.param_count {
        return Err(corrupt("parameter block length mismatch"));
    }
    let flat: Vec<f64> = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut policy = PolicyParams::zeros(header.obs_dim, header.act_dim, &header.hidden);
    policy.set_flat(&flat)?;
    if !policy.is_finite() {
        return Err(corrupt("non-finite parameters"));
    }
    Ok((policy, header))
}

pub fn save_policy(path: &Path, policy: &PolicyParams, config_hash: &str) -> Result<()> {
    fs::write(path, encode_policy(policy, config_hash)?)?;
    Ok(())
}

pub fn load_policy(path: &Path) -> Result<(PolicyParams, PolicyHeader)> {
    decode_policy(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = PolicyParams::new(22, 6, &[64, 64], -0.5, &mut rng);
        let bytes = encode_policy(&p, "abc").unwrap();
        let (q, h) = decode_policy(&bytes).unwrap();
        assert_eq!(p, q);
        assert_eq!(h.config_hash, "abc");
        assert_eq!(h.hidden, vec![64, 64]);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let p = PolicyParams::zeros(2, 1, &[2]);
        let mut bytes = encode_policy(&p, "").unwrap();
        bytes.pop();
        assert!(decode_policy(&bytes).is_err());
        assert!(decode_policy(b"nope").is_err());
    }
}
