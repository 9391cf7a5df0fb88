//! Q-network checkpoint format.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   b"SWQN"
//! u32     format version (currently 1)
//! u32     number of layer dims D (input, hiddens..., output)
//! u32*D   layer dims
//! then per layer l in 0..D-1:
//!   f32 * dims[l+1]*dims[l]   weights, row-major [out][in]
//!   f32 * dims[l+1]           biases
//! ```
//!
//! Encoding is byte-exact: `decode(encode(net))` reproduces every
//! parameter bit for bit.

use std::path::Path;

use crate::error::{FormatError, SimError};
use crate::wire::{Reader, Writer};

use super::QNetwork;

pub const MAGIC: &str = "SWQN";
pub const VERSION: u32 = 1;

/// Widest layer the decoder will accept.
const MAX_DIM: u32 = 1 << 22;
const MAX_LAYERS: u32 = 64;

impl QNetwork {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.magic(MAGIC);
        w.u32(VERSION);
        w.u32(self.dims.len() as u32);
        for &d in &self.dims {
            w.u32(d);
        }
        for l in 0..self.layer_count() {
            for &v in &self.weights[l] {
                w.f32(v);
            }
            for &v in &self.biases[l] {
                w.f32(v);
            }
        }
        w.into_bytes()
    }

    pub fn decode(data: &[u8]) -> Result<QNetwork, FormatError> {
        let mut r = Reader::new(data);
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(FormatError::BadVersion {
                offset: r.offset() - 4,
                version,
            });
        }
        let n_dims = r.u32()?;
        if !(2..=MAX_LAYERS).contains(&n_dims) {
            return Err(r.invalid(format!("layer dim count {n_dims} out of range 2..={MAX_LAYERS}")));
        }
        let mut dims = Vec::with_capacity(n_dims as usize);
        for _ in 0..n_dims {
            let d = r.u32()?;
            if d == 0 || d > MAX_DIM {
                return Err(r.invalid(format!("layer dim {d} out of range 1..={MAX_DIM}")));
            }
            dims.push(d);
        }
        let expected: u128 = dims
            .windows(2)
            .map(|w| (w[0] as u128 + 1) * w[1] as u128 * 4)
            .sum();
        if expected != r.remaining() as u128 {
            return Err(r.invalid(format!(
                "parameter payload of {} bytes does not match dims (expect {expected})",
                r.remaining()
            )));
        }
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let fan_in = dims[l] as usize;
            let fan_out = dims[l + 1] as usize;
            let mut w = Vec::with_capacity(fan_out * fan_in);
            for _ in 0..fan_out * fan_in {
                w.push(r.f32()?);
            }
            let mut b = Vec::with_capacity(fan_out);
            for _ in 0..fan_out {
                b.push(r.f32()?);
            }
            weights.push(w);
            biases.push(b);
        }
        r.finish()?;
        Ok(QNetwork::from_parts(dims, weights, biases))
    }

    pub fn save(&self, path: &Path) -> Result<(), SimError> {
        std::fs::write(path, self.encode()).map_err(|e| SimError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<QNetwork, SimError> {
        let bytes = std::fs::read(path).map_err(|e| SimError::io(path, e))?;
        Ok(QNetwork::decode(&bytes)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = QNetwork::new(&[250, 32, 32, 9], &mut rng);
        let back = QNetwork::decode(&net.encode()).unwrap();
        assert_eq!(net, back);
        assert_eq!(net.encode(), back.encode());
    }

    #[test]
    fn truncated_input_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = QNetwork::new(&[4, 3, 9], &mut rng);
        let bytes = net.encode();
        for cut in [0, 3, 4, 8, 12, bytes.len() - 1] {
            let err = QNetwork::decode(&bytes[..cut]).unwrap_err();
            match err {
                FormatError::Truncated { .. } | FormatError::InvalidField { .. } => {}
                other => panic!("unexpected error for cut {cut}: {other}"),
            }
        }
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = QNetwork::new(&[4, 3, 9], &mut rng);
        let mut bytes = net.encode();
        bytes[0] = b'X';
        assert!(matches!(
            QNetwork::decode(&bytes),
            Err(FormatError::BadMagic { offset: 0, .. })
        ));
        let mut bytes = net.encode();
        bytes[4] = 99;
        assert!(matches!(
            QNetwork::decode(&bytes),
            Err(FormatError::BadVersion { version: 99, .. })
        ));
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = QNetwork::new(&[4, 3, 9], &mut rng);
        let mut bytes = net.encode();
        bytes.push(0);
        assert!(QNetwork::decode(&bytes).is_err());
    }
}
