//! Versioned binary model container.
//!
//! All integers are little-endian `u32`, all reals little-endian IEEE-754
//! binary64. Layout:
//!
//! ```text
//! magic        8 bytes  "FOFENET\0"
//! version      u32      = 1
//! kind         u8       1 mention, 2 linker, 3 relation
//! vocab hash   32 bytes SHA-256 of the vocabulary
//! gamma        f64
//! dropout      f64
//! n_alpha      u32, then n_alpha x f64
//! n_codes      u32
//! dense_dim    u32
//! emb rows     u32
//! emb dim      u32
//! emb frozen   u8
//! emb values   rows*dim x f64, row-major
//! n_layers     u32
//! per layer:   outputs u32, inputs u32, weights outputs*inputs x f64, bias outputs x f64
//! ```
//!
//! Trailing bytes are rejected.

use super::{Dense, FofeNet, Mlp};
use crate::error::{Error, Result};
use crate::features::EmbeddingTable;

const MAGIC: &[u8; 8] = b"FOFENET\0";
pub const CONTAINER_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Mention,
    Linker,
    Relation,
}

impl ModelKind {
    fn tag(self) -> u8 {
        match self {
            ModelKind::Mention => 1,
            ModelKind::Linker => 2,
            ModelKind::Relation => 3,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            1 => Ok(ModelKind::Mention),
            2 => Ok(ModelKind::Linker),
            3 => Ok(ModelKind::Relation),
            t => Err(Error::Container(format!("unknown model kind {t}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mention => "mention",
            ModelKind::Linker => "linker",
            ModelKind::Relation => "relation",
        }
    }
}

/// Everything stored next to the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainerMeta {
    pub kind: ModelKind,
    pub vocab_digest: [u8; 32],
    pub gamma: f64,
    pub alphas: Vec<f64>,
}

pub fn write_container(net: &FofeNet, meta: &ContainerMeta) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, CONTAINER_VERSION);
    out.push(meta.kind.tag());
    out.extend_from_slice(&meta.vocab_digest);
    put_f64(&mut out, meta.gamma);
    put_f64(&mut out, net.mlp().dropout());
    put_u32(&mut out, meta.alphas.len() as u32);
    for &a in &meta.alphas {
        put_f64(&mut out, a);
    }
    put_u32(&mut out, net.n_codes() as u32);
    put_u32(&mut out, net.dense_dim() as u32);
    let emb = net.embedding();
    put_u32(&mut out, emb.rows() as u32);
    put_u32(&mut out, emb.dim() as u32);
    out.push(emb.is_frozen() as u8);
    for &v in emb.data() {
        put_f64(&mut out, v);
    }
    let layers = net.mlp().layers();
    put_u32(&mut out, layers.len() as u32);
    for layer in layers {
        put_u32(&mut out, layer.outputs as u32);
        put_u32(&mut out, layer.inputs as u32);
        for &w in &layer.weights {
            put_f64(&mut out, w);
        }
        for &b in &layer.bias {
            put_f64(&mut out, b);
        }
    }
    out
}

pub fn read_container(bytes: &[u8]) -> Result<(FofeNet, ContainerMeta)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Container("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CONTAINER_VERSION {
        return Err(Error::Container(format!("unsupported version {version}")));
    }
    let kind = ModelKind::from_tag(r.take(1)?[0])?;
    let mut vocab_digest = [0u8; 32];
    vocab_digest.copy_from_slice(r.take(32)?);
    let gamma = r.f64()?;
    let dropout = r.f64()?;
    let n_alpha = r.u32()? as usize;
    let alphas = r.f64s(n_alpha)?;
    let n_codes = r.u32()? as usize;
    let dense_dim = r.u32()? as usize;
    let rows = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let frozen = match r.take(1)?[0] {
        0 => false,
        1 => true,
        b => return Err(Error::Container(format!("bad frozen flag {b}"))),
    };
    let data = r.f64s(
        rows.checked_mul(dim)
            .ok_or_else(|| Error::Container("size overflow".into()))?,
    )?;
    let mut embedding = EmbeddingTable::from_data(rows, dim, data)?;
    embedding.set_frozen(frozen);
    let n_layers = r.u32()? as usize;
    let mut layers = Vec::with_capacity(n_layers.min(64));
    for _ in 0..n_layers {
        let outputs = r.u32()? as usize;
        let inputs = r.u32()? as usize;
        let n = outputs
            .checked_mul(inputs)
            .ok_or_else(|| Error::Container("size overflow".into()))?;
        let weights = r.f64s(n)?;
        let bias = r.f64s(outputs)?;
        layers.push(Dense {
            inputs,
            outputs,
            weights,
            bias,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::Container(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let mlp = Mlp::from_layers(layers, dropout).map_err(|e| Error::Container(e.to_string()))?;
    let net = FofeNet::from_parts(embedding, mlp, n_codes, dense_dim).map_err(|e| Error::Container(e.to_string()))?;
    Ok((
        net,
        ContainerMeta {
            kind,
            vocab_digest,
            gamma,
            alphas,
        },
    ))
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Container("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::Container("size overflow".into()))?,
        )?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fofe::SparseCode;
    use crate::neural::{NetInput, TrainRng};
    use rand::SeedableRng;

    fn sample() -> (FofeNet, ContainerMeta) {
        let mut rng = TrainRng::seed_from_u64(11);
        let net = FofeNet::new(6, 3, 2, 2, &[5, 4], 0.15, &mut rng).unwrap();
        let meta = ContainerMeta {
            kind: ModelKind::Linker,
            vocab_digest: [7; 32],
            gamma: 0.1,
            alphas: vec![0.95],
        };
        (net, meta)
    }

    #[test]
    fn round_trip_reproduces_scores_bit_exactly() {
        let (net, meta) = sample();
        let bytes = write_container(&net, &meta);
        let (back, meta_back) = read_container(&bytes).unwrap();
        assert_eq!(meta_back, meta);
        assert_eq!(back, net);
        let input = NetInput {
            codes: vec![SparseCode::encode(&[1, 4, 1], 0.95), SparseCode::encode(&[5], 0.95)],
            dense: vec![0.3, -1.0],
        };
        assert_eq!(
            net.score(&input).unwrap().to_bits(),
            back.score(&input).unwrap().to_bits()
        );
        assert_eq!(write_container(&back, &meta_back), bytes);
    }

    #[test]
    fn header_layout() {
        let (net, meta) = sample();
        let bytes = write_container(&net, &meta);
        assert_eq!(&bytes[..8], b"FOFENET\0");
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(bytes[12], 2);
        assert_eq!(&bytes[45..53], &0.1f64.to_le_bytes());
        assert_eq!(&bytes[53..61], &0.15f64.to_le_bytes());
    }

    #[test]
    fn corrupt_containers_rejected() {
        let (net, meta) = sample();
        let bytes = write_container(&net, &meta);
        assert!(read_container(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(read_container(&extra).is_err());
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(read_container(&bad).is_err());
    }
}
