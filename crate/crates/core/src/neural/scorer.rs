use std::collections::BTreeMap;

use rand::Rng;

use super::{ForwardCache, Mlp, MlpGrads, Mode};
use crate::error::{Error, Result};
use crate::features::EmbeddingTable;
use crate::fofe::SparseCode;

/// Network input: FOFE codes that get projected through the embedding table,
/// followed by already dense features.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetInput {
    pub codes: Vec<SparseCode>,
    pub dense: Vec<f64>,
}

/// A FOFE frontend (trainable embedding table) feeding an [`Mlp`].
///
/// The network input is `[code_1^T E, .., code_k^T E, dense]`. Gradients
/// flow back through the projection into the embedding rows touched by the
/// codes unless the table is frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct FofeNet {
    embedding: EmbeddingTable,
    mlp: Mlp,
    n_codes: usize,
    dense_dim: usize,
}

#[derive(Debug, Clone)]
pub struct FofeCache {
    mlp: ForwardCache,
}

impl FofeCache {
    pub fn mlp(&self) -> &ForwardCache {
        &self.mlp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FofeGrads {
    pub mlp: MlpGrads,
    /// Sparse rows of the embedding gradient.
    pub embedding: BTreeMap<usize, Vec<f64>>,
}

impl FofeGrads {
    pub fn zeros_like(net: &FofeNet) -> Self {
        FofeGrads {
            mlp: MlpGrads::zeros_like(&net.mlp),
            embedding: BTreeMap::new(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.mlp.is_finite() && self.embedding.values().flatten().all(|g| g.is_finite())
    }
}

impl FofeNet {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng>(
        vocab_size: usize,
        embed_dim: usize,
        n_codes: usize,
        dense_dim: usize,
        hidden: &[usize],
        dropout: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let embedding = EmbeddingTable::random(vocab_size, embed_dim, rng);
        let mlp = Mlp::new(n_codes * embed_dim + dense_dim, hidden, dropout, rng)?;
        Ok(FofeNet {
            embedding,
            mlp,
            n_codes,
            dense_dim,
        })
    }

    pub fn from_parts(embedding: EmbeddingTable, mlp: Mlp, n_codes: usize, dense_dim: usize) -> Result<Self> {
        if mlp.input_dim() != n_codes * embedding.dim() + dense_dim {
            return Err(Error::InvalidParameter(format!(
                "network input {} does not match {n_codes} codes x {} + {dense_dim}",
                mlp.input_dim(),
                embedding.dim()
            )));
        }
        Ok(FofeNet {
            embedding,
            mlp,
            n_codes,
            dense_dim,
        })
    }

    pub fn embedding(&self) -> &EmbeddingTable {
        &self.embedding
    }

    pub fn embedding_mut(&mut self) -> &mut EmbeddingTable {
        &mut self.embedding
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn mlp_mut(&mut self) -> &mut Mlp {
        &mut self.mlp
    }

    pub fn n_codes(&self) -> usize {
        self.n_codes
    }

    pub fn dense_dim(&self) -> usize {
        self.dense_dim
    }

    /// Replaces the embedding table, e.g. with imported vectors.
    pub fn set_embedding(&mut self, table: EmbeddingTable) -> Result<()> {
        if table.rows() != self.embedding.rows() || table.dim() != self.embedding.dim() {
            return Err(Error::InvalidParameter("embedding table shape mismatch".into()));
        }
        self.embedding = table;
        Ok(())
    }

    /// The flat vector fed to the MLP.
    pub fn assemble(&self, input: &NetInput) -> Result<Vec<f64>> {
        if input.codes.len() != self.n_codes || input.dense.len() != self.dense_dim {
            return Err(Error::InvalidParameter(format!(
                "input has {} codes and {} dense features, model expects {} and {}",
                input.codes.len(),
                input.dense.len(),
                self.n_codes,
                self.dense_dim
            )));
        }
        let d = self.embedding.dim();
        let mut x = vec![0.0; self.n_codes * d + self.dense_dim];
        for (k, code) in input.codes.iter().enumerate() {
            if code.entries().iter().any(|&(i, _)| i >= self.embedding.rows()) {
                return Err(Error::InvalidParameter("code index outside embedding table".into()));
            }
            code.project_into(&self.embedding, &mut x[k * d..(k + 1) * d]);
        }
        x[self.n_codes * d..].copy_from_slice(&input.dense);
        Ok(x)
    }

    pub fn score(&self, input: &NetInput) -> Result<f64> {
        self.mlp.score(&self.assemble(input)?)
    }

    pub fn forward(&self, input: &NetInput, mode: Mode<'_>) -> Result<(f64, FofeCache)> {
        let x = self.assemble(input)?;
        let (s, mlp) = self.mlp.forward(&x, mode)?;
        Ok((s, FofeCache { mlp }))
    }

    /// Accumulates `dscore * d(score)/d(params)` for the forward pass that
    /// produced `cache` on `input`.
    pub fn backward(&self, input: &NetInput, cache: &FofeCache, dscore: f64, grads: &mut FofeGrads) {
        let dx = self.mlp.backward(&cache.mlp, dscore, &mut grads.mlp);
        if self.embedding.is_frozen() {
            return;
        }
        let d = self.embedding.dim();
        for (k, code) in input.codes.iter().enumerate() {
            let block = &dx[k * d..(k + 1) * d];
            for &(i, c) in code.entries() {
                let row = grads.embedding.entry(i).or_insert_with(|| vec![0.0; d]);
                for (r, g) in row.iter_mut().zip(block) {
                    *r += c * g;
                }
            }
        }
    }

    pub fn sgd_step(&mut self, grads: &FofeGrads, lr: f64) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::TrainingDiverged("non-finite gradient".into()));
        }
        self.mlp.sgd_step(&grads.mlp, lr)?;
        if !self.embedding.is_frozen() {
            for (&i, g) in &grads.embedding {
                for (e, gv) in self.embedding.row_mut(i).iter_mut().zip(g) {
                    *e -= lr * gv;
                }
            }
        }
        Ok(())
    }
}
