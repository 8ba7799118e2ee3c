//! Fixed-size ordinally forgetting encoding (FOFE).
//!
//! A sequence `w_1 .. w_T` over a vocabulary `V` is encoded by the recursion
//! `z_0 = 0`, `z_t = alpha * z_{t-1} + e_{w_t}`, where `e_i` is the one-hot
//! basis vector of token `i`. The final state `z_T` has `|V|` coordinates no
//! matter how long the sequence is.
//!
//! Two representations are provided:
//!
//! - [`FofeCode`] is dense in vocabulary space and keeps a compensated
//!   (double-double) low part per coordinate. The extra precision is what
//!   makes [`decode`] exact for small `alpha`: at `alpha = 0.1` a token
//!   nineteen steps back weighs `1e-19`, below the resolution of a single
//!   `f64` sitting next to a leading `1.0`.
//! - [`SparseCode`] stores only the nonzero coordinates and is what the
//!   detectors use before projecting into embedding space.

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::EmbeddingTable;

/// Reserved out-of-vocabulary token, always at index 0.
pub const UNK: &str = "<unk>";

/// Tolerance for the "coordinate is at least one" test in [`decode`].
pub const DECODE_EPS: f64 = 1e-9;

/// Dense token vocabulary. Index 0 is always [`UNK`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds a vocabulary from `tokens`, keeping first occurrences in order.
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocab {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        vocab.insert(UNK.to_string());
        for token in tokens {
            vocab.insert(token.into());
        }
        vocab
    }

    fn insert(&mut self, token: String) {
        if !self.index.contains_key(&token) {
            self.index.insert(token.clone(), self.tokens.len());
            self.tokens.push(token);
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn unk_id(&self) -> usize {
        0
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index of `token`, or the unknown id.
    pub fn lookup(&self, token: &str) -> usize {
        self.get(token).unwrap_or(0)
    }

    pub fn ids<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.lookup(t.as_ref())).collect()
    }

    pub fn encode_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> TokenSeq {
        TokenSeq {
            ids: self.ids(tokens),
            vocab_size: self.len(),
        }
    }

    /// SHA-256 over the newline-joined token list.
    pub fn digest(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        for token in &self.tokens {
            hasher.update(token.as_bytes());
            hasher.update(b"\n");
        }
        let out = hasher.finalize();
        let mut digest = [0u8; 32];
        digest.copy_from_slice(&out);
        digest
    }
}

/// A sequence of vocabulary ids `w_1 .. w_T`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSeq {
    ids: Vec<usize>,
    vocab_size: usize,
}

impl TokenSeq {
    pub fn new(ids: Vec<usize>, vocab_size: usize) -> Result<Self> {
        if let Some(&bad) = ids.iter().find(|&&id| id >= vocab_size) {
            return Err(Error::InvalidParameter(format!(
                "token id {bad} out of range for vocabulary of size {vocab_size}"
            )));
        }
        Ok(TokenSeq { ids, vocab_size })
    }

    pub fn empty(vocab_size: usize) -> Self {
        TokenSeq {
            ids: Vec::new(),
            vocab_size,
        }
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn reversed(&self) -> TokenSeq {
        TokenSeq {
            ids: self.ids.iter().rev().copied().collect(),
            vocab_size: self.vocab_size,
        }
    }
}

/// Dense FOFE code `z_T` in vocabulary space.
#[derive(Debug, Clone, PartialEq)]
pub struct FofeCode {
    values: Vec<f64>,
    // Rounding error of `values`, so that `values[i] + low[i]` carries
    // roughly 106 bits of the exact sum.
    low: Vec<f64>,
    alpha: f64,
}

impl FofeCode {
    /// Wraps raw coordinates as a code (no compensation term).
    pub fn from_values(values: Vec<f64>, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "FOFE coordinates must be finite and non-negative".into(),
            ));
        }
        let low = vec![0.0; values.len()];
        Ok(FofeCode { values, low, alpha })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn to_sparse(&self) -> SparseCode {
        SparseCode {
            entries: self
                .values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "forgetting factor must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Encodes `seq` with forgetting factor `alpha`.
pub fn encode(seq: &TokenSeq, alpha: f64) -> Result<FofeCode> {
    check_alpha(alpha)?;
    let n = seq.vocab_size();
    let mut hi = vec![0.0; n];
    let mut lo = vec![0.0; n];
    for &id in seq.ids() {
        for i in 0..n {
            let (h, l) = dd::mul_f64((hi[i], lo[i]), alpha);
            hi[i] = h;
            lo[i] = l;
        }
        let (h, l) = dd::add_f64((hi[id], lo[id]), 1.0);
        hi[id] = h;
        lo[id] = l;
    }
    Ok(FofeCode {
        values: hi,
        low: lo,
        alpha,
    })
}

/// Encodes the sequence read right to left.
pub fn encode_reversed(seq: &TokenSeq, alpha: f64) -> Result<FofeCode> {
    encode(&seq.reversed(), alpha)
}

/// Recovers the unique sequence whose encoding is `code`.
///
/// Only defined for `alpha < 0.5`: the last token is then the single
/// coordinate holding at least 1, since everything before it sums to at most
/// `alpha / (1 - alpha) < 1`. Peel it off, rescale by `1 / alpha`, repeat.
///
/// Codes are kept in double-double (~104 usable bits) and every peel step
/// amplifies the rounding error by `1 / alpha`, so recovery is guaranteed
/// while `(T - 1) * log2(1 / alpha) <= 64`, which leaves room for the
/// [`DECODE_EPS`] test. Longer sequences at small `alpha` may fail with
/// [`Error::InvalidCode`].
pub fn decode(code: &FofeCode) -> Result<TokenSeq> {
    let alpha = code.alpha;
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::UnsupportedAlpha(alpha));
    }
    let n = code.dim();
    let mut residual: Vec<(f64, f64)> = code.values.iter().zip(&code.low).map(|(&h, &l)| (h, l)).collect();
    let mut reversed_ids = Vec::new();
    loop {
        if residual.iter().all(|&(h, l)| (h + l).abs() <= DECODE_EPS) {
            break;
        }
        let mut hits = residual
            .iter()
            .enumerate()
            .filter(|(_, &(h, l))| h + l >= 1.0 - DECODE_EPS)
            .map(|(i, _)| i);
        let last = match (hits.next(), hits.next()) {
            (Some(i), None) => i,
            (None, _) => {
                return Err(Error::InvalidCode(format!(
                    "nonzero residual with no coordinate >= 1 after {} tokens",
                    reversed_ids.len()
                )))
            }
            (Some(_), Some(_)) => {
                return Err(Error::InvalidCode(format!(
                    "more than one coordinate >= 1 after {} tokens",
                    reversed_ids.len()
                )))
            }
        };
        reversed_ids.push(last);
        residual[last] = dd::add_f64(residual[last], -1.0);
        if residual[last].0 + residual[last].1 < -DECODE_EPS {
            return Err(Error::InvalidCode("negative residual".into()));
        }
        for r in residual.iter_mut() {
            *r = dd::div_f64(*r, alpha);
        }
        // An honest code of finite length can never need more steps than
        // this before its residual underflows to zero.
        if reversed_ids.len() > 10_000 {
            return Err(Error::InvalidCode("residual does not terminate".into()));
        }
    }
    reversed_ids.reverse();
    TokenSeq::new(reversed_ids, n)
}

/// Projects a code into embedding space: `code^T * embedding`.
pub fn project(code: &FofeCode, embedding: &EmbeddingTable) -> Result<Vec<f64>> {
    if code.dim() != embedding.rows() {
        return Err(Error::InvalidParameter(format!(
            "code has {} coordinates but embedding has {} rows",
            code.dim(),
            embedding.rows()
        )));
    }
    let mut out = vec![0.0; embedding.dim()];
    for (i, &v) in code.values.iter().enumerate() {
        if v != 0.0 {
            for (o, &e) in out.iter_mut().zip(embedding.row(i)) {
                *o += v * e;
            }
        }
    }
    Ok(out)
}

/// Sparse FOFE code: `(token id, coefficient)` pairs sorted by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseCode {
    entries: Vec<(usize, f64)>,
}

impl SparseCode {
    /// Runs the FOFE recursion over `ids` touching only nonzero coordinates.
    /// Produces the same rounded coefficients as the high part of [`encode`]
    /// would with plain `f64` arithmetic.
    pub fn encode(ids: &[usize], alpha: f64) -> SparseCode {
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for &id in ids {
            for e in entries.iter_mut() {
                e.1 *= alpha;
            }
            match entries.iter_mut().find(|e| e.0 == id) {
                Some(e) => e.1 += 1.0,
                None => entries.push((id, 1.0)),
            }
        }
        entries.sort_by_key(|e| e.0);
        SparseCode { entries }
    }

    pub fn encode_reversed(ids: &[usize], alpha: f64) -> SparseCode {
        let rev: Vec<usize> = ids.iter().rev().copied().collect();
        SparseCode::encode(&rev, alpha)
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    /// `code^T * embedding`, accumulated into `out`.
    pub fn project_into(&self, embedding: &EmbeddingTable, out: &mut [f64]) {
        for &(i, v) in &self.entries {
            for (o, &e) in out.iter_mut().zip(embedding.row(i)) {
                *o += v * e;
            }
        }
    }
}

/// Error-free double-double helpers.
mod dd {
    pub type Dd = (f64, f64);

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn quick_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        (s, b - (s - a))
    }

    fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    pub fn add_f64((hi, lo): Dd, b: f64) -> Dd {
        let (s, e) = two_sum(hi, b);
        quick_two_sum(s, e + lo)
    }

    pub fn mul_f64((hi, lo): Dd, b: f64) -> Dd {
        let (p, e) = two_prod(hi, b);
        quick_two_sum(p, e + lo * b)
    }

    pub fn div_f64((hi, lo): Dd, b: f64) -> Dd {
        let q1 = hi / b;
        let (p, e) = two_prod(q1, b);
        let (s, f) = two_sum(hi, -p);
        let r = s + (f - e + lo);
        let q2 = r / b;
        quick_two_sum(q1, q2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(ids: &[usize], n: usize) -> TokenSeq {
        TokenSeq::new(ids.to_vec(), n).unwrap()
    }

    #[test]
    fn worked_examples() {
        let a = 0.7;
        let abc = encode(&seq(&[0, 1, 2], 3), a).unwrap();
        let want = [a * a, a, 1.0];
        for (g, w) in abc.values().iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
        let abcbc = encode(&seq(&[0, 1, 2, 1, 2], 3), a).unwrap();
        let want = [a.powi(4), a + a.powi(3), 1.0 + a * a];
        for (g, w) in abcbc.values().iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_sequence_is_zero() {
        let code = encode(&TokenSeq::empty(5), 0.3).unwrap();
        assert_eq!(code.values(), &[0.0; 5]);
        assert!(code.is_zero());
        assert!(decode(&code).unwrap().is_empty());
    }

    #[test]
    fn alpha_outside_unit_interval_rejected() {
        for bad in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(encode(&seq(&[0], 2), bad), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn reversed_examples() {
        let code = encode_reversed(&seq(&[0, 1, 2], 3), 0.5).unwrap();
        assert_eq!(code.values(), &[1.0, 0.5, 0.25]);
        let single = seq(&[1], 3);
        assert_eq!(encode_reversed(&single, 0.4).unwrap(), encode(&single, 0.4).unwrap());
        let aba = seq(&[0, 1, 0], 3);
        assert_eq!(encode_reversed(&aba, 0.4).unwrap(), encode(&aba, 0.4).unwrap());
    }

    #[test]
    fn decode_round_trip_abcbc() {
        let s = seq(&[0, 1, 2, 1, 2], 3);
        assert_eq!(decode(&encode(&s, 0.45).unwrap()).unwrap(), s);
    }

    #[test]
    fn decode_rejects_large_alpha() {
        let code = FofeCode::from_values(vec![0.25, 0.5, 1.0], 0.5).unwrap();
        assert!(matches!(decode(&code), Err(Error::UnsupportedAlpha(_))));
    }

    #[test]
    fn decode_rejects_garbage() {
        let code = FofeCode::from_values(vec![0.3, 0.2, 0.0], 0.25).unwrap();
        assert!(matches!(decode(&code), Err(Error::InvalidCode(_))));
        let code = FofeCode::from_values(vec![1.0, 1.0, 0.0], 0.25).unwrap();
        assert!(matches!(decode(&code), Err(Error::InvalidCode(_))));
    }

    #[test]
    fn decode_survives_long_repeats_at_small_alpha() {
        // Token 3 at both ends, nineteen steps apart.
        let mut ids = vec![3];
        ids.extend((0..18).map(|i| 4 + i % 7));
        ids.push(3);
        let s = seq(&ids, 20);
        assert_eq!(decode(&encode(&s, 0.1).unwrap()).unwrap(), s);
    }

    #[test]
    fn sparse_matches_dense_high_part() {
        let ids = [2, 0, 2, 2, 1, 4, 0];
        let dense = encode(&seq(&ids, 6), 0.8).unwrap();
        let sparse = SparseCode::encode(&ids, 0.8);
        for (g, w) in sparse.to_dense(6).iter().zip(dense.values()) {
            assert!((g - w).abs() < 1e-14);
        }
        let support = |c: &SparseCode| c.entries().iter().map(|e| e.0).collect::<Vec<_>>();
        assert_eq!(support(&sparse), support(&dense.to_sparse()));
    }

    #[test]
    fn vocab_lookup_is_dense_and_stable() {
        let v = Vocab::new(["b", "a", "b", "c"]);
        assert_eq!(v.len(), 4);
        assert_eq!(v.token(0), Some(UNK));
        for i in 0..v.len() {
            assert_eq!(v.lookup(v.token(i).unwrap()), i);
        }
        assert_eq!(v.lookup("zzz"), v.unk_id());
        assert_eq!(v.digest(), Vocab::new(["b", "a", "c"]).digest());
        assert_ne!(v.digest(), Vocab::new(["a", "b", "c"]).digest());
    }

    #[test]
    fn token_seq_rejects_out_of_range() {
        assert!(TokenSeq::new(vec![0, 3], 3).is_err());
    }
}
