//! Text preprocessing and fixed-size feature constructions shared by the
//! detectors.

mod ngram;
mod tfidf;

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::fofe::Vocab;
use crate::kb::Chain;

pub use ngram::{char_ngram_overlap, char_trigrams};
pub use tfidf::TfidfModel;

/// A token with its char offsets in the source text (end exclusive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Lowercasing tokenizer. Alphanumeric runs form words; every other
/// non-whitespace char is a token of its own.
#[derive(Debug, Clone, Copy, Default)]
pub struct Tokenizer;

impl Tokenizer {
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        self.tokenize_with_offsets(text).into_iter().map(|t| t.text).collect()
    }

    pub fn tokenize_with_offsets(&self, text: &str) -> Vec<Token> {
        let mut out = Vec::new();
        let mut word = String::new();
        let mut word_start = 0;
        for (pos, ch) in text.chars().enumerate() {
            if ch.is_alphanumeric() {
                if word.is_empty() {
                    word_start = pos;
                }
                word.extend(ch.to_lowercase());
                continue;
            }
            if !word.is_empty() {
                out.push(Token {
                    text: std::mem::take(&mut word),
                    start: word_start,
                    end: pos,
                });
            }
            if !ch.is_whitespace() {
                out.push(Token {
                    text: ch.to_lowercase().collect(),
                    start: pos,
                    end: pos + 1,
                });
            }
        }
        if !word.is_empty() {
            let end = word_start + text.chars().skip(word_start).count();
            out.push(Token {
                text: word,
                start: word_start,
                end,
            });
        }
        out
    }

    /// Canonical single-space joined form, used as the alias-index key.
    pub fn normalize(&self, text: &str) -> String {
        self.tokenize(text).join(" ")
    }
}

/// Words of a dotted predicate: `music.lyricist.lyrics_written` gives
/// `music`, `lyricist`, `lyrics`, `written`.
pub fn predicate_words(predicate: &str) -> Vec<String> {
    predicate
        .split(['.', '_'])
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Word bag of a chain, pooled over all of its predicates.
pub fn chain_words(chain: &Chain) -> Vec<String> {
    chain.predicates().iter().flat_map(|p| predicate_words(p)).collect()
}

/// Space-joined chain words, the text side of the trigram overlap feature.
pub fn chain_text(chain: &Chain) -> String {
    chain_words(chain).join(" ")
}

/// TF-IDF vector of a chain's pooled word bag.
pub fn transform_relation(model: &TfidfModel, chain: &Chain) -> Vec<f64> {
    model.transform(&chain_words(chain))
}

/// Row-major `|V| x d` embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
    frozen: bool,
}

impl EmbeddingTable {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        EmbeddingTable {
            rows,
            dim,
            data: vec![0.0; rows * dim],
            frozen: false,
        }
    }

    pub fn from_data(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::InvalidParameter(format!(
                "embedding data has {} values, expected {rows}x{dim}",
                data.len()
            )));
        }
        Ok(EmbeddingTable {
            rows,
            dim,
            data,
            frozen: false,
        })
    }

    /// Uniform in `+-sqrt(6 / (1 + dim))`.
    pub fn random<R: Rng>(rows: usize, dim: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (1.0 + dim as f64)).sqrt();
        let data = (0..rows * dim).map(|_| rng.gen_range(-bound..bound)).collect();
        EmbeddingTable {
            rows,
            dim,
            data,
            frozen: false,
        }
    }

    /// Reads `token v1 .. vd` lines. Tokens outside `vocab` are skipped;
    /// vocabulary entries missing from the file keep a random row.
    pub fn import_text<R: Rng>(path: impl AsRef<Path>, vocab: &Vocab, dim: usize, rng: &mut R) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut table = EmbeddingTable::random(vocab.len(), dim, rng);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().unwrap_or_default();
            let values: Vec<f64> = parts
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(path, lineno + 1, format!("bad number: {e}")))?;
            if values.len() != dim {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    format!("expected {dim} values, found {}", values.len()),
                ));
            }
            if let Some(id) = vocab.get(token) {
                table.row_mut(id).copy_from_slice(&values);
            }
        }
        Ok(table)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tokenizer_splits_punctuation() {
        let t = Tokenizer;
        assert_eq!(
            t.tokenize("Which songs have Robert Lamm written lyrics to?"),
            ["which", "songs", "have", "robert", "lamm", "written", "lyrics", "to", "?"]
        );
        assert_eq!(t.tokenize("St. Louis"), ["st", ".", "louis"]);
        assert!(t.tokenize("   ").is_empty());
    }

    #[test]
    fn tokenizer_is_idempotent_on_joined_output() {
        let t = Tokenizer;
        for text in ["Who was elected president of the Philippines?", "a,b;c  d", "x's y-z"] {
            let once = t.tokenize(text).join(" ");
            assert_eq!(t.tokenize(&once).join(" "), once);
        }
    }

    #[test]
    fn tokenizer_offsets_index_chars() {
        let text = "Où est Zoë ?";
        let toks = Tokenizer.tokenize_with_offsets(text);
        let chars: Vec<char> = text.chars().collect();
        for tok in &toks {
            let raw: String = chars[tok.start..tok.end].iter().collect();
            assert_eq!(raw.to_lowercase(), tok.text);
        }
        assert_eq!(toks.last().unwrap().end, chars.len());
    }

    #[test]
    fn predicate_words_split_on_dots_and_underscores() {
        assert_eq!(
            predicate_words("music.lyricist.lyrics_written"),
            ["music", "lyricist", "lyrics", "written"]
        );
    }

    #[test]
    fn two_chain_pools_words() {
        let chain = Chain::pair("a.b_c", "d.e").unwrap();
        assert_eq!(chain_words(&chain), ["a", "b", "c", "d", "e"]);
        assert_eq!(chain_text(&chain), "a b c d e");
    }

    #[test]
    fn import_skips_unknown_tokens_and_keeps_random_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        fs::write(&path, "alpha 1 2\nnotinvocab 3 4\n").unwrap();
        let vocab = Vocab::new(["alpha", "beta"]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let table = EmbeddingTable::import_text(&path, &vocab, 2, &mut rng).unwrap();
        assert_eq!(table.row(vocab.lookup("alpha")), &[1.0, 2.0]);
        let beta = table.row(vocab.lookup("beta"));
        assert!(beta.iter().all(|v| v.abs() <= (6.0f64 / 3.0).sqrt()));

        fs::write(&path, "alpha 1\n").unwrap();
        let err = EmbeddingTable::import_text(&path, &vocab, 2, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
