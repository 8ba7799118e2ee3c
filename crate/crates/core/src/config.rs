//! Run configuration: a flat `key = value` file with dataset profiles.
//!
//! A `profile = ...` line (anywhere in the file) loads that profile's
//! defaults first; every other line overrides a single key. Unknown keys
//! and out-of-range values are errors.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::neural::{ModelKind, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Single-relation questions.
    Sq,
    /// Single- and multi-relation questions.
    Wq,
    Fq,
    /// Small networks for the generated toy set.
    Toy,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Sq => "sq",
            Profile::Wq => "wq",
            Profile::Fq => "fq",
            Profile::Toy => "toy",
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sq" => Ok(Profile::Sq),
            "wq" => Ok(Profile::Wq),
            "fq" => Ok(Profile::Fq),
            "toy" => Ok(Profile::Toy),
            other => Err(Error::Config(format!("unknown profile {other:?}"))),
        }
    }
}

/// Shape of one detector network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub hidden_layers: usize,
    pub hidden_size: usize,
    pub embedding_dim: usize,
    pub dropout: f64,
    pub alpha: f64,
}

impl ModelConfig {
    const fn new(hidden_layers: usize, hidden_size: usize, embedding_dim: usize, dropout: f64, alpha: f64) -> Self {
        ModelConfig {
            hidden_layers,
            hidden_size,
            embedding_dim,
            dropout,
            alpha,
        }
    }

    pub fn hidden(&self) -> Vec<usize> {
        vec![self.hidden_size; self.hidden_layers]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: Profile,
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub gamma: f64,
    /// Mention probability threshold.
    pub theta: f64,
    /// Subject-relation pairs kept for answer aggregation.
    pub top_n: usize,
    pub max_span: usize,
    pub max_negatives: usize,
    pub candidate_cap: usize,
    pub tfidf_max_terms: usize,
    /// Non-matching spans sampled per question when training the mention net.
    pub mention_pool: usize,
    /// Weights of mention probability, link score and best relation score.
    pub rerank_weights: [f64; 3],
    pub top_k: Vec<usize>,
    pub mention: ModelConfig,
    pub linker: ModelConfig,
    pub relation: ModelConfig,
}

const KEYS: &[&str] = &[
    "profile",
    "seed",
    "epochs",
    "learning_rate",
    "lr_decay",
    "gamma",
    "theta",
    "top_n",
    "max_span",
    "max_negatives",
    "candidate_cap",
    "tfidf_max_terms",
    "mention_pool",
    "rerank.mention_weight",
    "rerank.link_weight",
    "rerank.relation_weight",
    "eval.top_k",
];

const MODEL_KEYS: &[&str] = &["hidden_layers", "hidden_size", "embedding_dim", "dropout", "alpha"];
const MODELS: &[&str] = &["mention", "linker", "relation"];

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::for_profile(Profile::Toy)
    }
}

impl RunConfig {
    pub fn for_profile(profile: Profile) -> Self {
        let mention = ModelConfig::new(3, 512, 128, 0.1, 0.5);
        let base = RunConfig {
            profile,
            seed: 0,
            epochs: 30,
            learning_rate: 0.01,
            lr_decay: 0.95,
            gamma: 0.1,
            theta: 0.7,
            top_n: 5,
            max_span: 7,
            max_negatives: 50,
            candidate_cap: 100,
            tfidf_max_terms: 2000,
            mention_pool: 10,
            rerank_weights: [1.0, 1.0, 1.0],
            top_k: vec![1, 2, 3, 5],
            mention: mention.clone(),
            linker: ModelConfig::new(4, 1024, 128, 0.15, 0.95),
            relation: ModelConfig::new(4, 256, 128, 0.05, 0.8),
        };
        match profile {
            Profile::Sq => RunConfig {
                top_k: vec![1, 10, 20, 50],
                relation: ModelConfig::new(4, 735, 256, 0.24, 0.8),
                ..base
            },
            Profile::Wq => base,
            Profile::Fq => RunConfig {
                linker: ModelConfig::new(4, 1024, 128, 0.15, 0.8),
                relation: ModelConfig::new(4, 600, 128, 0.15, 0.8),
                ..base
            },
            Profile::Toy => RunConfig {
                learning_rate: 0.05,
                mention: ModelConfig::new(2, 64, 24, 0.0, 0.5),
                linker: ModelConfig::new(2, 64, 24, 0.0, 0.95),
                relation: ModelConfig::new(2, 64, 24, 0.0, 0.8),
                ..base
            },
        }
    }

    pub fn model(&self, kind: ModelKind) -> &ModelConfig {
        match kind {
            ModelKind::Mention => &self.mention,
            ModelKind::Linker => &self.linker,
            ModelKind::Relation => &self.relation,
        }
    }

    /// Training settings for one detector. Each detector gets its own
    /// stream derived from the run seed.
    pub fn train_config(&self, kind: ModelKind) -> TrainConfig {
        let offset = match kind {
            ModelKind::Mention => 1,
            ModelKind::Linker => 2,
            ModelKind::Relation => 3,
        };
        TrainConfig {
            gamma: self.gamma,
            learning_rate: self.learning_rate,
            lr_decay: self.lr_decay,
            epochs: self.epochs,
            seed: self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(offset),
            max_negatives: self.max_negatives,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            entries.push((i + 1, k.trim(), v.trim()));
        }
        let profile = match entries.iter().rev().find(|e| e.1 == "profile") {
            Some(&(_, _, v)) => v.parse()?,
            None => Profile::Toy,
        };
        let mut cfg = RunConfig::for_profile(profile);
        for (line, k, v) in entries {
            if k != "profile" {
                cfg.set(k, v).map_err(|e| Error::Config(format!("line {line}: {e}")))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        RunConfig::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
        }
        match key {
            "profile" => *self = RunConfig::for_profile(value.parse()?),
            "seed" => self.seed = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "lr_decay" => self.lr_decay = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "theta" => self.theta = num(key, value)?,
            "top_n" => self.top_n = num(key, value)?,
            "max_span" => self.max_span = num(key, value)?,
            "max_negatives" => self.max_negatives = num(key, value)?,
            "candidate_cap" => self.candidate_cap = num(key, value)?,
            "tfidf_max_terms" => self.tfidf_max_terms = num(key, value)?,
            "mention_pool" => self.mention_pool = num(key, value)?,
            "rerank.mention_weight" => self.rerank_weights[0] = num(key, value)?,
            "rerank.link_weight" => self.rerank_weights[1] = num(key, value)?,
            "rerank.relation_weight" => self.rerank_weights[2] = num(key, value)?,
            "eval.top_k" => self.top_k = value.split(',').map(|k| num(key, k.trim())).collect::<Result<_>>()?,
            _ => {
                let (model, field) = key
                    .split_once('.')
                    .ok_or_else(|| Error::Config(format!("unknown key {key:?}")))?;
                let m = match model {
                    "mention" => &mut self.mention,
                    "linker" => &mut self.linker,
                    "relation" => &mut self.relation,
                    _ => return Err(Error::Config(format!("unknown key {key:?}"))),
                };
                match field {
                    "hidden_layers" => m.hidden_layers = num(key, value)?,
                    "hidden_size" => m.hidden_size = num(key, value)?,
                    "embedding_dim" => m.embedding_dim = num(key, value)?,
                    "dropout" => m.dropout = num(key, value)?,
                    "alpha" => m.alpha = num(key, value)?,
                    _ => return Err(Error::Config(format!("unknown key {key:?}"))),
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return fail(format!("lr_decay must be in (0, 1], got {}", self.lr_decay));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return fail(format!("gamma must be non-negative, got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return fail(format!("theta must be in [0, 1], got {}", self.theta));
        }
        for (name, v) in [
            ("top_n", self.top_n),
            ("max_span", self.max_span),
            ("max_negatives", self.max_negatives),
            ("candidate_cap", self.candidate_cap),
            ("tfidf_max_terms", self.tfidf_max_terms),
        ] {
            if v == 0 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        if self.rerank_weights.iter().any(|w| !w.is_finite()) {
            return fail("rerank weights must be finite".into());
        }
        if self.top_k.is_empty() || self.top_k.contains(&0) {
            return fail("eval.top_k must list positive cutoffs".into());
        }
        for (name, m) in MODELS.iter().zip([&self.mention, &self.linker, &self.relation]) {
            if m.hidden_size == 0 || m.embedding_dim == 0 {
                return fail(format!("{name}: hidden_size and embedding_dim must be positive"));
            }
            if !(0.0..1.0).contains(&m.dropout) {
                return fail(format!("{name}.dropout must be in [0, 1), got {}", m.dropout));
            }
            if !(m.alpha > 0.0 && m.alpha < 1.0) {
                return fail(format!("{name}.alpha must be in (0, 1), got {}", m.alpha));
            }
        }
        Ok(())
    }

    /// Every key, in a fixed order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let top_k: Vec<String> = self.top_k.iter().map(|k| k.to_string()).collect();
        let values = [
            self.profile.name().to_string(),
            self.seed.to_string(),
            self.epochs.to_string(),
            self.learning_rate.to_string(),
            self.lr_decay.to_string(),
            self.gamma.to_string(),
            self.theta.to_string(),
            self.top_n.to_string(),
            self.max_span.to_string(),
            self.max_negatives.to_string(),
            self.candidate_cap.to_string(),
            self.tfidf_max_terms.to_string(),
            self.mention_pool.to_string(),
            self.rerank_weights[0].to_string(),
            self.rerank_weights[1].to_string(),
            self.rerank_weights[2].to_string(),
            top_k.join(","),
        ];
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k} = {v}");
        }
        for (name, m) in MODELS.iter().zip([&self.mention, &self.linker, &self.relation]) {
            let vals = [
                m.hidden_layers.to_string(),
                m.hidden_size.to_string(),
                m.embedding_dim.to_string(),
                m.dropout.to_string(),
                m.alpha.to_string(),
            ];
            for (k, v) in MODEL_KEYS.iter().zip(vals) {
                let _ = writeln!(out, "{name}.{k} = {v}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_carry_published_sizes() {
        let sq = RunConfig::for_profile(Profile::Sq);
        assert_eq!(sq.linker.hidden(), vec![1024; 4]);
        assert_eq!((sq.relation.hidden_size, sq.relation.embedding_dim), (735, 256));
        assert_eq!(sq.relation.dropout, 0.24);
        assert_eq!(sq.linker.alpha, 0.95);
        let wq = RunConfig::for_profile(Profile::Wq);
        assert_eq!((wq.relation.hidden_size, wq.relation.dropout), (256, 0.05));
        let fq = RunConfig::for_profile(Profile::Fq);
        assert_eq!((fq.relation.hidden_size, fq.linker.alpha), (600, 0.8));
        for p in [Profile::Sq, Profile::Wq, Profile::Fq] {
            let c = RunConfig::for_profile(p);
            assert_eq!(c.learning_rate, 0.01);
            assert_eq!(c.relation.alpha, 0.8);
            c.validate().unwrap();
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let mut cfg = RunConfig::for_profile(Profile::Fq);
        cfg.seed = 42;
        cfg.theta = 0.65;
        cfg.top_k = vec![1, 3];
        let text = cfg.to_text();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn overrides_apply_after_profile() {
        let cfg = RunConfig::parse("epochs = 3\nprofile = sq\nlinker.dropout = 0.2\n").unwrap();
        assert_eq!(cfg.profile, Profile::Sq);
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.linker.dropout, 0.2);
    }

    #[test]
    fn bad_input_rejected() {
        assert!(matches!(RunConfig::parse("colour = red"), Err(Error::Config(_))));
        assert!(RunConfig::parse("linker.colour = 1").is_err());
        assert!(RunConfig::parse("theta = 1.5").is_err());
        assert!(RunConfig::parse("relation.alpha = 1").is_err());
        assert!(RunConfig::parse("epochs = many").is_err());
        assert!(RunConfig::parse("just a line").is_err());
        assert!(RunConfig::parse("profile = imdb").is_err());
    }

    #[test]
    fn detectors_get_distinct_seeds() {
        let cfg = RunConfig::default();
        let seeds: Vec<u64> = [ModelKind::Mention, ModelKind::Linker, ModelKind::Relation]
            .iter()
            .map(|&k| cfg.train_config(k).seed)
            .collect();
        assert_ne!(seeds[0], seeds[1]);
        assert_ne!(seeds[1], seeds[2]);
    }
}
