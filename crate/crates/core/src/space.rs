//! Shared vocabulary and fitted TF-IDF models.

use std::collections::{BTreeSet, HashMap};

use crate::dataset::QaExample;
use crate::error::Result;
use crate::features::{chain_words, predicate_words, TfidfModel, Tokenizer};
use crate::fofe::Vocab;
use crate::kb::{Chain, Kb, FACT_BUCKETS};
use crate::relation::ENTITY_TOKEN;

/// Everything the detectors need to turn text and KB nodes into features.
///
/// Built deterministically from the knowledge base and the training
/// questions, so the same inputs always give the same vocabulary hash.
#[derive(Debug, Clone)]
pub struct FeatureSpace {
    pub tokenizer: Tokenizer,
    pub vocab: Vocab,
    /// Fitted over all entity descriptions.
    pub desc_tfidf: TfidfModel,
    /// Fitted over the word bags of all predicates.
    pub rel_tfidf: TfidfModel,
}

impl FeatureSpace {
    pub fn build(kb: &Kb, training: &[QaExample], max_terms: usize) -> Result<Self> {
        let tokenizer = Tokenizer;
        let mut words: BTreeSet<String> = BTreeSet::new();
        let mut desc_corpus: Vec<Vec<String>> = Vec::new();
        for entity in kb.entities() {
            for name in &entity.names {
                words.extend(tokenizer.tokenize(name));
            }
            if let Some(d) = &entity.description {
                let toks = tokenizer.tokenize(d);
                words.extend(toks.iter().cloned());
                desc_corpus.push(toks);
            }
        }
        let rel_corpus: Vec<Vec<String>> = kb.predicates().into_iter().map(predicate_words).collect();
        for bag in &rel_corpus {
            words.extend(bag.iter().cloned());
        }
        for ex in training {
            words.extend(tokenizer.tokenize(&ex.question));
        }
        words.remove(crate::fofe::UNK);
        words.remove(ENTITY_TOKEN);

        let vocab = Vocab::new(std::iter::once(ENTITY_TOKEN.to_string()).chain(words));
        Ok(FeatureSpace {
            tokenizer,
            vocab,
            desc_tfidf: fit_or_empty(&desc_corpus, max_terms)?,
            rel_tfidf: fit_or_empty(&rel_corpus, max_terms)?,
        })
    }

    pub fn ids(&self, tokens: &[String]) -> Vec<usize> {
        self.vocab.ids(tokens)
    }

    pub fn relation_tfidf(&self, chain: &Chain) -> Vec<f64> {
        self.rel_tfidf.transform(&chain_words(chain))
    }

    /// Width of the entity feature block.
    pub fn entity_feature_dim(&self) -> usize {
        FACT_BUCKETS + self.desc_tfidf.dim() + self.rel_tfidf.dim()
    }
}

fn fit_or_empty(corpus: &[Vec<String>], max_terms: usize) -> Result<TfidfModel> {
    if corpus.is_empty() {
        TfidfModel::fit(&[Vec::<String>::new()], max_terms)
    } else {
        TfidfModel::fit(corpus, max_terms)
    }
}

/// Memoized per-entity feature vectors.
#[derive(Debug, Default)]
pub struct EntityFeatureCache {
    map: HashMap<String, Vec<f64>>,
}

impl EntityFeatureCache {
    pub fn get(&mut self, id: &str, kb: &Kb, space: &FeatureSpace) -> Result<&[f64]> {
        if !self.map.contains_key(id) {
            let v = crate::linker::build_entity_features(id, kb, space)?;
            self.map.insert(id.to_string(), v);
        }
        Ok(&self.map[id])
    }
}
