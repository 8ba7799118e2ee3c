//! Relation (inferential chain) detection over question patterns.

use std::cmp::Ordering;

use rand::SeedableRng;

use crate::config::RunConfig;
use crate::dataset::Prepared;
use crate::error::{Error, Result};
use crate::features::{chain_text, char_ngram_overlap, EmbeddingTable};
use crate::fofe::SparseCode;
use crate::kb::{Chain, Kb};
use crate::mention::Span;
use crate::neural::{train_ranking, EpochStats, FofeNet, ModelKind, NetInput, RankingItem, TrainRng};
use crate::space::FeatureSpace;

/// Placeholder standing in for the topic mention.
pub const ENTITY_TOKEN: &str = "<e>";

pub const RELATION_CODES: usize = 2;

/// Question tokens with the mention collapsed to [`ENTITY_TOKEN`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuestionPattern {
    tokens: Vec<String>,
}

impl QuestionPattern {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

pub fn make_pattern<S: AsRef<str>>(tokens: &[S], span: Span) -> Result<QuestionPattern> {
    span.check(tokens.len())?;
    let mut out: Vec<String> = tokens[..span.start].iter().map(|t| t.as_ref().to_string()).collect();
    out.push(ENTITY_TOKEN.to_string());
    out.extend(tokens[span.end..].iter().map(|t| t.as_ref().to_string()));
    Ok(QuestionPattern { tokens: out })
}

/// Pattern-side features, computed once and reused for every chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternCodes {
    pub forward: SparseCode,
    pub backward: SparseCode,
    pub text: String,
}

impl PatternCodes {
    pub fn new(pattern: &QuestionPattern, space: &FeatureSpace, alpha: f64) -> Self {
        let ids = space.ids(pattern.tokens());
        PatternCodes {
            forward: SparseCode::encode(&ids, alpha),
            backward: SparseCode::encode_reversed(&ids, alpha),
            text: pattern.text(),
        }
    }

    /// Network input for one chain.
    pub fn input(&self, chain: &Chain, space: &FeatureSpace) -> NetInput {
        let mut dense = space.relation_tfidf(chain);
        dense.push(chain_overlap(&self.text, chain));
        NetInput {
            codes: vec![self.forward.clone(), self.backward.clone()],
            dense,
        }
    }
}

fn chain_overlap(pattern_text: &str, chain: &Chain) -> f64 {
    if chain.is_empty() {
        0.0
    } else {
        char_ngram_overlap(pattern_text, &chain_text(chain))
    }
}

/// The full dense feature vector: projected forward and backward codes of
/// the pattern, the chain's TF-IDF vector and the trigram overlap.
pub fn relation_features(
    pattern: &QuestionPattern,
    chain: &Chain,
    alpha: f64,
    embedding: &EmbeddingTable,
    space: &FeatureSpace,
) -> Vec<f64> {
    let codes = PatternCodes::new(pattern, space, alpha);
    let d = embedding.dim();
    let mut out = vec![0.0; 2 * d];
    codes.forward.project_into(embedding, &mut out[..d]);
    codes.backward.project_into(embedding, &mut out[d..]);
    out.extend(codes.input(chain, space).dense);
    out
}

/// Score descending, then chain ascending.
pub fn chain_order(a: &(Chain, f64), b: &(Chain, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationDetector {
    net: Option<FofeNet>,
    alpha: f64,
}

impl RelationDetector {
    pub fn untrained(alpha: f64) -> Self {
        RelationDetector { net: None, alpha }
    }

    pub fn with_net(net: FofeNet, alpha: f64) -> Result<Self> {
        if net.n_codes() != RELATION_CODES {
            return Err(Error::InvalidParameter(
                "network shape does not fit the relation features".into(),
            ));
        }
        Ok(RelationDetector { net: Some(net), alpha })
    }

    pub fn net(&self) -> Option<&FofeNet> {
        self.net.as_ref()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn trained(&self) -> Result<&FofeNet> {
        self.net
            .as_ref()
            .ok_or_else(|| Error::Uninitialized("relation detector has no trained network".into()))
    }

    pub fn codes(&self, pattern: &QuestionPattern, space: &FeatureSpace) -> PatternCodes {
        PatternCodes::new(pattern, space, self.alpha)
    }

    pub fn rel_score(&self, pattern: &QuestionPattern, chain: &Chain, space: &FeatureSpace) -> Result<f64> {
        self.score_codes(&self.codes(pattern, space), chain, space)
    }

    pub fn score_codes(&self, codes: &PatternCodes, chain: &Chain, space: &FeatureSpace) -> Result<f64> {
        self.trained()?.score(&codes.input(chain, space))
    }

    /// Every chain with its score, best first.
    pub fn rank_chains<'c>(
        &self,
        pattern: &QuestionPattern,
        chains: impl IntoIterator<Item = &'c Chain>,
        space: &FeatureSpace,
    ) -> Result<Vec<(Chain, f64)>> {
        let codes = self.codes(pattern, space);
        let mut out = chains
            .into_iter()
            .map(|c| Ok((c.clone(), self.score_codes(&codes, c, space)?)))
            .collect::<Result<Vec<_>>>()?;
        out.sort_by(chain_order);
        Ok(out)
    }

    pub fn train(
        examples: &[Prepared],
        kb: &Kb,
        space: &FeatureSpace,
        cfg: &RunConfig,
    ) -> Result<(Self, Vec<EpochStats>)> {
        let m = &cfg.relation;
        let train_cfg = cfg.train_config(ModelKind::Relation);
        let mut rng = TrainRng::seed_from_u64(train_cfg.seed);
        let mut net = FofeNet::new(
            space.vocab.len(),
            m.embedding_dim,
            RELATION_CODES,
            space.rel_tfidf.dim() + 1,
            &m.hidden(),
            m.dropout,
            &mut rng,
        )?;
        let mut items = Vec::new();
        for p in examples {
            let gold = &p.example.chain;
            let chains = kb.relations_of(&p.example.gold_entity)?;
            if !chains.contains(gold) {
                log::warn!(
                    "{}: gold chain {gold} not among the entity's relations, skipped",
                    p.example.id
                );
                continue;
            }
            let codes = PatternCodes::new(&make_pattern(&p.tokens, p.span)?, space, m.alpha);
            items.push(RankingItem {
                positive: codes.input(gold, space),
                negatives: chains
                    .iter()
                    .filter(|c| *c != gold)
                    .map(|c| codes.input(c, space))
                    .collect(),
            });
        }
        let history = train_ranking(&mut net, &items, &train_cfg)?;
        Ok((RelationDetector::with_net(net, m.alpha)?, history))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_string).collect()
    }

    #[test]
    fn pattern_replaces_the_span() {
        let t = toks("which songs have robert lamm written lyrics to ?");
        let p = make_pattern(&t, Span::new(3, 5)).unwrap();
        assert_eq!(p.text(), "which songs have <e> written lyrics to ?");
        let whole = make_pattern(&t, Span::new(0, t.len())).unwrap();
        assert_eq!(whole.tokens(), ["<e>"]);
        assert!(make_pattern(&t, Span::new(4, 4)).is_err());
    }

    #[test]
    fn empty_chain_has_no_overlap() {
        let empty = Chain::default();
        assert_eq!(chain_overlap("who wrote <e>", &empty), 0.0);
    }

    #[test]
    fn chain_order_breaks_ties_by_chain() {
        let mut v = [
            (Chain::single("b"), 1.0),
            (Chain::single("a"), 1.0),
            (Chain::single("c"), 2.0),
        ];
        v.sort_by(chain_order);
        let names: Vec<String> = v.iter().map(|(c, _)| c.to_string()).collect();
        assert_eq!(names, ["c", "a", "b"]);
    }
}
