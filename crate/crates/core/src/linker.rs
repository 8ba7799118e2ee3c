//! Entity linking: scores (question context, entity) pairs and re-ranks the
//! candidates with the mention probability and their best relation score.

use std::cmp::Ordering;

use rand::SeedableRng;

use crate::config::RunConfig;
use crate::dataset::Prepared;
use crate::error::{Error, Result};
use crate::features::{chain_words, EmbeddingTable};
use crate::fofe::SparseCode;
use crate::kb::{Kb, FACT_BUCKETS};
use crate::mention::{span_text, MentionCandidate, Span};
use crate::neural::{train_ranking, EpochStats, FofeNet, ModelKind, NetInput, RankingItem, TrainRng};
use crate::relation::{QuestionPattern, RelationDetector};
use crate::space::{EntityFeatureCache, FeatureSpace};

pub const LINKER_CODES: usize = 4;

/// The four context sequences around a mention. The right-hand ones are
/// stored already reversed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionContexts {
    pub left_incl: Vec<usize>,
    pub left_excl: Vec<usize>,
    pub right_incl: Vec<usize>,
    pub right_excl: Vec<usize>,
}

impl QuestionContexts {
    pub fn new(ids: &[usize], span: Span) -> Result<Self> {
        span.check(ids.len())?;
        Ok(QuestionContexts {
            left_incl: ids[..span.end].to_vec(),
            left_excl: ids[..span.start].to_vec(),
            right_incl: ids[span.start..].iter().rev().copied().collect(),
            right_excl: ids[span.end..].iter().rev().copied().collect(),
        })
    }

    pub fn codes(&self, alpha: f64) -> Vec<SparseCode> {
        [&self.left_incl, &self.left_excl, &self.right_incl, &self.right_excl]
            .into_iter()
            .map(|s| SparseCode::encode(s, alpha))
            .collect()
    }
}

/// Concatenated projections of the four context codes.
pub fn build_context_features(contexts: &QuestionContexts, alpha: f64, embedding: &EmbeddingTable) -> Vec<f64> {
    let d = embedding.dim();
    let mut out = vec![0.0; LINKER_CODES * d];
    for (k, code) in contexts.codes(alpha).iter().enumerate() {
        code.project_into(embedding, &mut out[k * d..(k + 1) * d]);
    }
    out
}

/// Fact-count one-hot, description TF-IDF and pooled relation TF-IDF.
pub fn build_entity_features(id: &str, kb: &Kb, space: &FeatureSpace) -> Result<Vec<f64>> {
    let entity = kb.entity(id)?;
    let mut out = Vec::with_capacity(space.entity_feature_dim());
    out.extend_from_slice(&kb.fact_count_feature(id)?);
    match &entity.description {
        Some(d) => out.extend(space.desc_tfidf.transform(&space.tokenizer.tokenize(d))),
        None => out.extend(std::iter::repeat_n(0.0, space.desc_tfidf.dim())),
    }
    let words: Vec<String> = kb.relations_of(id)?.iter().flat_map(chain_words).collect();
    out.extend(space.rel_tfidf.transform(&words));
    debug_assert_eq!(out.len(), FACT_BUCKETS + space.desc_tfidf.dim() + space.rel_tfidf.dim());
    Ok(out)
}

/// A linked entity with its score breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityCandidate {
    pub entity: String,
    pub fact_count: usize,
    /// The mention this candidate was reached from.
    pub span: Span,
    pub pattern: QuestionPattern,
    pub mention_prob: f64,
    pub link_score: f64,
    /// Best relation score over the entity's chains, 0 when it has none.
    pub relation_score: f64,
    pub rerank_score: f64,
}

/// Rerank score descending, then more facts, then entity id.
pub fn candidate_order(a: &EntityCandidate, b: &EntityCandidate) -> Ordering {
    b.rerank_score
        .total_cmp(&a.rerank_score)
        .then(b.fact_count.cmp(&a.fact_count))
        .then_with(|| a.entity.cmp(&b.entity))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityLinker {
    net: Option<FofeNet>,
    alpha: f64,
}

impl EntityLinker {
    pub fn untrained(alpha: f64) -> Self {
        EntityLinker { net: None, alpha }
    }

    pub fn with_net(net: FofeNet, alpha: f64) -> Result<Self> {
        if net.n_codes() != LINKER_CODES {
            return Err(Error::InvalidParameter(
                "network shape does not fit the linker features".into(),
            ));
        }
        Ok(EntityLinker { net: Some(net), alpha })
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
            .ok_or_else(|| Error::Uninitialized("entity linker has no trained network".into()))
    }

    pub fn input(codes: &[SparseCode], entity_features: &[f64]) -> NetInput {
        NetInput {
            codes: codes.to_vec(),
            dense: entity_features.to_vec(),
        }
    }

    pub fn link_score(&self, contexts: &QuestionContexts, entity: &str, kb: &Kb, space: &FeatureSpace) -> Result<f64> {
        let features = build_entity_features(entity, kb, space)?;
        self.trained()?
            .score(&Self::input(&contexts.codes(self.alpha), &features))
    }

    /// Link scores for every lookup candidate of `mention`, unsorted.
    #[allow(clippy::too_many_arguments)]
    pub fn link_candidates(
        &self,
        ids: &[usize],
        tokens: &[String],
        mention: &MentionCandidate,
        kb: &Kb,
        space: &FeatureSpace,
        cache: &mut EntityFeatureCache,
        cap: usize,
    ) -> Result<Vec<EntityCandidate>> {
        let net = self.trained()?;
        let codes = QuestionContexts::new(ids, mention.span)?.codes(self.alpha);
        let pattern = crate::relation::make_pattern(tokens, mention.span)?;
        let mut out = Vec::new();
        for entity in kb.candidates(&mention.text, cap) {
            let features = cache.get(&entity.id, kb, space)?;
            out.push(EntityCandidate {
                entity: entity.id.clone(),
                fact_count: entity.fact_count,
                span: mention.span,
                pattern: pattern.clone(),
                mention_prob: mention.prob,
                link_score: net.score(&Self::input(&codes, features))?,
                relation_score: 0.0,
                rerank_score: 0.0,
            });
        }
        Ok(out)
    }

    pub fn train(
        examples: &[Prepared],
        kb: &Kb,
        space: &FeatureSpace,
        cfg: &RunConfig,
    ) -> Result<(Self, Vec<EpochStats>)> {
        let m = &cfg.linker;
        let train_cfg = cfg.train_config(ModelKind::Linker);
        let mut rng = TrainRng::seed_from_u64(train_cfg.seed);
        let mut net = FofeNet::new(
            space.vocab.len(),
            m.embedding_dim,
            LINKER_CODES,
            space.entity_feature_dim(),
            &m.hidden(),
            m.dropout,
            &mut rng,
        )?;
        let mut cache = EntityFeatureCache::default();
        let mut items = Vec::new();
        for p in examples {
            let text = span_text(&p.tokens, p.span);
            let candidates = kb.candidates(&text, cfg.candidate_cap);
            if candidates.is_empty() {
                log::warn!(
                    "{}: mention {text:?} has no knowledge-base match, skipped",
                    p.example.id
                );
                continue;
            }
            let codes = QuestionContexts::new(&space.ids(&p.tokens), p.span)?.codes(m.alpha);
            let gold = &p.example.gold_entity;
            let mut negatives = Vec::new();
            for c in candidates.iter().filter(|c| &c.id != gold) {
                negatives.push(Self::input(&codes, cache.get(&c.id, kb, space)?));
            }
            items.push(RankingItem {
                positive: Self::input(&codes, cache.get(gold, kb, space)?),
                negatives,
            });
        }
        let history = train_ranking(&mut net, &items, &train_cfg)?;
        Ok((EntityLinker::with_net(net, m.alpha)?, history))
    }
}

/// Fills in relation and rerank scores and sorts the candidates.
///
/// `rerank = w_m * p(mention) + w_l * link + w_r * max_r rel(pattern, r)`,
/// where the max over an entity with no relations is 0.
pub fn rerank(
    mut candidates: Vec<EntityCandidate>,
    relation: &RelationDetector,
    kb: &Kb,
    space: &FeatureSpace,
    weights: [f64; 3],
) -> Result<Vec<EntityCandidate>> {
    for c in candidates.iter_mut() {
        let chains = kb.relations_of(&c.entity)?;
        let codes = relation.codes(&c.pattern, space);
        let mut best: Option<f64> = None;
        for chain in &chains {
            let s = relation.score_codes(&codes, chain, space)?;
            best = Some(best.map_or(s, |b: f64| b.max(s)));
        }
        c.relation_score = best.unwrap_or(0.0);
        c.rerank_score = weights[0] * c.mention_prob + weights[1] * c.link_score + weights[2] * c.relation_score;
    }
    candidates.sort_by(candidate_order);
    Ok(candidates)
}

/// Keeps each entity once, from the mention that gives it the best rerank
/// score. Input must already be sorted by [`candidate_order`].
pub fn dedup_entities(sorted: Vec<EntityCandidate>) -> Vec<EntityCandidate> {
    let mut seen = std::collections::HashSet::new();
    sorted.into_iter().filter(|c| seen.insert(c.entity.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contexts_follow_the_span() {
        let c = QuestionContexts::new(&[1, 2, 3, 4, 5], Span::new(1, 3)).unwrap();
        assert_eq!(c.left_incl, [1, 2, 3]);
        assert_eq!(c.left_excl, [1]);
        assert_eq!(c.right_incl, [5, 4, 3, 2]);
        assert_eq!(c.right_excl, [5, 4]);

        let whole = QuestionContexts::new(&[1, 2], Span::new(0, 2)).unwrap();
        assert!(whole.left_excl.is_empty() && whole.right_excl.is_empty());
        let emb = EmbeddingTable::random(6, 3, &mut <TrainRng as SeedableRng>::seed_from_u64(0));
        let f = build_context_features(&whole, 0.9, &emb);
        assert_eq!(&f[3..6], &[0.0; 3]);
        assert_eq!(&f[9..12], &[0.0; 3]);
    }

    fn cand(id: &str, score: f64, facts: usize) -> EntityCandidate {
        EntityCandidate {
            entity: id.into(),
            fact_count: facts,
            span: Span::new(0, 1),
            pattern: crate::relation::make_pattern(&["x"], Span::new(0, 1)).unwrap(),
            mention_prob: 0.0,
            link_score: 0.0,
            relation_score: 0.0,
            rerank_score: score,
        }
    }

    #[test]
    fn ties_prefer_more_facts_then_id() {
        let mut v = [
            cand("m.b", 1.0, 2),
            cand("m.c", 1.0, 5),
            cand("m.a", 1.0, 2),
            cand("m.z", 3.0, 0),
        ];
        v.sort_by(candidate_order);
        let ids: Vec<&str> = v.iter().map(|c| c.entity.as_str()).collect();
        assert_eq!(ids, ["m.z", "m.c", "m.a", "m.b"]);
    }

    #[test]
    fn dedup_keeps_first() {
        let v = dedup_entities(vec![cand("m.a", 2.0, 0), cand("m.b", 1.5, 0), cand("m.a", 1.0, 0)]);
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].rerank_score, 2.0);
    }
}
