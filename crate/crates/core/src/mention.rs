//! Topic mention detection: every short span of the question is scored by a
//! FOFE network, spans without a knowledge-base alias are discarded, and the
//! survivors above a probability threshold are returned.

use std::cmp::Ordering;

use rand::SeedableRng;

use crate::config::RunConfig;
use crate::dataset::Prepared;
use crate::error::{Error, Result};
use crate::fofe::SparseCode;
use crate::kb::Kb;
use crate::neural::{sigmoid, train_binary, BinaryItem, EpochStats, FofeNet, ModelKind, NetInput, TrainRng};
use crate::space::FeatureSpace;

/// Token span `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn check(&self, n_tokens: usize) -> Result<()> {
        if self.start < self.end && self.end <= n_tokens {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "span {}..{} invalid for {n_tokens} tokens",
                self.start, self.end
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MentionCandidate {
    pub span: Span,
    /// Covered tokens joined by single spaces; this is the alias key.
    pub text: String,
    pub prob: f64,
}

/// All spans of length `1..=max_span`, shortest first, left to right.
pub fn enumerate_spans(n_tokens: usize, max_span: usize) -> Vec<Span> {
    let mut out = Vec::new();
    for len in 1..=max_span.min(n_tokens) {
        for start in 0..=n_tokens - len {
            out.push(Span::new(start, start + len));
        }
    }
    out
}

/// Normalized text of a span, as used for alias lookup.
pub fn span_text<S: AsRef<str>>(tokens: &[S], span: Span) -> String {
    tokens[span.start..span.end]
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Network input for one span: left context with and without the span,
/// right context reversed with and without the span, and the span itself.
pub fn span_input(ids: &[usize], span: Span, alpha: f64) -> NetInput {
    NetInput {
        codes: vec![
            SparseCode::encode(&ids[..span.end], alpha),
            SparseCode::encode(&ids[..span.start], alpha),
            SparseCode::encode_reversed(&ids[span.start..], alpha),
            SparseCode::encode_reversed(&ids[span.end..], alpha),
            SparseCode::encode(&ids[span.start..span.end], alpha),
        ],
        dense: Vec::new(),
    }
}

pub const MENTION_CODES: usize = 5;

/// Total order on detected mentions: probability descending, longer span
/// first, then leftmost.
pub fn candidate_order(a: &MentionCandidate, b: &MentionCandidate) -> Ordering {
    b.prob
        .total_cmp(&a.prob)
        .then(b.span.len().cmp(&a.span.len()))
        .then(a.span.start.cmp(&b.span.start))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MentionDetector {
    net: Option<FofeNet>,
    alpha: f64,
    max_span: usize,
}

impl MentionDetector {
    /// A detector with no trained network yet.
    pub fn untrained(alpha: f64, max_span: usize) -> Self {
        MentionDetector {
            net: None,
            alpha,
            max_span,
        }
    }

    pub fn with_net(net: FofeNet, alpha: f64, max_span: usize) -> Result<Self> {
        if net.n_codes() != MENTION_CODES || net.dense_dim() != 0 {
            return Err(Error::InvalidParameter(
                "network shape does not fit the mention features".into(),
            ));
        }
        Ok(MentionDetector {
            net: Some(net),
            alpha,
            max_span,
        })
    }

    pub fn net(&self) -> Option<&FofeNet> {
        self.net.as_ref()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn max_span(&self) -> usize {
        self.max_span
    }

    fn trained(&self) -> Result<&FofeNet> {
        self.net
            .as_ref()
            .ok_or_else(|| Error::Uninitialized("mention detector has no trained network".into()))
    }

    /// Probability that `span` is the topic mention. Always in the open
    /// interval (0, 1).
    pub fn score_span(&self, ids: &[usize], span: Span) -> Result<f64> {
        span.check(ids.len())?;
        let z = self.trained()?.score(&span_input(ids, span, self.alpha))?;
        Ok(sigmoid(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))
    }

    /// KB-matching spans with probability above `theta`, best first.
    pub fn detect(&self, tokens: &[String], ids: &[usize], kb: &Kb, theta: f64) -> Result<Vec<MentionCandidate>> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta must be in [0, 1], got {theta}")));
        }
        let mut out = Vec::new();
        for span in enumerate_spans(tokens.len(), self.max_span) {
            let text = span_text(tokens, span);
            if !kb.has_alias(&text) {
                continue;
            }
            let prob = self.score_span(ids, span)?;
            if prob > theta {
                out.push(MentionCandidate { span, text, prob });
            }
        }
        out.sort_by(candidate_order);
        Ok(out)
    }

    pub fn train(
        examples: &[Prepared],
        kb: &Kb,
        space: &FeatureSpace,
        cfg: &RunConfig,
    ) -> Result<(Self, Vec<EpochStats>)> {
        let m = &cfg.mention;
        let train_cfg = cfg.train_config(ModelKind::Mention);
        let mut rng = TrainRng::seed_from_u64(train_cfg.seed);
        let mut net = FofeNet::new(
            space.vocab.len(),
            m.embedding_dim,
            MENTION_CODES,
            0,
            &m.hidden(),
            m.dropout,
            &mut rng,
        )?;
        let items: Vec<BinaryItem> = examples
            .iter()
            .map(|p| mention_item(p, kb, space, m.alpha, cfg.max_span))
            .collect();
        let history = train_binary(&mut net, &items, &train_cfg, cfg.mention_pool)?;
        Ok((MentionDetector::with_net(net, m.alpha, cfg.max_span)?, history))
    }
}

/// Gold span positive, other alias-matching spans as hard negatives, every
/// remaining span in the sampling pool.
fn mention_item(p: &Prepared, kb: &Kb, space: &FeatureSpace, alpha: f64, max_span: usize) -> BinaryItem {
    let ids = space.ids(&p.tokens);
    let mut item = BinaryItem::default();
    for span in enumerate_spans(ids.len(), max_span.max(p.span.len())) {
        let input = span_input(&ids, span, alpha);
        if span == p.span {
            item.positives.push(input);
        } else if span.len() <= max_span && kb.has_alias(&span_text(&p.tokens, span)) {
            item.negatives.push(input);
        } else if span.len() <= max_span {
            item.pool.push(input);
        }
    }
    item
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::EmbeddingTable;
    use crate::neural::{Dense, Mlp};

    #[test]
    fn span_enumeration() {
        let got = enumerate_spans(3, 2);
        let want: Vec<Span> = [(0, 1), (1, 2), (2, 3), (0, 2), (1, 3)]
            .iter()
            .map(|&(s, e)| Span::new(s, e))
            .collect();
        assert_eq!(got, want);
        assert_eq!(enumerate_spans(1, 7).len(), 1);
        assert_eq!(enumerate_spans(6, 9).len(), 21);
        assert!(enumerate_spans(0, 3).is_empty());
    }

    fn zero_detector(vocab: usize) -> MentionDetector {
        let emb = EmbeddingTable::zeros(vocab, 2);
        let mlp = Mlp::from_layers(vec![Dense::zeros(10, 1)], 0.0).unwrap();
        MentionDetector::with_net(FofeNet::from_parts(emb, mlp, 5, 0).unwrap(), 0.5, 7).unwrap()
    }

    #[test]
    fn zero_logit_is_even_odds() {
        let d = zero_detector(4);
        assert_eq!(d.score_span(&[1, 2, 3], Span::new(1, 2)).unwrap(), 0.5);
        assert!(d.score_span(&[1, 2, 3], Span::new(2, 5)).is_err());
    }

    #[test]
    fn untrained_detector_errors() {
        let d = MentionDetector::untrained(0.5, 7);
        assert!(matches!(
            d.score_span(&[1], Span::new(0, 1)),
            Err(Error::Uninitialized(_))
        ));
    }

    #[test]
    fn span_codes_split_the_question() {
        let ids = [1, 2, 3, 4];
        let x = span_input(&ids, Span::new(1, 3), 0.5);
        assert_eq!(x.codes[0], SparseCode::encode(&[1, 2, 3], 0.5));
        assert_eq!(x.codes[1], SparseCode::encode(&[1], 0.5));
        assert_eq!(x.codes[2], SparseCode::encode(&[4, 3, 2], 0.5));
        assert_eq!(x.codes[3], SparseCode::encode(&[4], 0.5));
        assert_eq!(x.codes[4], SparseCode::encode(&[2, 3], 0.5));

        let whole = span_input(&ids, Span::new(0, 4), 0.5);
        assert!(whole.codes[1].is_empty() && whole.codes[3].is_empty());
    }

    #[test]
    fn ordering_is_total() {
        let c = |s, e, p| MentionCandidate {
            span: Span::new(s, e),
            text: String::new(),
            prob: p,
        };
        let mut v = [c(3, 4, 0.8), c(0, 1, 0.8), c(1, 3, 0.8), c(0, 1, 0.9)];
        v.sort_by(candidate_order);
        let spans: Vec<(usize, usize)> = v.iter().map(|m| (m.span.start, m.span.end)).collect();
        assert_eq!(spans, [(0, 1), (1, 3), (0, 1), (3, 4)]);
    }
}
