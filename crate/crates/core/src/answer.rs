//! Final answer selection: subject-relation pairs, score aggregation and
//! temporal / type / ordinal pruning.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::dataset::QaExample;
use crate::error::Result;
use crate::features::Tokenizer;
use crate::kb::{Chain, ConstraintTable, Kb};
use crate::linker::{self, EntityCandidate};
use crate::mention::MentionCandidate;
use crate::pipeline::Pipeline;
use crate::relation::RelationDetector;
use crate::space::{EntityFeatureCache, FeatureSpace};

const PAST_KEYWORDS: &[&str] = &["was", "were", "did"];
const FROM_SUFFIX: &str = ".from";
const TO_SUFFIX: &str = ".to";

fn is_date_predicate(p: &str) -> bool {
    p.ends_with(FROM_SUFFIX) || p.ends_with(TO_SUFFIX)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairCandidate {
    pub entity: String,
    pub chain: Chain,
    pub fact_count: usize,
    pub rerank_score: f64,
    pub rel_score: f64,
    pub pair_score: f64,
}

/// Pair score descending, then more facts, then `(entity, chain)`.
pub fn pair_order(a: &PairCandidate, b: &PairCandidate) -> Ordering {
    b.pair_score
        .total_cmp(&a.pair_score)
        .then(b.fact_count.cmp(&a.fact_count))
        .then_with(|| a.entity.cmp(&b.entity))
        .then_with(|| a.chain.cmp(&b.chain))
}

/// Scores every (entity, chain) pair of the reranked candidates and keeps
/// the best `n`. Each candidate is scored against its own pattern.
pub fn select_pairs(
    candidates: &[EntityCandidate],
    relation: &RelationDetector,
    kb: &Kb,
    space: &FeatureSpace,
    n: usize,
) -> Result<Vec<PairCandidate>> {
    let mut pairs = Vec::new();
    for c in candidates {
        let codes = relation.codes(&c.pattern, space);
        for chain in kb.relations_of(&c.entity)? {
            let rel_score = relation.score_codes(&codes, &chain, space)?;
            pairs.push(PairCandidate {
                entity: c.entity.clone(),
                fact_count: c.fact_count,
                rerank_score: c.rerank_score,
                rel_score,
                pair_score: c.rerank_score + rel_score,
                chain,
            });
        }
    }
    pairs.sort_by(pair_order);
    pairs.truncate(n);
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Constraint {
    TemporalPast,
    OrdinalFirst,
    OrdinalLast,
    Type(String),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::TemporalPast => f.write_str("temporal-past"),
            Constraint::OrdinalFirst => f.write_str("ordinal-first"),
            Constraint::OrdinalLast => f.write_str("ordinal-last"),
            Constraint::Type(v) => write!(f, "type:{v}"),
        }
    }
}

/// Keyword and type constraints for a question, given the chains that
/// produced its answers.
pub fn detect_constraints<S: AsRef<str>>(tokens: &[S], chains: &[Chain], table: &ConstraintTable) -> Vec<Constraint> {
    let words: BTreeSet<&str> = tokens.iter().map(AsRef::as_ref).collect();
    let mut out = Vec::new();
    if PAST_KEYWORDS.iter().any(|k| words.contains(k)) {
        out.push(Constraint::TemporalPast);
    }
    if words.contains("first") {
        out.push(Constraint::OrdinalFirst);
    }
    if words.contains("last") {
        out.push(Constraint::OrdinalLast);
    }

    // Most shared tokens wins; among those, the name with fewest tokens not
    // in the question. A tie on both means no type constraint.
    let names: BTreeSet<&String> = chains.iter().filter_map(|c| table.get(c)).flatten().collect();
    let mut best: Option<((usize, usize), &String)> = None;
    let mut tied = false;
    for name in names {
        let name_tokens: BTreeSet<String> = Tokenizer.tokenize(name).into_iter().collect();
        let shared = name_tokens.iter().filter(|t| words.contains(t.as_str())).count();
        if shared == 0 {
            continue;
        }
        let key = (shared, name_tokens.len() - shared);
        match best {
            Some((b, _)) if key.0 < b.0 || (key.0 == b.0 && key.1 > b.1) => {}
            Some((b, _)) if key == b => tied = true,
            _ => {
                best = Some((key, name));
                tied = false;
            }
        }
    }
    if let (Some((_, name)), false) = (best, tied) {
        out.push(Constraint::Type(name.clone()));
    }
    out
}

/// Names attached to the mediator nodes of gold chains, keyed by chain.
/// The chain's own predicates and date literals are not type names.
pub fn build_constraint_table(examples: &[QaExample], kb: &Kb) -> Result<ConstraintTable> {
    let mut table = ConstraintTable::default();
    for ex in examples {
        if ex.chain.len() != 2 || !kb.contains(&ex.gold_entity) {
            continue;
        }
        for path in kb.execute_paths(&ex.gold_entity, &ex.chain)? {
            let mediator = &path[1];
            if !kb.is_mediator(mediator) {
                continue;
            }
            for fact in kb.facts_of(mediator) {
                if ex.chain.predicates().contains(&fact.predicate) || is_date_predicate(&fact.predicate) {
                    continue;
                }
                if let Ok(e) = kb.entity(&fact.object) {
                    for name in &e.names {
                        table.insert(ex.chain.clone(), name.clone());
                    }
                }
            }
        }
    }
    Ok(table)
}

/// One pair's contribution to an answer.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    pub entity: String,
    pub chain: Chain,
    pub pair_score: f64,
    /// KB paths `[entity, .., answer]` realizing this answer.
    pub paths: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub id: String,
    pub score: f64,
    pub support: Vec<Support>,
}

impl Answer {
    /// Nodes that may carry qualifiers: everything on a path after the
    /// subject entity.
    fn qualifier_nodes(&self) -> BTreeSet<&str> {
        self.support
            .iter()
            .flat_map(|s| &s.paths)
            .flat_map(|p| p.iter().skip(1))
            .map(String::as_str)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptyReason {
    /// No alias-matching span cleared the mention threshold.
    NoMention,
    /// Mentions were found but no linked entity has any relation.
    NoKbMatch,
    /// Constraints removed every answer.
    Pruned,
}

impl EmptyReason {
    pub fn code(self) -> &'static str {
        match self {
            EmptyReason::NoMention => "no-mention",
            EmptyReason::NoKbMatch => "no-kb-match",
            EmptyReason::Pruned => "pruned",
        }
    }
}

/// Final answers with the intermediate stages that produced them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnswerSet {
    /// Score descending, then id.
    pub answers: Vec<Answer>,
    pub constraints: Vec<Constraint>,
    pub reason: Option<EmptyReason>,
    pub mentions: Vec<MentionCandidate>,
    pub entities: Vec<EntityCandidate>,
    pub pairs: Vec<PairCandidate>,
}

impl AnswerSet {
    pub fn ids(&self) -> BTreeSet<String> {
        self.answers.iter().map(|a| a.id.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn top_score(&self) -> Option<f64> {
        self.answers.first().map(|a| a.score)
    }

    /// `question_id \t answers \t score \t constraints`
    pub fn to_tsv_line(&self, question_id: &str) -> String {
        let ids: Vec<String> = self.ids().into_iter().collect();
        let constraints: Vec<String> = self.constraints.iter().map(|c| c.to_string()).collect();
        format!(
            "{question_id}\t{}\t{}\t{}",
            ids.join(","),
            self.top_score().unwrap_or(0.0),
            if constraints.is_empty() {
                "-".to_string()
            } else {
                constraints.join(",")
            }
        )
    }
}

fn answer_order(a: &Answer, b: &Answer) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id))
}

/// Executes every pair and sums pair scores per reached answer.
pub fn aggregate(pairs: &[PairCandidate], kb: &Kb) -> Result<Vec<Answer>> {
    let mut by_id: BTreeMap<String, Answer> = BTreeMap::new();
    for pair in pairs {
        let mut paths_by_answer: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
        for path in kb.execute_paths(&pair.entity, &pair.chain)? {
            let end = path.last().expect("non-empty path").clone();
            paths_by_answer.entry(end).or_default().push(path);
        }
        for (id, paths) in paths_by_answer {
            let a = by_id.entry(id.clone()).or_insert_with(|| Answer {
                id,
                score: 0.0,
                support: Vec::new(),
            });
            a.score += pair.pair_score;
            a.support.push(Support {
                entity: pair.entity.clone(),
                chain: pair.chain.clone(),
                pair_score: pair.pair_score,
                paths,
            });
        }
    }
    let mut answers: Vec<Answer> = by_id.into_values().collect();
    answers.sort_by(answer_order);
    Ok(answers)
}

/// Keeps the answers tied at the top score.
pub fn top_tied(answers: Vec<Answer>) -> Vec<Answer> {
    let Some(best) = answers.iter().map(|a| a.score).max_by(f64::total_cmp) else {
        return answers;
    };
    answers.into_iter().filter(|a| a.score == best).collect()
}

fn literals<'a>(kb: &'a Kb, nodes: &BTreeSet<&str>, suffix: &str) -> Vec<&'a str> {
    nodes
        .iter()
        .flat_map(|n| kb.facts_of(n))
        .filter(|f| f.predicate.ends_with(suffix))
        .map(|f| f.object.as_str())
        .collect()
}

fn connected_to(kb: &Kb, nodes: &BTreeSet<&str>, value: &str) -> bool {
    let want = Tokenizer.normalize(value);
    nodes.iter().flat_map(|n| kb.facts_of(n)).any(|f| {
        Tokenizer.normalize(&f.object) == want
            || kb
                .entity(&f.object)
                .map(|e| e.names.iter().any(|name| Tokenizer.normalize(name) == want))
                .unwrap_or(false)
    })
}

/// Filters answers by the constraints, temporal first, then type, then
/// ordinal. Scores are left as they are.
pub fn apply_constraints(answers: Vec<Answer>, constraints: &[Constraint], kb: &Kb) -> Vec<Answer> {
    let mut out = answers;
    if constraints.contains(&Constraint::TemporalPast) {
        out.retain(|a| {
            let q = a.qualifier_nodes();
            let dated = !literals(kb, &q, FROM_SUFFIX).is_empty() || !literals(kb, &q, TO_SUFFIX).is_empty();
            !dated || !literals(kb, &q, TO_SUFFIX).is_empty()
        });
    }
    for c in constraints {
        if let Constraint::Type(value) = c {
            out.retain(|a| connected_to(kb, &a.qualifier_nodes(), value));
        }
    }
    for c in constraints {
        let want_max = match c {
            Constraint::OrdinalFirst => false,
            Constraint::OrdinalLast => true,
            _ => continue,
        };
        let keyed: Vec<(String, &Answer)> = out
            .iter()
            .filter_map(|a| {
                let lits = literals(kb, &a.qualifier_nodes(), FROM_SUFFIX);
                lits.into_iter().min().map(|k| (k.to_string(), a))
            })
            .collect();
        let pick = keyed
            .into_iter()
            .min_by(|(ka, a), (kb_, b)| {
                let by_key = if want_max { kb_.cmp(ka) } else { ka.cmp(kb_) };
                by_key.then_with(|| a.id.cmp(&b.id))
            })
            .map(|(_, a)| a.clone());
        out = pick.into_iter().collect();
    }
    out
}

/// Runs the whole pipeline on one question.
pub fn answer_question(question: &str, p: &Pipeline) -> Result<AnswerSet> {
    let cfg = &p.config;
    let tokens = p.space.tokenizer.tokenize(question);
    let ids = p.space.ids(&tokens);
    let mut set = AnswerSet {
        mentions: p.mention.detect(&tokens, &ids, &p.kb, cfg.theta)?,
        ..AnswerSet::default()
    };
    if set.mentions.is_empty() {
        set.reason = Some(EmptyReason::NoMention);
        return Ok(set);
    }

    let mut cache = EntityFeatureCache::default();
    let mut linked = Vec::new();
    for m in &set.mentions {
        linked.extend(
            p.linker
                .link_candidates(&ids, &tokens, m, &p.kb, &p.space, &mut cache, cfg.candidate_cap)?,
        );
    }
    let ranked = linker::rerank(linked, &p.relation, &p.kb, &p.space, cfg.rerank_weights)?;
    set.entities = linker::dedup_entities(ranked);
    set.pairs = select_pairs(&set.entities, &p.relation, &p.kb, &p.space, cfg.top_n)?;
    if set.pairs.is_empty() {
        set.reason = Some(EmptyReason::NoKbMatch);
        return Ok(set);
    }

    let answers = top_tied(aggregate(&set.pairs, &p.kb)?);
    let chains: Vec<Chain> = answers
        .iter()
        .flat_map(|a| a.support.iter().map(|s| s.chain.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    // Keywords are looked for outside the mention, so an entity called
    // "Last Orbit" does not turn into an ordinal constraint.
    let pattern = set
        .entities
        .iter()
        .find(|c| c.entity == set.pairs[0].entity)
        .map(|c| c.pattern.tokens().to_vec())
        .unwrap_or(tokens);
    set.constraints = detect_constraints(&pattern, &chains, &p.constraints);
    set.answers = apply_constraints(answers, &set.constraints, &p.kb);
    if set.answers.is_empty() {
        set.reason = Some(EmptyReason::Pruned);
    }
    Ok(set)
}
