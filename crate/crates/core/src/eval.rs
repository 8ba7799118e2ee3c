//! Evaluation metrics and per-question reports.

use std::fmt::Write as _;
use std::thread;

use crate::answer::AnswerSet;
use crate::dataset::{Prepared, QaExample};
use crate::error::Result;
use crate::kb::Chain;
use crate::pipeline::Pipeline;
use crate::relation::make_pattern;

/// What happened to one question.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionOutcome {
    pub id: String,
    pub gold_entity: String,
    pub gold_chain: Chain,
    /// 1-based rank of the gold entity in the reranked entity list.
    pub link_rank: Option<usize>,
    /// Best chain of the gold entity for the gold-mention pattern.
    pub relation_chain: Option<Chain>,
    pub top_pair: Option<(String, Chain)>,
    pub answers: AnswerSet,
    pub answer_correct: bool,
}

impl QuestionOutcome {
    pub fn relation_correct(&self) -> bool {
        self.relation_chain.as_ref() == Some(&self.gold_chain)
    }

    pub fn pair_correct(&self) -> bool {
        self.top_pair
            .as_ref()
            .is_some_and(|(e, c)| *e == self.gold_entity && *c == self.gold_chain)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub n_input: usize,
    pub n_dropped: usize,
    pub n_evaluated: usize,
    /// `(K, accuracy)` for entity linking.
    pub top_k: Vec<(usize, f64)>,
    pub relation_accuracy: f64,
    pub pair_accuracy: f64,
    pub true_accuracy: f64,
    /// Mention candidates per gold mention.
    pub mention_ratio: f64,
}

fn frac(hits: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        hits as f64 / n as f64
    }
}

impl MetricsReport {
    pub fn from_outcomes(outcomes: &[QuestionOutcome], ks: &[usize], n_dropped: usize) -> Self {
        let n = outcomes.len();
        let count = |f: &dyn Fn(&QuestionOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
        MetricsReport {
            n_input: n + n_dropped,
            n_dropped,
            n_evaluated: n,
            top_k: ks
                .iter()
                .map(|&k| (k, frac(count(&|o| o.link_rank.is_some_and(|r| r <= k)), n)))
                .collect(),
            relation_accuracy: frac(count(&QuestionOutcome::relation_correct), n),
            pair_accuracy: frac(count(&QuestionOutcome::pair_correct), n),
            true_accuracy: frac(count(&|o| o.answer_correct), n),
            mention_ratio: frac(outcomes.iter().map(|o| o.answers.mentions.len()).sum(), n),
        }
    }

    fn rows(&self) -> Vec<(String, String)> {
        let mut rows = vec![
            ("questions".to_string(), self.n_input.to_string()),
            ("dropped".to_string(), self.n_dropped.to_string()),
            ("evaluated".to_string(), self.n_evaluated.to_string()),
        ];
        for (k, acc) in &self.top_k {
            rows.push((format!("linking_top_{k}"), format!("{acc:.4}")));
        }
        rows.push(("relation_accuracy".into(), format!("{:.4}", self.relation_accuracy)));
        rows.push(("pair_accuracy".into(), format!("{:.4}", self.pair_accuracy)));
        rows.push(("true_accuracy".into(), format!("{:.4}", self.true_accuracy)));
        rows.push(("mention_ratio".into(), format!("{:.4}", self.mention_ratio)));
        rows
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tvalue\n");
        for (k, v) in self.rows() {
            let _ = writeln!(out, "{k}\t{v}");
        }
        out
    }

    pub fn to_table(&self) -> String {
        let rows = self.rows();
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v:>8}");
        }
        out
    }
}

/// Evaluates one question.
pub fn evaluate_one(example: &QaExample, p: &Pipeline) -> Result<QuestionOutcome> {
    let answers = p.answer(&example.question)?;
    let link_rank = answers
        .entities
        .iter()
        .position(|c| c.entity == example.gold_entity)
        .map(|i| i + 1);
    let relation_chain = match Prepared::new(example, &p.space.tokenizer) {
        Ok(prep) => {
            let pattern = make_pattern(&prep.tokens, prep.span)?;
            let chains = p.kb.relations_of(&example.gold_entity)?;
            p.relation
                .rank_chains(&pattern, &chains, &p.space)?
                .into_iter()
                .next()
                .map(|(c, _)| c)
        }
        Err(_) => None,
    };
    Ok(QuestionOutcome {
        id: example.id.clone(),
        gold_entity: example.gold_entity.clone(),
        gold_chain: example.chain.clone(),
        link_rank,
        relation_chain,
        top_pair: answers.pairs.first().map(|pc| (pc.entity.clone(), pc.chain.clone())),
        answer_correct: answers.ids() == example.answers,
        answers,
    })
}

/// Evaluates every example, spreading questions over the available cores.
/// Outcomes come back in input order.
pub fn evaluate(examples: &[QaExample], p: &Pipeline) -> Result<Vec<QuestionOutcome>> {
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(examples.len().max(1));
    let chunk = examples.len().div_ceil(workers).max(1);
    let results: Vec<Result<Vec<QuestionOutcome>>> = thread::scope(|s| {
        let handles: Vec<_> = examples
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|e| evaluate_one(e, p)).collect()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("evaluation worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(examples.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// `question_id \t gold_entity \t rank` (rank 0 when the gold entity was not
/// among the candidates).
pub fn linking_tsv(outcomes: &[QuestionOutcome]) -> String {
    let mut out = String::new();
    for o in outcomes {
        let _ = writeln!(out, "{}\t{}\t{}", o.id, o.gold_entity, o.link_rank.unwrap_or(0));
    }
    out
}

/// `question_id \t predicted_chain \t gold_chain`
pub fn relation_tsv(outcomes: &[QuestionOutcome]) -> String {
    let mut out = String::new();
    for o in outcomes {
        let predicted = o.relation_chain.as_ref().map_or("-".to_string(), |c| c.to_string());
        let _ = writeln!(out, "{}\t{predicted}\t{}", o.id, o.gold_chain);
    }
    out
}

pub fn answers_tsv(outcomes: &[QuestionOutcome]) -> String {
    let mut out = String::new();
    for o in outcomes {
        out.push_str(&o.answers.to_tsv_line(&o.id));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(rank: Option<usize>) -> QuestionOutcome {
        QuestionOutcome {
            id: "q".into(),
            gold_entity: "m.a".into(),
            gold_chain: Chain::single("p"),
            link_rank: rank,
            relation_chain: Some(Chain::single("p")),
            top_pair: Some(("m.a".into(), Chain::single("q"))),
            answers: AnswerSet::default(),
            answer_correct: false,
        }
    }

    #[test]
    fn empty_report_has_zero_rates() {
        let r = MetricsReport::from_outcomes(&[], &[1, 5], 3);
        assert_eq!(r.n_input, 3);
        assert_eq!(r.top_k, [(1, 0.0), (5, 0.0)]);
        assert_eq!(r.pair_accuracy, 0.0);
        assert!(r.to_table().contains("dropped"));
    }

    #[test]
    fn top_k_counts_cumulatively() {
        let outs = [outcome(Some(1)), outcome(Some(3)), outcome(None), outcome(Some(2))];
        let r = MetricsReport::from_outcomes(&outs, &[1, 2, 3, 5], 0);
        let accs: Vec<f64> = r.top_k.iter().map(|x| x.1).collect();
        assert_eq!(accs, [0.25, 0.5, 0.75, 0.75]);
        assert_eq!(r.relation_accuracy, 1.0);
        assert_eq!(r.pair_accuracy, 0.0);
        assert!(r.to_tsv().starts_with("metric\tvalue\nquestions\t4\n"));
    }
}
