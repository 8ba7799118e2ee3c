use std::collections::BTreeSet;
use std::sync::OnceLock;

use proptest::prelude::*;

use fofeqa::answer::{aggregate, select_pairs, top_tied};
use fofeqa::config::RunConfig;
use fofeqa::dataset::ingest_str;
use fofeqa::eval::{evaluate, MetricsReport};
use fofeqa::features::Tokenizer;
use fofeqa::pipeline::{Pipeline, TrainingContext};
use fofeqa::toy::{generate_toy, ToyData};

fn trained() -> &'static (ToyData, Pipeline) {
    static CELL: OnceLock<(ToyData, Pipeline)> = OnceLock::new();
    CELL.get_or_init(|| {
        let toy = generate_toy(3);
        let config = RunConfig {
            seed: 3,
            ..RunConfig::default()
        };
        let (p, _) = Pipeline::train(toy.kb(), &toy.train, config).unwrap();
        (toy, p)
    })
}

fn question(i: usize) -> &'static str {
    let (toy, _) = trained();
    let all: Vec<_> = toy.all_questions().collect();
    &all[i % all.len()].question
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Raising the threshold only ever removes mentions.
    #[test]
    fn higher_theta_keeps_a_subset(i in 0usize..200, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (_, p) = trained();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let tokens = Tokenizer.tokenize(question(i));
        let ids = p.space.ids(&tokens);
        let spans = |t| -> BTreeSet<_> {
            p.mention.detect(&tokens, &ids, &p.kb, t).unwrap().into_iter().map(|m| m.span).collect()
        };
        prop_assert!(spans(hi).is_subset(&spans(lo)));
    }

    // Keeping fewer pairs keeps a prefix of the longer list.
    #[test]
    fn top_n_is_a_prefix(i in 0usize..200, n in 1usize..6, extra in 0usize..20) {
        let (_, p) = trained();
        let set = p.answer(question(i)).unwrap();
        let short = select_pairs(&set.entities, &p.relation, &p.kb, &p.space, n).unwrap();
        let long = select_pairs(&set.entities, &p.relation, &p.kb, &p.space, n + extra).unwrap();
        prop_assert!(short.len() <= n);
        prop_assert_eq!(&long[..short.len()], &short[..]);
    }

    // Adding the same constant to every rerank score shifts pair scores by
    // that constant and leaves their order alone.
    #[test]
    fn rerank_shift_keeps_pair_order(i in 0usize..200, shift in -8i32..8) {
        let (_, p) = trained();
        let c = shift as f64 * 0.25;
        let set = p.answer(question(i)).unwrap();
        let mut shifted = set.entities.clone();
        for e in &mut shifted {
            e.rerank_score += c;
        }
        let n = 50;
        let base = select_pairs(&set.entities, &p.relation, &p.kb, &p.space, n).unwrap();
        let moved = select_pairs(&shifted, &p.relation, &p.kb, &p.space, n).unwrap();
        let key = |v: &[fofeqa::answer::PairCandidate]| -> Vec<_> {
            v.iter().map(|x| (x.entity.clone(), x.chain.clone())).collect()
        };
        prop_assert_eq!(key(&base), key(&moved));
        for (a, b) in base.iter().zip(&moved) {
            prop_assert!((b.pair_score - a.pair_score - c).abs() < 1e-9);
        }
    }
}

#[test]
fn constraints_only_remove_answers() {
    let (toy, p) = trained();
    for q in toy.all_questions() {
        let set = p.answer(&q.question).unwrap();
        let before: BTreeSet<String> = top_tied(aggregate(&set.pairs, &p.kb).unwrap())
            .into_iter()
            .map(|a| a.id)
            .collect();
        assert!(set.ids().is_subset(&before), "{}", q.id);
        if set.constraints.is_empty() {
            assert_eq!(set.ids(), before, "{}", q.id);
        }
    }
}

#[test]
fn top_k_never_decreases() {
    let (toy, p) = trained();
    let ks = [1, 2, 3, 5, 10, 50];
    for split in [&toy.train, &toy.dev, &toy.test] {
        let r = MetricsReport::from_outcomes(&evaluate(split, p).unwrap(), &ks, 0);
        for w in r.top_k.windows(2) {
            assert!(w[0].1 <= w[1].1, "{:?}", r.top_k);
        }
        assert!(r.pair_accuracy <= r.top_k[0].1 + 1e-12);
    }
}

#[test]
fn evaluation_keeps_input_order() {
    let (toy, p) = trained();
    let outcomes = evaluate(&toy.test, p).unwrap();
    let ids: Vec<_> = outcomes.iter().map(|o| o.id.clone()).collect();
    let want: Vec<_> = toy.test.iter().map(|q| q.id.clone()).collect();
    assert_eq!(ids, want);
}

#[test]
fn saved_models_answer_like_the_original() {
    let (toy, p) = trained();
    let dir = tempfile::tempdir().unwrap();
    p.save(dir.path()).unwrap();
    let ctx = TrainingContext::new(toy.kb(), &toy.train, p.config.clone()).unwrap();
    let loaded = ctx.load_pipeline(dir.path()).unwrap();
    for q in toy.test.iter().take(15) {
        assert_eq!(loaded.answer(&q.question).unwrap(), p.answer(&q.question).unwrap());
    }
}

#[test]
fn models_do_not_load_against_another_vocabulary() {
    let (toy, p) = trained();
    let dir = tempfile::tempdir().unwrap();
    p.save(dir.path()).unwrap();
    let other = generate_toy(11);
    let ctx = TrainingContext::new(toy.kb(), &other.train[..40], p.config.clone()).unwrap();
    assert!(ctx.load_pipeline(dir.path()).is_err());
}

#[test]
fn unknown_gold_entities_are_dropped() {
    let (_, p) = trained();
    let text = "who directed Night Market ?\tm.nope\t13\t25\tfilm.film.directed_by\n";
    let got = ingest_str(text, std::path::Path::new("x.tsv"), "x-", &p.kb).unwrap();
    assert!(got.examples.is_empty());
    assert_eq!(got.dropped.len(), 1);
    assert_eq!(got.total(), 1);
}

#[test]
fn unanswerable_questions_say_why() {
    let (_, p) = trained();
    let set = p.answer("what is the airspeed of an unladen swallow ?").unwrap();
    assert!(set.is_empty());
    assert!(set.reason.is_some());
}
