//! Trains all three detectors on the generated toy set and reports metrics
//! on the training and held-out splits.
//!
//!     cargo run --release --example train_toy -- [seed]

use std::time::Instant;

use fofeqa::config::RunConfig;
use fofeqa::eval::{evaluate, MetricsReport};
use fofeqa::pipeline::Pipeline;
use fofeqa::toy::generate_toy;

fn main() -> fofeqa::Result<()> {
    env_logger::init();
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let toy = generate_toy(seed);
    let config = RunConfig {
        seed,
        ..RunConfig::default()
    };

    let t = Instant::now();
    let (pipeline, report) = Pipeline::train(toy.kb(), &toy.train, config.clone())?;
    println!("trained in {:.1}s", t.elapsed().as_secs_f64());
    for (name, h) in [
        ("mention", &report.mention),
        ("linker", &report.linker),
        ("relation", &report.relation),
    ] {
        let first = h.first().map_or(0.0, |e| e.loss);
        let last = h.last().map_or(0.0, |e| e.loss);
        println!("{name:>8}: loss {first:.3} -> {last:.3}");
    }

    for (name, split) in [("train", &toy.train), ("dev", &toy.dev), ("test", &toy.test)] {
        let outcomes = evaluate(split, &pipeline)?;
        let metrics = MetricsReport::from_outcomes(&outcomes, &config.top_k, 0);
        println!("\n[{name}]\n{}", metrics.to_table());
        for o in outcomes.iter().filter(|o| !o.pair_correct()) {
            let got = o.top_pair.as_ref().map(|(e, c)| format!("{e} {c}"));
            log::info!("{}: gold {} {} got {:?}", o.id, o.gold_entity, o.gold_chain, got);
        }
        for o in outcomes.iter().filter(|o| o.pair_correct() && !o.answer_correct) {
            log::info!("{}: pair right, answers {}", o.id, o.answers.to_tsv_line(&o.id));
        }
    }
    Ok(())
}
