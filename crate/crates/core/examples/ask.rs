//! Trains on the toy set, then answers questions from the command line (or a
//! few built-in ones) and shows each stage.
//!
//!     cargo run --release --example ask -- "who founded Nova Systems ?"

use fofeqa::config::RunConfig;
use fofeqa::pipeline::Pipeline;
use fofeqa::toy::generate_toy;

fn main() -> fofeqa::Result<()> {
    let mut questions: Vec<String> = std::env::args().skip(1).collect();
    if questions.is_empty() {
        questions = [
            "who directed Night Market ?",
            "which country is Chicago in ?",
            "what genre of music does Chicago play ?",
        ]
        .map(String::from)
        .to_vec();
    }
    let toy = generate_toy(0);
    let (p, _) = Pipeline::train(toy.kb(), &toy.train, RunConfig::default())?;
    let name = |id: &str| {
        p.kb.entity(id)
            .ok()
            .and_then(|e| e.names.first().cloned())
            .unwrap_or_else(|| id.to_string())
    };

    for q in &questions {
        let set = p.answer(q)?;
        println!("Q: {q}");
        for m in set.mentions.iter().take(3) {
            println!("   mention  {:<20} p={:.3}", m.text, m.prob);
        }
        for e in set.entities.iter().take(3) {
            println!(
                "   entity   {:<20} {} rerank={:.3} (link {:.3}, rel {:.3})",
                name(&e.entity),
                e.entity,
                e.rerank_score,
                e.link_score,
                e.relation_score
            );
        }
        if let Some(pair) = set.pairs.first() {
            println!("   pair     {} {}", pair.entity, pair.chain);
        }
        match set.reason {
            Some(r) => println!("A: (none: {})", r.code()),
            None => {
                let names: Vec<String> = set.answers.iter().map(|a| name(&a.id)).collect();
                println!("A: {}", names.join(", "));
            }
        }
        println!();
    }
    Ok(())
}
