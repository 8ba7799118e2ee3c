//! The elected-president question: the country's government fragment holds
//! past and current presidents and vice presidents. Without constraints the
//! best answers are every office holder reachable through the chain; the
//! temporal and type constraints leave only past presidents.
//!
//!     cargo run --release --example office_constraints

use fofeqa::answer::{aggregate, top_tied};
use fofeqa::config::RunConfig;
use fofeqa::pipeline::Pipeline;
use fofeqa::toy::generate_toy;

fn main() -> fofeqa::Result<()> {
    let toy = generate_toy(0);
    let (p, _) = Pipeline::train(toy.kb(), &toy.train, RunConfig::default())?;
    let country = p.kb.entity(&toy.figure_country)?.names[0].clone();
    let question = format!("who was elected president of {country} ?");
    let set = p.answer(&question)?;

    let name = |id: &str| {
        p.kb.entity(id)
            .ok()
            .and_then(|e| e.names.first().cloned())
            .unwrap_or_default()
    };
    println!("{question}\n");
    for pair in &set.pairs {
        println!("pair  {:.3}  {} {}", pair.pair_score, pair.entity, pair.chain);
    }
    println!("\nbefore constraints:");
    for a in top_tied(aggregate(&set.pairs, &p.kb)?) {
        println!("  {} {}", a.id, name(&a.id));
    }
    let constraints: Vec<String> = set.constraints.iter().map(ToString::to_string).collect();
    println!("\nconstraints: {}", constraints.join(", "));
    println!("after:");
    for a in &set.answers {
        println!("  {} {}", a.id, name(&a.id));
    }
    Ok(())
}
