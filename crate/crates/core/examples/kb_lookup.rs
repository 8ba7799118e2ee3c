//! Builds a small knowledge base by hand, then looks names up and walks
//! relation chains, including one through a mediator node.
//!
//!     cargo run --example kb_lookup

use fofeqa::features::Tokenizer;
use fofeqa::kb::{Chain, KbBuilder};

fn main() -> fofeqa::Result<()> {
    let mut b = KbBuilder::new();
    b.fact("m.chicago_band", "music.artist.origin", "m.chicago_city", false)?;
    b.fact("m.chicago_band", "music.artist.genre", "m.rock", false)?;
    b.fact("m.chicago_city", "location.location.containedby", "m.usa", false)?;
    b.fact("m.chicago_film", "film.film.country", "m.usa", false)?;
    // The term is a mediator: holder and dates hang off it.
    b.fact(
        "m.usa",
        "government.governmental_jurisdiction.governing_officials",
        "m.term1",
        true,
    )?;
    b.fact(
        "m.term1",
        "government.government_position_held.office_holder",
        "m.someone",
        false,
    )?;
    b.fact(
        "m.term1",
        "government.government_position_held.from",
        "1993-01-20",
        false,
    )?;
    for (id, name) in [
        ("m.chicago_band", "Chicago"),
        ("m.chicago_city", "Chicago"),
        ("m.chicago_film", "Chicago"),
        ("m.usa", "United States"),
        ("m.rock", "Rock"),
        ("m.someone", "Someone Important"),
    ] {
        b.name(id, name);
    }
    b.description("m.chicago_band", "American rock band formed in 1967")?;
    let kb = b.build();

    let key = Tokenizer.normalize("CHICAGO");
    println!("candidates for {key:?}:");
    for e in kb.candidates(&key, 10) {
        println!(
            "  {} ({} facts) {:?}",
            e.id,
            e.fact_count,
            e.description.as_deref().unwrap_or("")
        );
    }

    println!("\nchains of m.usa:");
    for chain in kb.relations_of("m.usa")? {
        println!("  {chain}  -> {:?}", kb.execute("m.usa", &chain)?);
    }

    let office = Chain::parse(
        "government.governmental_jurisdiction.governing_officials|government.government_position_held.office_holder",
    )?;
    println!("\npaths for {office}:");
    for path in kb.execute_paths("m.usa", &office)? {
        println!("  {}", path.join(" -> "));
    }
    Ok(())
}
