//! Encodes a few token sequences, prints their codes and decodes them back.
//!
//!     cargo run --example fofe_codes -- [alpha]

use fofeqa::fofe::{decode, encode, Vocab};

fn main() -> fofeqa::Result<()> {
    let alpha: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.4);
    let vocab = Vocab::new(["A", "B", "C"]);

    for text in ["A B C", "A B C B C", "C C C", "B"] {
        let tokens: Vec<&str> = text.split(' ').collect();
        let seq = vocab.encode_tokens(&tokens);
        let code = encode(&seq, alpha)?;
        let shown: Vec<String> = code.values().iter().map(|v| format!("{v:.6}")).collect();
        print!("{text:<10} -> [{}]", shown.join(", "));
        // Decoding is only defined below 0.5; above that codes can still be
        // distinct, just not greedily invertible.
        match decode(&code) {
            Ok(back) => {
                let words: Vec<&str> = back.ids().iter().map(|&i| vocab.token(i).unwrap_or("?")).collect();
                println!("  decodes to {:?}", words.join(" "));
            }
            Err(e) => println!("  ({e})"),
        }
    }
    Ok(())
}
