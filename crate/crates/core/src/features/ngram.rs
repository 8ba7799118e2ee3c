use std::collections::BTreeSet;

/// Character trigrams of `text`, taken within words only. Text is lowercased
/// and every non-alphanumeric char acts as a word break.
pub fn char_trigrams(text: &str) -> BTreeSet<[char; 3]> {
    let cleaned: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let mut grams = BTreeSet::new();
    for word in cleaned.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        for w in chars.windows(3) {
            grams.insert([w[0], w[1], w[2]]);
        }
    }
    grams
}

/// Jaccard similarity of the two trigram sets. Two empty sets count as equal.
pub fn char_ngram_overlap(a: &str, b: &str) -> f64 {
    let ga = char_trigrams(a);
    let gb = char_trigrams(b);
    let union = ga.union(&gb).count();
    if union == 0 {
        return 1.0;
    }
    ga.intersection(&gb).count() as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_disjoint() {
        assert_eq!(char_ngram_overlap("lyrics written", "lyrics written"), 1.0);
        assert_eq!(char_ngram_overlap("aaa", "zzz"), 0.0);
    }

    #[test]
    fn trigrams_stay_inside_words() {
        let g = char_trigrams("ab cd");
        assert!(g.is_empty());
        let g = char_trigrams("Music.Lyricist");
        assert!(g.contains(&['m', 'u', 's']));
        assert!(!g.contains(&['c', 'l', 'y']));
    }
}
