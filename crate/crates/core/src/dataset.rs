//! Question-answer dataset files.
//!
//! One example per line, tab separated:
//!
//! ```text
//! question  gold_entity_id  mention_start  mention_end  chain  answers
//! ```
//!
//! Mention offsets are char offsets into the question, end exclusive. The
//! chain is pipe-joined predicates, answers are comma-joined ids or literals.
//! The answers column may be left off, in which case the gold answers are
//! read from the knowledge base by executing the gold chain.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::Tokenizer;
use crate::kb::{Chain, Kb};
use crate::mention::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaExample {
    pub id: String,
    pub question: String,
    pub gold_entity: String,
    pub mention_start: usize,
    pub mention_end: usize,
    pub chain: Chain,
    pub answers: BTreeSet<String>,
}

impl QaExample {
    pub fn mention_text(&self) -> String {
        self.question
            .chars()
            .skip(self.mention_start)
            .take(self.mention_end - self.mention_start)
            .collect()
    }

    /// Token span covering the mention's char range.
    pub fn token_span(&self, tokenizer: &Tokenizer) -> Result<Span> {
        let toks = tokenizer.tokenize_with_offsets(&self.question);
        let inside: Vec<usize> = toks
            .iter()
            .enumerate()
            .filter(|(_, t)| t.start >= self.mention_start && t.end <= self.mention_end)
            .map(|(i, _)| i)
            .collect();
        match (inside.first(), inside.last()) {
            (Some(&s), Some(&e)) => Ok(Span { start: s, end: e + 1 }),
            _ => Err(Error::InvalidParameter(format!(
                "mention {}..{} covers no token of {:?}",
                self.mention_start, self.mention_end, self.question
            ))),
        }
    }

    pub fn to_line(&self) -> String {
        let answers: Vec<&str> = self.answers.iter().map(String::as_str).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.question,
            self.gold_entity,
            self.mention_start,
            self.mention_end,
            self.chain,
            answers.join(",")
        )
    }
}

/// A question tokenized and mapped onto its gold mention span.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub example: QaExample,
    pub tokens: Vec<String>,
    pub span: Span,
}

impl Prepared {
    pub fn new(example: &QaExample, tokenizer: &Tokenizer) -> Result<Self> {
        Ok(Prepared {
            span: example.token_span(tokenizer)?,
            tokens: tokenizer.tokenize(&example.question),
            example: example.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dropped {
    pub line: usize,
    pub reason: String,
}

/// Parsed examples plus the ones dropped against the knowledge base.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    pub examples: Vec<QaExample>,
    pub dropped: Vec<Dropped>,
}

impl Ingested {
    pub fn total(&self) -> usize {
        self.examples.len() + self.dropped.len()
    }
}

/// Parses dataset text. Example ids are `"{prefix}{line}"`.
pub fn parse_examples(text: &str, source: &Path, prefix: &str) -> Result<Vec<(usize, QaExample, bool)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: String| Error::parse(source, lineno, m);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 && cols.len() != 6 {
            return Err(bad(format!(
                "expected 5 or 6 tab-separated fields, found {}",
                cols.len()
            )));
        }
        let start: usize = cols[2]
            .parse()
            .map_err(|_| bad(format!("bad mention start {:?}", cols[2])))?;
        let end: usize = cols[3]
            .parse()
            .map_err(|_| bad(format!("bad mention end {:?}", cols[3])))?;
        let len = cols[0].chars().count();
        if start >= end || end > len {
            return Err(bad(format!("mention {start}..{end} outside question of length {len}")));
        }
        if cols[1].is_empty() {
            return Err(bad("empty gold entity".into()));
        }
        let chain = Chain::parse(cols[4]).map_err(|e| bad(e.to_string()))?;
        let answers: BTreeSet<String> = cols
            .get(5)
            .map(|a| a.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect())
            .unwrap_or_default();
        let example = QaExample {
            id: format!("{prefix}{lineno}"),
            question: cols[0].to_string(),
            gold_entity: cols[1].to_string(),
            mention_start: start,
            mention_end: end,
            chain,
            answers,
        };
        out.push((lineno, example, cols.len() == 6));
    }
    Ok(out)
}

/// Reads a dataset file, dropping examples whose gold entity is not in `kb`.
pub fn ingest(path: impl AsRef<Path>, kb: &Kb) -> Result<Ingested> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let prefix = path
        .file_stem()
        .map(|s| format!("{}-", s.to_string_lossy()))
        .unwrap_or_default();
    ingest_str(&text, path, &prefix, kb)
}

pub fn ingest_str(text: &str, source: &Path, prefix: &str, kb: &Kb) -> Result<Ingested> {
    let mut result = Ingested::default();
    for (line, mut example, has_answers) in parse_examples(text, source, prefix)? {
        if !kb.contains(&example.gold_entity) {
            log::warn!(
                "{}:{line}: gold entity {} not in knowledge base",
                source.display(),
                example.gold_entity
            );
            result.dropped.push(Dropped {
                line,
                reason: format!("gold entity {} not in knowledge base", example.gold_entity),
            });
            continue;
        }
        if !has_answers {
            example.answers = kb.execute(&example.gold_entity, &example.chain)?;
        }
        result.examples.push(example);
    }
    Ok(result)
}

pub fn write_examples(path: impl AsRef<Path>, examples: &[QaExample]) -> Result<()> {
    let mut text = String::new();
    for e in examples {
        text.push_str(&e.to_line());
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::KbBuilder;

    fn kb() -> Kb {
        let mut b = KbBuilder::new();
        b.fact("m.x", "p.q", "m.y", false).unwrap();
        b.name("m.x", "Chicago");
        b.build()
    }

    #[test]
    fn empty_file_gives_no_examples() {
        let got = ingest_str("", Path::new("x"), "", &kb()).unwrap();
        assert!(got.examples.is_empty());
        assert_eq!(got.total(), 0);
    }

    #[test]
    fn full_line_parses() {
        let line = "where is Chicago ?\tm.x\t9\t16\tp.q\tm.y";
        let got = ingest_str(line, Path::new("x"), "t-", &kb()).unwrap();
        let e = &got.examples[0];
        assert_eq!(e.id, "t-1");
        assert_eq!(e.mention_text(), "Chicago");
        assert_eq!(e.chain, Chain::single("p.q"));
        assert_eq!(e.answers.iter().collect::<Vec<_>>(), ["m.y"]);
        assert_eq!(e.to_line(), line);
        assert_eq!(e.token_span(&Tokenizer).unwrap(), Span { start: 2, end: 3 });
    }

    #[test]
    fn five_field_line_reads_answers_from_kb() {
        let got = ingest_str("where is Chicago ?\tm.x\t9\t16\tp.q", Path::new("x"), "", &kb()).unwrap();
        assert_eq!(got.examples[0].answers.iter().collect::<Vec<_>>(), ["m.y"]);
    }

    #[test]
    fn unknown_gold_entity_is_dropped_and_counted() {
        let text = "a b\tm.nope\t0\t1\tp.q\tz\na b\tm.x\t0\t1\tp.q\tz\n";
        let got = ingest_str(text, Path::new("x"), "", &kb()).unwrap();
        assert_eq!(got.examples.len(), 1);
        assert_eq!(got.dropped.len(), 1);
        assert_eq!(got.dropped[0].line, 1);
        assert_eq!(got.total(), 2);
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let text = "ok\tm.x\t0\t2\tp.q\tz\nbroken line\n";
        match ingest_str(text, Path::new("d.tsv"), "", &kb()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "ok\tm.x\t5\t9\tp.q\tz\n";
        assert!(matches!(
            ingest_str(text, Path::new("d"), "", &kb()),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
