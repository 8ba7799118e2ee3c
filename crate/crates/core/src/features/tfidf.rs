use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};

/// TF-IDF with raw term counts, smooth idf and L2-normalized output:
/// `idf(t) = ln((1 + n) / (1 + df(t))) + 1`.
///
/// Terms are indexed alphabetically. Terms outside the fitted index are
/// dropped at transform time.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    idf: Vec<f64>,
    n_docs: usize,
}

impl TfidfModel {
    /// Fits over `corpus`, keeping at most `max_terms` terms ranked by
    /// document frequency (ties alphabetical).
    pub fn fit<S: AsRef<str>>(corpus: &[Vec<S>], max_terms: usize) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::InvalidParameter("cannot fit TF-IDF on an empty corpus".into()));
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in corpus {
            let unique: HashSet<&str> = doc.iter().map(AsRef::as_ref).collect();
            for term in unique {
                *df.entry(term).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = df.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.truncate(max_terms);
        ranked.sort_by(|a, b| a.0.cmp(b.0));

        let n = corpus.len() as f64;
        let terms: Vec<String> = ranked.iter().map(|(t, _)| t.to_string()).collect();
        let idf = ranked
            .iter()
            .map(|&(_, d)| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(TfidfModel {
            terms,
            index,
            idf,
            n_docs: corpus.len(),
        })
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.index.get(term).map(|&i| self.idf[i])
    }

    pub fn transform<S: AsRef<str>>(&self, bag: &[S]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for term in bag {
            if let Some(&i) = self.index.get(term.as_ref()) {
                out[i] += 1.0;
            }
        }
        for (v, idf) in out.iter_mut().zip(&self.idf) {
            *v *= idf;
        }
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in out.iter_mut() {
                *v /= norm;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&[&'static str]]) -> Vec<Vec<&'static str>> {
        raw.iter().map(|d| d.to_vec()).collect()
    }

    #[test]
    fn singleton_corpus() {
        let m = TfidfModel::fit(&docs(&[&["a"]]), 2000).unwrap();
        assert_eq!(m.transform(&["a"]), vec![1.0]);
    }

    #[test]
    fn three_doc_corpus() {
        let m = TfidfModel::fit(&docs(&[&["a"], &["a", "b"], &["b"]]), 2000).unwrap();
        let want_idf = (4.0f64 / 3.0).ln() + 1.0;
        assert!((m.idf("a").unwrap() - want_idf).abs() < 1e-15);
        assert!((m.idf("b").unwrap() - want_idf).abs() < 1e-15);
        let v = m.transform(&["a", "b"]);
        for x in v {
            assert!((x - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_terms_dropped() {
        let m = TfidfModel::fit(&docs(&[&["a"], &["b"]]), 2000).unwrap();
        assert_eq!(m.transform(&["zzz"]), vec![0.0, 0.0]);
        assert_eq!(m.transform(&["a", "zzz"]), m.transform(&["a"]));
    }

    #[test]
    fn empty_corpus_rejected() {
        let empty: Vec<Vec<&str>> = Vec::new();
        assert!(matches!(TfidfModel::fit(&empty, 10), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn cap_keeps_most_frequent_terms() {
        let m = TfidfModel::fit(&docs(&[&["a", "b", "c"], &["b", "c"], &["c"]]), 2).unwrap();
        assert_eq!(m.terms(), ["b", "c"]);
    }
}
