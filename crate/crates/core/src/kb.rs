//! In-memory triple store with an alias index.
//!
//! Nodes are identified by machine ids (`m.05v8c`). A fact object is a node
//! when its string is a known node id and a literal otherwise. Objects whose
//! triples line carries mediator flag `1` are mediator nodes: two-predicate
//! chains pass through them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::Tokenizer;

/// Number of fact-count buckets.
pub const FACT_BUCKETS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: String,
    pub names: Vec<String>,
    pub description: Option<String>,
    pub fact_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

/// A relation path of one or two predicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chain {
    predicates: Vec<String>,
}

impl Chain {
    pub fn single(predicate: impl Into<String>) -> Self {
        Chain {
            predicates: vec![predicate.into()],
        }
    }

    pub fn pair(first: impl Into<String>, second: impl Into<String>) -> Result<Self> {
        Chain::new(vec![first.into(), second.into()])
    }

    pub fn new(predicates: Vec<String>) -> Result<Self> {
        if predicates.is_empty() || predicates.len() > 2 {
            return Err(Error::InvalidParameter(format!(
                "a chain has one or two predicates, got {}",
                predicates.len()
            )));
        }
        if predicates.iter().any(|p| p.is_empty() || p.contains(['|', '\t'])) {
            return Err(Error::InvalidParameter(format!(
                "bad predicate in chain {predicates:?}"
            )));
        }
        Ok(Chain { predicates })
    }

    /// Parses the pipe-joined form used in dataset files.
    pub fn parse(text: &str) -> Result<Self> {
        Chain::new(text.split('|').map(str::to_string).collect())
    }

    pub fn predicates(&self) -> &[String] {
        &self.predicates
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicates.join("|"))
    }
}

/// Type-constraint names observed per chain in training data.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintTable {
    entries: BTreeMap<Chain, BTreeSet<String>>,
}

impl ConstraintTable {
    pub fn insert(&mut self, chain: Chain, name: impl Into<String>) {
        self.entries.entry(chain).or_default().insert(name.into());
    }

    pub fn get(&self, chain: &Chain) -> Option<&BTreeSet<String>> {
        self.entries.get(chain)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Chain, &BTreeSet<String>)> {
        self.entries.iter()
    }
}

/// Accumulates facts, names and descriptions before freezing into a [`Kb`].
#[derive(Debug, Default)]
pub struct KbBuilder {
    facts: BTreeSet<Fact>,
    mediator_flags: HashMap<String, bool>,
    names: BTreeMap<String, Vec<String>>,
    descriptions: BTreeMap<String, String>,
}

impl KbBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fact(
        &mut self,
        subject: &str,
        predicate: &str,
        object: &str,
        object_is_mediator: bool,
    ) -> Result<&mut Self> {
        if subject.is_empty() || predicate.is_empty() || object.is_empty() {
            return Err(Error::InvalidParameter("empty field in fact".into()));
        }
        match self.mediator_flags.get(object) {
            Some(&flag) if flag != object_is_mediator => {
                return Err(Error::Conflict(format!(
                    "node {object} flagged both as mediator and as regular object"
                )))
            }
            _ => {
                self.mediator_flags.insert(object.to_string(), object_is_mediator);
            }
        }
        self.facts.insert(Fact {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        });
        Ok(self)
    }

    pub fn name(&mut self, id: &str, name: &str) -> &mut Self {
        let names = self.names.entry(id.to_string()).or_default();
        if !names.iter().any(|n| n == name) {
            names.push(name.to_string());
        }
        self
    }

    pub fn description(&mut self, id: &str, text: &str) -> Result<&mut Self> {
        match self.descriptions.get(id) {
            Some(existing) if existing != text => {
                Err(Error::Conflict(format!("entity {id} has two different descriptions")))
            }
            _ => {
                self.descriptions.insert(id.to_string(), text.to_string());
                Ok(self)
            }
        }
    }

    pub fn build(self) -> Kb {
        let tokenizer = Tokenizer;
        let mut nodes: BTreeMap<String, Entity> = BTreeMap::new();
        let touch = |id: &str, nodes: &mut BTreeMap<String, Entity>| {
            nodes.entry(id.to_string()).or_insert_with(|| Entity {
                id: id.to_string(),
                names: Vec::new(),
                description: None,
                fact_count: 0,
            });
        };
        for fact in &self.facts {
            touch(&fact.subject, &mut nodes);
        }
        for id in self.names.keys().chain(self.descriptions.keys()) {
            touch(id, &mut nodes);
        }
        let mediators: BTreeSet<String> = self
            .mediator_flags
            .iter()
            .filter(|(_, &m)| m)
            .map(|(id, _)| id.clone())
            .collect();
        for id in &mediators {
            touch(id, &mut nodes);
        }

        let facts: Vec<Fact> = self.facts.into_iter().collect();
        let mut outgoing: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, fact) in facts.iter().enumerate() {
            outgoing.entry(fact.subject.clone()).or_default().push(i);
            if let Some(e) = nodes.get_mut(&fact.subject) {
                e.fact_count += 1;
            }
        }

        let mut aliases: HashMap<String, BTreeSet<String>> = HashMap::new();
        for (id, names) in self.names {
            for name in &names {
                let key = tokenizer.normalize(name);
                if !key.is_empty() {
                    aliases.entry(key).or_default().insert(id.clone());
                }
            }
            if let Some(e) = nodes.get_mut(&id) {
                e.names = names;
            }
        }
        for (id, text) in self.descriptions {
            if let Some(e) = nodes.get_mut(&id) {
                e.description = Some(text);
            }
        }

        Kb {
            nodes,
            facts,
            outgoing,
            aliases,
            mediators,
        }
    }
}

/// Immutable knowledge base.
#[derive(Debug, Clone)]
pub struct Kb {
    nodes: BTreeMap<String, Entity>,
    facts: Vec<Fact>,
    outgoing: HashMap<String, Vec<usize>>,
    aliases: HashMap<String, BTreeSet<String>>,
    mediators: BTreeSet<String>,
}

impl Kb {
    /// Loads the three TSV files (triples, names, descriptions).
    pub fn build(triples: impl AsRef<Path>, names: impl AsRef<Path>, descriptions: impl AsRef<Path>) -> Result<Kb> {
        let mut builder = KbBuilder::new();
        for_each_row(triples.as_ref(), 4, |row, line| {
            let flag = match row[3] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::parse(
                        triples.as_ref(),
                        line,
                        format!("mediator flag must be 0 or 1, got {other:?}"),
                    ))
                }
            };
            builder.fact(row[0], row[1], row[2], flag).map_err(|e| match e {
                Error::InvalidParameter(m) => Error::parse(triples.as_ref(), line, m),
                other => other,
            })?;
            Ok(())
        })?;
        for_each_row(names.as_ref(), 2, |row, _| {
            builder.name(row[0], row[1]);
            Ok(())
        })?;
        for_each_row(descriptions.as_ref(), 2, |row, _| {
            builder.description(row[0], row[1])?;
            Ok(())
        })?;
        Ok(builder.build())
    }

    pub fn entity(&self, id: &str) -> Result<&Entity> {
        self.nodes
            .get(id)
            .ok_or_else(|| Error::NotFound(format!("entity {id}")))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn is_mediator(&self, id: &str) -> bool {
        self.mediators.contains(id)
    }

    /// Node ids in sorted order, mediators included.
    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.nodes.values()
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn facts_of<'a>(&'a self, id: &str) -> impl Iterator<Item = &'a Fact> + 'a {
        self.outgoing
            .get(id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.facts[i])
    }

    /// Distinct predicates, sorted.
    pub fn predicates(&self) -> BTreeSet<&str> {
        self.facts.iter().map(|f| f.predicate.as_str()).collect()
    }

    pub fn alias_count(&self) -> usize {
        self.aliases.len()
    }

    /// Case- and whitespace-insensitive exact alias lookup.
    pub fn lookup_entities(&self, mention: &str) -> BTreeSet<String> {
        self.lookup_normalized(&Tokenizer.normalize(mention))
    }

    /// Lookup by an already normalized key (tokens joined by single spaces).
    pub fn lookup_normalized(&self, key: &str) -> BTreeSet<String> {
        self.aliases.get(key).cloned().unwrap_or_default()
    }

    pub fn has_alias(&self, key: &str) -> bool {
        self.aliases.contains_key(key)
    }

    /// All chains leaving `id`: single predicates to non-mediator objects and
    /// predicate pairs through mediator nodes.
    pub fn relations_of(&self, id: &str) -> Result<BTreeSet<Chain>> {
        self.entity(id)?;
        let mut chains = BTreeSet::new();
        for fact in self.facts_of(id) {
            if self.is_mediator(&fact.object) {
                for hop in self.facts_of(&fact.object) {
                    chains.insert(Chain {
                        predicates: vec![fact.predicate.clone(), hop.predicate.clone()],
                    });
                }
            } else {
                chains.insert(Chain::single(fact.predicate.clone()));
            }
        }
        Ok(chains)
    }

    /// Bucket `min(9, floor(log2(1 + n)))` of the entity's fact count, one-hot.
    pub fn fact_count_feature(&self, id: &str) -> Result<[f64; FACT_BUCKETS]> {
        let n = self.entity(id)?.fact_count;
        let mut v = [0.0; FACT_BUCKETS];
        v[fact_bucket(n)] = 1.0;
        Ok(v)
    }

    /// Terminal objects reached from `id` along `chain`.
    pub fn execute(&self, id: &str, chain: &Chain) -> Result<BTreeSet<String>> {
        Ok(self
            .execute_paths(id, chain)?
            .into_iter()
            .filter_map(|mut p| p.pop())
            .collect())
    }

    /// Every node path `[id, .., answer]` along `chain`, in fact order.
    pub fn execute_paths(&self, id: &str, chain: &Chain) -> Result<Vec<Vec<String>>> {
        self.entity(id)?;
        let mut frontier = vec![vec![id.to_string()]];
        for predicate in chain.predicates() {
            let mut next = Vec::new();
            for path in &frontier {
                let at = path.last().expect("paths are never empty");
                for fact in self.facts_of(at).filter(|f| &f.predicate == predicate) {
                    let mut p = path.clone();
                    p.push(fact.object.clone());
                    next.push(p);
                }
            }
            frontier = next;
        }
        Ok(frontier)
    }

    /// The up to `cap` candidates for `mention`, by descending fact count then id.
    pub fn candidates(&self, normalized_mention: &str, cap: usize) -> Vec<&Entity> {
        let mut out: Vec<&Entity> = self
            .lookup_normalized(normalized_mention)
            .iter()
            .filter_map(|id| self.nodes.get(id))
            .collect();
        out.sort_by(|a, b| b.fact_count.cmp(&a.fact_count).then(a.id.cmp(&b.id)));
        out.truncate(cap);
        out
    }
}

pub fn fact_bucket(fact_count: usize) -> usize {
    let b = (usize::BITS - (fact_count + 1).leading_zeros() - 1) as usize;
    b.min(FACT_BUCKETS - 1)
}

fn for_each_row(path: &Path, fields: usize, mut f: impl FnMut(&[&str], usize) -> Result<()>) -> Result<()> {
    let text = fs::read_to_string(path)?;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<&str> = line.split('\t').collect();
        if row.len() != fields || row.iter().any(|c| c.trim().is_empty()) {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected {fields} non-empty tab-separated fields, found {}", row.len()),
            ));
        }
        f(&row, i + 1)?;
    }
    Ok(())
}
