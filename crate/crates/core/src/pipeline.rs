//! The three trained detectors bundled with the knowledge base they serve.

use std::fs;
use std::path::{Path, PathBuf};

use crate::answer::{self, build_constraint_table, AnswerSet};
use crate::config::RunConfig;
use crate::dataset::{Prepared, QaExample};
use crate::error::{Error, Result};
use crate::kb::{ConstraintTable, Kb};
use crate::linker::EntityLinker;
use crate::mention::MentionDetector;
use crate::neural::{read_container, write_container, ContainerMeta, EpochStats, FofeNet, ModelKind};
use crate::relation::RelationDetector;
use crate::space::FeatureSpace;

pub const MODEL_KINDS: [ModelKind; 3] = [ModelKind::Mention, ModelKind::Linker, ModelKind::Relation];

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub kb: Kb,
    pub space: FeatureSpace,
    pub mention: MentionDetector,
    pub linker: EntityLinker,
    pub relation: RelationDetector,
    pub constraints: ConstraintTable,
    pub config: RunConfig,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub mention: Vec<EpochStats>,
    pub linker: Vec<EpochStats>,
    pub relation: Vec<EpochStats>,
    /// Examples whose mention offsets cover no token.
    pub skipped: usize,
}

/// Tokenizes examples, skipping (with a warning) those whose mention covers
/// no token.
pub fn prepare(examples: &[QaExample], space: &FeatureSpace) -> (Vec<Prepared>, usize) {
    let mut out = Vec::with_capacity(examples.len());
    let mut skipped = 0;
    for ex in examples {
        match Prepared::new(ex, &space.tokenizer) {
            Ok(p) => out.push(p),
            Err(e) => {
                log::warn!("{}: {e}, skipped", ex.id);
                skipped += 1;
            }
        }
    }
    (out, skipped)
}

/// Shared state needed to train or load any detector.
#[derive(Debug, Clone)]
pub struct TrainingContext {
    pub kb: Kb,
    pub space: FeatureSpace,
    pub prepared: Vec<Prepared>,
    pub skipped: usize,
    pub constraints: ConstraintTable,
    pub config: RunConfig,
}

impl TrainingContext {
    pub fn new(kb: Kb, train: &[QaExample], config: RunConfig) -> Result<Self> {
        config.validate()?;
        let space = FeatureSpace::build(&kb, train, config.tfidf_max_terms)?;
        let (prepared, skipped) = prepare(train, &space);
        let constraints = build_constraint_table(train, &kb)?;
        Ok(TrainingContext {
            kb,
            space,
            prepared,
            skipped,
            constraints,
            config,
        })
    }

    pub fn train_mention(&self) -> Result<(MentionDetector, Vec<EpochStats>)> {
        MentionDetector::train(&self.prepared, &self.kb, &self.space, &self.config)
    }

    pub fn train_linker(&self) -> Result<(EntityLinker, Vec<EpochStats>)> {
        EntityLinker::train(&self.prepared, &self.kb, &self.space, &self.config)
    }

    pub fn train_relation(&self) -> Result<(RelationDetector, Vec<EpochStats>)> {
        RelationDetector::train(&self.prepared, &self.kb, &self.space, &self.config)
    }

    /// Trains one detector and writes its container into `dir`.
    pub fn train_and_save(&self, kind: ModelKind, dir: &Path) -> Result<Vec<EpochStats>> {
        let (net, history) = match kind {
            ModelKind::Mention => {
                let (d, h) = self.train_mention()?;
                (d.net().cloned(), h)
            }
            ModelKind::Linker => {
                let (d, h) = self.train_linker()?;
                (d.net().cloned(), h)
            }
            ModelKind::Relation => {
                let (d, h) = self.train_relation()?;
                (d.net().cloned(), h)
            }
        };
        let net = net.expect("training always yields a network");
        fs::create_dir_all(dir)?;
        fs::write(model_path(dir, kind), self.encode(kind, &net))?;
        Ok(history)
    }

    fn meta(&self, kind: ModelKind) -> ContainerMeta {
        ContainerMeta {
            kind,
            vocab_digest: self.space.vocab.digest(),
            gamma: self.config.gamma,
            alphas: vec![self.config.model(kind).alpha],
        }
    }

    pub fn encode(&self, kind: ModelKind, net: &FofeNet) -> Vec<u8> {
        write_container(net, &self.meta(kind))
    }

    /// Reads a container, checking its kind and vocabulary against this
    /// context.
    pub fn decode(&self, kind: ModelKind, bytes: &[u8]) -> Result<(FofeNet, f64)> {
        let (net, meta) = read_container(bytes)?;
        if meta.kind != kind {
            return Err(Error::Container(format!(
                "expected a {} model, found {}",
                kind.name(),
                meta.kind.name()
            )));
        }
        if meta.vocab_digest != self.space.vocab.digest() {
            return Err(Error::Container(format!(
                "{} model was trained with a different vocabulary",
                kind.name()
            )));
        }
        let alpha = *meta
            .alphas
            .first()
            .ok_or_else(|| Error::Container("missing forgetting factor".into()))?;
        Ok((net, alpha))
    }

    pub fn load_pipeline(self, dir: &Path) -> Result<Pipeline> {
        let read = |kind| -> Result<(FofeNet, f64)> {
            let path = model_path(dir, kind);
            let bytes = fs::read(&path).map_err(|e| Error::NotFound(format!("{}: {e}", path.display())))?;
            self.decode(kind, &bytes)
        };
        let (m, ma) = read(ModelKind::Mention)?;
        let (l, la) = read(ModelKind::Linker)?;
        let (r, ra) = read(ModelKind::Relation)?;
        Ok(Pipeline {
            mention: MentionDetector::with_net(m, ma, self.config.max_span)?,
            linker: EntityLinker::with_net(l, la)?,
            relation: RelationDetector::with_net(r, ra)?,
            kb: self.kb,
            space: self.space,
            constraints: self.constraints,
            config: self.config,
        })
    }
}

pub fn model_path(dir: &Path, kind: ModelKind) -> PathBuf {
    dir.join(format!("{}.fofenet", kind.name()))
}

impl Pipeline {
    /// Trains all three detectors.
    pub fn train(kb: Kb, train: &[QaExample], config: RunConfig) -> Result<(Pipeline, TrainReport)> {
        let ctx = TrainingContext::new(kb, train, config)?;
        let (mention, mh) = ctx.train_mention()?;
        let (linker, lh) = ctx.train_linker()?;
        let (relation, rh) = ctx.train_relation()?;
        let report = TrainReport {
            mention: mh,
            linker: lh,
            relation: rh,
            skipped: ctx.skipped,
        };
        Ok((
            Pipeline {
                kb: ctx.kb,
                space: ctx.space,
                mention,
                linker,
                relation,
                constraints: ctx.constraints,
                config: ctx.config,
            },
            report,
        ))
    }

    pub fn answer(&self, question: &str) -> Result<AnswerSet> {
        answer::answer_question(question, self)
    }

    /// Serialized containers of the three detectors.
    pub fn model_bytes(&self) -> Result<Vec<(ModelKind, Vec<u8>)>> {
        let digest = self.space.vocab.digest();
        let nets = [
            (ModelKind::Mention, self.mention.net(), self.mention.alpha()),
            (ModelKind::Linker, self.linker.net(), self.linker.alpha()),
            (ModelKind::Relation, self.relation.net(), self.relation.alpha()),
        ];
        nets.into_iter()
            .map(|(kind, net, alpha)| {
                let net = net.ok_or_else(|| Error::Uninitialized(format!("{} model", kind.name())))?;
                let meta = ContainerMeta {
                    kind,
                    vocab_digest: digest,
                    gamma: self.config.gamma,
                    alphas: vec![alpha],
                };
                Ok((kind, write_container(net, &meta)))
            })
            .collect()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (kind, bytes) in self.model_bytes()? {
            fs::write(model_path(dir, kind), bytes)?;
        }
        Ok(())
    }
}
