use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fofeqa::config::{Profile, RunConfig};
use fofeqa::dataset::{ingest, Ingested};
use fofeqa::eval::{self, MetricsReport};
use fofeqa::kb::Kb;
use fofeqa::neural::ModelKind;
use fofeqa::pipeline::TrainingContext;
use fofeqa::toy::{generate_toy, DESCRIPTIONS_FILE, NAMES_FILE, TRIPLES_FILE};
use fofeqa::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fofeqa",
    version,
    about = "Knowledge-base question answering with FOFE networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Directory holding triples.tsv, names.tsv and descriptions.tsv.
    #[arg(long)]
    kb: PathBuf,
    /// Training split; the vocabulary and constraint table are derived from it.
    #[arg(long)]
    train: PathBuf,
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Profile to use when no config file is given.
    #[arg(long, default_value = "toy")]
    profile: String,
    /// Directory for model containers.
    #[arg(long, default_value = "models")]
    models: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Mention,
    Linker,
    Relation,
}

#[derive(Subcommand)]
enum Command {
    /// Load a knowledge base and print its size.
    BuildKb {
        #[arg(long)]
        kb: PathBuf,
    },
    /// Write the synthetic knowledge base and question splits.
    GenToy {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one detector and save it under --models.
    Train {
        #[arg(long, value_enum)]
        model: Model,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate saved models on a dataset split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// Also write metrics and per-question TSV reports here.
        #[arg(long)]
        report_dir: Option<PathBuf>,
    },
    /// Answer a single question with saved models.
    Answer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        question: String,
    },
}

fn load_kb(dir: &Path) -> Result<Kb> {
    Kb::build(
        dir.join(TRIPLES_FILE),
        dir.join(NAMES_FILE),
        dir.join(DESCRIPTIONS_FILE),
    )
}

fn load_config(common: &Common) -> Result<RunConfig> {
    match &common.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::for_profile(common.profile.parse::<Profile>()?)),
    }
}

fn context(common: &Common) -> Result<(TrainingContext, Ingested)> {
    let kb = load_kb(&common.kb)?;
    let train = ingest(&common.train, &kb)?;
    let ctx = TrainingContext::new(kb, &train.examples, load_config(common)?)?;
    Ok((ctx, train))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildKb { kb } => {
            let kb = load_kb(&kb)?;
            let mediators = kb.node_ids().filter(|id| kb.is_mediator(id)).count();
            println!("nodes\t{}", kb.entities().count());
            println!("mediators\t{mediators}");
            println!("facts\t{}", kb.facts().len());
            println!("predicates\t{}", kb.predicates().len());
            println!("aliases\t{}", kb.alias_count());
        }
        Command::GenToy { seed, out } => {
            let toy = generate_toy(seed);
            toy.write(&out)?;
            println!(
                "wrote {} facts and {}/{}/{} questions to {}",
                toy.triples.len(),
                toy.train.len(),
                toy.dev.len(),
                toy.test.len(),
                out.display()
            );
        }
        Command::Train { model, common } => {
            let (ctx, train) = context(&common)?;
            if !train.dropped.is_empty() {
                log::warn!("{} training examples dropped", train.dropped.len());
            }
            let kind = match model {
                Model::Mention => ModelKind::Mention,
                Model::Linker => ModelKind::Linker,
                Model::Relation => ModelKind::Relation,
            };
            let history = ctx.train_and_save(kind, &common.models)?;
            for e in &history {
                println!("epoch\t{}\tloss\t{:.6}\tlr\t{:.6}", e.epoch + 1, e.loss, e.lr);
            }
            println!("saved {}", fofeqa::pipeline::model_path(&common.models, kind).display());
        }
        Command::Eval {
            common,
            data,
            report_dir,
        } => {
            let (ctx, _) = context(&common)?;
            let ks = ctx.config.top_k.clone();
            let pipeline = ctx.load_pipeline(&common.models)?;
            let set = ingest(&data, &pipeline.kb)?;
            let outcomes = eval::evaluate(&set.examples, &pipeline)?;
            let report = MetricsReport::from_outcomes(&outcomes, &ks, set.dropped.len());
            print!("{}", report.to_table());
            if let Some(dir) = report_dir {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("metrics.tsv"), report.to_tsv())?;
                std::fs::write(dir.join("linking.tsv"), eval::linking_tsv(&outcomes))?;
                std::fs::write(dir.join("relations.tsv"), eval::relation_tsv(&outcomes))?;
                std::fs::write(dir.join("answers.tsv"), eval::answers_tsv(&outcomes))?;
            }
        }
        Command::Answer { common, question } => {
            let (ctx, _) = context(&common)?;
            let pipeline = ctx.load_pipeline(&common.models)?;
            let set = pipeline.answer(&question)?;
            if let Some(reason) = set.reason {
                println!("no answer ({})", reason.code());
            }
            for a in &set.answers {
                let name = pipeline
                    .kb
                    .entity(&a.id)
                    .ok()
                    .and_then(|e| e.names.first().cloned())
                    .unwrap_or_else(|| a.id.clone());
                println!("{}\t{}\t{:.4}", a.id, name, a.score);
            }
            for c in &set.constraints {
                println!("# constraint {c}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error\t{}\t{}", e.kind(), single_line(&e));
            ExitCode::FAILURE
        }
    }
}

fn single_line(e: &Error) -> String {
    e.to_string().replace(['\n', '\t'], " ")
}
