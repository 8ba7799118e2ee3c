//! Knowledge-base question answering with FOFE-encoded feedforward networks.
//!
//! A question goes through four stages:
//!
//! 1. [`mention`] scores every short span and keeps those that name a
//!    knowledge-base entity;
//! 2. [`linker`] ranks the entities behind each mention;
//! 3. [`relation`] scores the entity's relation chains against the question
//!    pattern;
//! 4. [`answer`] combines the scores into subject-relation pairs, executes
//!    them against the [`kb`] and prunes the answers with simple temporal,
//!    type and ordinal constraints.
//!
//! All three detectors are the same kind of model: FOFE codes of token
//! sequences ([`fofe`]) projected through a trainable embedding table and fed,
//! together with dense hand-made features ([`features`]), to a small ReLU
//! network ([`neural`]).
//!
//! ```no_run
//! use fofeqa::{config::RunConfig, pipeline::Pipeline, toy::generate_toy};
//!
//! let toy = generate_toy(0);
//! let (pipeline, _) = Pipeline::train(toy.kb(), &toy.train, RunConfig::default())?;
//! let answers = pipeline.answer("who directed Night Market ?")?;
//! println!("{:?}", answers.ids());
//! # Ok::<(), fofeqa::Error>(())
//! ```

pub mod answer;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod fofe;
pub mod kb;
pub mod linker;
pub mod mention;
pub mod neural;
pub mod pipeline;
pub mod relation;
pub mod space;
pub mod toy;

pub use error::{Error, Result};
