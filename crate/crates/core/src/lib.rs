//! Community-dependent emotional lexicons and the Superdiversity Index.
//!
//! The pipeline builds a lemma co-occurrence network from a regional corpus,
//! spreads valences from part of a standard lexicon over it, and measures how
//! far the community's valences drift from the standard ones. Null models,
//! baseline diversity measures, a classification harness and a synthetic
//! corpus generator sit around that core.

pub mod baselines;
pub mod classify;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod lexicon;
pub mod par;
pub mod si;
pub mod spreading;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
