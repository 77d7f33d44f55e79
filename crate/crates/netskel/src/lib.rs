//! Reconstruction of the undirected skeleton of a linear dynamic network
//! from its output power spectral density.
//!
//! The pipeline: a [`model::Ldim`] (or a measured spectrum) yields a
//! [`spectrum::SpectralDensity`]; conditional-independence tests built on
//! Wiener projections prune a moral-graph upper bound down to either the
//! exact skeleton or a certified-sparser subgraph, reported with evidence.

pub mod config;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod lti;
pub mod model;
pub mod oracle;
pub mod reconstruct;
pub mod spectrum;
pub mod wiener;

pub use error::{Error, Result};
