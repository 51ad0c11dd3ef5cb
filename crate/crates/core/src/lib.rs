//! Inter-community conflict analysis over vote-signed comment archives.
//!
//! The pipeline turns raw comment records into:
//! - a per-(author, subreddit, month) aggregate ([`corpus`], [`stats`]),
//! - social / anti-social home assignments and controversial authors
//!   ([`profiles`]),
//! - candidate conflict edges with normalized intensities ([`conflict`]),
//! - a significance-filtered directed conflict graph ([`significance`],
//!   [`graph`]),
//! - node metrics, rankings and correlations ([`metrics`]),
//! - a Jaccard-weighted co-conflict graph with Louvain communities
//!   ([`coconflict`]),
//! - monthly conflict graphs and focus dynamics ([`temporal`]).
//!
//! [`synth`] generates corpora with planted ground truth for oracle tests,
//! and [`pipeline`] orchestrates the stages over on-disk artifacts.

pub mod artifacts;
pub mod coconflict;
pub mod config;
pub mod conflict;
pub mod corpus;
pub mod error;
pub mod export;
pub mod graph;
pub mod metrics;
pub mod pipeline;
pub mod profiles;
mod seeds;
pub mod significance;
pub mod stats;
pub mod synth;
pub mod temporal;

pub use config::PipelineConfig;
pub use error::{Error, Result};
