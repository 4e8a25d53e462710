//! Business relationship analysis from user co-reactions.
//!
//! The pipeline turns raw (user, business, reaction) records into a
//! Jaccard-weighted business graph, cuts statistically weak edges, extracts
//! size-bounded communities, clusters them by category composition, tags
//! businesses that fall outside their cluster's dominant categories and
//! extracts egonets for individual businesses.

pub mod cluster;
pub mod community;
pub mod egonet;
pub mod error;
pub mod export;
pub mod graph;
pub mod ingest;
pub mod outlier;
pub mod pipeline;
pub mod reaction_filter;
pub mod synth;
pub mod taxonomy;

pub use error::{Error, Result};
