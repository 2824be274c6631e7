//! Multilingual corpus curation: monolingual cleaning, script repair,
//! parallel filtering and mining, sampling weights, canary generation,
//! memorization probes and a self-audit service.

pub mod audit;
pub mod canary;
pub mod corpus;
pub mod error;
pub mod lang;
pub mod langid;
pub mod metrics;
pub mod memorization;
pub mod mono;
pub mod parallel;
pub mod pipeline;
pub mod report;
pub mod script;
pub mod stats;
pub mod tokenize;
pub mod unimax;
pub mod wet;

pub use error::{Error, Result};
