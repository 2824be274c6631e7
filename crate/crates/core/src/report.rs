//! Per-stage keep/drop accounting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Result of a keep/drop decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Keep,
    Drop(&'static str),
}

impl Outcome {
    pub fn is_keep(self) -> bool {
        matches!(self, Outcome::Keep)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub stage: String,
    pub input: u64,
    pub kept: u64,
    pub dropped: u64,
    pub drop_reasons: BTreeMap<String, u64>,
}

impl FilterReport {
    pub fn new(stage: impl Into<String>) -> Self {
        FilterReport {
            stage: stage.into(),
            ..Default::default()
        }
    }

    pub fn record(&mut self, outcome: Outcome) {
        self.input += 1;
        match outcome {
            Outcome::Keep => self.kept += 1,
            Outcome::Drop(reason) => self.drop(reason),
        }
    }

    fn drop(&mut self, reason: &str) {
        self.dropped += 1;
        *self.drop_reasons.entry(reason.to_string()).or_insert(0) += 1;
    }

    pub fn keep(&mut self) {
        self.record(Outcome::Keep);
    }

    pub fn reject(&mut self, reason: &str) {
        self.input += 1;
        self.drop(reason);
    }

    /// Fold another shard's counts into this one.
    pub fn merge(&mut self, other: &FilterReport) {
        self.input += other.input;
        self.kept += other.kept;
        self.dropped += other.dropped;
        for (k, v) in &other.drop_reasons {
            *self.drop_reasons.entry(k.clone()).or_insert(0) += v;
        }
    }

    pub fn is_balanced(&self) -> bool {
        self.kept + self.dropped == self.input
            && self.drop_reasons.values().sum::<u64>() == self.dropped
    }
}
