//! Per-rule exclusion bookkeeping shared by ingestion and design building.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Counts of rows excluded per validation rule. Keys are stable rule names,
/// ordered so serialization is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionReport(pub BTreeMap<String, u64>);

impl ExclusionReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record one excluded row under `rule`.
    pub fn record(&mut self, rule: &str) {
        *self.0.entry(rule.to_string()).or_insert(0) += 1;
    }

    /// Fold another report into this one.
    pub fn merge(&mut self, other: &ExclusionReport) {
        for (rule, count) in &other.0 {
            *self.0.entry(rule.clone()).or_insert(0) += count;
        }
    }

    pub fn count(&self, rule: &str) -> u64 {
        self.0.get(rule).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
