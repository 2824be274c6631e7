//! UniMax mixture weights: spread a token budget as evenly as possible
//! across languages without repeating any language more than N epochs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_EPOCHS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangAllocation {
    pub count: f64,
    pub tokens: f64,
    pub weight: f64,
    pub epochs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights {
    pub budget: f64,
    pub max_epochs: f64,
    pub per_lang: BTreeMap<String, LangAllocation>,
    /// Budget exceeded the sum of caps; every language sits at its cap.
    pub saturated: bool,
}

impl MixtureWeights {
    pub fn allocated(&self) -> f64 {
        self.per_lang.values().map(|a| a.tokens).sum()
    }
}

/// Ascending-count waterfill: each language in turn takes the smaller of its
/// cap and an equal share of what is left.
pub fn unimax_weights(counts: &BTreeMap<String, f64>, budget: f64, max_epochs: f64) -> Result<MixtureWeights> {
    if counts.is_empty() {
        return Err(Error::InvalidParameter("no languages".into()));
    }
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::InvalidParameter(format!("budget must be positive, got {budget}")));
    }
    if !(max_epochs > 0.0) {
        return Err(Error::InvalidParameter(format!("epoch cap must be positive, got {max_epochs}")));
    }
    if let Some((lang, c)) = counts.iter().find(|(_, c)| !(**c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidParameter(format!("count for {lang} must be positive, got {c}")));
    }

    let mut order: Vec<(&String, f64)> = counts.iter().map(|(l, c)| (l, *c)).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));

    let total_cap: f64 = order.iter().map(|(_, c)| c * max_epochs).sum();
    let saturated = budget > total_cap;
    if saturated {
        log::warn!("budget {budget} exceeds the {max_epochs}-epoch cap total {total_cap}; all languages capped");
    }

    let mut remaining = budget;
    let mut tokens = BTreeMap::new();
    for (i, (lang, count)) in order.iter().enumerate() {
        let share = remaining / (order.len() - i) as f64;
        let take = share.min(count * max_epochs);
        remaining -= take;
        tokens.insert((*lang).clone(), (*count, take));
    }
    let allocated: f64 = tokens.values().map(|t| t.1).sum();
    let per_lang = tokens
        .into_iter()
        .map(|(lang, (count, t))| {
            (lang, LangAllocation { count, tokens: t, weight: t / allocated, epochs: t / count })
        })
        .collect();
    Ok(MixtureWeights { budget, max_epochs, per_lang, saturated })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(v: &[(&str, f64)]) -> BTreeMap<String, f64> {
        v.iter().map(|(l, c)| (l.to_string(), *c)).collect()
    }

    #[test]
    fn two_languages() {
        let w = unimax_weights(&counts(&[("a", 100.0), ("b", 100.0)]), 100.0, 10.0).unwrap();
        assert_eq!(w.per_lang["a"].weight, 0.5);
        let w = unimax_weights(&counts(&[("a", 10.0), ("b", 1000.0)]), 1000.0, 10.0).unwrap();
        assert_eq!(w.per_lang["a"].tokens, 100.0);
        assert_eq!(w.per_lang["b"].tokens, 900.0);
        assert!((w.per_lang["a"].weight - 0.1).abs() < 1e-12);
        assert_eq!(w.per_lang["a"].epochs, 10.0);
    }

    #[test]
    fn saturation_and_errors() {
        let w = unimax_weights(&counts(&[("a", 1.0), ("b", 3.0)]), 1e9, 1.0).unwrap();
        assert!(w.saturated);
        assert_eq!(w.allocated(), 4.0);
        assert!((w.per_lang["b"].weight - 0.75).abs() < 1e-12);
        assert!(unimax_weights(&counts(&[("a", 0.0)]), 1.0, 10.0).is_err());
        assert!(unimax_weights(&counts(&[("a", 1.0)]), 0.0, 10.0).is_err());
        assert!(unimax_weights(&BTreeMap::new(), 1.0, 10.0).is_err());
    }
}
