use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PROPORTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureEntry {
    pub source: String,
    pub native_tokens: u64,
    pub target_proportion: f64,
    /// Epochs over the source per pass of the mixture.
    pub weight: f64,
}

impl MixtureEntry {
    pub fn effective_tokens(&self) -> f64 {
        self.weight * self.native_tokens as f64
    }
}

/// Sampling weights realising target proportions, sorted by source name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub entries: Vec<MixtureEntry>,
}

impl MixtureSpec {
    pub fn get(&self, source: &str) -> Option<&MixtureEntry> {
        self.entries.iter().find(|e| e.source == source)
    }

    pub fn total_effective_tokens(&self) -> f64 {
        self.entries
            .iter()
            .map(MixtureEntry::effective_tokens)
            .sum()
    }

    /// Share of the weighted mixture drawn from `sources`.
    pub fn effective_share<'a>(&self, sources: impl IntoIterator<Item = &'a str>) -> f64 {
        let part: f64 = sources
            .into_iter()
            .filter_map(|s| self.get(s))
            .map(MixtureEntry::effective_tokens)
            .sum();
        part / self.total_effective_tokens()
    }

    /// Share of the unweighted corpus held by `sources`.
    pub fn native_share<'a>(&self, sources: impl IntoIterator<Item = &'a str>) -> f64 {
        let total: u64 = self.entries.iter().map(|e| e.native_tokens).sum();
        let part: u64 = sources
            .into_iter()
            .filter_map(|s| self.get(s))
            .map(|e| e.native_tokens)
            .sum();
        part as f64 / total as f64
    }
}

/// Weights with `weight ∝ target / native`, scaled so the smallest weight of
/// any source with a positive target is 1. A source kept at its natural
/// proportion relative to the others therefore gets weight 1.
pub fn compute_mixture(
    native_tokens: &BTreeMap<String, u64>,
    targets: &BTreeMap<String, f64>,
) -> Result<MixtureSpec> {
    if native_tokens.is_empty() {
        return Err(Error::Mixture("no sources".into()));
    }
    if native_tokens.keys().ne(targets.keys()) {
        return Err(Error::Mixture(
            "native counts and targets name different sources".into(),
        ));
    }
    let mut sum = 0.0;
    for (source, &t) in targets {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Mixture(format!("target for {source} is {t}")));
        }
        sum += t;
    }
    if (sum - 1.0).abs() > PROPORTION_TOLERANCE {
        return Err(Error::Mixture(format!("targets sum to {sum}, not 1")));
    }
    if let Some((source, _)) = native_tokens.iter().find(|(_, &n)| n == 0) {
        return Err(Error::Mixture(format!("{source} has zero native tokens")));
    }
    let raw: Vec<f64> = native_tokens
        .iter()
        .map(|(s, &n)| targets[s] / n as f64)
        .collect();
    let min = raw
        .iter()
        .copied()
        .filter(|&w| w > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::Mixture("every target is zero".into()));
    }
    Ok(MixtureSpec {
        entries: native_tokens
            .iter()
            .zip(raw)
            .map(|((source, &n), w)| MixtureEntry {
                source: source.clone(),
                native_tokens: n,
                target_proportion: targets[source],
                weight: w / min,
            })
            .collect(),
    })
}

/// Targets that keep every source at its native size except `upweight`,
/// which is raised to match `reference`'s native size.
pub fn equalize_targets(
    native_tokens: &BTreeMap<String, u64>,
    upweight: &str,
    reference: &str,
) -> Result<BTreeMap<String, f64>> {
    let lookup = |s: &str| {
        native_tokens
            .get(s)
            .copied()
            .ok_or_else(|| Error::UnknownSource(s.to_string()))
    };
    let target_size = lookup(reference)?;
    lookup(upweight)?;
    let effective: BTreeMap<&String, f64> = native_tokens
        .iter()
        .map(|(s, &n)| {
            (
                s,
                if s == upweight {
                    target_size as f64
                } else {
                    n as f64
                },
            )
        })
        .collect();
    let total: f64 = effective.values().sum();
    if total == 0.0 {
        return Err(Error::Mixture("no tokens".into()));
    }
    Ok(effective
        .into_iter()
        .map(|(s, e)| (s.clone(), e / total))
        .collect())
}

/// Default mixture: FineWeb-Edu upweighted to DCLM's size.
pub fn default_mixture(native_tokens: &BTreeMap<String, u64>) -> Result<MixtureSpec> {
    let upweight = ["fineweb-edu", "fineweb-edu2"]
        .into_iter()
        .find(|s| native_tokens.contains_key(*s))
        .ok_or_else(|| Error::UnknownSource("fineweb-edu".into()))?;
    compute_mixture(
        native_tokens,
        &equalize_targets(native_tokens, upweight, "dclm")?,
    )
}
