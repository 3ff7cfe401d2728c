//! Atrophy, percentile acceptance, and the per-node retrieval metrics.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::record::{PropertyType, Repository, ValueSet};
use crate::swarm::{RecommendationStore, ValueEnergies};

/// Slack for floor/ceil on products of decimal grid values, so that e.g.
/// `0.19 * 100` counts as 19.
const GRID_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtrophyOutcome {
    pub property: PropertyType,
    /// Atrophied ids in id order.
    pub atrophied: Vec<String>,
    /// Exactly the values removed from each atrophied id.
    pub ground_truth: BTreeMap<String, ValueSet>,
}

/// Removes `property` from `floor(fraction * eligible)` resources chosen
/// uniformly among those that have it. Other properties are untouched.
pub fn kill_meta<R: Rng + ?Sized>(
    repo: &Repository,
    fraction: f64,
    property: &PropertyType,
    rng: &mut R,
) -> Result<(Repository, AtrophyOutcome)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::param("fraction", format!("{fraction} is outside [0, 1]")));
    }
    let eligible: Vec<usize> = repo
        .records()
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.meta(property.as_str()).is_empty())
        .map(|(i, _)| i)
        .collect();
    let count = ((fraction * eligible.len() as f64 + GRID_SLACK).floor() as usize).min(eligible.len());
    let mut chosen: Vec<usize> = rand::seq::index::sample(rng, eligible.len(), count)
        .into_iter()
        .map(|k| eligible[k])
        .collect();
    chosen.sort_unstable();

    let mut atrophied_repo = repo.clone();
    let mut outcome = AtrophyOutcome {
        property: property.clone(),
        atrophied: Vec::with_capacity(count),
        ground_truth: BTreeMap::new(),
    };
    for i in chosen {
        let rec = atrophied_repo.record_mut(i);
        let removed = rec.take(property.as_str());
        let id = rec.id().to_string();
        outcome.atrophied.push(id.clone());
        outcome.ground_truth.insert(id, removed);
    }
    Ok((atrophied_repo, outcome))
}

pub(crate) fn check_percentile(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::param("percentile", format!("{rho} is outside [0, 1]")));
    }
    Ok(())
}

/// Nearest-rank `rho`-quantile of the entry's energies; every value at or
/// above it is accepted. `rho = 0` accepts everything, `rho = 1` the values
/// tied at the maximum.
pub fn accept_values(energies: &ValueEnergies, rho: f64) -> Result<ValueSet> {
    check_percentile(rho)?;
    Ok(accept_unchecked(energies, rho))
}

pub(crate) fn accept_unchecked(energies: &ValueEnergies, rho: f64) -> ValueSet {
    if energies.is_empty() {
        return ValueSet::new();
    }
    let mut sorted: Vec<f64> = energies.values().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((rho * n as f64 - GRID_SLACK).ceil().max(1.0) as usize).min(n);
    let threshold = sorted[rank - 1];
    energies
        .iter()
        .filter(|(_, &e)| e >= threshold)
        .map(|(v, _)| v.clone())
        .collect()
}

/// Accepted value sets for every (node, property) entry of the store.
pub fn accept_meta(
    store: &RecommendationStore,
    rho: f64,
) -> Result<BTreeMap<(String, PropertyType), ValueSet>> {
    check_percentile(rho)?;
    Ok(store
        .iter()
        .map(|(node, prop, energies)| ((node.to_string(), prop.clone()), accept_unchecked(energies, rho)))
        .collect())
}

fn hits(truth: &ValueSet, accepted: &ValueSet) -> usize {
    truth.intersection(accepted).count()
}

/// `|truth ∩ accepted| / |accepted|`; undefined for an empty accepted set.
pub fn precision(truth: &ValueSet, accepted: &ValueSet) -> Option<f64> {
    (!accepted.is_empty()).then(|| hits(truth, accepted) as f64 / accepted.len() as f64)
}

/// `|truth ∩ accepted| / |truth|`; undefined for an empty ground truth.
pub fn recall(truth: &ValueSet, accepted: &ValueSet) -> Option<f64> {
    (!truth.is_empty()).then(|| hits(truth, accepted) as f64 / truth.len() as f64)
}

pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Macro-averaged scores over the atrophied nodes of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunScore {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub nodes_scored: usize,
}

/// Precision is averaged over nodes that accepted at least one value,
/// recall over every atrophied node with ground truth. The F-score is taken
/// from the two averages.
pub fn score_run(outcome: &AtrophyOutcome, store: &RecommendationStore, rho: f64) -> Result<RunScore> {
    check_percentile(rho)?;
    let empty = ValueEnergies::new();
    let (mut pr_sum, mut pr_n, mut re_sum, mut re_n) = (0.0, 0usize, 0.0, 0usize);
    for node in &outcome.atrophied {
        let truth = &outcome.ground_truth[node];
        let energies = store.get(node, outcome.property.as_str()).unwrap_or(&empty);
        let accepted = accept_unchecked(energies, rho);
        if let Some(p) = precision(truth, &accepted) {
            pr_sum += p;
            pr_n += 1;
        }
        if let Some(r) = recall(truth, &accepted) {
            re_sum += r;
            re_n += 1;
        }
    }
    let avg = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    let (precision, recall) = (avg(pr_sum, pr_n), avg(re_sum, re_n));
    Ok(RunScore {
        precision,
        recall,
        f_score: f_score(precision, recall),
        nodes_scored: re_n,
    })
}
