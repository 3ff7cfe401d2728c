//! Independent oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use metaprop::network::{AssociativeNetwork, RelationType};
use metaprop::record::{PropertyType, Repository, ResourceRecord};
use metaprop::seed::SeedBuilder;
use proptest::prelude::*;
use rand::Rng;

pub fn prop(s: &str) -> PropertyType {
    PropertyType::new(s).unwrap()
}

pub type EdgeMap = BTreeMap<(String, String), f64>;

pub fn edge_map(net: &AssociativeNetwork) -> EdgeMap {
    net.edges()
        .map(|(s, d, w)| ((s.to_string(), d.to_string()), w))
        .collect()
}

/// Direct pairwise definition: every ordered pair of distinct resources
/// with a non-empty intersection gets `|co| / (|a| + |b| - |co|)`.
pub fn brute_force_cooccurrence(repo: &Repository, property: &str) -> EdgeMap {
    let mut out = EdgeMap::new();
    let recs = repo.records();
    for a in recs {
        for b in recs {
            if a.id() == b.id() {
                continue;
            }
            let (ma, mb) = (a.meta(property), b.meta(property));
            let co = ma.intersection(mb).count();
            if co > 0 {
                let w = co as f64 / ((ma.len() + mb.len()) - co) as f64;
                out.insert((a.id().to_string(), b.id().to_string()), w);
            }
        }
    }
    out
}

/// Expected store for a network where every node has at most one outgoing
/// edge: each particle follows its unique path, depositing the repeated
/// product of `(1 - delta)` at every non-home node reached, until a dead end
/// or `max_steps`. Deposits are summed in (tick, home id) order.
pub fn deterministic_walk_store(
    successors: &BTreeMap<&str, &str>,
    repo: &Repository,
    delta: f64,
    max_steps: usize,
) -> BTreeMap<(String, String, String), f64> {
    let mut deposits: Vec<(usize, String, String, String, String, f64)> = Vec::new();
    for rec in repo.records() {
        let home = rec.id();
        let mut at = home;
        let mut energy = 1.0f64;
        for t in 1..=max_steps {
            let Some(&next) = successors.get(at) else { break };
            at = next;
            energy *= 1.0 - delta;
            if at == home {
                continue;
            }
            let target = repo.get(at).unwrap();
            for (p, values) in rec.properties() {
                if target.meta(p.as_str()).is_empty() {
                    for v in values {
                        deposits.push((t, home.to_string(), at.to_string(), p.to_string(), v.clone(), energy));
                    }
                }
            }
        }
    }
    deposits.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    let mut store = BTreeMap::new();
    for (_, _, node, p, v, e) in deposits {
        *store.entry((node, p, v)).or_insert(0.0) += e;
    }
    store
}

pub fn store_map(store: &metaprop::RecommendationStore) -> BTreeMap<(String, String, String), f64> {
    store
        .iter()
        .flat_map(|(n, p, vs)| vs.iter().map(move |(v, e)| ((n.to_string(), p.to_string(), v.clone()), *e)))
        .collect()
}

/// Normalized occurrence-style network from a successor map.
pub fn successor_network(nodes: &[&str], successors: &BTreeMap<&str, &str>) -> AssociativeNetwork {
    let edges: Vec<(&str, &str, f64)> = successors.iter().map(|(s, d)| (*s, *d, 1.0)).collect();
    AssociativeNetwork::from_edges(RelationType::occurrence(prop("cite")), nodes.iter().copied(), &edges, true)
        .unwrap()
}

/// Random repository: `n` records, each property drawn from a small
/// vocabulary so overlaps are common.
pub fn random_repository(n: usize, vocab: usize, seed: u64) -> Repository {
    let mut rng = SeedBuilder::new(seed).str("random-repo").rng();
    Repository::from_records((0..n).map(|i| {
        let mut r = ResourceRecord::new(format!("r{i:05}")).unwrap();
        for p in ["key", "auth", "cite"] {
            let k = rng.random_range(0..5usize);
            let values: Vec<String> = (0..k)
                .map(|_| {
                    if p == "cite" {
                        format!("r{:05}", rng.random_range(0..n + n / 10 + 1))
                    } else {
                        format!("{p}{}", rng.random_range(0..vocab))
                    }
                })
                .collect();
            r.insert(prop(p), values).unwrap();
        }
        r
    }))
    .unwrap()
}

/// Proptest strategy: up to `max` records with keyword and journal sets from
/// small vocabularies.
pub fn arb_repository(max: usize) -> impl Strategy<Value = Repository> {
    proptest::collection::vec(
        (
            proptest::collection::btree_set(0u8..12, 0..6),
            proptest::collection::btree_set(0u8..4, 0..2),
        ),
        0..=max,
    )
    .prop_map(|rows| {
        Repository::from_records(rows.into_iter().enumerate().map(|(i, (keys, jour))| {
            ResourceRecord::new(format!("n{i:03}"))
                .unwrap()
                .with("key", keys.into_iter().map(|k| format!("k{k}")))
                .with("jour", jour.into_iter().map(|j| format!("J{j}")))
        }))
        .unwrap()
    })
}

/// Proptest strategy: a recommendation entry, value -> energy, where
/// energies come from a coarse grid so ties are frequent.
pub fn arb_energies() -> impl Strategy<Value = BTreeMap<String, f64>> {
    proptest::collection::btree_map("[a-h]{1,2}", (0u32..20).prop_map(|k| k as f64 * 0.05), 1..12)
}

pub fn out_degree_counts(net: &AssociativeNetwork) -> HashMap<usize, usize> {
    let mut h = HashMap::new();
    for i in 0..net.node_count() {
        *h.entry(net.out_degree(i)).or_insert(0) += 1;
    }
    h
}
