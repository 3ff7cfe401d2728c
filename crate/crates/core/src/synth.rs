//! Seeded synthetic bibliographic corpora.
//!
//! [`two_cluster_corpus`] splits resources into two topical clusters with
//! disjoint keyword, journal, author and organization vocabularies. Each
//! resource has one journal drawn from a skewed per-cluster distribution,
//! most of its keywords come from that journal's share of the cluster
//! vocabulary, and it cites resources of its own cluster.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::record::{Repository, ResourceRecord};
use crate::seed::SeedBuilder;

const JOURNAL_WEIGHTS: [f64; 3] = [0.6, 0.25, 0.15];

#[derive(Debug, Clone, Copy)]
pub struct CorpusSpec {
    pub records: usize,
    pub keywords_per_cluster: usize,
    pub keywords_per_record: usize,
    pub authors_per_cluster: usize,
    pub citations_per_record: usize,
}

impl CorpusSpec {
    /// Vocabulary sizes scaled with the record count.
    pub fn scaled(records: usize) -> Self {
        CorpusSpec {
            records,
            keywords_per_cluster: (records / 40).max(12),
            keywords_per_record: 3,
            authors_per_cluster: (records / 6).max(20),
            citations_per_record: 4,
        }
    }
}

fn id(i: usize) -> String {
    format!("m{i:06}")
}

fn pick_distinct<R: Rng>(rng: &mut R, pool: usize, k: usize) -> Vec<usize> {
    rand::seq::index::sample(rng, pool, k.min(pool)).into_vec()
}

pub fn two_cluster_corpus(records: usize, seed: u64) -> Repository {
    generate(&CorpusSpec::scaled(records), seed)
}

pub fn generate(spec: &CorpusSpec, seed: u64) -> Repository {
    let mut rng = SeedBuilder::new(seed).str("two-cluster").rng();
    let n = spec.records;
    let members: [Vec<usize>; 2] = [(0..n).step_by(2).collect(), (1..n).step_by(2).collect()];
    let recs = (0..n).map(|i| {
        let c = i % 2;
        let u: f64 = rng.random();
        let j = if u < JOURNAL_WEIGHTS[0] {
            0
        } else if u < JOURNAL_WEIGHTS[0] + JOURNAL_WEIGHTS[1] {
            1
        } else {
            2
        };
        // journal j owns the keywords k with k % 3 == j; one keyword comes
        // from anywhere in the cluster
        let own = (spec.keywords_per_cluster + 2 - j) / 3;
        let mut keys: Vec<usize> = pick_distinct(&mut rng, own, spec.keywords_per_record.saturating_sub(1))
            .into_iter()
            .map(|k| 3 * k + j)
            .collect();
        let extra = rng.random_range(0..spec.keywords_per_cluster);
        if !keys.contains(&extra) {
            keys.push(extra);
        }
        let keys: Vec<String> = keys.into_iter().map(|k| format!("c{c}-kw{k}")).collect();
        let n_auth = rng.random_range(1..=3);
        let authors: Vec<usize> = pick_distinct(&mut rng, spec.authors_per_cluster, n_auth);
        let orgs: Vec<String> = authors.iter().map(|a| format!("c{c}-org{}", a % 7)).collect();
        let authors: Vec<String> = authors.into_iter().map(|a| format!("c{c}-auth{a}")).collect();
        let mut peers: Vec<usize> = members[c]
            .choose_multiple(&mut rng, spec.citations_per_record + 1)
            .copied()
            .filter(|&p| p != i)
            .collect();
        peers.truncate(spec.citations_per_record);
        peers.shuffle(&mut rng);
        let cites: Vec<String> = peers.into_iter().map(id).collect();
        let year = 1992 + rng.random_range(0..12);
        ResourceRecord::new(id(i))
            .expect("valid id")
            .with("key", keys)
            .with("jour", [format!("c{c}-jour{j}")])
            .with("auth", authors)
            .with("org", orgs)
            .with("cite", cites)
            .with("date", [year.to_string()])
    });
    Repository::from_records(recs.collect::<Vec<_>>()).expect("unique ids")
}

/// A copy of `repo` with the values of `property` permuted across the
/// resources that have it, destroying any link between that property and
/// the rest of the metadata.
pub fn shuffle_property(repo: &Repository, property: &str, seed: u64) -> Repository {
    let prop = crate::record::PropertyType::new(property).expect("valid property");
    let mut values: Vec<_> = repo
        .records()
        .iter()
        .map(|r| r.meta(property).clone())
        .filter(|v| !v.is_empty())
        .collect();
    values.shuffle(&mut SeedBuilder::new(seed).str("shuffle").rng());
    let mut it = values.into_iter();
    repo.clone().map_records(|r| {
        if !r.meta(property).is_empty() {
            r.replace(prop.clone(), it.next().expect("same count"));
        }
    })
}
