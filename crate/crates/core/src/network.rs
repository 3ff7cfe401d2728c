//! Associative networks: construction from repository metadata, outgoing
//! weight normalization, and the tab-separated network file.
//!
//! Occurrence networks link a resource to every resource it references
//! under a property, with weight `1 / |meta(n, mu)|`. Co-occurrence networks
//! link two resources sharing at least one value, weighted by
//! `|shared| / (|a| + |b| - |shared|)`, in both directions.
//!
//! Nodes are stored in id order and edges in compressed rows, destinations
//! sorted by id within each row.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::par::Exec;
use crate::record::{PropertyType, Repository};

/// Tolerance on outgoing weight sums of a normalized network.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationKind {
    Occurrence,
    CoOccurrence,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationType {
    pub kind: RelationKind,
    pub property: PropertyType,
}

impl RelationType {
    pub fn occurrence(property: PropertyType) -> Self {
        RelationType {
            kind: RelationKind::Occurrence,
            property,
        }
    }

    pub fn cooccurrence(property: PropertyType) -> Self {
        RelationType {
            kind: RelationKind::CoOccurrence,
            property,
        }
    }

    /// `cite` for occurrence on `cite`, `cokey` for co-occurrence on `key`.
    pub fn label(&self) -> String {
        match self.kind {
            RelationKind::Occurrence => self.property.to_string(),
            RelationKind::CoOccurrence => format!("co{}", self.property),
        }
    }

    /// Labels valid for `repo`: reference properties as occurrence labels,
    /// every present property as a `co` label.
    pub fn valid_labels(repo: &Repository) -> Vec<String> {
        let mut labels: Vec<String> = repo
            .reference_properties()
            .into_iter()
            .map(|p| p.to_string())
            .collect();
        labels.extend(repo.property_types().into_iter().map(|p| format!("co{p}")));
        labels
    }

    /// Resolves a relation label against a repository. A label naming a
    /// reference property is an occurrence relation; `co<property>` is a
    /// co-occurrence relation over a property present in the repository.
    pub fn resolve(label: &str, repo: &Repository) -> Result<Self> {
        let present = repo.property_types();
        if let Ok(p) = PropertyType::new(label) {
            if present.contains(&p) {
                return if repo.reference_properties().contains(&p) {
                    Ok(RelationType::occurrence(p))
                } else {
                    Err(Error::NotAReferenceProperty(label.to_string()))
                };
            }
        }
        if let Some(rest) = label.strip_prefix("co") {
            if let Ok(p) = PropertyType::new(rest) {
                if present.contains(&p) {
                    return Ok(RelationType::cooccurrence(p));
                }
            }
        }
        Err(Error::UnknownRelation {
            label: label.to_string(),
            valid: Self::valid_labels(repo).join(", "),
        })
    }

    fn encode(&self) -> String {
        let kind = match self.kind {
            RelationKind::Occurrence => "occurrence",
            RelationKind::CoOccurrence => "cooccurrence",
        };
        format!("{kind}:{}", self.property)
    }

    fn decode(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownRelation {
            label: s.to_string(),
            valid: "occurrence:<property>, cooccurrence:<property>".to_string(),
        };
        let (kind, prop) = s.split_once(':').ok_or_else(unknown)?;
        let property = PropertyType::new(prop).map_err(|_| unknown())?;
        match kind {
            "occurrence" => Ok(RelationType::occurrence(property)),
            "cooccurrence" => Ok(RelationType::cooccurrence(property)),
            _ => Err(unknown()),
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociativeNetwork {
    relation: RelationType,
    nodes: Vec<String>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    normalized: bool,
}

type Row = (Vec<u32>, Vec<f64>);

impl AssociativeNetwork {
    fn from_rows(relation: RelationType, nodes: Vec<String>, rows: Vec<Row>, normalized: bool) -> Self {
        let mut offsets = Vec::with_capacity(nodes.len() + 1);
        offsets.push(0);
        let total = rows.iter().map(|r| r.0.len()).sum();
        let mut targets = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for (t, w) in rows {
            targets.extend(t);
            weights.extend(w);
            offsets.push(targets.len());
        }
        AssociativeNetwork {
            relation,
            nodes,
            offsets,
            targets,
            weights,
            normalized,
        }
    }

    /// Builds a network from explicit edges, checking every invariant: known
    /// endpoints, no self-loops, positive finite weights, one edge per
    /// ordered pair, and unit row sums when `normalized` is set.
    pub fn from_edges<N, S>(
        relation: RelationType,
        nodes: N,
        edges: &[(S, S, f64)],
        normalized: bool,
    ) -> Result<Self>
    where
        N: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut ids: Vec<String> = nodes.into_iter().map(|s| s.as_ref().to_string()).collect();
        ids.sort();
        ids.dedup();
        let lookup = |id: &str| {
            ids.binary_search_by(|n| n.as_str().cmp(id))
                .map_err(|_| Error::InvalidNetwork(format!("edge endpoint {id:?} is not a node")))
        };
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); ids.len()];
        for (src, dst, w) in edges {
            let (s, d) = (lookup(src.as_ref())?, lookup(dst.as_ref())?);
            if s == d {
                return Err(Error::InvalidNetwork(format!("self-loop on {:?}", src.as_ref())));
            }
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "edge {:?} -> {:?} has non-positive weight {w}",
                    src.as_ref(),
                    dst.as_ref()
                )));
            }
            rows[s].push((d as u32, *w));
        }
        let mut split = Vec::with_capacity(rows.len());
        for (s, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(d, _)| d);
            if let Some(pair) = row.windows(2).find(|p| p[0].0 == p[1].0) {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate edge {:?} -> {:?}",
                    ids[s], ids[pair[0].0 as usize]
                )));
            }
            split.push(row.into_iter().unzip());
        }
        let net = Self::from_rows(relation, ids, split, normalized);
        if normalized {
            if let Some(bad) = (0..net.node_count()).find(|&i| {
                let w = net.out_weights(i);
                !w.is_empty() && (w.iter().sum::<f64>() - 1.0).abs() > NORMALIZATION_TOLERANCE
            }) {
                return Err(Error::InvalidNetwork(format!(
                    "node {:?} is flagged normalized but its weights do not sum to 1",
                    net.nodes[bad]
                )));
            }
        }
        Ok(net)
    }

    pub fn relation(&self) -> &RelationType {
        &self.relation
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(id)).ok()
    }

    /// Directed edge count.
    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// Number of unordered node pairs joined by an edge in either direction.
    pub fn unordered_pair_count(&self) -> usize {
        let mut count = 0;
        for i in 0..self.node_count() {
            for &j in self.out_targets(i) {
                let j = j as usize;
                if i < j || !self.has_edge(j, i) {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn out_targets(&self, node: usize) -> &[u32] {
        &self.targets[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn out_weights(&self, node: usize) -> &[f64] {
        &self.weights[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn weight(&self, src: usize, dst: usize) -> Option<f64> {
        let t = self.out_targets(src);
        t.binary_search(&(dst as u32))
            .ok()
            .map(|k| self.out_weights(src)[k])
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.out_targets(src).binary_search(&(dst as u32)).is_ok()
    }

    /// Weight of the edge between two node ids.
    pub fn weight_between(&self, src: &str, dst: &str) -> Option<f64> {
        self.weight(self.node_index(src)?, self.node_index(dst)?)
    }

    /// All edges as `(src, dst, weight)` in row order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, f64)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            self.out_targets(i)
                .iter()
                .zip(self.out_weights(i))
                .map(move |(&j, &w)| (self.nodes[i].as_str(), self.nodes[j as usize].as_str(), w))
        })
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.node_count()).all(|i| {
            self.out_targets(i)
                .iter()
                .zip(self.out_weights(i))
                .all(|(&j, &w)| self.weight(j as usize, i) == Some(w))
        })
    }

    /// Divides each outgoing weight by its node's outgoing sum.
    pub fn normalize(mut self) -> Result<Self> {
        if self.normalized {
            return Err(Error::AlreadyNormalized);
        }
        for i in 0..self.node_count() {
            let range = self.offsets[i]..self.offsets[i + 1];
            let row = &mut self.weights[range];
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|w| *w /= sum);
            }
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "{NET_MAGIC}\t{NET_VERSION}\trelation={}\tlabel={}\tnodes={}\tedges={}\tnormalized={}",
            self.relation.encode(),
            self.relation.label(),
            self.node_count(),
            self.edge_count(),
            self.normalized
        )?;
        for n in &self.nodes {
            writeln!(w, "{n}")?;
        }
        for (s, d, x) in self.edges() {
            // `{:?}` on f64 is the shortest representation that parses back
            // to the same bits.
            writeln!(w, "{s}\t{d}\t{x:?}")?;
        }
        w.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_from<R: Read>(r: R, origin: &Path) -> Result<Self> {
        let corrupt = |line: usize, msg: String| Error::corrupt(origin, format!("line {line}: {msg}"));
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| corrupt(1, "missing header".into()))?
            .map_err(|e| corrupt(1, e.to_string()))?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.len() != 7 || fields[0] != NET_MAGIC || fields[1] != NET_VERSION {
            return Err(corrupt(1, "not a network file".into()));
        }
        let field = |i: usize, key: &str| {
            fields[i]
                .strip_prefix(key)
                .and_then(|v| v.strip_prefix('='))
                .ok_or_else(|| corrupt(1, format!("expected {key}=")))
        };
        let relation = RelationType::decode(field(2, "relation")?)?;
        let label = field(3, "label")?;
        if label != relation.label() {
            return Err(corrupt(1, format!("label {label:?} does not match relation")));
        }
        let n: usize = field(4, "nodes")?
            .parse()
            .map_err(|_| corrupt(1, "bad node count".into()))?;
        let m: usize = field(5, "edges")?
            .parse()
            .map_err(|_| corrupt(1, "bad edge count".into()))?;
        let normalized: bool = field(6, "normalized")?
            .parse()
            .map_err(|_| corrupt(1, "bad normalized flag".into()))?;

        let mut nodes = Vec::with_capacity(n);
        let mut edges = Vec::with_capacity(m);
        for (k, line) in lines.enumerate() {
            let lineno = k + 2;
            let line = line.map_err(|e| corrupt(lineno, e.to_string()))?;
            if nodes.len() < n {
                if line.is_empty() || line.contains('\t') {
                    return Err(corrupt(lineno, "bad node id".into()));
                }
                nodes.push(line);
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(s), Some(d), Some(x), None) = (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(corrupt(lineno, "expected src<TAB>dst<TAB>weight".into()));
            };
            let x: f64 = x.parse().map_err(|_| corrupt(lineno, format!("bad weight {x:?}")))?;
            edges.push((s.to_string(), d.to_string(), x));
        }
        if nodes.len() != n || edges.len() != m {
            return Err(Error::corrupt(
                origin,
                format!(
                    "header declares {n} nodes / {m} edges, found {} / {} (truncated?)",
                    nodes.len(),
                    edges.len()
                ),
            ));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::corrupt(origin, "node ids not sorted and unique"));
        }
        Self::from_edges(relation, nodes, &edges, normalized)
            .map_err(|e| Error::corrupt(origin, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(f, path)
    }
}

const NET_MAGIC: &str = "metaprop-network";
const NET_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Occurrence references to ids not in the repository.
    pub dangling_references: usize,
    /// Occurrence references from a resource to itself.
    pub self_references: usize,
    /// Co-occurrence values ignored because their posting list exceeded the cap.
    pub capped_values: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions {
    pub exec: Exec,
    /// Ignore co-occurrence values shared by more than this many resources.
    pub posting_cap: Option<usize>,
}

pub fn build(repo: &Repository, relation: &RelationType, opts: &BuildOptions) -> (AssociativeNetwork, BuildStats) {
    match relation.kind {
        RelationKind::Occurrence => build_occurrence_with(repo, &relation.property, opts.exec),
        RelationKind::CoOccurrence => build_cooccurrence_with(repo, &relation.property, opts),
    }
}

pub fn build_occurrence(repo: &Repository, property: &PropertyType) -> (AssociativeNetwork, BuildStats) {
    build_occurrence_with(repo, property, Exec::default())
}

/// One pass over the resources. The weight denominator counts every listed
/// value, including references that are dropped as dangling or self.
pub fn build_occurrence_with(
    repo: &Repository,
    property: &PropertyType,
    exec: Exec,
) -> (AssociativeNetwork, BuildStats) {
    let records = repo.records();
    let rows: Vec<(Row, usize, usize)> = exec.map_range(records.len(), |i| {
        let values = records[i].meta(property.as_str());
        let w = 1.0 / values.len() as f64;
        let (mut dangling, mut selfs) = (0, 0);
        let mut targets = Vec::with_capacity(values.len());
        for v in values {
            match repo.index_of(v) {
                Some(j) if j == i => selfs += 1,
                Some(j) => targets.push(j as u32),
                None => dangling += 1,
            }
        }
        targets.sort_unstable();
        let weights = vec![w; targets.len()];
        ((targets, weights), dangling, selfs)
    });
    let mut stats = BuildStats::default();
    let rows = rows
        .into_iter()
        .map(|(row, d, s)| {
            stats.dangling_references += d;
            stats.self_references += s;
            row
        })
        .collect();
    let nodes = records.iter().map(|r| r.id().to_string()).collect();
    (
        AssociativeNetwork::from_rows(RelationType::occurrence(property.clone()), nodes, rows, false),
        stats,
    )
}

pub fn build_cooccurrence(repo: &Repository, property: &PropertyType) -> (AssociativeNetwork, BuildStats) {
    build_cooccurrence_with(repo, property, &BuildOptions::default())
}

/// Co-occurrence construction through an inverted index (value to sorted
/// resource list). Each row counts shared values per neighbour in a dense
/// scratch buffer, so only pairs that actually share a value are visited.
pub fn build_cooccurrence_with(
    repo: &Repository,
    property: &PropertyType,
    opts: &BuildOptions,
) -> (AssociativeNetwork, BuildStats) {
    let records = repo.records();
    let n = records.len();

    let mut value_ids: HashMap<&str, u32> = HashMap::new();
    let mut postings: Vec<Vec<u32>> = Vec::new();
    let mut node_values: Vec<Vec<u32>> = Vec::with_capacity(n);
    for (i, r) in records.iter().enumerate() {
        let vals = r
            .meta(property.as_str())
            .iter()
            .map(|v| {
                let id = *value_ids.entry(v.as_str()).or_insert_with(|| {
                    postings.push(Vec::new());
                    (postings.len() - 1) as u32
                });
                postings[id as usize].push(i as u32);
                id
            })
            .collect();
        node_values.push(vals);
    }
    let capped: Vec<bool> = postings
        .iter()
        .map(|p| opts.posting_cap.is_some_and(|cap| p.len() > cap))
        .collect();

    let rows: Vec<Row> = opts.exec.map_range_init(
        n,
        || (vec![0u32; n], Vec::<u32>::new()),
        |(counts, touched), i| {
            for &v in &node_values[i] {
                if capped[v as usize] {
                    continue;
                }
                for &j in &postings[v as usize] {
                    if j as usize != i {
                        if counts[j as usize] == 0 {
                            touched.push(j);
                        }
                        counts[j as usize] += 1;
                    }
                }
            }
            touched.sort_unstable();
            let a = node_values[i].len();
            let weights = touched
                .iter()
                .map(|&j| {
                    let shared = counts[j as usize] as usize;
                    counts[j as usize] = 0;
                    jaccard(shared, a, node_values[j as usize].len())
                })
                .collect();
            (std::mem::take(touched), weights)
        },
    );
    let stats = BuildStats {
        capped_values: capped.iter().filter(|&&c| c).count(),
        ..BuildStats::default()
    };
    let nodes = records.iter().map(|r| r.id().to_string()).collect();
    (
        AssociativeNetwork::from_rows(RelationType::cooccurrence(property.clone()), nodes, rows, false),
        stats,
    )
}

/// `|a ∩ b| / (|a| + |b| - |a ∩ b|)` from cardinalities.
pub fn jaccard(shared: usize, a: usize, b: usize) -> f64 {
    shared as f64 / (a + b - shared) as f64
}
