//! Discrete particle spreading activation.
//!
//! Every node gets one particle carrying its home node's metadata. On each
//! synchronous tick a live particle moves along a sampled outgoing edge,
//! decays its energy by `(1 - delta)`, and then deposits its payload values
//! (weighted by its energy) at the node it reached, for each property that
//! node lacks. Particles on a dead end freeze and never act again.
//! Recommendations accumulate apart from the repository and never feed back
//! into it during a run.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::AssociativeNetwork;
use crate::par::Exec;
use crate::record::{PropertyType, Repository, ResourceRecord};
use crate::seed::SeedBuilder;

pub const DEFAULT_DELTA: f64 = 0.15;
pub const DEFAULT_MAX_STEPS: usize = 50;
pub const DEFAULT_ENERGY_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    /// Per-traversal energy decay, in `[0, 1]`.
    pub delta: f64,
    pub max_steps: usize,
    /// The run stops once the summed energy of live particles is at or
    /// below this value.
    pub energy_floor: f64,
    pub seed: u64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            delta: DEFAULT_DELTA,
            max_steps: DEFAULT_MAX_STEPS,
            energy_floor: DEFAULT_ENERGY_FLOOR,
            seed: 0,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::param("delta", format!("{} is outside [0, 1]", self.delta)));
        }
        if self.max_steps == 0 {
            return Err(Error::param("max_steps", "must be at least 1"));
        }
        if self.energy_floor.is_nan() || self.energy_floor < 0.0 {
            return Err(Error::param("energy_floor", "must be non-negative"));
        }
        Ok(())
    }
}

pub fn decay(energy: f64, delta: f64) -> f64 {
    (1.0 - delta) * energy
}

#[derive(Debug, Clone)]
pub struct Particle<'r> {
    home: usize,
    current: usize,
    energy: f64,
    frozen: bool,
    payload: &'r ResourceRecord,
    rng: ChaCha8Rng,
}

impl<'r> Particle<'r> {
    /// Network index of the home node.
    pub fn home(&self) -> usize {
        self.home
    }

    pub fn home_id(&self) -> &'r str {
        self.payload.id()
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// The home node's metadata as it was when the particle was created.
    pub fn payload(&self) -> &'r ResourceRecord {
        self.payload
    }

    /// A particle with an explicit energy, for driving
    /// [`recommend_meta`] directly.
    pub fn with_energy(payload: &'r ResourceRecord, energy: f64) -> Self {
        Particle {
            home: usize::MAX,
            current: usize::MAX,
            energy,
            frozen: false,
            payload,
            rng: SeedBuilder::new(0).rng(),
        }
    }
}

fn particle_rng(seed: u64, home_id: &str) -> ChaCha8Rng {
    SeedBuilder::new(seed).str("particle").str(home_id).rng()
}

/// One particle per network node, all at home with full energy.
pub fn init_particles<'r>(
    net: &AssociativeNetwork,
    repo: &'r Repository,
    seed: u64,
) -> Result<Vec<Particle<'r>>> {
    if !net.is_normalized() {
        return Err(Error::NotNormalized);
    }
    net.nodes()
        .iter()
        .enumerate()
        .map(|(i, id)| {
            Ok(Particle {
                home: i,
                current: i,
                energy: 1.0,
                frozen: false,
                payload: repo.get(id)?,
                rng: particle_rng(seed, id),
            })
        })
        .collect()
}

/// Picks the first edge whose cumulative weight exceeds `u` (edges in
/// destination order); rounding slack falls on the last edge.
fn sample_edge(weights: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (k, w) in weights.iter().enumerate() {
        cum += w;
        if u < cum {
            return k;
        }
    }
    weights.len() - 1
}

/// Samples a destination of `node` proportionally to edge weight, drawing
/// exactly one `f64` from `rng`.
pub fn choose_next<R: Rng + ?Sized>(net: &AssociativeNetwork, node: usize, rng: &mut R) -> Result<usize> {
    let weights = net.out_weights(node);
    if weights.is_empty() {
        return Err(Error::NoOutgoingEdges(net.nodes()[node].clone()));
    }
    let u: f64 = rng.random();
    Ok(net.out_targets(node)[sample_edge(weights, u)] as usize)
}

pub type ValueEnergies = BTreeMap<String, f64>;
type NodeRecommendations = BTreeMap<PropertyType, ValueEnergies>;

/// Accumulated recommendation energy per (node, property, value).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecommendationStore {
    entries: BTreeMap<String, NodeRecommendations>,
}

impl RecommendationStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, node: &str, property: &str) -> Option<&ValueEnergies> {
        self.entries.get(node)?.get(property)
    }

    /// `(node, property, values)` in node then property order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &PropertyType, &ValueEnergies)> {
        self.entries
            .iter()
            .flat_map(|(n, m)| m.iter().map(move |(p, v)| (n.as_str(), p, v)))
    }

    /// Number of (node, property) entries.
    pub fn len(&self) -> usize {
        self.entries.values().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of (node, property, value) triples.
    pub fn value_count(&self) -> usize {
        self.iter().map(|(_, _, v)| v.len()).sum()
    }

    pub fn total_energy(&self) -> f64 {
        self.iter().flat_map(|(_, _, v)| v.values()).sum()
    }

    /// Writes `node<TAB>property<TAB>value<TAB>energy` lines.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (node, prop, values) in self.iter() {
            for (value, energy) in values {
                writeln!(w, "{node}\t{prop}\t{value}\t{}", format_energy(*energy))?;
            }
        }
        w.flush()
    }
}

/// Fixed 12-decimal rendering with trailing zeros trimmed.
pub fn format_energy(e: f64) -> String {
    let s = format!("{e:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn deposit(slot: &mut NodeRecommendations, node: &ResourceRecord, payload: &ResourceRecord, energy: f64) {
    for (property, values) in payload.properties() {
        if !node.meta(property.as_str()).is_empty() {
            continue;
        }
        let recs = slot.entry(property.clone()).or_default();
        for x in values {
            *recs.entry(x.clone()).or_insert(0.0) += energy;
        }
    }
}

/// Deposits `particle`'s payload at `node` for every property the node
/// lacks in `repo`, each value gaining the particle's current energy. A
/// visit to the particle's own home node is a no-op.
pub fn recommend_meta(
    node: &str,
    particle: &Particle<'_>,
    repo: &Repository,
    store: &mut RecommendationStore,
) -> Result<()> {
    if node == particle.home_id() {
        return Ok(());
    }
    let target = repo.get(node)?;
    let slot = store.entries.entry(node.to_string()).or_default();
    deposit(slot, target, particle.payload, particle.energy);
    if slot.is_empty() {
        store.entries.remove(node);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunReport {
    pub ticks: usize,
    pub particles: usize,
    pub frozen: usize,
    /// Summed energy of particles still live at the end.
    pub residual_energy: f64,
    pub store_entries: usize,
    pub store_values: usize,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ticks={}", self.ticks)?;
        writeln!(f, "particles={}", self.particles)?;
        writeln!(f, "frozen={}", self.frozen)?;
        writeln!(f, "residual_energy={:?}", self.residual_energy)?;
        writeln!(f, "store_entries={}", self.store_entries)?;
        write!(f, "store_values={}", self.store_values)
    }
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub store: RecommendationStore,
    pub report: RunReport,
}

pub fn propagate(net: &AssociativeNetwork, repo: &Repository, cfg: &PropagationConfig) -> Result<Propagation> {
    propagate_with(net, repo, cfg, Exec::default())
}

/// Runs the particle swarm to termination. Particle moves within a tick
/// run under `exec`; deposits are then applied per target node in particle
/// order, so the store is identical for every execution strategy.
pub fn propagate_with(
    net: &AssociativeNetwork,
    repo: &Repository,
    cfg: &PropagationConfig,
    exec: Exec,
) -> Result<Propagation> {
    cfg.validate()?;
    let mut particles = init_particles(net, repo, cfg.seed)?;
    let node_records: Vec<&ResourceRecord> = particles.iter().map(|p| p.payload).collect();
    let mut slots: Vec<NodeRecommendations> = vec![NodeRecommendations::new(); net.node_count()];
    let delta = cfg.delta;

    let mut ticks = 0;
    let live_energy = |ps: &[Particle<'_>]| ps.iter().filter(|p| !p.frozen).map(|p| p.energy).sum::<f64>();
    while ticks < cfg.max_steps && live_energy(&particles) > cfg.energy_floor {
        exec.for_each_mut(&mut particles, |_, p| {
            if p.frozen {
                return;
            }
            if net.out_degree(p.current) == 0 {
                p.frozen = true;
                return;
            }
            p.current = choose_next(net, p.current, &mut p.rng).expect("node has outgoing edges");
            p.energy = decay(p.energy, delta);
        });
        ticks += 1;

        // (target, particle) pairs for particles that moved this tick; the
        // stable sort keeps particle order within each target.
        let mut deposits: Vec<(u32, u32)> = particles
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.frozen && p.current != p.home)
            .map(|(k, p)| (p.current as u32, k as u32))
            .collect();
        deposits.sort_by_key(|&(t, _)| t);
        let particles_ref = &particles;
        let deposits_ref = &deposits;
        exec.for_each_mut(&mut slots, |node, slot| {
            let lo = deposits_ref.partition_point(|&(t, _)| (t as usize) < node);
            let hi = deposits_ref.partition_point(|&(t, _)| (t as usize) <= node);
            for &(_, k) in &deposits_ref[lo..hi] {
                let p = &particles_ref[k as usize];
                deposit(slot, node_records[node], p.payload, p.energy);
            }
        });
    }

    let frozen = particles.iter().filter(|p| p.frozen).count();
    let residual_energy = live_energy(&particles);
    let mut store = RecommendationStore::new();
    for (i, slot) in slots.into_iter().enumerate() {
        if !slot.is_empty() {
            store.entries.insert(net.nodes()[i].clone(), slot);
        }
    }
    let report = RunReport {
        ticks,
        particles: particles.len(),
        frozen,
        residual_energy,
        store_entries: store.len(),
        store_values: store.value_count(),
    };
    Ok(Propagation { store, report })
}
