//! The atrophy/recover experiment.
//!
//! For each relation network (built once from the full repository), each
//! target property and each density, a run atrophies the target property on
//! `1 - density` of the resources that have it, propagates once, and scores
//! every percentile against the removed values. Runs are averaged per cell.

mod metrics;
mod results;

pub use metrics::{
    accept_meta, accept_values, f_score, kill_meta, precision, recall, score_run, AtrophyOutcome, RunScore,
};
pub use results::{
    pairs as results_pairs, read_results, render_landscape, render_tables, summarize, write_landscapes,
    write_results, PairSummary,
};

use crate::error::{Error, Result};
use crate::network::{build, AssociativeNetwork, BuildOptions, RelationType};
use crate::record::{PropertyType, Repository};
use crate::seed::SeedBuilder;
use crate::swarm::{propagate_with, PropagationConfig};

/// `0.01, 0.21, 0.41, 0.61, 0.81`.
pub fn default_densities() -> Vec<f64> {
    (0..5).map(|i| (1 + 20 * i) as f64 / 100.0).collect()
}

/// `0.0, 0.1, ..., 1.0`.
pub fn default_percentiles() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

pub const DEFAULT_RUNS: usize = 20;

pub fn default_networks() -> Vec<&'static str> {
    vec!["coauth", "cocite", "cokey", "cite"]
}

pub fn default_targets() -> Vec<&'static str> {
    vec!["auth", "cite", "date", "jour", "key", "org"]
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub networks: Vec<RelationType>,
    pub targets: Vec<PropertyType>,
    pub densities: Vec<f64>,
    pub percentiles: Vec<f64>,
    pub runs: usize,
    /// Decay, step and floor settings; the seed is derived per run.
    pub propagation: PropagationConfig,
    pub master_seed: u64,
    pub build: BuildOptions,
}

impl ExperimentConfig {
    pub fn new(networks: Vec<RelationType>, targets: Vec<PropertyType>, master_seed: u64) -> Self {
        ExperimentConfig {
            networks,
            targets,
            densities: default_densities(),
            percentiles: default_percentiles(),
            runs: DEFAULT_RUNS,
            propagation: PropagationConfig::default(),
            master_seed,
            build: BuildOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.densities.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(Error::param("density", format!("{d} is outside (0, 1)")));
        }
        if let Some(&r) = self.percentiles.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            metrics::check_percentile(r)?;
        }
        if self.runs == 0 {
            return Err(Error::param("runs", "must be at least 1"));
        }
        self.propagation.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub mu_y: String,
    pub mu_x: String,
    pub density: f64,
    pub percentile: f64,
    pub precision: f64,
    pub recall: f64,
    /// F-score of the run-averaged precision and recall.
    pub f_score: f64,
    pub runs_averaged: usize,
    pub nodes_scored: usize,
    /// The network was built from the property being scored.
    pub anomalous: bool,
    /// Best single-run F-score in the cell; not stored in results files.
    pub f_score_run_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub mu_y: String,
    pub mu_x: String,
    pub density: f64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResults {
    pub rows: Vec<MetricsRow>,
    pub failures: Vec<CellFailure>,
}

impl ExperimentResults {
    pub fn cells_total(&self, percentiles: usize) -> usize {
        self.rows.len() / percentiles.max(1) + self.failures.len()
    }
}

/// Seed of one run of one (network, target, density) cell.
pub fn run_seed(master: u64, mu_y: &str, mu_x: &str, density_index: usize, run: usize) -> SeedBuilder {
    SeedBuilder::new(master)
        .str(mu_y)
        .str(mu_x)
        .num(density_index as u64)
        .num(run as u64)
}

struct Job {
    net: usize,
    target: usize,
    density: usize,
    run: usize,
}

/// One atrophy + propagation + scoring pass, using the percentile grid and
/// propagation settings of `cfg`.
pub fn run_once(
    net: &AssociativeNetwork,
    repo: &Repository,
    target: &PropertyType,
    density: f64,
    cfg: &ExperimentConfig,
    seed: SeedBuilder,
) -> Result<Vec<RunScore>> {
    let (atrophied, outcome) = kill_meta(repo, 1.0 - density, target, &mut seed.str("atrophy").rng())?;
    let prop = PropagationConfig {
        seed: seed.str("propagate").finish(),
        ..cfg.propagation
    };
    let out = propagate_with(net, &atrophied, &prop, cfg.build.exec)?;
    cfg.percentiles
        .iter()
        .map(|&rho| score_run(&outcome, &out.store, rho))
        .collect()
}

pub fn run_experiment(repo: &Repository, cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    let networks: Vec<AssociativeNetwork> = cfg
        .networks
        .iter()
        .map(|rel| build(repo, rel, &cfg.build).0)
        .collect();
    run_on_networks(repo, networks, cfg)
}

/// Runs the grid over prebuilt (e.g. loaded) networks; `cfg.networks` is
/// ignored and each network's own relation labels its rows. Unnormalized
/// networks are normalized first.
pub fn run_on_networks(
    repo: &Repository,
    networks: Vec<AssociativeNetwork>,
    cfg: &ExperimentConfig,
) -> Result<ExperimentResults> {
    cfg.validate()?;
    let exec = cfg.build.exec;
    let relations: Vec<RelationType> = networks.iter().map(|n| n.relation().clone()).collect();
    let networks: Vec<AssociativeNetwork> = networks
        .into_iter()
        .map(|n| if n.is_normalized() { Ok(n) } else { n.normalize() })
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for net in 0..networks.len() {
        for target in 0..cfg.targets.len() {
            for density in 0..cfg.densities.len() {
                for run in 0..cfg.runs {
                    jobs.push(Job {
                        net,
                        target,
                        density,
                        run,
                    });
                }
            }
        }
    }

    let outcomes: Vec<Result<Vec<RunScore>>> = exec.map(&jobs, |job| {
        let net = &networks[job.net];
        let mu_y = relations[job.net].label();
        let mu_x = &cfg.targets[job.target];
        let seed = run_seed(cfg.master_seed, &mu_y, mu_x.as_str(), job.density, job.run);
        run_once(net, repo, mu_x, cfg.densities[job.density], cfg, seed)
    });

    let mut results = ExperimentResults::default();
    for (cell_jobs, cell_outcomes) in jobs.chunks(cfg.runs).zip(outcomes.chunks(cfg.runs)) {
        let job = &cell_jobs[0];
        let relation = &relations[job.net];
        let mu_y = relation.label();
        let mu_x = &cfg.targets[job.target];
        let density = cfg.densities[job.density];
        let scores: std::result::Result<Vec<&Vec<RunScore>>, String> = cell_outcomes
            .iter()
            .map(|o| o.as_ref().map_err(|e| e.to_string()))
            .collect();
        let scores = match scores {
            Ok(s) => s,
            Err(e) => {
                results.failures.push(CellFailure {
                    mu_y,
                    mu_x: mu_x.to_string(),
                    density,
                    message: e,
                });
                continue;
            }
        };
        let runs = scores.len() as f64;
        for (k, &rho) in cfg.percentiles.iter().enumerate() {
            let precision = scores.iter().map(|s| s[k].precision).sum::<f64>() / runs;
            let recall = scores.iter().map(|s| s[k].recall).sum::<f64>() / runs;
            let run_max = scores.iter().map(|s| s[k].f_score).fold(0.0, f64::max);
            results.rows.push(MetricsRow {
                mu_y: mu_y.clone(),
                mu_x: mu_x.to_string(),
                density,
                percentile: rho,
                precision,
                recall,
                f_score: f_score(precision, recall),
                runs_averaged: scores.len(),
                nodes_scored: scores[0][k].nodes_scored,
                anomalous: relation.property == *mu_x,
                f_score_run_max: Some(run_max),
            });
        }
    }
    Ok(results)
}
