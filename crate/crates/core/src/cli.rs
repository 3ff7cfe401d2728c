//! Command-line front end: `ingest`, `build-network`, `propagate`,
//! `experiment` and `report`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::eval::{
    self, read_results, render_landscape, render_tables, summarize, write_landscapes, write_results,
    ExperimentConfig,
};
use crate::network::{build, AssociativeNetwork, BuildOptions, RelationType};
use crate::record::{PropertyType, Repository};
use crate::swarm::{self, PropagationConfig};
use crate::{par, Exec};

#[derive(Debug, Parser)]
#[command(name = "metaprop", version, about = "Associative-network metadata propagation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a line-delimited record file into a repository file.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Build (and by default normalize) an associative network.
    BuildNetwork {
        #[arg(long)]
        repo: PathBuf,
        /// `cite`-style occurrence label or `co<property>` (e.g. `cokey`).
        #[arg(long)]
        relation: String,
        #[arg(long)]
        output: PathBuf,
        /// Save raw weights instead of per-node distributions.
        #[arg(long)]
        no_normalize: bool,
        /// Skip co-occurrence values shared by more than this many resources.
        #[arg(long)]
        posting_cap: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run particle propagation over a network and dump the recommendation store.
    Propagate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        repo: PathBuf,
        #[command(flatten)]
        swarm: SwarmArgs,
        /// Normalize an unnormalized network before propagating.
        #[arg(long)]
        normalize: bool,
        /// Generated and printed when omitted.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: PathBuf,
        /// Also write the run report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the atrophy/recover grid and write a results file.
    Experiment {
        #[arg(long)]
        repo: PathBuf,
        /// Relation labels to build from the repository.
        #[arg(long, value_delimiter = ',', default_values_t = eval::default_networks().into_iter().map(String::from))]
        networks: Vec<String>,
        /// Prebuilt network files; replaces --networks when given.
        #[arg(long = "network-file")]
        network_files: Vec<PathBuf>,
        /// Properties to atrophy and score.
        #[arg(long, value_delimiter = ',', default_values_t = eval::default_targets().into_iter().map(String::from))]
        targets: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = eval::default_densities())]
        densities: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = eval::default_percentiles())]
        percentiles: Vec<f64>,
        #[arg(long, default_value_t = eval::DEFAULT_RUNS)]
        runs: usize,
        #[command(flatten)]
        swarm: SwarmArgs,
        /// Generated and printed when omitted.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        posting_cap: Option<usize>,
        #[arg(long)]
        output: PathBuf,
        /// Directory for per-pair density x percentile matrices.
        #[arg(long)]
        landscape_dir: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print max/mean F tables and landscapes from a results file.
    Report {
        #[arg(long)]
        results: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SwarmArgs {
    #[arg(long, default_value_t = swarm::DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, default_value_t = swarm::DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
    #[arg(long, default_value_t = swarm::DEFAULT_ENERGY_FLOOR)]
    pub energy_floor: f64,
}

impl SwarmArgs {
    fn config(&self, seed: u64) -> PropagationConfig {
        PropagationConfig {
            delta: self.delta,
            max_steps: self.max_steps,
            energy_floor: self.energy_floor,
            seed,
        }
    }
}

fn seed_or_generate(seed: Option<u64>, out: &mut dyn Write) -> anyhow::Result<u64> {
    Ok(match seed {
        Some(s) => s,
        None => {
            let s: u64 = rand::random();
            writeln!(out, "seed: {s}")?;
            s
        }
    })
}

fn create(path: &Path) -> anyhow::Result<BufWriter<fs::File>> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    run(cli, &mut stdout.lock())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest { input, output } => cmd_ingest(&input, &output, out),
        Command::BuildNetwork {
            repo,
            relation,
            output,
            no_normalize,
            posting_cap,
            workers,
        } => {
            let (r, buf) = par::with_workers(workers, || {
                let mut buf = Vec::new();
                let r = cmd_build(&repo, &relation, &output, !no_normalize, posting_cap, &mut buf);
                (r, buf)
            });
            out.write_all(&buf)?;
            r
        }
        Command::Propagate {
            network,
            repo,
            swarm,
            normalize,
            seed,
            output,
            report,
            workers,
        } => {
            let seed = seed_or_generate(seed, out)?;
            let cfg = swarm.config(seed);
            let (r, buf) = par::with_workers(workers, || {
                let mut buf = Vec::new();
                let r = cmd_propagate(&network, &repo, &cfg, normalize, &output, report.as_deref(), &mut buf);
                (r, buf)
            });
            out.write_all(&buf)?;
            r
        }
        Command::Experiment {
            repo,
            networks,
            network_files,
            targets,
            densities,
            percentiles,
            runs,
            swarm,
            seed,
            posting_cap,
            output,
            landscape_dir,
            workers,
        } => {
            let seed = seed_or_generate(seed, out)?;
            let repo = Repository::load(&repo)?;
            let targets = targets
                .iter()
                .map(|t| PropertyType::new(t.as_str()))
                .collect::<crate::Result<Vec<_>>>()?;
            let relations = if network_files.is_empty() {
                networks
                    .iter()
                    .map(|l| RelationType::resolve(l, &repo))
                    .collect::<crate::Result<Vec<_>>>()?
            } else {
                Vec::new()
            };
            let cfg = ExperimentConfig {
                networks: relations,
                targets,
                densities,
                percentiles,
                runs,
                propagation: swarm.config(0),
                master_seed: seed,
                build: BuildOptions {
                    exec: Exec::default(),
                    posting_cap,
                },
            };
            let (r, buf) = par::with_workers(workers, || {
                let mut buf = Vec::new();
                let r = cmd_experiment(&repo, &cfg, &network_files, &output, landscape_dir.as_deref(), &mut buf);
                (r, buf)
            });
            out.write_all(&buf)?;
            r
        }
        Command::Report { results } => cmd_report(&results, out),
    }
}

pub fn cmd_ingest(input: &Path, output: &Path, out: &mut dyn Write) -> anyhow::Result<()> {
    let repo = Repository::ingest_file(input).with_context(|| format!("reading {}", input.display()))?;
    repo.save(output)?;
    let props = repo.property_types();
    writeln!(out, "{} records", repo.len())?;
    writeln!(out, "{} property types", props.len())?;
    for p in &props {
        let n = repo.records().iter().filter(|r| !r.meta(p.as_str()).is_empty()).count();
        writeln!(out, "  {p}: {n} records")?;
    }
    Ok(())
}

pub fn cmd_build(
    repo_path: &Path,
    label: &str,
    output: &Path,
    normalize: bool,
    posting_cap: Option<usize>,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    let repo = Repository::load(repo_path)?;
    let relation = RelationType::resolve(label, &repo)?;
    let opts = BuildOptions {
        exec: Exec::default(),
        posting_cap,
    };
    let (net, stats) = build(&repo, &relation, &opts);
    let net = if normalize { net.normalize()? } else { net };
    net.save(output)?;
    writeln!(out, "relation {}", relation.label())?;
    writeln!(out, "{} nodes", net.node_count())?;
    writeln!(out, "{} directed edges", net.edge_count())?;
    writeln!(out, "{} unordered pairs", net.unordered_pair_count())?;
    writeln!(out, "normalized {}", net.is_normalized())?;
    if stats.dangling_references > 0 {
        writeln!(out, "{} dangling references skipped", stats.dangling_references)?;
    }
    if stats.self_references > 0 {
        writeln!(out, "{} self references skipped", stats.self_references)?;
    }
    if stats.capped_values > 0 {
        writeln!(out, "{} values above posting cap ignored", stats.capped_values)?;
    }
    Ok(())
}

pub fn cmd_propagate(
    network: &Path,
    repo_path: &Path,
    cfg: &PropagationConfig,
    normalize: bool,
    output: &Path,
    report_path: Option<&Path>,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    let repo = Repository::load(repo_path)?;
    let mut net = AssociativeNetwork::load(network)?;
    if !net.is_normalized() {
        if !normalize {
            bail!("network {} is not normalized; pass --normalize", network.display());
        }
        net = net.normalize()?;
    }
    let result = swarm::propagate(&net, &repo, cfg)?;
    result.store.write_dump(create(output)?)?;
    let report = format!("seed={}\ndelta={:?}\n{}\n", cfg.seed, cfg.delta, result.report);
    if let Some(p) = report_path {
        fs::write(p, &report).with_context(|| format!("writing {}", p.display()))?;
    }
    out.write_all(report.as_bytes())?;
    Ok(())
}

pub fn cmd_experiment(
    repo: &Repository,
    cfg: &ExperimentConfig,
    network_files: &[PathBuf],
    output: &Path,
    landscape_dir: Option<&Path>,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    let results = if network_files.is_empty() {
        eval::run_experiment(repo, cfg)?
    } else {
        let nets = network_files
            .iter()
            .map(|p| AssociativeNetwork::load(p))
            .collect::<crate::Result<Vec<_>>>()?;
        eval::run_on_networks(repo, nets, cfg)?
    };
    write_results(&results.rows, create(output)?)?;
    if let Some(dir) = landscape_dir {
        write_landscapes(&results.rows, dir)?;
    }
    writeln!(out, "{} rows written to {}", results.rows.len(), output.display())?;
    write!(out, "{}", render_tables(&summarize(&results.rows)))?;
    for f in &results.failures {
        writeln!(out, "cell failed: {} / {} / density {}: {}", f.mu_y, f.mu_x, f.density, f.message)?;
    }
    if !results.failures.is_empty() && results.rows.is_empty() {
        bail!("all {} cells failed", results.failures.len());
    }
    Ok(())
}

pub fn cmd_report(results: &Path, out: &mut dyn Write) -> anyhow::Result<()> {
    let f = fs::File::open(results).with_context(|| format!("opening {}", results.display()))?;
    let rows = read_results(f, results)?;
    write!(out, "{}", render_tables(&summarize(&rows)))?;
    for (y, x) in eval::results_pairs(&rows) {
        writeln!(out, "F({x}, {y})")?;
        writeln!(out, "{}", render_landscape(&rows, y, x))?;
    }
    Ok(())
}
