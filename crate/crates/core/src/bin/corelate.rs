//! Command line front end. Each subcommand runs one stage and persists its
//! result as JSON so later stages can resume from it.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use corelate::cluster::Normalization;
use corelate::community::{self, Community, DetectConfig};
use corelate::egonet::{self, EgonetMode};
use corelate::export::{self, ExportFormat};
use corelate::ingest::{Business, ReactionDataset};
use corelate::pipeline::{self, ClusterParams, ClusterReport, PipelineConfig};
use corelate::reaction_filter::{self, FilterConfig};
use corelate::synth::{self, PlantedConfig};
use corelate::taxonomy::CategoryTaxonomy;
use corelate::{cluster, Error, Result};

#[derive(Parser)]
#[command(name = "corelate", version, about = "Business co-reaction graphs, communities and outliers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and clean businesses and reactions.
    Ingest {
        #[arg(long)]
        businesses: PathBuf,
        #[arg(long)]
        reactions: PathBuf,
        #[arg(long)]
        blocklist: Option<PathBuf>,
        /// Receives businesses.json, reactions.json and ingest.json.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Drop negative reactions and users outside the activity band.
    Filter {
        #[arg(long)]
        reactions: PathBuf,
        #[arg(long, default_value_t = reaction_filter::DEFAULT_MIN_REACTIONS)]
        min_reactions: u64,
        #[arg(long, default_value_t = reaction_filter::DEFAULT_COVERAGE)]
        coverage: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the weighted co-reaction graph.
    Graph {
        #[arg(long)]
        businesses: PathBuf,
        #[arg(long)]
        reactions: PathBuf,
        /// Business ids removed from the graph after construction.
        #[arg(long = "exclude", value_delimiter = ',')]
        exclude: Vec<String>,
        /// `.json`, `.graphml` or `.dot`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Find size-bounded communities.
    Detect {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        detect: DetectArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// k-means over community category vectors.
    Cluster {
        #[arg(long)]
        communities: PathBuf,
        #[arg(long)]
        businesses: PathBuf,
        #[command(flatten)]
        cluster: ClusterArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tag businesses whose category is outside their cluster's signature.
    Tag {
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        communities: PathBuf,
        #[arg(long)]
        businesses: PathBuf,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long, default_value_t = corelate::outlier::DEFAULT_SIGNATURE_THRESHOLD)]
        threshold: f64,
        /// Keep only the communities containing this business.
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// A business and its strongest neighbours.
    Egonet {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = egonet::DEFAULT_MAX_NEIGHBORS)]
        max: usize,
        /// Drop edges between neighbours.
        #[arg(long)]
        star: bool,
        /// Labels nodes with business names.
        #[arg(long)]
        businesses: Option<PathBuf>,
        /// `.dot`, `.graphml` or `.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate planted-community data.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Every stage end to end from a JSON config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        target: Option<String>,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = pipeline::THREADS_ENV)]
        threads: Option<usize>,
    },
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long, default_value_t = community::DEFAULT_MIN_SIZE)]
    min_size: usize,
    #[arg(long, default_value_t = community::DEFAULT_MAX_SIZE)]
    max_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Accept only sizes strictly between the bounds.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = 1)]
    lp_runs: usize,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long, default_value_t = cluster::DEFAULT_K)]
    k: usize,
    /// Pick k by smallest SSE among these instead of using `--k`.
    #[arg(long, value_delimiter = ',')]
    k_candidates: Vec<usize>,
    #[arg(long, value_parser = parse_normalization, default_value = "per_community_max")]
    normalize: Normalization,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    taxonomy: Option<PathBuf>,
}

fn parse_normalization(s: &str) -> std::result::Result<Normalization, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned()))
        .map_err(|_| format!("expected per_community_max or per_feature, got `{s}`"))
}

fn taxonomy(path: Option<&Path>) -> Result<CategoryTaxonomy> {
    path.map_or_else(|| Ok(CategoryTaxonomy::default()), CategoryTaxonomy::load)
}

fn businesses(path: &Path) -> Result<Vec<Business>> {
    let parsed = pipeline::load_businesses(path)?;
    report_rejected(path, &parsed.rejected);
    Ok(parsed.records)
}

fn reactions(path: &Path) -> Result<ReactionDataset> {
    let parsed = pipeline::load_reactions(path)?;
    report_rejected(path, &parsed.rejected);
    Ok(parsed.records)
}

fn report_rejected(path: &Path, rejected: &[corelate::ingest::Diagnostic]) {
    for d in rejected {
        eprintln!("{}: rejected {d}", path.display());
    }
}

fn write_graph(graph: &corelate::graph::BusinessGraph, out: &Path, names: Option<&BTreeMap<String, String>>) -> Result<()> {
    let text = export::render_graph(graph, ExportFormat::from_path(out)?, names)?;
    export::write_file(out, &text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            businesses,
            reactions,
            blocklist,
            out_dir,
        } => {
            let ingested = pipeline::ingest_stage(&businesses, &reactions, blocklist.as_deref())?;
            for d in &ingested.diagnostics {
                eprintln!("rejected {d}");
            }
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::Usage(format!("{}: {e}", out_dir.display())))?;
            pipeline::save_json(&out_dir.join("businesses.json"), &ingested.businesses)?;
            pipeline::save_json(&out_dir.join("reactions.json"), &ingested.reactions)?;
            pipeline::save_json(&out_dir.join("ingest.json"), &ingested.counts)?;
            println!("{}", serde_json::to_string_pretty(&ingested.counts)?);
        }
        Command::Filter {
            reactions: path,
            min_reactions,
            coverage,
            out,
        } => {
            let config = FilterConfig {
                min_reactions,
                coverage,
                ..FilterConfig::default()
            };
            let (filtered, report) = reaction_filter::filter_reactions(&reactions(&path)?, &config)?;
            pipeline::save_json(&out, &filtered)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Graph {
            businesses: b,
            reactions: r,
            exclude,
            out,
        } => {
            let businesses = businesses(&b)?;
            let exclude: BTreeSet<String> = exclude.into_iter().collect();
            let (graph, counts) = pipeline::graph_stage(&businesses, &reactions(&r)?, &exclude)?;
            let names: BTreeMap<String, String> = businesses.into_iter().map(|b| (b.id, b.name)).collect();
            write_graph(&graph, &out, Some(&names))?;
            println!("{}", serde_json::to_string_pretty(&counts)?);
        }
        Command::Detect { graph, detect, out } => {
            let graph = pipeline::load_json(&graph)?;
            let config = DetectConfig {
                lp_runs: detect.lp_runs,
                ..DetectConfig::new(detect.min_size, detect.max_size, detect.seed).strict(detect.strict)
            };
            let detection = community::detect_communities(&graph, &config)?;
            pipeline::save_json(&out, &detection.communities)?;
            println!(
                "{} communities, {} vertices unassigned, {} iterations",
                detection.communities.len(),
                detection.unassigned.len(),
                detection.iterations
            );
        }
        Command::Cluster {
            communities,
            businesses: b,
            cluster,
            out,
        } => {
            let communities: Vec<Community> = pipeline::load_json(&communities)?;
            let taxonomy = taxonomy(cluster.taxonomy.as_deref())?;
            let categories = corelate::cluster::business_categories(&businesses(&b)?, &taxonomy);
            let report = pipeline::cluster_stage(
                &communities,
                &categories,
                &taxonomy,
                ClusterParams {
                    k: cluster.k,
                    k_candidates: &cluster.k_candidates,
                    normalize: cluster.normalize,
                    seed: cluster.seed,
                    max_iter: corelate::cluster::DEFAULT_KMEANS_MAX_ITER,
                },
            )?
            .ok_or_else(|| Error::Data("no communities to cluster".into()))?;
            pipeline::save_json(&out, &report)?;
            println!("k = {}, sse = {}", report.k, report.sse);
        }
        Command::Tag {
            clusters,
            communities,
            businesses: b,
            taxonomy: t,
            threshold,
            target,
            out,
        } => {
            let report: ClusterReport = pipeline::load_json(&clusters)?;
            let communities: Vec<Community> = pipeline::load_json(&communities)?;
            let taxonomy = taxonomy(t.as_deref())?;
            let categories = corelate::cluster::business_categories(&businesses(&b)?, &taxonomy);
            let (_, mut tagged) = pipeline::tag_stage(&report, &communities, &categories, &taxonomy, threshold)?;
            if let Some(target) = target {
                tagged.retain(|t| t.members.iter().any(|m| m.id == target));
            }
            pipeline::save_json(&out, &tagged)?;
            let outliers = tagged.iter().flat_map(|t| &t.members).filter(|m| m.outlier).count();
            println!("{} communities, {outliers} outliers", tagged.len());
        }
        Command::Egonet {
            graph,
            target,
            max,
            star,
            businesses: b,
            out,
        } => {
            let graph = pipeline::load_json(&graph)?;
            let mode = if star { EgonetMode::Star } else { EgonetMode::Induced };
            let ego = egonet::extract_egonet(&graph, &target, max, mode)?;
            let names = b
                .map(|p| businesses(&p).map(|bs| bs.into_iter().map(|b| (b.id, b.name)).collect::<BTreeMap<_, _>>()))
                .transpose()?;
            write_graph(&ego.subgraph, &out, names.as_ref())?;
        }
        Command::Synth { config, out_dir } => {
            let config: PlantedConfig = pipeline::load_json(&config)?;
            let data = synth::generate(&config, &CategoryTaxonomy::default())?;
            data.write_to(&out_dir)?;
            println!("{} businesses, {} reactions", data.businesses.len(), data.reactions.len());
        }
        Command::Pipeline {
            config,
            target,
            out,
            threads,
        } => {
            let config = PipelineConfig::load(&config)?;
            let out = out
                .or_else(|| config.output_dir.clone())
                .ok_or_else(|| Error::Usage("no output directory: pass --out or set output_dir".into()))?;
            let outputs = match threads {
                Some(n) => pipeline::run_pipeline_with_threads(&config, target.as_deref(), &out, n)?,
                None => pipeline::run_pipeline(&config, target.as_deref(), &out)?,
            };
            print!("{}", outputs.files["report.txt"]);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
