//! End-to-end orchestration: clean data and an optional target business in,
//! graph, communities, clusters, tagged communities, egonet and a manifest out.
//!
//! Every stage is also exposed on its own so the command line tool can run
//! and resume them from JSON intermediates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cluster::{self, CategoryVector, ClusterModel, Normalization};
use crate::community::{self, Community, DetectConfig, Detection};
use crate::egonet::{self, Egonet, EgonetMode};
use crate::error::{Error, Result};
use crate::export;
use crate::graph::{self, BusinessGraph, HubReport, RandomEdgeStats};
use crate::ingest::{self, Business, CleaningReport, Parsed, ReactionDataset, ReactionType};
use crate::outlier::{self, ClusterSignature, TaggedCommunity};
use crate::reaction_filter::{self, FilterConfig, FilterReport};
use crate::taxonomy::CategoryTaxonomy;

/// Environment fallback for the worker thread count.
pub const THREADS_ENV: &str = "CORELATE_THREADS";

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

pub fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    export::write_file(path, &json(value))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Businesses from a `.json` intermediate or a raw CSV / JSON-lines file.
pub fn load_businesses(path: &Path) -> Result<Parsed<Vec<Business>>> {
    if is_json(path) {
        Ok(Parsed {
            records: load_json(path)?,
            rejected: Vec::new(),
        })
    } else {
        ingest::read_businesses(path)
    }
}

/// Reactions from a `.json` intermediate or a raw CSV / JSON-lines file.
pub fn load_reactions(path: &Path) -> Result<Parsed<ReactionDataset>> {
    if is_json(path) {
        Ok(Parsed {
            records: load_json(path)?,
            rejected: Vec::new(),
        })
    } else {
        ingest::read_reactions(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub businesses: PathBuf,
    pub reactions: PathBuf,
    pub blocklist: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
    pub min_reactions: u64,
    pub coverage: f64,
    pub negative_types: BTreeSet<ReactionType>,
    pub min_size: usize,
    pub max_size: usize,
    pub seed: u64,
    pub strict_bounds: bool,
    pub lp_runs: usize,
    pub lp_max_sweeps: usize,
    pub k: usize,
    /// When non-empty, k is chosen among these by smallest SSE.
    pub k_candidates: Vec<usize>,
    pub normalize: Normalization,
    pub kmeans_max_iter: usize,
    pub signature_threshold: f64,
    pub ego_max: usize,
    pub ego_star: bool,
    pub exclude_ids: BTreeSet<String>,
    pub hub_report_size: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let filter = FilterConfig::default();
        let detect = DetectConfig::default();
        PipelineConfig {
            businesses: PathBuf::new(),
            reactions: PathBuf::new(),
            blocklist: None,
            taxonomy: None,
            min_reactions: filter.min_reactions,
            coverage: filter.coverage,
            negative_types: filter.negative_types,
            min_size: detect.min_size,
            max_size: detect.max_size,
            seed: detect.seed,
            strict_bounds: detect.strict_bounds,
            lp_runs: detect.lp_runs,
            lp_max_sweeps: detect.lp_max_sweeps,
            k: cluster::DEFAULT_K,
            k_candidates: Vec::new(),
            normalize: Normalization::default(),
            kmeans_max_iter: cluster::DEFAULT_KMEANS_MAX_ITER,
            signature_threshold: outlier::DEFAULT_SIGNATURE_THRESHOLD,
            ego_max: egonet::DEFAULT_MAX_NEIGHBORS,
            ego_star: false,
            exclude_ids: BTreeSet::new(),
            hub_report_size: 10,
            output_dir: None,
        }
    }
}

impl PipelineConfig {
    /// Reads a JSON config; relative paths are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.businesses);
        fix(&mut self.reactions);
        self.blocklist.iter_mut().for_each(fix);
        self.taxonomy.iter_mut().for_each(fix);
        self.output_dir.iter_mut().for_each(fix);
    }

    pub fn filter_config(&self) -> FilterConfig {
        FilterConfig {
            min_reactions: self.min_reactions,
            coverage: self.coverage,
            negative_types: self.negative_types.clone(),
        }
    }

    pub fn detect_config(&self) -> DetectConfig {
        DetectConfig {
            min_size: self.min_size,
            max_size: self.max_size,
            seed: self.seed,
            strict_bounds: self.strict_bounds,
            lp_runs: self.lp_runs,
            lp_max_sweeps: self.lp_max_sweeps,
        }
    }

    pub fn egonet_mode(&self) -> EgonetMode {
        if self.ego_star {
            EgonetMode::Star
        } else {
            EgonetMode::Induced
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (key, path) in [("businesses", Some(&self.businesses)), ("reactions", Some(&self.reactions))]
            .into_iter()
            .chain([("blocklist", self.blocklist.as_ref()), ("taxonomy", self.taxonomy.as_ref())])
        {
            let Some(path) = path else { continue };
            if path.as_os_str().is_empty() {
                return Err(Error::Usage(format!("config key `{key}` is required")));
            }
            if !path.exists() {
                return Err(Error::Usage(format!("`{key}` path {} does not exist", path.display())));
            }
        }
        if self.min_reactions < 1 {
            return Err(Error::Domain("min_reactions must be >= 1".into()));
        }
        if !(self.coverage > 0.0 && self.coverage <= 1.0) {
            return Err(Error::Domain(format!("coverage {} is outside (0, 1]", self.coverage)));
        }
        self.detect_config().validate()?;
        if self.k < 1 || self.k_candidates.contains(&0) {
            return Err(Error::Domain("k must be >= 1".into()));
        }
        if self.kmeans_max_iter < 1 {
            return Err(Error::Domain("kmeans_max_iter must be >= 1".into()));
        }
        if !(self.signature_threshold > 0.5 && self.signature_threshold <= 1.0) {
            return Err(Error::Domain(format!(
                "signature_threshold {} is outside (0.5, 1]",
                self.signature_threshold
            )));
        }
        Ok(())
    }

    pub fn load_taxonomy(&self) -> Result<CategoryTaxonomy> {
        match &self.taxonomy {
            Some(p) => CategoryTaxonomy::load(p),
            None => Ok(CategoryTaxonomy::default()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestCounts {
    pub businesses_parsed: usize,
    pub businesses_rejected: usize,
    pub reactions_parsed: usize,
    pub reactions_rejected: usize,
    pub businesses_retained: usize,
    pub reactions_retained: usize,
    pub cleaning: CleaningReport,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub businesses: Vec<Business>,
    pub reactions: ReactionDataset,
    pub counts: IngestCounts,
    pub diagnostics: Vec<String>,
}

/// Parses both inputs and cleans them against the optional blocklist.
pub fn ingest_stage(businesses: &Path, reactions: &Path, blocklist: Option<&Path>) -> Result<Ingested> {
    let parsed_b = ingest::read_businesses(businesses)?;
    let parsed_r = ingest::read_reactions(reactions)?;
    let block = blocklist.map(ingest::read_blocklist).transpose()?.unwrap_or_default();
    let mut diagnostics: Vec<String> = parsed_b
        .rejected
        .iter()
        .map(|d| format!("{}: {d}", businesses.display()))
        .collect();
    diagnostics.extend(parsed_r.rejected.iter().map(|d| format!("{}: {d}", reactions.display())));
    let mut counts = IngestCounts {
        businesses_parsed: parsed_b.records.len(),
        businesses_rejected: parsed_b.rejected.len(),
        reactions_parsed: parsed_r.records.len(),
        reactions_rejected: parsed_r.rejected.len(),
        ..Default::default()
    };
    let (businesses, reactions, cleaning) = ingest::clean(parsed_b.records, &parsed_r.records, &block);
    counts.businesses_retained = businesses.len();
    counts.reactions_retained = reactions.len();
    counts.cleaning = cleaning;
    Ok(Ingested {
        businesses,
        reactions,
        counts,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphCounts {
    pub n_b: usize,
    pub stats: RandomEdgeStats,
    /// Pairs with at least one common user.
    pub pairs_with_common_users: usize,
    pub edges_cut: usize,
    pub edges_kept: usize,
    pub excluded_vertices: Vec<String>,
    pub edges_removed_by_exclusion: usize,
    pub vertices: usize,
    pub edges: usize,
}

/// Pair counting, null-model statistics, weak-edge cut and exclusions.
///
/// Every business in `businesses` becomes a vertex, reacted to or not.
pub fn graph_stage(
    businesses: &[Business],
    reactions: &ReactionDataset,
    exclude: &BTreeSet<String>,
) -> Result<(BusinessGraph, GraphCounts)> {
    let pairs = graph::count_common(reactions);
    let n_b = businesses.len();
    let stats = graph::random_edge_stats(pairs.total(), n_b as u64)?;
    let mut full = graph::build_graph(&pairs, reactions.business_index(), stats.lower_bound)?;
    for b in businesses {
        full.add_vertex(b.id.clone());
    }
    let edges_kept = full.edge_count();
    let graph = full.exclude_nodes(exclude);
    let counts = GraphCounts {
        n_b,
        stats,
        pairs_with_common_users: pairs.len(),
        edges_cut: pairs.len() - edges_kept,
        edges_kept,
        excluded_vertices: exclude.iter().filter(|id| full.contains(id)).cloned().collect(),
        edges_removed_by_exclusion: edges_kept - graph.edge_count(),
        vertices: graph.vertex_count(),
        edges: graph.edge_count(),
    };
    Ok((graph, counts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityCluster {
    pub community_id: usize,
    pub cluster: usize,
    pub vector: CategoryVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureEntry {
    pub cluster: usize,
    pub categories: Vec<String>,
    pub threshold: f64,
}

/// Contents of `clusters.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub normalize: Normalization,
    pub canonical: Vec<String>,
    pub sse: f64,
    /// `(k, sse)` per candidate when k was selected, empty for a fixed k.
    pub sse_table: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
    pub communities: Vec<CommunityCluster>,
    pub centroids: Vec<CategoryVector>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub signatures: Vec<SignatureEntry>,
}

impl ClusterReport {
    pub fn model(&self) -> ClusterModel {
        ClusterModel {
            k: self.k,
            assignment: self.communities.iter().map(|c| (c.community_id, c.cluster)).collect(),
            centroids: self.centroids.clone(),
            sse: self.sse,
        }
    }

    pub fn vectors(&self) -> Vec<CategoryVector> {
        self.communities.iter().map(|c| c.vector.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClusterParams<'a> {
    pub k: usize,
    pub k_candidates: &'a [usize],
    pub normalize: Normalization,
    pub seed: u64,
    pub max_iter: usize,
}

/// Category vectors and k-means over the communities. Returns `None` when
/// there are no communities; `k` is capped at the community count.
pub fn cluster_stage(
    communities: &[Community],
    categories: &BTreeMap<String, usize>,
    taxonomy: &CategoryTaxonomy,
    params: ClusterParams<'_>,
) -> Result<Option<ClusterReport>> {
    if communities.is_empty() {
        return Ok(None);
    }
    let dim = taxonomy.canonical().len();
    let vectors = cluster::community_vectors(communities, categories, dim, params.normalize)?;
    let n = vectors.len();
    let (k, sse_table, caveat) = if params.k_candidates.is_empty() {
        (params.k.min(n), Vec::new(), None)
    } else {
        let candidates: BTreeSet<usize> = params.k_candidates.iter().map(|&k| k.min(n)).collect();
        let candidates: Vec<usize> = candidates.into_iter().collect();
        let sel = cluster::select_k(&vectors, &candidates, params.seed, params.max_iter)?;
        (sel.k, sel.sse_table, Some(sel.caveat.to_owned()))
    };
    let fit = cluster::kmeans(&vectors, k, params.seed, params.max_iter)?;
    Ok(Some(ClusterReport {
        k,
        normalize: params.normalize,
        canonical: taxonomy.canonical().to_vec(),
        sse: fit.sse,
        sse_table,
        caveat,
        communities: communities
            .iter()
            .zip(&fit.assignment)
            .zip(vectors)
            .map(|((c, &cluster), vector)| CommunityCluster {
                community_id: c.id,
                cluster,
                vector,
            })
            .collect(),
        centroids: fit.centroids,
        signatures: Vec::new(),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedMember {
    pub id: String,
    pub category: String,
    pub outlier: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// One entry of `tagged.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedEntry {
    pub community_id: usize,
    pub cluster: usize,
    pub members: Vec<TaggedMember>,
}

/// Signatures per cluster plus the tagged communities.
pub fn tag_stage(
    report: &ClusterReport,
    communities: &[Community],
    categories: &BTreeMap<String, usize>,
    taxonomy: &CategoryTaxonomy,
    threshold: f64,
) -> Result<(Vec<ClusterSignature>, Vec<TaggedEntry>)> {
    let model = report.model();
    let by_id: BTreeMap<usize, &CategoryVector> =
        report.communities.iter().map(|c| (c.community_id, &c.vector)).collect();
    let vectors = communities
        .iter()
        .map(|c| {
            by_id
                .get(&c.id)
                .map(|v| (*v).clone())
                .ok_or_else(|| Error::Data(format!("community {} is missing from the cluster report", c.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    let signatures = outlier::cluster_signatures(&model, communities, &vectors, threshold)?;
    let tagged = outlier::tag_outliers(&model, communities, &vectors, categories, threshold)?;
    Ok((signatures, tagged.iter().map(|t| tagged_entry(t, categories, taxonomy)).collect()))
}

fn tagged_entry(t: &TaggedCommunity, categories: &BTreeMap<String, usize>, taxonomy: &CategoryTaxonomy) -> TaggedEntry {
    TaggedEntry {
        community_id: t.community.id,
        cluster: t.cluster,
        members: t
            .community
            .members
            .iter()
            .map(|id| {
                let category = taxonomy.name(categories[id]).to_owned();
                let reason = t
                    .tags
                    .get(id)
                    .map(|&cat| format!("category `{}` is not in the signature of cluster {}", taxonomy.name(cat), t.cluster));
                TaggedMember {
                    id: id.clone(),
                    category,
                    outlier: reason.is_some(),
                    reason,
                }
            })
            .collect(),
    }
}

/// Values reported for the original 1,926-page dataset. Not reproducible
/// without that data; kept in the manifest for comparison only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRun {
    pub businesses: usize,
    pub activity_upper_bound: u64,
    pub mu: f64,
    pub sigma: f64,
    pub lower_bound: f64,
    pub edges_cut: usize,
    pub edges_kept: usize,
    pub communities: usize,
    pub k: usize,
}

pub const REFERENCE_RUN: ReferenceRun = ReferenceRun {
    businesses: 1926,
    activity_upper_bound: 174,
    mu: 120.289,
    sigma: 10.96,
    lower_bound: 153.195,
    edges_cut: 978_410,
    edges_kept: 223_939,
    communities: 144,
    k: 8,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionCounts {
    pub communities_found: usize,
    pub unassigned_vertices: usize,
    pub iterations: usize,
    pub min_edge: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterCounts {
    pub k: usize,
    pub sse: f64,
    pub sse_table: Vec<(usize, f64)>,
    pub cluster_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EgonetCounts {
    pub target: String,
    pub vertices: usize,
    pub edges: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub target_communities: Vec<usize>,
}

/// Everything a run did, written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub parameters: PipelineConfig,
    pub ingest: IngestCounts,
    pub filter: FilterReport,
    pub graph: GraphCounts,
    pub detection: DetectionCounts,
    pub clustering: Option<ClusterCounts>,
    pub outliers_tagged: usize,
    pub egonet: Option<EgonetCounts>,
    pub outputs: Vec<String>,
    pub reference_run: ReferenceRun,
}

#[derive(Debug, Clone)]
pub struct PipelineOutputs {
    pub graph: BusinessGraph,
    pub detection: Detection,
    pub clusters: Option<ClusterReport>,
    pub signatures: Vec<ClusterSignature>,
    pub tagged: Vec<TaggedEntry>,
    pub egonet: Option<Egonet>,
    pub manifest: Manifest,
    /// Rendered files, name → contents.
    pub files: BTreeMap<String, String>,
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Runs the whole pipeline and writes its artifacts to `out_dir`.
///
/// A failing stage aborts the run and leaves nothing behind, except an
/// unknown `target`: then every other artifact is written and the egonet
/// stage error is returned.
pub fn run_pipeline(config: &PipelineConfig, target: Option<&str>, out_dir: &Path) -> Result<PipelineOutputs> {
    let outputs = compute(config, target)?;
    write_outputs(out_dir, &outputs.files)?;
    if let Some(err) = outputs.manifest.egonet.as_ref().and_then(|e| e.error.clone()) {
        return Err(Error::UnknownId(err).in_stage("egonet"));
    }
    Ok(outputs)
}

/// [`run_pipeline`] inside a dedicated pool of `threads` workers.
pub fn run_pipeline_with_threads(
    config: &PipelineConfig,
    target: Option<&str>,
    out_dir: &Path,
    threads: usize,
) -> Result<PipelineOutputs> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| run_pipeline(config, target, out_dir))
}

/// Runs every stage in memory and renders the output files.
pub fn compute(config: &PipelineConfig, target: Option<&str>) -> Result<PipelineOutputs> {
    stage("config", config.validate())?;
    let taxonomy = stage("config", config.load_taxonomy())?;

    let ingested = stage(
        "ingest",
        ingest_stage(&config.businesses, &config.reactions, config.blocklist.as_deref()),
    )?;
    let (filtered, filter_report) = stage(
        "filter",
        reaction_filter::filter_reactions(&ingested.reactions, &config.filter_config()),
    )?;
    let (graph, graph_counts) = stage(
        "graph",
        graph_stage(&ingested.businesses, &filtered, &config.exclude_ids),
    )?;
    let detection = stage("detect", community::detect_communities(&graph, &config.detect_config()))?;

    let categories = cluster::business_categories(&ingested.businesses, &taxonomy);
    let mut clusters = stage(
        "cluster",
        cluster_stage(
            &detection.communities,
            &categories,
            &taxonomy,
            ClusterParams {
                k: config.k,
                k_candidates: &config.k_candidates,
                normalize: config.normalize,
                seed: config.seed,
                max_iter: config.kmeans_max_iter,
            },
        ),
    )?;
    let (signatures, tagged) = match &clusters {
        Some(report) => stage(
            "tag",
            tag_stage(report, &detection.communities, &categories, &taxonomy, config.signature_threshold),
        )?,
        None => (Vec::new(), Vec::new()),
    };
    if let Some(report) = clusters.as_mut() {
        report.signatures = signatures
            .iter()
            .map(|s| SignatureEntry {
                cluster: s.cluster,
                categories: s.signature.categories.iter().map(|&i| taxonomy.name(i).to_owned()).collect(),
                threshold: s.signature.threshold,
            })
            .collect();
    }

    let names: BTreeMap<String, String> = ingested.businesses.iter().map(|b| (b.id.clone(), b.name.clone())).collect();
    let (egonet, egonet_counts) = match target {
        None => (None, None),
        Some(t) => {
            let target_communities: Vec<usize> = detection
                .communities
                .iter()
                .filter(|c| c.members.contains(t))
                .map(|c| c.id)
                .collect();
            match egonet::extract_egonet(&graph, t, config.ego_max, config.egonet_mode()) {
                Ok(ego) => {
                    let counts = EgonetCounts {
                        target: t.to_owned(),
                        vertices: ego.subgraph.vertex_count(),
                        edges: ego.subgraph.edge_count(),
                        error: None,
                        target_communities,
                    };
                    (Some(ego), Some(counts))
                }
                Err(Error::UnknownId(id)) => (
                    None,
                    Some(EgonetCounts {
                        target: t.to_owned(),
                        vertices: 0,
                        edges: 0,
                        error: Some(id),
                        target_communities,
                    }),
                ),
                Err(e) => return Err(e.in_stage("egonet")),
            }
        }
    };

    let mut files = BTreeMap::new();
    files.insert("graph.graphml".to_owned(), export::to_graphml(&graph, Some(&names)));
    files.insert("graph.json".to_owned(), export::to_json(&graph));
    files.insert("communities.json".to_owned(), json(&detection.communities));
    files.insert("unassigned.json".to_owned(), json(&detection.unassigned));
    files.insert("clusters.json".to_owned(), json(&clusters));
    files.insert("tagged.json".to_owned(), json(&tagged));
    if let (Some(ego), Some(counts)) = (&egonet, &egonet_counts) {
        files.insert("egonet.dot".to_owned(), export::to_dot(&ego.subgraph, Some(&names)));
        files.insert("egonet.json".to_owned(), json(ego));
        let subset: Vec<&TaggedEntry> = tagged
            .iter()
            .filter(|t| counts.target_communities.contains(&t.community_id))
            .collect();
        files.insert("target_tagged.json".to_owned(), json(&subset));
    }

    let hubs = graph::hub_report(&graph, config.hub_report_size.max(1));
    let manifest = Manifest {
        parameters: config.clone(),
        ingest: ingested.counts.clone(),
        filter: filter_report,
        graph: graph_counts,
        detection: DetectionCounts {
            communities_found: detection.communities.len(),
            unassigned_vertices: detection.unassigned.len(),
            iterations: detection.iterations,
            min_edge: detection.min_edge,
        },
        clustering: clusters.as_ref().map(|c| ClusterCounts {
            k: c.k,
            sse: c.sse,
            sse_table: c.sse_table.clone(),
            cluster_sizes: c.model().clusters().iter().map(Vec::len).collect(),
        }),
        outliers_tagged: tagged.iter().flat_map(|t| &t.members).filter(|m| m.outlier).count(),
        egonet: egonet_counts,
        outputs: Vec::new(),
        reference_run: REFERENCE_RUN,
    };
    files.insert(
        "report.txt".to_owned(),
        render_report(&manifest, &hubs, clusters.as_ref(), &detection, &tagged, &filtered, &names),
    );
    let mut manifest = manifest;
    manifest.outputs = files.keys().cloned().chain(["manifest.json".to_owned()]).collect();
    manifest.outputs.sort();
    files.insert("manifest.json".to_owned(), json(&manifest));

    Ok(PipelineOutputs {
        graph,
        detection,
        clusters,
        signatures,
        tagged,
        egonet,
        manifest,
        files,
    })
}

/// Writes all files; on failure the ones already written are removed.
pub fn write_outputs(out_dir: &Path, files: &BTreeMap<String, String>) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = out_dir.join(name);
        if let Err(e) = export::write_file(&path, contents) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(e.in_stage("write"));
        }
        written.push(path);
    }
    Ok(())
}

fn render_report(
    manifest: &Manifest,
    hubs: &HubReport,
    clusters: Option<&ClusterReport>,
    detection: &Detection,
    tagged: &[TaggedEntry],
    reactions: &ReactionDataset,
    names: &BTreeMap<String, String>,
) -> String {
    let mut out = String::new();
    let i = &manifest.ingest;
    let f = &manifest.filter;
    let g = &manifest.graph;
    let _ = writeln!(out, "businesses: {} parsed, {} rejected, {} retained", i.businesses_parsed, i.businesses_rejected, i.businesses_retained);
    let _ = writeln!(
        out,
        "cleaning: {} duplicates, {} inconsistent, {} non-business ({} reactions), {} orphan reactions",
        i.cleaning.duplicates, i.cleaning.inconsistent, i.cleaning.non_business, i.cleaning.non_business_reactions, i.cleaning.orphan_reactions
    );
    let _ = writeln!(out, "reactions: {} parsed, {} rejected, {} after cleaning", i.reactions_parsed, i.reactions_rejected, i.reactions_retained);
    let _ = writeln!(
        out,
        "filter: {} negative removed, activity band [{}, {}], {} users removed, {} reactions kept",
        f.negative_removed, f.band.lower, f.band.upper, f.users_removed, f.reactions_out
    );
    let _ = writeln!(
        out,
        "graph: n_b={} n_r={} n_c={} mu={:.3} sigma={:.3} lower_bound={:.3}",
        g.n_b, g.stats.n_r, g.stats.n_c, g.stats.mu, g.stats.sigma, g.stats.lower_bound
    );
    let _ = writeln!(
        out,
        "edges: {} cut, {} kept, {} removed with excluded vertices {:?}",
        g.edges_cut, g.edges_kept, g.edges_removed_by_exclusion, g.excluded_vertices
    );
    let _ = writeln!(
        out,
        "communities: {} accepted in {} iterations, {} vertices unassigned",
        detection.communities.len(),
        detection.iterations,
        detection.unassigned.len()
    );

    let name = |id: &str| names.get(id).map_or(id, String::as_str).to_owned();
    let _ = writeln!(out, "\ntop vertices by degree:");
    for (rank, (id, degree)) in hubs.vertices.iter().enumerate() {
        let _ = writeln!(out, "  {:>3}  {:<40} {}", rank + 1, name(id), degree);
    }
    let _ = writeln!(out, "\ntop edges by common users:");
    for (rank, ((a, b), common)) in hubs.edges.iter().enumerate() {
        let _ = writeln!(out, "  {:>3}  {:<40} {:<40} {}", rank + 1, name(a), name(b), common);
    }

    if let Some(c) = clusters {
        let _ = writeln!(out, "\nclusters (k = {}, sse = {:.6}):", c.k, c.sse);
        let members: BTreeMap<usize, &Community> = detection.communities.iter().map(|c| (c.id, c)).collect();
        for (cluster, ids) in c.model().clusters().iter().enumerate() {
            let volume: usize = ids
                .iter()
                .flat_map(|id| &members[id].members)
                .map(|b| reactions.business_index().get(b).map_or(0, |u| u.len()))
                .sum();
            let signature = c
                .signatures
                .iter()
                .find(|s| s.cluster == cluster)
                .map(|s| s.categories.join("; "))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "  cluster {cluster}: {} communities, {volume} reacting users, signature: {signature}",
                ids.len()
            );
        }
        for (k, sse) in &c.sse_table {
            let _ = writeln!(out, "  sse(k={k}) = {sse:.6}");
        }
        if let Some(caveat) = &c.caveat {
            let _ = writeln!(out, "  note: {caveat}");
        }
    }

    let _ = writeln!(out, "\noutliers:");
    for t in tagged {
        for m in t.members.iter().filter(|m| m.outlier) {
            let _ = writeln!(out, "  community {} (cluster {}): {} [{}]", t.community_id, t.cluster, name(&m.id), m.category);
        }
    }
    if let Some(e) = &manifest.egonet {
        match &e.error {
            Some(err) => {
                let _ = writeln!(out, "\negonet of {}: unknown business `{err}`", e.target);
            }
            None => {
                let _ = writeln!(
                    out,
                    "\negonet of {}: {} vertices, {} edges; member of communities {:?}",
                    name(&e.target),
                    e.vertices,
                    e.edges,
                    e.target_communities
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let c = PipelineConfig::default();
        assert_eq!((c.min_reactions, c.coverage), (3, 0.999));
        assert_eq!(c.negative_types, [ReactionType::Angry, ReactionType::Sad].into());
        assert_eq!((c.min_size, c.max_size, c.lp_runs, c.lp_max_sweeps), (4, 30, 1, 100));
        assert!(!c.strict_bounds);
        assert_eq!((c.k, c.kmeans_max_iter), (8, 100));
        assert_eq!(c.signature_threshold, 0.7);
        assert_eq!(c.ego_max, 7);
        assert_eq!(c.normalize, Normalization::PerCommunityMax);
    }

    #[test]
    fn config_keys_parse_and_resolve() {
        let text = r#"{"businesses": "data/b.csv", "reactions": "/abs/r.jsonl", "k": 3,
                       "normalize": "per_feature", "negative_types": ["Angry"], "exclude_ids": ["x"]}"#;
        let mut c: PipelineConfig = serde_json::from_str(text).unwrap();
        c.resolve_paths(Path::new("/base"));
        assert_eq!(c.businesses, PathBuf::from("/base/data/b.csv"));
        assert_eq!(c.reactions, PathBuf::from("/abs/r.jsonl"));
        assert_eq!(c.normalize, Normalization::PerFeature);
        assert_eq!(c.negative_types, [ReactionType::Angry].into());
        assert_eq!(c.max_size, 30);
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"min_sise": 3}"#).is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("x.csv");
        std::fs::write(&f, "").unwrap();
        let base = PipelineConfig {
            businesses: f.clone(),
            reactions: f.clone(),
            ..Default::default()
        };
        assert!(base.validate().is_ok());
        for bad in [
            PipelineConfig { coverage: 0.0, ..base.clone() },
            PipelineConfig { signature_threshold: 0.5, ..base.clone() },
            PipelineConfig { max_size: 2, ..base.clone() },
            PipelineConfig { k: 0, ..base.clone() },
            PipelineConfig { businesses: dir.path().join("missing.csv"), ..base.clone() },
            PipelineConfig { reactions: PathBuf::new(), ..base.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
