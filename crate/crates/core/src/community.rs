//! Size-bounded community detection.
//!
//! [`label_propagation`] is weighted asynchronous label propagation: every
//! sweep visits the vertices in a seeded random order and each vertex adopts
//! a label carrying the largest total edge weight among its neighbors.
//!
//! [`detect_communities`] repeatedly runs label propagation on a shrinking
//! working graph. Communities whose size is within bounds are accepted for
//! good; the rest form the next working graph, from which edges lighter than
//! `min_edge * counter` are cut (`counter` starts at 2). The loop stops when
//! the working graph has at most `min_size` vertices or a cut removes nothing.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BusinessGraph;

pub const DEFAULT_MIN_SIZE: usize = 4;
pub const DEFAULT_MAX_SIZE: usize = 30;
pub const DEFAULT_LP_MAX_SWEEPS: usize = 100;

/// Relative slack under which two label weights count as tied.
const TIE_EPS: f64 = 1e-12;

/// One label per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Partition {
    pub assignment: BTreeMap<String, usize>,
}

impl Partition {
    /// Label classes, ordered by label.
    pub fn communities(&self) -> Vec<BTreeSet<String>> {
        let mut classes: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
        for (v, &l) in &self.assignment {
            classes.entry(l).or_default().insert(v.clone());
        }
        classes.into_values().collect()
    }

    pub fn label_count(&self) -> usize {
        self.assignment.values().collect::<BTreeSet<_>>().len()
    }
}

/// Compressed adjacency over vertex indices (ids in sorted order).
struct Csr {
    ids: Vec<String>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
}

impl Csr {
    fn from_graph(graph: &BusinessGraph) -> Csr {
        let ids: Vec<String> = graph.vertices().map(str::to_owned).collect();
        let index: BTreeMap<&str, u32> = ids.iter().enumerate().map(|(i, v)| (v.as_str(), i as u32)).collect();
        let mut offsets = Vec::with_capacity(ids.len() + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for v in &ids {
            for (u, d) in graph.neighbors(v).into_iter().flatten() {
                targets.push(index[u.as_str()]);
                weights.push(d.weight);
            }
            offsets.push(targets.len());
        }
        Csr {
            ids,
            offsets,
            targets,
            weights,
        }
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&u, &w)| (u as usize, w))
    }
}

/// Scratch space for per-vertex label weight sums.
struct LabelTally {
    sums: Vec<f64>,
    touched: Vec<usize>,
}

impl LabelTally {
    fn new(n: usize) -> Self {
        LabelTally {
            sums: vec![0.0; n],
            touched: Vec::new(),
        }
    }

    /// Labels of maximal weight around `v`, ascending; empty for isolated vertices.
    fn best(&mut self, csr: &Csr, labels: &[usize], v: usize, out: &mut Vec<usize>) {
        out.clear();
        for (u, w) in csr.neighbors(v) {
            let l = labels[u];
            if self.sums[l] == 0.0 {
                self.touched.push(l);
            }
            self.sums[l] += w;
        }
        let max = self.touched.iter().map(|&l| self.sums[l]).fold(0.0, f64::max);
        for &l in &self.touched {
            if max - self.sums[l] <= TIE_EPS * max {
                out.push(l);
            }
        }
        for &l in &self.touched {
            self.sums[l] = 0.0;
        }
        self.touched.clear();
        out.sort_unstable();
    }
}

fn propagate(csr: &Csr, seed: u64, max_sweeps: usize) -> Vec<usize> {
    let n = csr.len();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut tally = LabelTally::new(n);
    let mut best = Vec::new();

    for _ in 0..max_sweeps {
        order.shuffle(&mut rng);
        for &v in &order {
            tally.best(csr, &labels, v, &mut best);
            match best.len() {
                0 => {}
                1 => labels[v] = best[0],
                k => labels[v] = best[rng.random_range(0..k)],
            }
        }
        let stable = (0..n).all(|v| {
            tally.best(csr, &labels, v, &mut best);
            best.is_empty() || best.binary_search(&labels[v]).is_ok()
        });
        if stable {
            break;
        }
    }
    labels
}

fn to_partition(csr: &Csr, labels: &[usize]) -> Partition {
    // Renumber labels by first appearance in id order.
    let mut renumber: BTreeMap<usize, usize> = BTreeMap::new();
    let assignment = csr
        .ids
        .iter()
        .zip(labels)
        .map(|(id, l)| {
            let next = renumber.len();
            (id.clone(), *renumber.entry(*l).or_insert(next))
        })
        .collect();
    Partition { assignment }
}

/// Weighted label propagation with the default sweep cap.
pub fn label_propagation(graph: &BusinessGraph, seed: u64) -> Partition {
    label_propagation_with(graph, seed, DEFAULT_LP_MAX_SWEEPS)
}

/// Weighted label propagation, stopping once every vertex holds a
/// weight-maximal label or after `max_sweeps` sweeps.
pub fn label_propagation_with(graph: &BusinessGraph, seed: u64, max_sweeps: usize) -> Partition {
    let csr = Csr::from_graph(graph);
    let labels = propagate(&csr, seed, max_sweeps);
    to_partition(&csr, &labels)
}

/// Weighted Newman modularity of `partition` on `graph`.
pub fn modularity(graph: &BusinessGraph, partition: &Partition) -> f64 {
    let total: f64 = graph.edges().map(|(_, _, d)| d.weight).sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut internal: BTreeMap<usize, f64> = BTreeMap::new();
    let mut strength: BTreeMap<usize, f64> = BTreeMap::new();
    for (a, b, d) in graph.edges() {
        let (la, lb) = (partition.assignment[a], partition.assignment[b]);
        *strength.entry(la).or_default() += d.weight;
        *strength.entry(lb).or_default() += d.weight;
        if la == lb {
            *internal.entry(la).or_default() += d.weight;
        }
    }
    strength
        .iter()
        .map(|(l, s)| internal.get(l).copied().unwrap_or(0.0) / total - (s / (2.0 * total)).powi(2))
        .sum()
}

fn derive_seed(seed: u64, iteration: u64, run: u64) -> u64 {
    // splitmix64 finalizer over the combined inputs
    let mut z = seed
        .wrapping_add(iteration.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(run.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub min_size: usize,
    pub max_size: usize,
    pub seed: u64,
    /// Use the literal `min_size < |c| < max_size` test instead of inclusive bounds.
    pub strict_bounds: bool,
    /// Label propagation runs per iteration; the most modular partition wins.
    pub lp_runs: usize,
    pub lp_max_sweeps: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            min_size: DEFAULT_MIN_SIZE,
            max_size: DEFAULT_MAX_SIZE,
            seed: 0,
            strict_bounds: false,
            lp_runs: 1,
            lp_max_sweeps: DEFAULT_LP_MAX_SWEEPS,
        }
    }
}

impl DetectConfig {
    pub fn new(min_size: usize, max_size: usize, seed: u64) -> Self {
        DetectConfig {
            min_size,
            max_size,
            seed,
            ..Default::default()
        }
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict_bounds = strict;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_size < 1 {
            return Err(Error::Domain("min_size must be >= 1".into()));
        }
        if self.max_size < self.min_size {
            return Err(Error::Domain(format!(
                "max_size {} is below min_size {}",
                self.max_size, self.min_size
            )));
        }
        if self.lp_runs < 1 || self.lp_max_sweeps < 1 {
            return Err(Error::Domain("lp_runs and lp_max_sweeps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn accepts(&self, size: usize) -> bool {
        if self.strict_bounds {
            size > self.min_size && size < self.max_size
        } else {
            (self.min_size..=self.max_size).contains(&size)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Community {
    pub id: usize,
    pub members: BTreeSet<String>,
    #[serde(rename = "iteration")]
    pub accepted_at_iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub communities: Vec<Community>,
    /// Vertices never accepted into a community.
    pub unassigned: BTreeSet<String>,
    pub iterations: usize,
    /// Smallest edge weight of the input graph, if it had edges.
    pub min_edge: Option<f64>,
}

fn best_partition(graph: &BusinessGraph, config: &DetectConfig, iteration: u64) -> Partition {
    let csr = Csr::from_graph(graph);
    let mut best: Option<(f64, Partition)> = None;
    for run in 0..config.lp_runs as u64 {
        let labels = propagate(&csr, derive_seed(config.seed, iteration, run), config.lp_max_sweeps);
        let p = to_partition(&csr, &labels);
        if config.lp_runs == 1 {
            return p;
        }
        let q = modularity(graph, &p);
        if best.as_ref().is_none_or(|(bq, _)| q > *bq) {
            best = Some((q, p));
        }
    }
    best.map(|(_, p)| p).unwrap_or_default()
}

/// Iterative size-bounded community extraction over label propagation.
pub fn detect_communities(graph: &BusinessGraph, config: &DetectConfig) -> Result<Detection> {
    config.validate()?;
    let min_edge = graph.min_weight();
    let cut_step = min_edge.unwrap_or(0.0);

    let mut working = graph.clone();
    let mut accepted: Vec<(usize, BTreeSet<String>)> = Vec::new();
    let mut counter = 1usize;
    let mut iterations = 0usize;

    while working.vertex_count() > config.min_size {
        counter += 1;
        iterations += 1;
        let partition = best_partition(&working, config, iterations as u64);
        let mut next = BusinessGraph::new();
        for members in partition.communities() {
            if config.accepts(members.len()) {
                accepted.push((iterations, members));
            } else {
                next.absorb(working.induced(members.iter().map(String::as_str)));
            }
        }
        working = next;
        let threshold = cut_step * counter as f64;
        let removed = working.retain_edges(|_, _, d| d.weight >= threshold);
        if removed == 0 {
            break;
        }
    }

    accepted.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.first().cmp(&b.1.first())));
    let communities: Vec<Community> = accepted
        .into_iter()
        .enumerate()
        .map(|(id, (iteration, members))| Community {
            id,
            members,
            accepted_at_iteration: iteration,
        })
        .collect();
    let assigned: BTreeSet<&str> = communities
        .iter()
        .flat_map(|c| c.members.iter().map(String::as_str))
        .collect();
    let unassigned = graph
        .vertices()
        .filter(|v| !assigned.contains(v))
        .map(str::to_owned)
        .collect();
    Ok(Detection {
        communities,
        unassigned,
        iterations,
        min_edge,
    })
}
