//! The business co-reaction graph.
//!
//! Vertices are businesses; an edge joins two businesses whose user sets
//! share more than `lower_bound` users and is weighted by the Jaccard index
//! of the two sets. `lower_bound` comes from a uniform-random null model:
//! if the `n_r` co-reactions were spread uniformly over the `n_c` possible
//! pairs, a pair's count would be binomial with mean `n_r / n_c`, and
//! anything within three standard deviations of that mean is treated as
//! noise.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ReactionDataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeData {
    pub common_users: u64,
    pub weight: f64,
}

/// Undirected weighted graph without self-loops, keyed by business id.
///
/// Iteration order is always sorted by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BusinessGraph {
    adjacency: BTreeMap<String, BTreeMap<String, EdgeData>>,
}

impl BusinessGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, id: impl Into<String>) {
        self.adjacency.entry(id.into()).or_default();
    }

    /// Inserts (or replaces) the edge `a`–`b`, adding missing endpoints.
    pub fn add_edge(&mut self, a: &str, b: &str, data: EdgeData) -> Result<()> {
        if a == b {
            return Err(Error::Data(format!("self-loop on `{a}`")));
        }
        if !(data.weight > 0.0 && data.weight <= 1.0) {
            return Err(Error::Data(format!(
                "edge {a}–{b} has weight {} outside (0, 1]",
                data.weight
            )));
        }
        self.adjacency.entry(a.to_owned()).or_default().insert(b.to_owned(), data);
        self.adjacency.entry(b.to_owned()).or_default().insert(a.to_owned(), data);
        Ok(())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.adjacency.contains_key(id)
    }

    pub fn vertices(&self) -> impl Iterator<Item = &str> {
        self.adjacency.keys().map(String::as_str)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeMap::len).sum::<usize>() / 2
    }

    /// Each edge once, as `(a, b, data)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, &EdgeData)> {
        self.adjacency.iter().flat_map(|(a, nbrs)| {
            nbrs.range::<str, _>((std::ops::Bound::Excluded(a.as_str()), std::ops::Bound::Unbounded))
                .map(move |(b, d)| (a.as_str(), b.as_str(), d))
        })
    }

    pub fn neighbors(&self, id: &str) -> Option<&BTreeMap<String, EdgeData>> {
        self.adjacency.get(id)
    }

    pub fn edge(&self, a: &str, b: &str) -> Option<&EdgeData> {
        self.adjacency.get(a)?.get(b)
    }

    pub fn degree(&self, id: &str) -> usize {
        self.adjacency.get(id).map_or(0, BTreeMap::len)
    }

    pub fn min_weight(&self) -> Option<f64> {
        self.edges().map(|(_, _, d)| d.weight).reduce(f64::min)
    }

    /// The subgraph induced by `keep`: all listed vertices present in
    /// `self` and every edge with both endpoints among them.
    pub fn induced<'a, I>(&self, keep: I) -> BusinessGraph
    where
        I: IntoIterator<Item = &'a str>,
    {
        let keep: BTreeSet<&str> = keep.into_iter().filter(|v| self.contains(v)).collect();
        let adjacency = keep
            .iter()
            .map(|&v| {
                let nbrs = self.adjacency[v]
                    .iter()
                    .filter(|(u, _)| keep.contains(u.as_str()))
                    .map(|(u, d)| (u.clone(), *d))
                    .collect();
                (v.to_owned(), nbrs)
            })
            .collect();
        BusinessGraph { adjacency }
    }

    /// Adds the vertices and edges of `other` to `self`.
    pub fn absorb(&mut self, other: BusinessGraph) {
        for (v, nbrs) in other.adjacency {
            self.adjacency.entry(v).or_default().extend(nbrs);
        }
    }

    /// Removes every edge failing `keep`; returns how many were removed.
    pub fn retain_edges(&mut self, mut keep: impl FnMut(&str, &str, &EdgeData) -> bool) -> usize {
        let doomed: Vec<(String, String)> = self
            .edges()
            .filter(|(a, b, d)| !keep(a, b, d))
            .map(|(a, b, _)| (a.to_owned(), b.to_owned()))
            .collect();
        for (a, b) in &doomed {
            self.adjacency.get_mut(a).map(|n| n.remove(b));
            self.adjacency.get_mut(b).map(|n| n.remove(a));
        }
        doomed.len()
    }

    /// Removes the listed vertices and their incident edges.
    pub fn exclude_nodes(&self, ids: &BTreeSet<String>) -> BusinessGraph {
        if ids.is_empty() {
            return self.clone();
        }
        self.induced(self.vertices().filter(|v| !ids.contains(*v)))
    }
}

/// Wire form: `{"nodes": [...], "edges": [{"a", "b", "common", "weight"}]}`.
#[derive(Debug, Serialize, Deserialize)]
struct GraphJson {
    nodes: Vec<String>,
    edges: Vec<EdgeJson>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeJson {
    a: String,
    b: String,
    common: u64,
    weight: f64,
}

impl Serialize for BusinessGraph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        GraphJson {
            nodes: self.vertices().map(str::to_owned).collect(),
            edges: self
                .edges()
                .map(|(a, b, d)| EdgeJson {
                    a: a.to_owned(),
                    b: b.to_owned(),
                    common: d.common_users,
                    weight: d.weight,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BusinessGraph {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = GraphJson::deserialize(deserializer)?;
        let mut g = BusinessGraph::new();
        for n in raw.nodes {
            g.add_vertex(n);
        }
        for e in raw.edges {
            g.add_edge(
                &e.a,
                &e.b,
                EdgeData {
                    common_users: e.common,
                    weight: e.weight,
                },
            )
            .map_err(serde::de::Error::custom)?;
        }
        Ok(g)
    }
}

/// `|U_a ∩ U_b|` for every business pair sharing at least one user.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairCounts {
    ids: Vec<String>,
    /// `(i, j, count)` with `i < j`, sorted.
    counts: Vec<(u32, u32, u64)>,
}

impl PairCounts {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.counts
            .iter()
            .map(|&(i, j, c)| (self.ids[i as usize].as_str(), self.ids[j as usize].as_str(), c))
    }

    pub fn get(&self, a: &str, b: &str) -> u64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let (Ok(i), Ok(j)) = (
            self.ids.binary_search_by(|x| x.as_str().cmp(a)),
            self.ids.binary_search_by(|x| x.as_str().cmp(b)),
        ) else {
            return 0;
        };
        let key = (i as u32, j as u32);
        self.counts
            .binary_search_by(|&(x, y, _)| (x, y).cmp(&key))
            .map_or(0, |pos| self.counts[pos].2)
    }

    /// Half the sum of `|U_i ∩ U_j|` over ordered pairs, which is the plain
    /// sum over unordered pairs.
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&(_, _, c)| c).sum()
    }

    pub fn to_map(&self) -> BTreeMap<(String, String), u64> {
        self.iter().map(|(a, b, c)| ((a.to_owned(), b.to_owned()), c)).collect()
    }
}

const USERS_PER_TASK: usize = 512;

/// Up to this many businesses the pair counts live in a dense triangle.
const DENSE_LIMIT: usize = 2048;

/// Offset of pair `(i, j)`, `i < j`, in a row-major upper triangle.
fn tri(n: usize, i: usize, j: usize) -> usize {
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

fn count_dense(baskets: &[Vec<u32>], n: usize) -> Vec<(u32, u32, u64)> {
    let len = n * n.saturating_sub(1) / 2;
    let totals = baskets
        .par_chunks(USERS_PER_TASK)
        // each fold allocates a full triangle, so keep the splits coarse
        .with_min_len(16)
        .fold(
            || vec![0u64; len],
            |mut acc, chunk| {
                for basket in chunk {
                    for (k, &i) in basket.iter().enumerate() {
                        let row = tri(n, i as usize, i as usize + 1);
                        for &j in &basket[k + 1..] {
                            acc[row + (j - i - 1) as usize] += 1;
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; len],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let c = totals[tri(n, i, j)];
            if c > 0 {
                out.push((i as u32, j as u32, c));
            }
        }
    }
    out
}

fn count_sparse(baskets: &[Vec<u32>]) -> Vec<(u32, u32, u64)> {
    let merged: HashMap<u64, u64> = baskets
        .par_chunks(USERS_PER_TASK)
        .map(|chunk| {
            let mut local: HashMap<u64, u64> = HashMap::new();
            for basket in chunk {
                for (k, &i) in basket.iter().enumerate() {
                    for &j in &basket[k + 1..] {
                        *local.entry(u64::from(i) << 32 | u64::from(j)).or_default() += 1;
                    }
                }
            }
            local
        })
        .reduce(HashMap::new, |mut a, b| {
            let (mut big, small) = if a.len() >= b.len() { (std::mem::take(&mut a), b) } else { (b, a) };
            for (k, v) in small {
                *big.entry(k).or_default() += v;
            }
            big
        });
    merged
        .into_iter()
        .map(|(k, c)| ((k >> 32) as u32, k as u32, c))
        .collect()
}

/// Counts common users for every co-reacted business pair by enumerating
/// the pairs inside each user's business set.
///
/// Users are split across the current rayon pool; partial counts are summed
/// so the result does not depend on the schedule.
pub fn count_common(reactions: &ReactionDataset) -> PairCounts {
    let ids: Vec<String> = reactions.business_index().keys().cloned().collect();
    let index: HashMap<&str, u32> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i as u32)).collect();

    let baskets: Vec<Vec<u32>> = reactions
        .user_index()
        .values()
        .filter(|bs| bs.len() >= 2)
        .map(|bs| bs.iter().map(|b| index[b.as_str()]).collect())
        .collect();

    let n = ids.len();
    let mut counts: Vec<(u32, u32, u64)> = if n <= DENSE_LIMIT {
        count_dense(&baskets, n)
    } else {
        count_sparse(&baskets)
    };
    counts.sort_unstable();
    PairCounts { ids, counts }
}

/// Null-model statistics for pair counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomEdgeStats {
    pub n_r: u64,
    pub n_c: u64,
    pub mu: f64,
    pub sigma: f64,
    pub lower_bound: f64,
}

/// `mu = n_r / n_c`, `sigma² = mu (1 − 1/n_c)`, `lower_bound = mu + 3 sigma`
/// where `n_c = n_b (n_b − 1) / 2`.
pub fn random_edge_stats(n_r: u64, n_b: u64) -> Result<RandomEdgeStats> {
    if n_b < 2 {
        return Err(Error::Domain(format!(
            "at least two businesses are needed for edge statistics, got {n_b}"
        )));
    }
    let n_c = n_b * (n_b - 1) / 2;
    let mu = n_r as f64 / n_c as f64;
    let sigma = (mu * (1.0 - 1.0 / n_c as f64)).sqrt();
    Ok(RandomEdgeStats {
        n_r,
        n_c,
        mu,
        sigma,
        lower_bound: mu + 3.0 * sigma,
    })
}

/// Builds the graph over every business in `business_index`, keeping pairs
/// whose common-user count is strictly above `lower_bound`.
pub fn build_graph(
    pair_counts: &PairCounts,
    business_index: &BTreeMap<String, BTreeSet<String>>,
    lower_bound: f64,
) -> Result<BusinessGraph> {
    let mut g = BusinessGraph::new();
    for id in business_index.keys() {
        g.add_vertex(id.clone());
    }
    for (a, b, common) in pair_counts.iter() {
        if common as f64 <= lower_bound {
            continue;
        }
        let size = |id: &str| {
            business_index
                .get(id)
                .map(|s| s.len() as u64)
                .ok_or_else(|| Error::Data(format!("pair count references unknown business `{id}`")))
        };
        let (size_a, size_b) = (size(a)?, size(b)?);
        if common > size_a.min(size_b) {
            return Err(Error::Data(format!("pair count for {a}–{b} exceeds its user sets")));
        }
        let union = size_a + size_b - common;
        let data = EdgeData {
            common_users: common,
            weight: common as f64 / union as f64,
        };
        g.add_edge(a, b, data)?;
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HubReport {
    /// `(id, degree)` by degree descending, then id.
    pub vertices: Vec<(String, usize)>,
    /// `((a, b), common_users)` by count descending, then pair.
    pub edges: Vec<((String, String), u64)>,
}

pub fn hub_report(graph: &BusinessGraph, n: usize) -> HubReport {
    let mut vertices: Vec<(String, usize)> = graph.vertices().map(|v| (v.to_owned(), graph.degree(v))).collect();
    vertices.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    vertices.truncate(n);

    let mut edges: Vec<((String, String), u64)> = graph
        .edges()
        .map(|(a, b, d)| ((a.to_owned(), b.to_owned()), d.common_users))
        .collect();
    edges.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    edges.truncate(n);
    HubReport { vertices, edges }
}
