//! Category vectors of communities and their k-means clustering.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::community::Community;
use crate::error::{Error, Result};
use crate::ingest::Business;
use crate::taxonomy::CategoryTaxonomy;

pub const DEFAULT_K: usize = 8;
pub const DEFAULT_KMEANS_MAX_ITER: usize = 100;

/// Non-negative weights, one per canonical category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryVector(pub Vec<f64>);

impl CategoryVector {
    pub fn zeros(dim: usize) -> Self {
        CategoryVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn squared_distance(&self, other: &CategoryVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// Divides by the largest component; all-zero vectors stay as they are.
    pub fn max_normalized(mut self) -> Self {
        let m = self.max();
        if m > 0.0 {
            self.0.iter_mut().for_each(|x| *x /= m);
        }
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Each community vector divided by its own largest component.
    #[default]
    PerCommunityMax,
    /// Each feature divided by its largest value across communities.
    PerFeature,
}

/// Flattened category index for every business, by id.
pub fn business_categories<'a>(
    businesses: impl IntoIterator<Item = &'a Business>,
    taxonomy: &CategoryTaxonomy,
) -> BTreeMap<String, usize> {
    businesses
        .into_iter()
        .map(|b| (b.id.clone(), taxonomy.flatten(&b.raw_category)))
        .collect()
}

/// Raw per-category member counts of a community.
pub fn community_counts(community: &Community, categories: &BTreeMap<String, usize>, dim: usize) -> Result<CategoryVector> {
    let mut v = CategoryVector::zeros(dim);
    for id in &community.members {
        let &cat = categories.get(id).ok_or_else(|| {
            Error::Data(format!("community {} member `{id}` has no business record", community.id))
        })?;
        v.0[cat] += 1.0;
    }
    Ok(v)
}

/// Max-normalized category vector of one community.
pub fn community_vector(
    community: &Community,
    businesses: &BTreeMap<String, Business>,
    taxonomy: &CategoryTaxonomy,
) -> Result<CategoryVector> {
    let categories = business_categories(businesses.values(), taxonomy);
    Ok(community_counts(community, &categories, taxonomy.canonical().len())?.max_normalized())
}

/// Category vectors for all communities under the chosen normalization.
pub fn community_vectors(
    communities: &[Community],
    categories: &BTreeMap<String, usize>,
    dim: usize,
    normalization: Normalization,
) -> Result<Vec<CategoryVector>> {
    let counts = communities
        .par_iter()
        .map(|c| community_counts(c, categories, dim))
        .collect::<Result<Vec<_>>>()?;
    Ok(match normalization {
        Normalization::PerCommunityMax => counts.into_iter().map(CategoryVector::max_normalized).collect(),
        Normalization::PerFeature => {
            let maxima: Vec<f64> = (0..dim)
                .map(|i| counts.iter().map(|v| v.0[i]).fold(0.0, f64::max))
                .collect();
            counts
                .into_iter()
                .map(|mut v| {
                    for (x, m) in v.0.iter_mut().zip(&maxima) {
                        if *m > 0.0 {
                            *x /= m;
                        }
                    }
                    v
                })
                .collect()
        }
    })
}

/// Result of one k-means run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansFit {
    pub k: usize,
    /// Cluster index of each input point.
    pub assignment: Vec<usize>,
    pub centroids: Vec<CategoryVector>,
    pub sse: f64,
    /// SSE after every assignment step.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeansFit {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == cluster)
            .map(|(i, _)| i)
    }
}

fn nearest(point: &CategoryVector, centroids: &[CategoryVector]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = point.squared_distance(c);
        // strict: equidistant points stay with the lower index
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

fn sse(points: &[CategoryVector], assignment: &[usize], centroids: &[CategoryVector]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| p.squared_distance(&centroids[c]))
        .sum()
}

fn means(points: &[CategoryVector], assignment: &[usize], k: usize, dim: usize) -> Vec<CategoryVector> {
    let mut sums = vec![CategoryVector::zeros(dim); k];
    let mut sizes = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        sizes[c] += 1;
        sums[c].0.iter_mut().zip(&p.0).for_each(|(s, x)| *s += x);
    }
    for (s, n) in sums.iter_mut().zip(sizes) {
        if n > 0 {
            s.0.iter_mut().for_each(|x| *x /= n as f64);
        }
    }
    sums
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(points: &[CategoryVector], assignment: &mut [usize], centroids: &mut [CategoryVector]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &c in assignment.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            if sizes[assignment[i]] < 2 {
                continue;
            }
            let d = p.squared_distance(&centroids[assignment[i]]);
            if d > far_d {
                far = Some(i);
                far_d = d;
            }
        }
        let Some(i) = far else { return };
        assignment[i] = empty;
        centroids[empty] = points[i].clone();
    }
}

/// Lloyd's k-means with Euclidean distance, seeded by `k` distinct sampled points.
pub fn kmeans(points: &[CategoryVector], k: usize, seed: u64, max_iter: usize) -> Result<KMeansFit> {
    if k == 0 || k > points.len() {
        return Err(Error::Domain(format!(
            "k = {k} must lie in [1, {}] (the number of vectors)",
            points.len()
        )));
    }
    let dim = points[0].dim();
    if points.iter().any(|p| p.dim() != dim) {
        return Err(Error::Domain("vectors have different dimensions".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<CategoryVector> = rand::seq::index::sample(&mut rng, points.len(), k)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();
    let mut assignment: Vec<usize> = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        repair_empty(points, &mut next, &mut centroids);
        history.push(sse(points, &next, &centroids));
        let stable = next == assignment;
        assignment = next;
        if stable {
            break;
        }
        centroids = means(points, &assignment, k, dim);
    }
    let centroids = means(points, &assignment, k, dim);
    let total = sse(points, &assignment, &centroids);
    Ok(KMeansFit {
        k,
        assignment,
        centroids,
        sse: total,
        sse_history: history,
        iterations,
    })
}

pub const SELECT_K_CAVEAT: &str = "SSE never increases with k, so the smallest-SSE candidate is normally the largest k; \
prefer a fixed k unless the candidate list is chosen deliberately";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSelection {
    pub k: usize,
    pub sse_table: Vec<(usize, f64)>,
    pub caveat: &'static str,
}

/// Runs k-means per candidate and returns the smallest-SSE `k` (ties → smallest `k`).
pub fn select_k(points: &[CategoryVector], candidates: &[usize], seed: u64, max_iter: usize) -> Result<KSelection> {
    if candidates.is_empty() {
        return Err(Error::Domain("no k candidates given".into()));
    }
    let sse_table = candidates
        .par_iter()
        .map(|&k| kmeans(points, k, seed, max_iter).map(|fit| (k, fit.sse)))
        .collect::<Result<Vec<_>>>()?;
    let &(k, _) = sse_table
        .iter()
        .min_by(|a, b| {
            if (a.1 - b.1).abs() <= 1e-12 {
                a.0.cmp(&b.0)
            } else {
                a.1.total_cmp(&b.1)
            }
        })
        .expect("candidates are non-empty");
    Ok(KSelection {
        k,
        sse_table,
        caveat: SELECT_K_CAVEAT,
    })
}

/// Communities grouped by k-means over their category vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    /// community id → cluster index
    pub assignment: BTreeMap<usize, usize>,
    pub centroids: Vec<CategoryVector>,
    pub sse: f64,
}

impl ClusterModel {
    pub fn from_fit(communities: &[Community], fit: &KMeansFit) -> Self {
        ClusterModel {
            k: fit.k,
            assignment: communities.iter().zip(&fit.assignment).map(|(c, &a)| (c.id, a)).collect(),
            centroids: fit.centroids.clone(),
            sse: fit.sse,
        }
    }

    /// Community ids of each cluster.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (&c, &cl) in &self.assignment {
            out[cl].push(c);
        }
        out
    }
}
