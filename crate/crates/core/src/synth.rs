//! Synthetic reaction data with planted communities, a uniform null
//! generator, and partition agreement scores.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::community::Community;
use crate::error::{Error, Result};
use crate::ingest::{write_businesses_csv, write_reactions_csv, Business, Reaction, ReactionDataset, ReactionType};
use crate::taxonomy::{CategoryTaxonomy, CATEGORY_COUNT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedConfig {
    pub n_communities: usize,
    /// Inclusive `[min, max]` businesses per community.
    pub community_size_range: [usize; 2],
    pub users_per_community: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Dominant canonical category per community, cycled. Defaults to the
    /// business subcategories in order.
    #[serde(default)]
    pub dominant_categories: Vec<String>,
    /// Probability that a business gets a random non-dominant category.
    #[serde(default)]
    pub category_noise: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            n_communities: 5,
            community_size_range: [8, 12],
            users_per_community: 100,
            p_in: 0.6,
            p_out: 0.02,
            dominant_categories: Vec::new(),
            category_noise: 0.0,
            seed: 0,
        }
    }
}

impl PlantedConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.community_size_range;
        if self.n_communities == 0 || lo == 0 || hi < lo {
            return Err(Error::Domain(format!(
                "need at least one community and a size range with 1 <= min <= max, got {lo}..={hi}"
            )));
        }
        if !(0.0 <= self.p_out && self.p_out < self.p_in && self.p_in <= 1.0) {
            return Err(Error::Domain(format!(
                "probabilities must satisfy 0 <= p_out < p_in <= 1 (p_in = {}, p_out = {})",
                self.p_in, self.p_out
            )));
        }
        if !(0.0..=1.0).contains(&self.category_noise) {
            return Err(Error::Domain(format!("category_noise {} is outside [0, 1]", self.category_noise)));
        }
        Ok(())
    }
}

/// Planted community and category of every generated business.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub partition: BTreeMap<String, usize>,
    pub categories: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub businesses: Vec<Business>,
    pub reactions: ReactionDataset,
    pub truth: GroundTruth,
}

impl SyntheticData {
    /// Writes `businesses.csv`, `reactions.csv` and `truth.json` to `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let create = |name: &str| {
            let path = dir.join(name);
            std::fs::File::create(&path)
                .map(std::io::BufWriter::new)
                .map_err(|e| Error::io(path, e))
        };
        write_businesses_csv(create("businesses.csv")?, &self.businesses)?;
        write_reactions_csv(create("reactions.csv")?, &self.reactions)?;
        let mut truth = serde_json::to_string_pretty(&self.truth)?;
        truth.push('\n');
        let path = dir.join("truth.json");
        std::fs::write(&path, truth).map_err(|e| Error::io(path, e))
    }
}

pub fn business_id(i: usize) -> String {
    format!("b{i:05}")
}

pub fn user_id(i: usize) -> String {
    format!("u{i:06}")
}

/// Indices in `0..n` each drawn independently with probability `p`,
/// sampled by geometric skips so sparse rows stay cheap.
fn bernoulli_indices(rng: &mut impl Rng, n: usize, p: f64, out: &mut Vec<usize>) {
    out.clear();
    if p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        out.extend(0..n);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut i = 0usize;
    loop {
        let u: f64 = rng.random::<f64>();
        // 1 - u lies in (0, 1]
        let skip = ((1.0 - u).ln() / log_q).floor();
        if !skip.is_finite() || skip >= (n - i) as f64 {
            return;
        }
        i += skip as usize;
        out.push(i);
        i += 1;
        if i >= n {
            return;
        }
    }
}

fn random_positive_reaction(rng: &mut impl Rng) -> ReactionType {
    match rng.random_range(0..10) {
        0 => ReactionType::Wow,
        1 => ReactionType::Thankful,
        _ => ReactionType::Like,
    }
}

/// Planted-partition data: each community's users react to their own
/// community's businesses with probability `p_in` and to every other
/// business with probability `p_out`.
pub fn generate(config: &PlantedConfig, taxonomy: &CategoryTaxonomy) -> Result<SyntheticData> {
    config.validate()?;
    let dominant: Vec<usize> = if config.dominant_categories.is_empty() {
        (0..CATEGORY_COUNT).filter(|&i| taxonomy.is_business_subcategory(i)).collect()
    } else {
        config
            .dominant_categories
            .iter()
            .map(|name| {
                taxonomy
                    .index_of(name)
                    .ok_or_else(|| Error::Domain(format!("unknown category `{name}`")))
            })
            .collect::<Result<_>>()?
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let [lo, hi] = config.community_size_range;
    let mut businesses = Vec::new();
    let mut truth = GroundTruth::default();
    let mut community_of = Vec::new();
    for c in 0..config.n_communities {
        let size = rng.random_range(lo..=hi);
        let main = dominant[c % dominant.len()];
        for _ in 0..size {
            let id = business_id(businesses.len());
            let category = if rng.random_bool(config.category_noise) {
                let other = rng.random_range(0..CATEGORY_COUNT - 1);
                if other >= main {
                    other + 1
                } else {
                    other
                }
            } else {
                main
            };
            let mut b = Business::new(id.clone(), format!("Business {}", businesses.len()), taxonomy.path_for(category))
                .with_location(-25.43 + rng.random_range(-0.1..0.1), -49.27 + rng.random_range(-0.1..0.1));
            b.checkins = Some(rng.random_range(0..50_000));
            b.fans = Some(rng.random_range(0..20_000));
            b.avg_rating = Some(f64::from(rng.random_range(10u8..=50)) / 10.0);
            truth.partition.insert(id.clone(), c);
            truth.categories.insert(id, category);
            businesses.push(b);
            community_of.push(c);
        }
    }

    // businesses of one community are contiguous
    let mut ranges = vec![(usize::MAX, 0usize); config.n_communities];
    for (i, &c) in community_of.iter().enumerate() {
        ranges[c].0 = ranges[c].0.min(i);
        ranges[c].1 = i + 1;
    }
    let n = businesses.len();
    let mut reactions = Vec::new();
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (c, &(start, end)) in ranges.iter().enumerate() {
        for k in 0..config.users_per_community {
            let user = user_id(c * config.users_per_community + k);
            bernoulli_indices(&mut rng, end - start, config.p_in, &mut inside);
            bernoulli_indices(&mut rng, n - (end - start), config.p_out, &mut outside);
            let before = outside.iter().copied().take_while(|&i| i < start);
            let within = inside.iter().map(|&i| i + start);
            let after = outside.iter().copied().skip_while(|&i| i < start).map(|i| i + (end - start));
            for i in before.chain(within).chain(after) {
                reactions.push(Reaction::new(user.clone(), businesses[i].id.clone(), random_positive_reaction(&mut rng)));
            }
        }
    }

    Ok(SyntheticData {
        businesses,
        reactions: ReactionDataset::from_reactions(reactions),
        truth,
    })
}

/// Every user reacts to `reactions_per_user` distinct businesses chosen
/// uniformly at random.
pub fn generate_uniform_noise(n_businesses: usize, n_users: usize, reactions_per_user: usize, seed: u64) -> Result<ReactionDataset> {
    if n_businesses == 0 || n_users == 0 || reactions_per_user == 0 {
        return Err(Error::Domain("noise generator arguments must be positive".into()));
    }
    if reactions_per_user > n_businesses {
        return Err(Error::Domain(format!(
            "{reactions_per_user} distinct reactions per user need at least that many businesses, got {n_businesses}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<String> = (0..n_businesses).map(business_id).collect();
    let mut reactions = Vec::with_capacity(n_users * reactions_per_user);
    for u in 0..n_users {
        let user = user_id(u);
        let mut picked = rand::seq::index::sample(&mut rng, n_businesses, reactions_per_user).into_vec();
        picked.sort_unstable();
        for b in picked {
            reactions.push(Reaction::new(user.clone(), ids[b].clone(), ReactionType::Like));
        }
    }
    Ok(ReactionDataset::from_reactions(reactions))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionScore {
    pub ari: f64,
    pub nmi: f64,
    /// Share of ground-truth businesses not placed in any found community.
    pub unassigned_fraction: f64,
}

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index of two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same items");
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| pairs(n)).sum();
    let sum_rows: f64 = rows.values().map(|&n| pairs(n)).sum();
    let sum_cols: f64 = cols.values().map(|&n| pairs(n)).sum();
    let total = pairs(a.len() as u64);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_rows * sum_cols / total;
    let max = (sum_rows + sum_cols) / 2.0;
    if max == expected {
        // both labelings trivial (all singletons or one block), hence equal
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Mutual information normalized by the arithmetic mean of the entropies.
pub fn normalized_mutual_information(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same items");
    let n = a.len() as f64;
    if a.is_empty() {
        return 1.0;
    }
    let mut table: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, f64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, f64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1.0;
        *rows.entry(x).or_default() += 1.0;
        *cols.entry(y).or_default() += 1.0;
    }
    let entropy = |m: &BTreeMap<usize, f64>| -> f64 { m.values().map(|&c| -(c / n) * (c / n).ln()).sum() };
    let (ha, hb) = (entropy(&rows), entropy(&cols));
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    let mi: f64 = table
        .iter()
        .map(|(&(x, y), &c)| (c / n) * ((c * n) / (rows[&x] * cols[&y])).ln())
        .sum();
    (2.0 * mi / (ha + hb)).clamp(0.0, 1.0)
}

/// Scores found communities against the planted partition over the
/// businesses both sides assign.
pub fn score_partition(found: &[Community], truth: &GroundTruth) -> PartitionScore {
    let mut found_label: BTreeMap<&str, usize> = BTreeMap::new();
    for c in found {
        for m in &c.members {
            found_label.insert(m.as_str(), c.id);
        }
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (id, &t) in &truth.partition {
        if let Some(&f) = found_label.get(id.as_str()) {
            a.push(f);
            b.push(t);
        }
    }
    let unassigned = truth.partition.len() - a.len();
    PartitionScore {
        ari: adjusted_rand_index(&a, &b),
        nmi: normalized_mutual_information(&a, &b),
        unassigned_fraction: if truth.partition.is_empty() {
            0.0
        } else {
            unassigned as f64 / truth.partition.len() as f64
        },
    }
}

/// Communities built straight from a planted partition.
pub fn truth_communities(truth: &GroundTruth) -> Vec<Community> {
    let mut groups: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (id, &c) in &truth.partition {
        groups.entry(c).or_default().insert(id.clone());
    }
    groups
        .into_iter()
        .map(|(id, members)| Community {
            id,
            members,
            accepted_at_iteration: 0,
        })
        .collect()
}
