//! Cluster signatures and outlier tagging.
//!
//! A cluster's signature is built greedily from its centroid: repeatedly
//! take the largest remaining category while doing so brings the covered
//! share of the centroid's mass closer to `threshold`. A business is an
//! outlier when its community has a positive share of the business's
//! category and that category is missing from the cluster signature.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cluster::{CategoryVector, ClusterModel};
use crate::community::Community;
use crate::error::{Error, Result};

pub const DEFAULT_SIGNATURE_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    pub categories: BTreeSet<usize>,
    pub threshold: f64,
}

impl Signature {
    pub fn contains(&self, category: usize) -> bool {
        self.categories.contains(&category)
    }
}

/// Component-wise mean of the member vectors.
pub fn centroid(vectors: &[&CategoryVector]) -> Result<CategoryVector> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::Domain("centroid of an empty cluster".into()))?;
    let mut sum = CategoryVector::zeros(first.dim());
    for v in vectors {
        if v.dim() != sum.dim() {
            return Err(Error::Domain("vectors have different dimensions".into()));
        }
        sum.0.iter_mut().zip(&v.0).for_each(|(s, x)| *s += x);
    }
    let n = vectors.len() as f64;
    sum.0.iter_mut().for_each(|s| *s /= n);
    Ok(sum)
}

/// Greedy dominant-category selection.
///
/// Equal maxima are taken lowest index first.
pub fn get_signature(v: &CategoryVector, threshold: f64) -> Result<Signature> {
    if !(threshold > 0.5 && threshold <= 1.0) {
        return Err(Error::Domain(format!("signature threshold {threshold} is outside (0.5, 1]")));
    }
    let total = v.sum();
    if total <= 0.0 || v.0.iter().any(|x| *x < 0.0) {
        return Err(Error::Domain("signature of a vector without positive mass".into()));
    }
    let mut remaining = v.0.clone();
    let mut covered = 0.0;
    let mut categories = BTreeSet::new();
    for _ in 0..remaining.len() {
        let (j, m) = remaining
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, x)| if x > best.1 { (i, x) } else { best });
        if ((m + covered) / total - threshold).abs() < (covered / total - threshold).abs() {
            categories.insert(j);
            covered += m;
            remaining[j] = 0.0;
        } else {
            break;
        }
    }
    Ok(Signature { categories, threshold })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSignature {
    pub cluster: usize,
    pub centroid: CategoryVector,
    pub signature: Signature,
}

/// Centroid and signature of every cluster, from the vectors of its communities.
///
/// `vectors[i]` belongs to `communities[i]`.
pub fn cluster_signatures(
    model: &ClusterModel,
    communities: &[Community],
    vectors: &[CategoryVector],
    threshold: f64,
) -> Result<Vec<ClusterSignature>> {
    let by_id: BTreeMap<usize, &CategoryVector> = communities.iter().map(|c| c.id).zip(vectors).collect();
    model
        .clusters()
        .into_iter()
        .enumerate()
        .map(|(cluster, ids)| {
            let members = ids
                .iter()
                .map(|id| {
                    by_id
                        .get(id)
                        .copied()
                        .ok_or_else(|| Error::Data(format!("cluster model references unknown community {id}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let centroid = centroid(&members)?;
            let signature = get_signature(&centroid, threshold)?;
            Ok(ClusterSignature {
                cluster,
                centroid,
                signature,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedCommunity {
    pub community: Community,
    pub cluster: usize,
    /// business id → the category (index) that made it an outlier
    pub tags: BTreeMap<String, usize>,
}

/// Tags, per community, every business whose category has a positive
/// component in the community vector but is absent from its cluster's
/// signature. One entry per community, in input order.
pub fn tag_outliers(
    model: &ClusterModel,
    communities: &[Community],
    vectors: &[CategoryVector],
    categories: &BTreeMap<String, usize>,
    threshold: f64,
) -> Result<Vec<TaggedCommunity>> {
    if communities.len() != vectors.len() {
        return Err(Error::Data("one vector per community is required".into()));
    }
    let signatures = cluster_signatures(model, communities, vectors, threshold)?;
    communities
        .iter()
        .zip(vectors)
        .map(|(community, vc)| {
            let cluster = *model
                .assignment
                .get(&community.id)
                .ok_or_else(|| Error::Data(format!("community {} has no cluster", community.id)))?;
            let signature = &signatures[cluster].signature;
            let offending: BTreeSet<usize> = vc
                .0
                .iter()
                .enumerate()
                .filter(|&(i, &x)| x > 0.0 && !signature.contains(i))
                .map(|(i, _)| i)
                .collect();
            let mut tags = BTreeMap::new();
            for id in &community.members {
                let cat = *categories
                    .get(id)
                    .ok_or_else(|| Error::Data(format!("business `{id}` has no category")))?;
                if offending.contains(&cat) {
                    tags.insert(id.clone(), cat);
                }
            }
            Ok(TaggedCommunity {
                community: community.clone(),
                cluster,
                tags,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> CategoryVector {
        CategoryVector(xs.to_vec())
    }

    fn padded(xs: &[f64]) -> CategoryVector {
        let mut out = xs.to_vec();
        out.resize(28, 0.0);
        CategoryVector(out)
    }

    fn sig(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn centroid_of_one_is_itself() {
        let a = padded(&[0.2, 1.0, 0.5]);
        assert_eq!(centroid(&[&a]).unwrap(), a);
    }

    #[test]
    fn centroid_is_the_mean() {
        let (a, b) = (padded(&[1.0, 0.0]), padded(&[0.0, 1.0]));
        assert_eq!(centroid(&[&a, &b]).unwrap(), padded(&[0.5, 0.5]));
        let c = padded(&[0.25, 1.0, 0.5]);
        assert_eq!(centroid(&[&c, &c, &c, &c]).unwrap(), c);
    }

    #[test]
    fn centroid_of_nothing() {
        assert!(matches!(centroid(&[]), Err(Error::Domain(_))));
    }

    #[test]
    fn signature_by_hand() {
        assert_eq!(get_signature(&v(&[5.0, 3.0, 2.0]), 0.7).unwrap().categories, sig(&[0, 1]));
        assert_eq!(get_signature(&v(&[10.0, 0.0, 0.0]), 0.7).unwrap().categories, sig(&[0]));
        assert_eq!(get_signature(&v(&[1.0, 1.0, 1.0, 1.0]), 0.7).unwrap().categories, sig(&[0, 1, 2]));
    }

    #[test]
    fn signature_takes_everything_at_full_threshold() {
        let s = get_signature(&v(&[0.0, 3.0, 1.0, 0.5]), 1.0).unwrap();
        assert_eq!(s.categories, sig(&[1, 2, 3]));
    }

    #[test]
    fn signature_domain_errors() {
        assert!(get_signature(&v(&[0.0, 0.0]), 0.7).is_err());
        assert!(get_signature(&v(&[1.0]), 0.5).is_err());
        assert!(get_signature(&v(&[1.0]), 1.01).is_err());
    }

    fn community(id: usize, members: &[&str]) -> Community {
        Community {
            id,
            members: members.iter().map(|s| s.to_string()).collect(),
            accepted_at_iteration: 1,
        }
    }

    #[test]
    fn all_categories_in_signature_means_no_tags() {
        let comms = vec![community(0, &["a", "b", "c", "d"])];
        let cats: BTreeMap<String, usize> = ["a", "b", "c", "d"].iter().map(|s| (s.to_string(), 2)).collect();
        let vectors = vec![padded(&[0.0, 0.0, 1.0])];
        let model = ClusterModel {
            k: 1,
            assignment: [(0, 0)].into(),
            centroids: vectors.clone(),
            sse: 0.0,
        };
        let tagged = tag_outliers(&model, &comms, &vectors, &cats, 0.7).unwrap();
        assert!(tagged[0].tags.is_empty());
    }

    #[test]
    fn community_missing_from_model() {
        let comms = vec![community(5, &["a"])];
        let cats: BTreeMap<String, usize> = [("a".to_string(), 0)].into();
        let model = ClusterModel {
            k: 1,
            assignment: [(0, 0)].into(),
            centroids: vec![padded(&[1.0])],
            sse: 0.0,
        };
        assert!(tag_outliers(&model, &comms, &[padded(&[1.0])], &cats, 0.7).is_err());
    }
}
