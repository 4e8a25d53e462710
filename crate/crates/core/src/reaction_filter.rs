//! Reaction filtering: negative reaction removal and the user activity band.
//!
//! A user's activity is the number of distinct businesses they reacted to
//! once negative reactions are gone. Users outside `[lower, upper]` are
//! dropped with all their reactions; `upper` is the smallest count that keeps
//! the requested share of reactions among users with at least `lower`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ReactionDataset, ReactionType};

pub const DEFAULT_MIN_REACTIONS: u64 = 3;
pub const DEFAULT_COVERAGE: f64 = 0.999;
pub const DEFAULT_NEGATIVE_TYPES: [ReactionType; 2] = [ReactionType::Angry, ReactionType::Sad];

/// Inclusive bounds on per-user activity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityBand {
    pub lower: u64,
    pub upper: u64,
    pub coverage: f64,
}

impl ActivityBand {
    pub fn new(lower: u64, upper: u64, coverage: f64) -> Result<Self> {
        if lower < 1 {
            return Err(Error::Domain("activity band lower bound must be >= 1".into()));
        }
        if upper < lower {
            return Err(Error::Domain(format!(
                "activity band upper bound {upper} is below lower bound {lower}"
            )));
        }
        check_coverage(coverage)?;
        Ok(ActivityBand {
            lower,
            upper,
            coverage,
        })
    }

    /// `[1, ∞)`: keeps everyone.
    pub fn unbounded() -> Self {
        ActivityBand {
            lower: 1,
            upper: u64::MAX,
            coverage: 1.0,
        }
    }

    pub fn contains(&self, count: u64) -> bool {
        (self.lower..=self.upper).contains(&count)
    }
}

fn check_coverage(coverage: f64) -> Result<()> {
    if coverage > 0.0 && coverage <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("coverage {coverage} is outside (0, 1]")))
    }
}

/// Removes every reaction whose type is in `negative_types`.
pub fn drop_negative(reactions: &ReactionDataset, negative_types: &BTreeSet<ReactionType>) -> ReactionDataset {
    if negative_types.is_empty() {
        return reactions.clone();
    }
    reactions.retain(|r| !negative_types.contains(&r.reaction_type))
}

/// Distinct businesses per user.
pub fn user_counts(reactions: &ReactionDataset) -> BTreeMap<String, u64> {
    reactions
        .user_index()
        .iter()
        .map(|(u, bs)| (u.clone(), bs.len() as u64))
        .collect()
}

/// Smallest `x` such that users with `lower <= count <= x` hold at least
/// `coverage` of all reactions by users with `count >= lower`.
///
/// Returns `lower` when nobody reaches `lower`.
pub fn compute_upper_bound(reaction_counts: &BTreeMap<String, u64>, lower: u64, coverage: f64) -> Result<u64> {
    if lower < 1 {
        return Err(Error::Domain("lower bound must be >= 1".into()));
    }
    check_coverage(coverage)?;

    // count value -> reactions held by users with exactly that count
    let mut mass: BTreeMap<u64, u128> = BTreeMap::new();
    for &c in reaction_counts.values().filter(|&&c| c >= lower) {
        *mass.entry(c).or_default() += u128::from(c);
    }
    let total: u128 = mass.values().sum();
    if total == 0 {
        return Ok(lower);
    }
    let mut acc = 0u128;
    for (&x, &m) in &mass {
        acc += m;
        if acc as f64 / total as f64 >= coverage {
            return Ok(x);
        }
    }
    // coverage <= 1 is always met at the largest count
    Ok(*mass.keys().next_back().unwrap_or(&lower))
}

/// Drops users whose activity lies outside `band`, with all their reactions.
pub fn apply_band(reactions: &ReactionDataset, band: &ActivityBand) -> ReactionDataset {
    let keep: BTreeSet<&str> = reactions
        .user_index()
        .iter()
        .filter(|(_, bs)| band.contains(bs.len() as u64))
        .map(|(u, _)| u.as_str())
        .collect();
    if keep.len() == reactions.user_index().len() {
        return reactions.clone();
    }
    reactions.retain(|r| keep.contains(r.user_id.as_str()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_reactions: u64,
    pub coverage: f64,
    pub negative_types: BTreeSet<ReactionType>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_reactions: DEFAULT_MIN_REACTIONS,
            coverage: DEFAULT_COVERAGE,
            negative_types: DEFAULT_NEGATIVE_TYPES.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub band: ActivityBand,
    pub reactions_in: usize,
    pub negative_removed: usize,
    pub users_in: usize,
    pub users_removed: usize,
    pub reactions_out: usize,
}

/// Negative removal followed by banding, in that order.
pub fn filter_reactions(reactions: &ReactionDataset, config: &FilterConfig) -> Result<(ReactionDataset, FilterReport)> {
    let positive = drop_negative(reactions, &config.negative_types);
    let counts = user_counts(&positive);
    let upper = compute_upper_bound(&counts, config.min_reactions, config.coverage)?;
    let band = ActivityBand::new(config.min_reactions, upper, config.coverage)?;
    let banded = apply_band(&positive, &band);
    let report = FilterReport {
        band,
        reactions_in: reactions.len(),
        negative_removed: reactions.len() - positive.len(),
        users_in: positive.user_index().len(),
        users_removed: positive.user_index().len() - banded.user_index().len(),
        reactions_out: banded.len(),
    };
    Ok((banded, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Reaction;
    use ReactionType::*;

    fn ds(triples: &[(&str, &str, ReactionType)]) -> ReactionDataset {
        triples.iter().map(|&(u, b, t)| Reaction::new(u, b, t)).collect()
    }

    fn negatives() -> BTreeSet<ReactionType> {
        DEFAULT_NEGATIVE_TYPES.into_iter().collect()
    }

    #[test]
    fn drops_angry_and_sad() {
        let out = drop_negative(&ds(&[("u1", "b1", Angry), ("u1", "b1", Like)]), &negatives());
        assert_eq!(out.reactions(), &[Reaction::new("u1", "b1", Like)]);
    }

    #[test]
    fn empty_negative_set_is_identity() {
        let input = ds(&[("u1", "b1", Angry), ("u2", "b1", Sad)]);
        assert_eq!(drop_negative(&input, &BTreeSet::new()), input);
    }

    #[test]
    fn only_sad_reactions_leave_nothing() {
        let out = drop_negative(&ds(&[("u1", "b1", Sad), ("u2", "b2", Sad)]), &negatives());
        assert!(out.is_empty());
        assert!(out.user_index().is_empty());
    }

    /// Exhaustive ratio evaluation over every candidate x.
    fn brute_upper(counts: &BTreeMap<String, u64>, lower: u64, coverage: f64) -> u64 {
        let max = counts.values().copied().max().unwrap_or(lower).max(lower);
        let total: u64 = counts.values().filter(|&&c| c >= lower).sum();
        if total == 0 {
            return lower;
        }
        (lower..=max)
            .find(|&x| {
                let kept: u64 = counts.values().filter(|&&c| c >= lower && c <= x).sum();
                kept as f64 / total as f64 >= coverage
            })
            .unwrap()
    }

    fn counts(values: impl IntoIterator<Item = u64>) -> BTreeMap<String, u64> {
        values.into_iter().enumerate().map(|(i, c)| (format!("u{i}"), c)).collect()
    }

    #[test]
    fn heavy_user_must_be_included() {
        let c = counts(std::iter::repeat_n(3, 1000).chain([500]));
        assert_eq!(brute_upper(&c, 3, 0.999), 500);
        assert_eq!(compute_upper_bound(&c, 3, 0.999).unwrap(), 500);
    }

    #[test]
    fn band_collapses_to_lower() {
        let c = counts([3, 3, 3, 3]);
        assert_eq!(compute_upper_bound(&c, 3, 0.999).unwrap(), 3);
    }

    #[test]
    fn nobody_reaches_lower() {
        let c = counts([1, 2, 2]);
        assert_eq!(compute_upper_bound(&c, 3, 0.999).unwrap(), 3);
        assert_eq!(compute_upper_bound(&BTreeMap::new(), 3, 0.5).unwrap(), 3);
    }

    #[test]
    fn invalid_coverage() {
        assert!(compute_upper_bound(&counts([3]), 3, 0.0).is_err());
        assert!(compute_upper_bound(&counts([3]), 3, 1.5).is_err());
        assert!(compute_upper_bound(&counts([3]), 0, 0.5).is_err());
    }

    #[test]
    fn band_keeps_only_active_enough_users() {
        let input = ds(&[
            ("u1", "b1", Like),
            ("u2", "b1", Like),
            ("u2", "b2", Like),
            ("u3", "b1", Like),
            ("u3", "b2", Like),
            ("u3", "b3", Like),
        ]);
        let out = apply_band(&input, &ActivityBand::new(3, 174, 0.999).unwrap());
        assert_eq!(out.user_index().keys().collect::<Vec<_>>(), vec!["u3"]);
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn unbounded_band_is_identity() {
        let input = ds(&[("u1", "b1", Like), ("u2", "b2", Wow)]);
        assert_eq!(apply_band(&input, &ActivityBand::unbounded()), input);
    }

    #[test]
    fn upper_bound_is_inclusive() {
        let input = ds(&[("u1", "b1", Like), ("u1", "b2", Like), ("u1", "b3", Like), ("u1", "b4", Like)]);
        let out = apply_band(&input, &ActivityBand::new(3, 4, 0.999).unwrap());
        assert_eq!(out.len(), 4);
        let out = apply_band(&input, &ActivityBand::new(3, 3, 0.999).unwrap());
        assert!(out.is_empty());
    }

    #[test]
    fn band_validation() {
        assert!(ActivityBand::new(0, 5, 0.9).is_err());
        assert!(ActivityBand::new(5, 4, 0.9).is_err());
    }

    #[test]
    fn negatives_removed_before_counting() {
        // u1 has three businesses only if the Angry reaction counts.
        let input = ds(&[("u1", "b1", Like), ("u1", "b2", Like), ("u1", "b3", Angry)]);
        let (out, report) = filter_reactions(&input, &FilterConfig::default()).unwrap();
        assert!(out.is_empty());
        assert_eq!(report.negative_removed, 1);
        assert_eq!(report.users_removed, 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn upper_bound_matches_exhaustive(values in proptest::collection::vec(1u64..60, 0..80),
                                               lower in 1u64..6,
                                               coverage in 0.01f64..=1.0) {
                let c = counts(values);
                prop_assert_eq!(compute_upper_bound(&c, lower, coverage).unwrap(), brute_upper(&c, lower, coverage));
            }

            #[test]
            fn upper_bound_monotone_in_coverage(values in proptest::collection::vec(1u64..60, 0..80),
                                                a in 0.01f64..=1.0, b in 0.01f64..=1.0) {
                let c = counts(values);
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(compute_upper_bound(&c, 3, lo).unwrap() <= compute_upper_bound(&c, 3, hi).unwrap());
            }

            #[test]
            fn banded_counts_lie_in_band(pairs in proptest::collection::vec((0u8..20, 0u8..15), 0..200),
                                         lower in 1u64..4, width in 0u64..6) {
                let input: ReactionDataset = pairs.iter()
                    .map(|(u, b)| Reaction::new(format!("u{u}"), format!("b{b}"), Like))
                    .collect();
                let band = ActivityBand::new(lower, lower + width, 1.0).unwrap();
                let out = apply_band(&input, &band);
                for (u, bs) in out.user_index() {
                    prop_assert!(band.contains(bs.len() as u64));
                    prop_assert!(bs.len() <= input.user_index()[u].len());
                }
            }
        }
    }
}
