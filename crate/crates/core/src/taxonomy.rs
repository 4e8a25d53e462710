//! The 28-category flattening of page category paths.
//!
//! Six top-level parents (everything but `Businesses`) absorb all of their
//! subcategories; under `Businesses` the 22 second-level subcategories are
//! kept and deeper levels collapse into them. The canonical order is the
//! six parents in file order followed by the 22 subcategories; vector
//! dimension `i` always means `canonical()[i]`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CATEGORY_COUNT: usize = 28;

const DEFAULT_TAXONOMY: &str = include_str!("../data/taxonomy.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TaxonomyFile {
    parents: Vec<String>,
    business_parent: String,
    #[serde(default)]
    business_parent_aliases: Vec<String>,
    fallback: String,
    business_subcategories: Vec<String>,
    /// Bare leaf names (e.g. `Seafood Restaurant`) mapped to canonical names.
    #[serde(default)]
    aliases: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct CategoryTaxonomy {
    file: TaxonomyFile,
    canonical: Vec<String>,
    fallback: usize,
    /// lowercase name → canonical index, for roots and bare names
    lookup: HashMap<String, usize>,
    /// lowercase name → canonical index, for second level under the business parent
    business: HashMap<String, usize>,
    business_roots: Vec<String>,
}

impl Default for CategoryTaxonomy {
    fn default() -> Self {
        CategoryTaxonomy::from_json(DEFAULT_TAXONOMY).expect("bundled taxonomy is valid")
    }
}

fn key(s: &str) -> String {
    s.trim().to_lowercase()
}

impl CategoryTaxonomy {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: TaxonomyFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn from_file(file: TaxonomyFile) -> Result<Self> {
        if !file.parents.contains(&file.business_parent) {
            return Err(Error::Input(format!(
                "business parent `{}` is not among the parents",
                file.business_parent
            )));
        }
        let canonical: Vec<String> = file
            .parents
            .iter()
            .filter(|p| **p != file.business_parent)
            .chain(&file.business_subcategories)
            .cloned()
            .collect();
        if canonical.len() != CATEGORY_COUNT {
            return Err(Error::Input(format!(
                "taxonomy defines {} canonical categories, expected {CATEGORY_COUNT}",
                canonical.len()
            )));
        }
        let mut lookup = HashMap::new();
        for (i, name) in canonical.iter().enumerate() {
            if lookup.insert(key(name), i).is_some() {
                return Err(Error::Input(format!("duplicate category `{name}`")));
            }
        }
        let fallback = *lookup
            .get(&key(&file.fallback))
            .ok_or_else(|| Error::Input(format!("fallback `{}` is not a canonical category", file.fallback)))?;
        let business: HashMap<String, usize> = file
            .business_subcategories
            .iter()
            .map(|s| (key(s), lookup[&key(s)]))
            .collect();
        for (alias, target) in &file.aliases {
            let idx = *lookup
                .get(&key(target))
                .ok_or_else(|| Error::Input(format!("alias `{alias}` targets unknown category `{target}`")))?;
            lookup.entry(key(alias)).or_insert(idx);
        }
        let business_roots = std::iter::once(&file.business_parent)
            .chain(&file.business_parent_aliases)
            .map(|s| key(s))
            .collect();
        Ok(CategoryTaxonomy {
            file,
            canonical,
            fallback,
            lookup,
            business,
            business_roots,
        })
    }

    pub fn canonical(&self) -> &[String] {
        &self.canonical
    }

    pub fn name(&self, index: usize) -> &str {
        &self.canonical[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.canonical.iter().position(|c| c.eq_ignore_ascii_case(name.trim()))
    }

    pub fn fallback(&self) -> usize {
        self.fallback
    }

    /// Whether `index` is one of the second-level business subcategories.
    pub fn is_business_subcategory(&self, index: usize) -> bool {
        index >= CATEGORY_COUNT - self.file.business_subcategories.len()
    }

    /// A raw path that flattens back to `index`.
    pub fn path_for(&self, index: usize) -> String {
        if self.is_business_subcategory(index) {
            format!("{}/{}", self.file.business_parent, self.canonical[index])
        } else {
            self.canonical[index].clone()
        }
    }

    /// Maps a slash-delimited category path to its canonical index.
    ///
    /// Paths rooted at a non-business parent map to that parent; paths under
    /// the business parent map to their second-level subcategory. A bare
    /// name may also be a canonical name or a known alias. Everything else
    /// falls back to `Other`.
    pub fn flatten(&self, raw_category: &str) -> usize {
        let mut segments = raw_category.split('/').map(str::trim).filter(|s| !s.is_empty());
        let Some(root) = segments.next() else {
            return self.fallback;
        };
        let root = key(root);
        if self.business_roots.contains(&root) {
            return segments
                .next()
                .and_then(|sub| self.business.get(&key(sub)).copied())
                .unwrap_or(self.fallback);
        }
        self.lookup.get(&root).copied().unwrap_or(self.fallback)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_has_28_names() {
        let t = CategoryTaxonomy::default();
        assert_eq!(t.canonical().len(), CATEGORY_COUNT);
        assert_eq!(&t.canonical()[..6], ["Interest", "Community Organization", "Media", "Public Figure", "Non-Business Places", "Other"]);
        assert!(!t.canonical().iter().any(|c| c == "Businesses"));
    }

    #[test]
    fn non_business_parents_absorb_subcategories() {
        let t = CategoryTaxonomy::default();
        assert_eq!(t.name(t.flatten("Interest/Some Subinterest")), "Interest");
        assert_eq!(t.name(t.flatten("Media/TV/News")), "Media");
    }

    #[test]
    fn business_sub_subcategories_collapse() {
        let t = CategoryTaxonomy::default();
        let i = t.flatten("Business/Advertising or Marketing/Advertising Agency");
        assert_eq!(t.name(i), "Advertising or Marketing");
        assert_eq!(t.flatten("Businesses/advertising or marketing/Copywriting Service"), i);
    }

    #[test]
    fn unknown_paths_fall_back_to_other() {
        let t = CategoryTaxonomy::default();
        assert_eq!(t.name(t.flatten("UnknownRoot/Foo")), "Other");
        assert_eq!(t.name(t.flatten("")), "Other");
        assert_eq!(t.name(t.flatten("Business")), "Other");
        assert_eq!(t.name(t.flatten("Business/Nonexistent")), "Other");
    }

    #[test]
    fn bare_names_and_aliases() {
        let t = CategoryTaxonomy::default();
        assert_eq!(t.name(t.flatten("Seafood Restaurant")), "Food & Beverage");
        assert_eq!(t.name(t.flatten("Shopping & Retail")), "Shopping & Retail");
    }

    #[test]
    fn path_for_round_trips() {
        let t = CategoryTaxonomy::default();
        for i in 0..CATEGORY_COUNT {
            assert_eq!(t.flatten(&t.path_for(i)), i);
        }
    }

    #[test]
    fn rejects_wrong_size() {
        let text = DEFAULT_TAXONOMY.replace("\"Agriculture\",", "");
        assert!(CategoryTaxonomy::from_json(&text).is_err());
    }
}
