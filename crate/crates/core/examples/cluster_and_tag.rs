//! Cluster communities by their category mix, derive each cluster's
//! signature and tag businesses whose category falls outside it.

use std::collections::BTreeMap;

use corelate::cluster::{self, ClusterModel, Normalization};
use corelate::community::Community;
use corelate::ingest::Business;
use corelate::outlier;
use corelate::taxonomy::CategoryTaxonomy;

fn main() -> corelate::Result<()> {
    let taxonomy = CategoryTaxonomy::default();
    let plan: [&[&str]; 6] = [
        &["Food & Beverage"; 5],
        &["Food & Beverage", "Food & Beverage", "Food & Beverage", "Food & Beverage", "Finance"],
        &["Food & Beverage", "Food & Beverage", "Hotel & Lodging", "Food & Beverage"],
        &["Shopping & Retail"; 6],
        &["Shopping & Retail", "Shopping & Retail", "Beauty, Cosmetic & Personal Care", "Shopping & Retail"],
        &["Shopping & Retail"; 5],
    ];
    let mut businesses = Vec::new();
    let mut communities = Vec::new();
    for (c, cats) in plan.iter().enumerate() {
        let mut members = Vec::new();
        for (i, cat) in cats.iter().enumerate() {
            let id = format!("c{c}b{i}");
            businesses.push(Business::new(&id, format!("Business {c}.{i}"), format!("Businesses/{cat}")));
            members.push(id);
        }
        communities.push(Community { id: c, members: members.into_iter().collect(), accepted_at_iteration: 1 });
    }

    let categories = cluster::business_categories(&businesses, &taxonomy);
    let vectors = cluster::community_vectors(&communities, &categories, taxonomy.canonical().len(), Normalization::PerCommunityMax)?;

    let selection = cluster::select_k(&vectors, &[1, 2, 3], 0, 100)?;
    println!("SSE by k: {:?}\n  ({})", selection.sse_table, selection.caveat);

    let fit = cluster::kmeans(&vectors, 2, 0, 100)?;
    let model = ClusterModel::from_fit(&communities, &fit);
    for s in outlier::cluster_signatures(&model, &communities, &vectors, 0.7)? {
        let names: Vec<&str> = s.signature.categories.iter().map(|&i| taxonomy.name(i)).collect();
        println!("cluster {}: signature {names:?}", s.cluster);
    }
    let tagged = outlier::tag_outliers(&model, &communities, &vectors, &categories, 0.7)?;
    let by_id: BTreeMap<&str, &Business> = businesses.iter().map(|b| (b.id.as_str(), b)).collect();
    for t in &tagged {
        for (id, cat) in &t.tags {
            println!("community {} -> outlier {} ({})", t.community.id, by_id[id.as_str()].name, taxonomy.name(*cat));
        }
    }
    Ok(())
}
