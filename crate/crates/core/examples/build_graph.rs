//! Build the Jaccard-weighted co-reaction graph from planted data and export
//! it as GraphML and DOT.

use corelate::synth::{self, PlantedConfig};
use corelate::taxonomy::CategoryTaxonomy;
use corelate::{export, graph, reaction_filter};

fn main() -> corelate::Result<()> {
    let data = synth::generate(&PlantedConfig { seed: 3, ..Default::default() }, &CategoryTaxonomy::default())?;
    let (reactions, _) = reaction_filter::filter_reactions(&data.reactions, &Default::default())?;

    let counts = graph::count_common(&reactions);
    let stats = graph::random_edge_stats(counts.total(), data.businesses.len() as u64)?;
    let mut g = graph::build_graph(&counts, reactions.business_index(), stats.lower_bound)?;
    for b in &data.businesses {
        g.add_vertex(b.id.clone());
    }
    println!(
        "{} vertices, {} edges kept, {} pairs cut at {:.2} common users",
        g.vertex_count(),
        g.edge_count(),
        counts.len() - g.edge_count(),
        stats.lower_bound
    );

    let hubs = graph::hub_report(&g, 3);
    println!("busiest vertices: {:?}", hubs.vertices);
    println!("strongest pairs: {:?}", hubs.edges);

    let dir = std::env::temp_dir().join("corelate-build-graph");
    std::fs::create_dir_all(&dir).map_err(|e| corelate::Error::Usage(e.to_string()))?;
    let names = data.businesses.iter().map(|b| (b.id.clone(), b.name.clone())).collect();
    export::write_file(&dir.join("graph.graphml"), &export::to_graphml(&g, Some(&names)))?;
    export::write_file(&dir.join("graph.dot"), &export::to_dot(&g, Some(&names)))?;
    println!("wrote {}", dir.display());
    Ok(())
}
