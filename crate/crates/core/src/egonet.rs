//! Egonets: a business plus its strongest direct connections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BusinessGraph;

pub const DEFAULT_MAX_NEIGHBORS: usize = 7;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EgonetMode {
    /// Neighbor–neighbor edges are kept.
    #[default]
    Induced,
    /// Only the target's own edges.
    Star,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Egonet {
    pub target: String,
    /// Strongest first; equal weights ordered by id.
    pub neighbors: Vec<(String, f64)>,
    pub subgraph: BusinessGraph,
}

impl Egonet {
    pub fn vertex_count(&self) -> usize {
        self.subgraph.vertex_count()
    }
}

pub fn extract_egonet(graph: &BusinessGraph, target: &str, max_neighbors: usize, mode: EgonetMode) -> Result<Egonet> {
    let nbrs = graph
        .neighbors(target)
        .ok_or_else(|| Error::UnknownId(target.to_owned()))?;
    let mut neighbors: Vec<(String, f64)> = nbrs.iter().map(|(id, d)| (id.clone(), d.weight)).collect();
    neighbors.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    neighbors.truncate(max_neighbors);

    let subgraph = match mode {
        EgonetMode::Induced => {
            graph.induced(std::iter::once(target).chain(neighbors.iter().map(|(id, _)| id.as_str())))
        }
        EgonetMode::Star => {
            let mut g = BusinessGraph::new();
            g.add_vertex(target);
            for (id, _) in &neighbors {
                g.add_edge(target, id, nbrs[id])?;
            }
            g
        }
    };
    Ok(Egonet {
        target: target.to_owned(),
        neighbors,
        subgraph,
    })
}
