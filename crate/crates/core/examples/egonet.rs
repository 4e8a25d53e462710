//! The egonet of one business: itself plus its seven strongest neighbours.

use corelate::egonet::{self, EgonetMode};
use corelate::export;
use corelate::graph::{BusinessGraph, EdgeData};

fn main() -> corelate::Result<()> {
    let mut g = BusinessGraph::new();
    for i in 0..12 {
        let w = 0.05 + 0.07 * i as f64;
        g.add_edge("target", &format!("n{i:02}"), EdgeData { common_users: 200 + 10 * i, weight: w })?;
    }
    g.add_edge("n10", "n11", EdgeData { common_users: 180, weight: 0.4 })?;
    g.add_edge("n11", "elsewhere", EdgeData { common_users: 170, weight: 0.3 })?;

    let ego = egonet::extract_egonet(&g, "target", egonet::DEFAULT_MAX_NEIGHBORS, EgonetMode::Induced)?;
    println!("neighbours kept: {:?}", ego.neighbors);
    print!("{}", export::to_dot(&ego.subgraph, None));

    let star = egonet::extract_egonet(&g, "target", 3, EgonetMode::Star)?;
    println!("star egonet with 3 neighbours has {} edges", star.subgraph.edge_count());
    Ok(())
}
