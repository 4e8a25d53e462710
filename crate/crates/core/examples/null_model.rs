//! The weak-edge threshold: mean plus three standard deviations of a pair's
//! common-user count when co-reactions are spread uniformly over all pairs.

use corelate::{graph, synth};

fn main() -> corelate::Result<()> {
    // counts of the original 1,926-business study
    let s = graph::random_edge_stats(222_988_741, 1926)?;
    println!("n_c = {}, mu = {:.3}, sigma = {:.3}, lower bound = {:.3}", s.n_c, s.mu, s.sigma, s.lower_bound);

    // on uniformly random reactions almost no pair clears the bound
    let noise = synth::generate_uniform_noise(200, 5000, 20, 1)?;
    let counts = graph::count_common(&noise);
    let s = graph::random_edge_stats(counts.total(), 200)?;
    let g = graph::build_graph(&counts, noise.business_index(), s.lower_bound)?;
    println!(
        "uniform noise: {} pairs share users, lower bound {:.2}, {} edges survive ({:.3}% of all pairs)",
        counts.len(),
        s.lower_bound,
        g.edge_count(),
        100.0 * g.edge_count() as f64 / s.n_c as f64
    );
    Ok(())
}
