//! Every stage end to end: synthetic data on disk, a config, and the full
//! set of artifacts in an output directory.

use corelate::pipeline::{self, PipelineConfig};
use corelate::synth::{self, PlantedConfig};
use corelate::taxonomy::CategoryTaxonomy;

fn main() -> corelate::Result<()> {
    let dir = std::env::temp_dir().join("corelate-pipeline-example");
    let data = synth::generate(
        &PlantedConfig {
            n_communities: 10,
            community_size_range: [5, 15],
            category_noise: 0.1,
            seed: 4,
            ..Default::default()
        },
        &CategoryTaxonomy::default(),
    )?;
    data.write_to(&dir.join("data"))?;

    let config = PipelineConfig {
        businesses: dir.join("data/businesses.csv"),
        reactions: dir.join("data/reactions.csv"),
        k: 4,
        ..Default::default()
    };
    let out = dir.join("out");
    let result = pipeline::run_pipeline(&config, Some("b00000"), &out)?;
    print!("{}", result.files["report.txt"]);
    println!("\nartifacts in {}: {:?}", out.display(), result.manifest.outputs);
    Ok(())
}
