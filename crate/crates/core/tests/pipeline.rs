use std::collections::BTreeSet;
use std::path::Path;

use corelate::pipeline::{self, PipelineConfig};
use corelate::synth::{self, PlantedConfig};
use corelate::taxonomy::CategoryTaxonomy;
use corelate::Error;

fn planted(dir: &Path, seed: u64) -> synth::SyntheticData {
    let config = PlantedConfig {
        seed,
        category_noise: 0.1,
        ..PlantedConfig::default()
    };
    let data = synth::generate(&config, &CategoryTaxonomy::default()).unwrap();
    data.write_to(dir).unwrap();
    data
}

fn config(dir: &Path) -> PipelineConfig {
    PipelineConfig {
        businesses: dir.join("businesses.csv"),
        reactions: dir.join("reactions.csv"),
        k: 3,
        ..PipelineConfig::default()
    }
}

#[test]
fn planted_partition_is_recovered_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let data = planted(tmp.path(), 2);
    let out = tmp.path().join("out");
    let result = pipeline::run_pipeline(&config(tmp.path()), Some("b00000"), &out).unwrap();

    assert_eq!(result.detection.communities.len(), 5);
    let score = synth::score_partition(&result.detection.communities, &data.truth);
    assert_eq!(score.ari, 1.0);
    assert_eq!(score.unassigned_fraction, 0.0);

    let ego = result.egonet.as_ref().unwrap();
    assert!(ego.vertex_count() <= 8);
    for name in ["graph.graphml", "communities.json", "clusters.json", "tagged.json", "egonet.dot", "manifest.json", "report.txt"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
}

#[test]
fn manifest_records_every_parameter_and_statistic() {
    let tmp = tempfile::tempdir().unwrap();
    planted(tmp.path(), 3);
    let out = tmp.path().join("out");
    pipeline::run_pipeline(&config(tmp.path()), None, &out).unwrap();
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();

    let keys = serde_json::to_value(PipelineConfig::default()).unwrap();
    for key in keys.as_object().unwrap().keys() {
        assert!(manifest["parameters"].get(key).is_some(), "parameter `{key}` missing");
    }
    let g = &manifest["graph"];
    for key in ["n_r", "n_c", "mu", "sigma", "lower_bound"] {
        assert!(g["stats"][key].is_number(), "graph.stats.{key}");
    }
    for key in ["edges_cut", "edges_kept", "n_b"] {
        assert!(g[key].is_u64(), "graph.{key}");
    }
    assert!(manifest["ingest"]["businesses_retained"].is_u64());
    assert!(manifest["filter"]["reactions_out"].is_u64());
    assert!(manifest["filter"]["band"]["upper"].is_u64());
    assert!(manifest["detection"]["communities_found"].is_u64());
    assert!(manifest["detection"]["unassigned_vertices"].is_u64());
    assert_eq!(manifest["clustering"]["k"], 3);
    assert_eq!(manifest["reference_run"]["lower_bound"], 153.195);
    let text = manifest.to_string();
    assert!(!text.contains("thread"), "manifest must not depend on the thread count");
}

#[test]
fn stage_statistics_are_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    planted(tmp.path(), 4);
    let r = pipeline::compute(&config(tmp.path()), None).unwrap();
    let g = &r.manifest.graph;
    assert_eq!(g.edges_cut + g.edges_kept, g.pairs_with_common_users);
    assert_eq!(g.edges, r.graph.edge_count());
    let sizes: usize = r.manifest.clustering.as_ref().unwrap().cluster_sizes.iter().sum();
    assert_eq!(sizes, r.detection.communities.len());
    let assigned: usize = r.detection.communities.iter().map(|c| c.members.len()).sum();
    assert_eq!(assigned + r.detection.unassigned.len(), r.graph.vertex_count());
}

#[test]
fn excluded_hubs_leave_the_graph() {
    let tmp = tempfile::tempdir().unwrap();
    planted(tmp.path(), 5);
    let mut cfg = config(tmp.path());
    cfg.exclude_ids = ["b00001".to_string(), "b00002".to_string(), "not-there".to_string()].into();
    let r = pipeline::compute(&cfg, None).unwrap();
    assert!(!r.graph.contains("b00001") && !r.graph.contains("b00002"));
    assert_eq!(r.manifest.graph.excluded_vertices, ["b00001", "b00002"]);
    assert!(r.manifest.graph.edges_removed_by_exclusion > 0);
}

#[test]
fn unknown_target_still_writes_other_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    planted(tmp.path(), 6);
    let out = tmp.path().join("out");
    let err = pipeline::run_pipeline(&config(tmp.path()), Some("missing"), &out).unwrap_err();
    assert!(matches!(err.root(), Error::UnknownId(id) if id == "missing"));
    assert_eq!(err.exit_code(), 6);
    assert!(out.join("communities.json").is_file());
    assert!(out.join("manifest.json").is_file());
    assert!(!out.join("egonet.dot").exists());
}

#[test]
fn failed_stage_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    planted(tmp.path(), 7);
    std::fs::write(tmp.path().join("reactions.csv"), b"user_id,business_id,reaction_type\nu1,b\xff,Like\n").unwrap();
    let out = tmp.path().join("out");
    let err = pipeline::run_pipeline(&config(tmp.path()), None, &out).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "ingest", .. }), "{err}");
    assert!(!out.exists());
}

#[test]
fn every_business_is_a_vertex() {
    let tmp = tempfile::tempdir().unwrap();
    let data = planted(tmp.path(), 8);
    // a business nobody reacts to
    let mut csv = std::fs::read_to_string(tmp.path().join("businesses.csv")).unwrap();
    csv.push_str("quiet,Quiet Shop,1.0,1.0,Businesses/Shopping & Retail,,,\n");
    std::fs::write(tmp.path().join("businesses.csv"), csv).unwrap();
    let r = pipeline::compute(&config(tmp.path()), Some("quiet")).unwrap();
    assert_eq!(r.graph.vertex_count(), data.businesses.len() + 1);
    assert_eq!(r.manifest.graph.n_b, data.businesses.len() + 1);
    assert!(r.detection.unassigned.contains("quiet"));
    assert_eq!(r.egonet.unwrap().vertex_count(), 1);
}

#[test]
fn tagged_output_matches_the_documented_shape() {
    let tmp = tempfile::tempdir().unwrap();
    planted(tmp.path(), 9);
    let r = pipeline::compute(&config(tmp.path()), Some("b00000")).unwrap();
    let tagged: serde_json::Value = serde_json::from_str(&r.files["tagged.json"]).unwrap();
    let entries = tagged.as_array().unwrap();
    assert_eq!(entries.len(), r.detection.communities.len());
    for e in entries {
        assert!(e["community_id"].is_u64() && e["cluster"].is_u64());
        for m in e["members"].as_array().unwrap() {
            assert!(m["id"].is_string() && m["category"].is_string());
            assert_eq!(m["outlier"].as_bool().unwrap(), m.get("reason").is_some());
        }
    }
    let subset: Vec<serde_json::Value> = serde_json::from_str(&r.files["target_tagged.json"]).unwrap();
    assert!(subset
        .iter()
        .all(|e| e["members"].as_array().unwrap().iter().any(|m| m["id"] == "b00000")));
}

#[test]
fn k_selection_reports_its_table() {
    let tmp = tempfile::tempdir().unwrap();
    planted(tmp.path(), 10);
    let mut cfg = config(tmp.path());
    cfg.k_candidates = vec![2, 3, 4, 50];
    let r = pipeline::compute(&cfg, None).unwrap();
    let clusters = r.clusters.unwrap();
    // 50 is capped at the community count
    let ks: BTreeSet<usize> = clusters.sse_table.iter().map(|(k, _)| *k).collect();
    assert_eq!(ks, [2, 3, 4, 5].into());
    assert!(clusters.caveat.is_some());
    assert_eq!(clusters.k, 5);
}

#[test]
fn config_file_paths_are_relative_to_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    planted(&tmp.path().join("data"), 11);
    let path = tmp.path().join("run.json");
    std::fs::write(&path, r#"{"businesses": "data/businesses.csv", "reactions": "data/reactions.csv", "output_dir": "out"}"#).unwrap();
    let cfg = PipelineConfig::load(&path).unwrap();
    assert!(cfg.validate().is_ok());
    assert_eq!(cfg.output_dir.unwrap(), tmp.path().join("out"));
    std::fs::write(&path, r#"{"businesses": "data/businesses.csv", "reactions": "data/reactions.csv", "coverage": 2}"#).unwrap();
    let err = pipeline::compute(&PipelineConfig::load(&path).unwrap(), None).unwrap_err();
    assert_eq!(err.exit_code(), 4);
}
