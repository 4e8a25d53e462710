use std::path::Path;
use std::process::{Command, Output};

fn corelate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corelate"))
        .args(args)
        .env_remove(corelate::pipeline::THREADS_ENV)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = corelate(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path) {
    let config = dir.join("synth.json");
    std::fs::write(&config, r#"{"n_communities": 6, "community_size_range": [6, 14], "users_per_community": 90,
        "p_in": 0.55, "p_out": 0.02, "category_noise": 0.2, "seed": 21}"#)
        .unwrap();
    ok(&["synth", "--config", p(&config), "--out-dir", p(dir)]);
}

#[test]
fn stages_chain_to_the_same_result_as_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    let j = |name: &str| d.join(name);

    ok(&["ingest", "--businesses", p(&j("businesses.csv")), "--reactions", p(&j("reactions.csv")), "--out-dir", p(&j("stage"))]);
    let stage = d.join("stage");
    ok(&["filter", "--reactions", p(&stage.join("reactions.json")), "--out", p(&j("filtered.json"))]);
    ok(&["graph", "--businesses", p(&stage.join("businesses.json")), "--reactions", p(&j("filtered.json")), "--out", p(&j("graph.json"))]);
    ok(&["graph", "--businesses", p(&stage.join("businesses.json")), "--reactions", p(&j("filtered.json")), "--out", p(&j("graph.graphml"))]);
    ok(&["detect", "--graph", p(&j("graph.json")), "--seed", "5", "--out", p(&j("communities.json"))]);
    ok(&["cluster", "--communities", p(&j("communities.json")), "--businesses", p(&stage.join("businesses.json")), "--k", "3", "--seed", "5", "--out", p(&j("clusters.json"))]);
    ok(&["tag", "--clusters", p(&j("clusters.json")), "--communities", p(&j("communities.json")), "--businesses", p(&stage.join("businesses.json")), "--out", p(&j("tagged.json"))]);
    ok(&["egonet", "--graph", p(&j("graph.json")), "--target", "b00004", "--businesses", p(&stage.join("businesses.json")), "--out", p(&j("ego.dot"))]);

    std::fs::write(
        j("run.json"),
        r#"{"businesses": "businesses.csv", "reactions": "reactions.csv", "seed": 5, "k": 3}"#,
    )
    .unwrap();
    let report = ok(&["pipeline", "--config", p(&j("run.json")), "--target", "b00004", "--out", p(&j("out"))]);
    assert!(report.contains("communities:"));

    let read = |path: &Path| std::fs::read_to_string(path).unwrap();
    let out = d.join("out");
    for (staged, piped) in [
        ("graph.json", "graph.json"),
        ("graph.graphml", "graph.graphml"),
        ("communities.json", "communities.json"),
        ("tagged.json", "tagged.json"),
        ("ego.dot", "egonet.dot"),
    ] {
        assert_eq!(read(&j(staged)), read(&out.join(piped)), "{staged} differs from the pipeline's {piped}");
    }
    // the pipeline adds signatures to its cluster report
    let staged: serde_json::Value = serde_json::from_str(&read(&j("clusters.json"))).unwrap();
    let piped: serde_json::Value = serde_json::from_str(&read(&out.join("clusters.json"))).unwrap();
    assert_eq!(staged["communities"], piped["communities"]);
    assert_eq!(staged["sse"], piped["sse"]);
}

#[test]
fn exit_codes_follow_error_categories() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);

    // clap usage error
    assert_eq!(corelate(&["detect"]).status.code(), Some(2));
    // unknown output format
    ok(&["ingest", "--businesses", p(&d.join("businesses.csv")), "--reactions", p(&d.join("reactions.csv")), "--out-dir", p(d)]);
    ok(&["graph", "--businesses", p(&d.join("businesses.json")), "--reactions", p(&d.join("reactions.json")), "--out", p(&d.join("graph.json"))]);
    let bad = corelate(&["egonet", "--graph", p(&d.join("graph.json")), "--target", "b00001", "--out", p(&d.join("ego.png"))]);
    assert_eq!(bad.status.code(), Some(2));
    // unknown target
    let unknown = corelate(&["egonet", "--graph", p(&d.join("graph.json")), "--target", "nope", "--out", p(&d.join("ego.dot"))]);
    assert_eq!(unknown.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("nope"));
    // domain error
    let domain = corelate(&["filter", "--reactions", p(&d.join("reactions.json")), "--coverage", "1.5", "--out", p(&d.join("f.json"))]);
    assert_eq!(domain.status.code(), Some(4));
    // missing input file
    let missing = corelate(&["filter", "--reactions", p(&d.join("none.csv")), "--out", p(&d.join("f.json"))]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    std::fs::write(d.join("run.json"), r#"{"businesses": "businesses.csv", "reactions": "reactions.csv"}"#).unwrap();
    ok(&["pipeline", "--config", p(&d.join("run.json")), "--threads", "1", "--out", p(&d.join("a"))]);
    let out = Command::new(env!("CARGO_BIN_EXE_corelate"))
        .args(["pipeline", "--config", p(&d.join("run.json")), "--out", p(&d.join("b"))])
        .env(corelate::pipeline::THREADS_ENV, "4")
        .output()
        .unwrap();
    assert!(out.status.success());
    for name in ["manifest.json", "communities.json", "clusters.json", "graph.graphml"] {
        assert_eq!(std::fs::read(d.join("a").join(name)).unwrap(), std::fs::read(d.join("b").join(name)).unwrap(), "{name}");
    }
}
