//! GraphML, DOT and JSON renderings of business graphs.
//!
//! Output is byte-stable: vertices and edges are emitted in id order and
//! floats use fixed formatting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::BusinessGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    GraphMl,
    Dot,
    Json,
    Text,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "graphml" => Ok(ExportFormat::GraphMl),
            "dot" | "gv" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            "text" | "txt" => Ok(ExportFormat::Text),
            other => Err(Error::Usage(format!("unknown export format `{other}`"))),
        }
    }
}

impl ExportFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        path.extension()
            .and_then(|e| e.to_str())
            .ok_or_else(|| Error::Usage(format!("cannot infer export format of {}", path.display())))?
            .parse()
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// GraphML with `weight` and `common_users` edge attributes and an optional
/// `name` node attribute.
pub fn to_graphml(graph: &BusinessGraph, names: Option<&BTreeMap<String, String>>) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    out.push_str("  <key id=\"name\" for=\"node\" attr.name=\"name\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    out.push_str("  <key id=\"common_users\" for=\"edge\" attr.name=\"common_users\" attr.type=\"long\"/>\n");
    out.push_str("  <graph id=\"business\" edgedefault=\"undirected\">\n");
    for v in graph.vertices() {
        match names.and_then(|n| n.get(v)) {
            Some(name) => {
                let _ = writeln!(
                    out,
                    "    <node id=\"{}\"><data key=\"name\">{}</data></node>",
                    xml_escape(v),
                    xml_escape(name)
                );
            }
            None => {
                let _ = writeln!(out, "    <node id=\"{}\"/>", xml_escape(v));
            }
        }
    }
    for (a, b, d) in graph.edges() {
        let _ = writeln!(
            out,
            "    <edge source=\"{}\" target=\"{}\"><data key=\"weight\">{}</data><data key=\"common_users\">{}</data></edge>",
            xml_escape(a),
            xml_escape(b),
            d.weight,
            d.common_users
        );
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

/// Undirected DOT; edge pen width grows with weight.
pub fn to_dot(graph: &BusinessGraph, names: Option<&BTreeMap<String, String>>) -> String {
    let mut out = String::from("graph business {\n");
    for v in graph.vertices() {
        let label = names.and_then(|n| n.get(v)).map_or(v, String::as_str);
        let _ = writeln!(out, "  {} [label={}];", dot_quote(v), dot_quote(label));
    }
    for (a, b, d) in graph.edges() {
        let _ = writeln!(
            out,
            "  {} -- {} [weight={}, common_users={}, label=\"{:.3}\", penwidth={:.3}];",
            dot_quote(a),
            dot_quote(b),
            d.weight,
            d.common_users,
            d.weight,
            1.0 + 9.0 * d.weight
        );
    }
    out.push_str("}\n");
    out
}

/// The `{nodes, edges: [{a, b, common, weight}]}` adjacency format.
pub fn to_json(graph: &BusinessGraph) -> String {
    let mut s = serde_json::to_string_pretty(graph).expect("graph serialization is infallible");
    s.push('\n');
    s
}

pub fn render_graph(graph: &BusinessGraph, format: ExportFormat, names: Option<&BTreeMap<String, String>>) -> Result<String> {
    match format {
        ExportFormat::GraphMl => Ok(to_graphml(graph, names)),
        ExportFormat::Dot => Ok(to_dot(graph, names)),
        ExportFormat::Json => Ok(to_json(graph)),
        ExportFormat::Text => Err(Error::Usage("graphs cannot be exported as text".into())),
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeData;

    fn sample() -> BusinessGraph {
        let mut g = BusinessGraph::new();
        g.add_edge(
            "a&b",
            "c",
            EdgeData {
                common_users: 4,
                weight: 0.25,
            },
        )
        .unwrap();
        g.add_vertex("lone\"ly");
        g
    }

    #[test]
    fn graphml_escapes_ids() {
        let xml = to_graphml(&sample(), None);
        assert!(xml.contains("<node id=\"a&amp;b\"/>"));
        assert!(xml.contains("<node id=\"lone&quot;ly\"/>"));
        assert!(xml.contains("<data key=\"weight\">0.25</data><data key=\"common_users\">4</data>"));
    }

    #[test]
    fn edgeless_graphml_has_nodes_only() {
        let mut g = BusinessGraph::new();
        g.add_vertex("x");
        let xml = to_graphml(&g, None);
        assert!(xml.contains("<node id=\"x\"/>"));
        assert!(!xml.contains("<edge"));
    }

    #[test]
    fn dot_quotes_and_labels() {
        let names: BTreeMap<String, String> = [("c".to_string(), "Café \"C\"".to_string())].into();
        let dot = to_dot(&sample(), Some(&names));
        assert!(dot.starts_with("graph business {\n"));
        assert!(dot.contains("\"c\" [label=\"Café \\\"C\\\"\"];"));
        assert!(dot.contains("\"a&b\" -- \"c\" [weight=0.25, common_users=4, label=\"0.250\", penwidth=3.250];"));
    }

    #[test]
    fn text_is_not_a_graph_format() {
        assert!(matches!(render_graph(&sample(), ExportFormat::Text, None), Err(Error::Usage(_))));
        assert!("png".parse::<ExportFormat>().is_err());
        assert_eq!(ExportFormat::from_path(Path::new("x/ego.graphml")).unwrap(), ExportFormat::GraphMl);
    }
}
