//! GraphML and DOT renderings of the conflict and co-conflict graphs.

use std::fmt::Write;

use crate::coconflict::CoConflictGraph;
use crate::graph::ConflictGraph;
use crate::metrics::NodeMetrics;

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// XML-schema double representation (infinities spelled INF).
fn xml_double(v: f64) -> String {
    if v == f64::INFINITY {
        "INF".to_string()
    } else if v == f64::NEG_INFINITY {
        "-INF".to_string()
    } else {
        format!("{v}")
    }
}

const NODE_KEYS: [(&str, &str); 6] = [
    ("indegree", "long"),
    ("outdegree", "long"),
    ("weighted_indegree", "double"),
    ("weighted_outdegree", "double"),
    ("size", "long"),
    ("con_author_percent", "double"),
];

/// GraphML for the directed conflict graph; node metric attributes are
/// attached when available.
pub fn conflict_graphml(graph: &ConflictGraph, metrics: Option<&[NodeMetrics]>) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    for (name, ty) in NODE_KEYS {
        writeln!(
            out,
            "  <key id=\"{name}\" for=\"node\" attr.name=\"{name}\" attr.type=\"{ty}\"/>"
        )
        .unwrap();
    }
    out.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    out.push_str("  <key id=\"z\" for=\"edge\" attr.name=\"z\" attr.type=\"double\"/>\n");
    out.push_str("  <graph id=\"conflict\" edgedefault=\"directed\">\n");
    for node in &graph.nodes {
        let id = xml_escape(node);
        match metrics.and_then(|ms| ms.iter().find(|m| &m.subreddit == node)) {
            Some(m) => {
                writeln!(out, "    <node id=\"{id}\">").unwrap();
                writeln!(out, "      <data key=\"indegree\">{}</data>", m.indegree).unwrap();
                writeln!(out, "      <data key=\"outdegree\">{}</data>", m.outdegree).unwrap();
                writeln!(
                    out,
                    "      <data key=\"weighted_indegree\">{}</data>",
                    xml_double(m.weighted_indegree)
                )
                .unwrap();
                writeln!(
                    out,
                    "      <data key=\"weighted_outdegree\">{}</data>",
                    xml_double(m.weighted_outdegree)
                )
                .unwrap();
                writeln!(out, "      <data key=\"size\">{}</data>", m.size).unwrap();
                writeln!(
                    out,
                    "      <data key=\"con_author_percent\">{}</data>",
                    xml_double(m.con_author_percent)
                )
                .unwrap();
                out.push_str("    </node>\n");
            }
            None => writeln!(out, "    <node id=\"{id}\"/>").unwrap(),
        }
    }
    for e in &graph.edges {
        writeln!(
            out,
            "    <edge source=\"{}\" target=\"{}\">",
            xml_escape(&e.source),
            xml_escape(&e.target)
        )
        .unwrap();
        writeln!(out, "      <data key=\"weight\">{}</data>", xml_double(e.weight)).unwrap();
        writeln!(out, "      <data key=\"z\">{}</data>", xml_double(e.z)).unwrap();
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

/// DOT for the directed conflict graph, edge weight doubling as penwidth.
pub fn conflict_dot(graph: &ConflictGraph) -> String {
    let mut out = String::from("digraph conflict {\n");
    for node in &graph.nodes {
        writeln!(out, "  \"{}\";", dot_escape(node)).unwrap();
    }
    for e in &graph.edges {
        writeln!(
            out,
            "  \"{}\" -> \"{}\" [weight={}, penwidth={}];",
            dot_escape(&e.source),
            dot_escape(&e.target),
            e.weight,
            e.weight
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

/// GraphML for the undirected co-conflict graph.
pub fn coconflict_graphml(graph: &CoConflictGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    out.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    out.push_str(
        "  <key id=\"common_count\" for=\"edge\" attr.name=\"common_count\" attr.type=\"long\"/>\n",
    );
    out.push_str("  <graph id=\"coconflict\" edgedefault=\"undirected\">\n");
    for node in &graph.nodes {
        writeln!(out, "    <node id=\"{}\"/>", xml_escape(node)).unwrap();
    }
    for e in &graph.edges {
        writeln!(
            out,
            "    <edge source=\"{}\" target=\"{}\">",
            xml_escape(&e.a),
            xml_escape(&e.b)
        )
        .unwrap();
        writeln!(out, "      <data key=\"weight\">{}</data>", xml_double(e.weight)).unwrap();
        writeln!(out, "      <data key=\"common_count\">{}</data>", e.common_count).unwrap();
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

/// DOT for the undirected co-conflict graph.
pub fn coconflict_dot(graph: &CoConflictGraph) -> String {
    let mut out = String::from("graph coconflict {\n");
    for node in &graph.nodes {
        writeln!(out, "  \"{}\";", dot_escape(node)).unwrap();
    }
    for e in &graph.edges {
        writeln!(
            out,
            "  \"{}\" -- \"{}\" [weight={}, penwidth={}];",
            dot_escape(&e.a),
            dot_escape(&e.b),
            e.weight,
            e.weight
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ConflictEdge;
    use std::collections::BTreeSet;

    fn one_edge_graph() -> ConflictGraph {
        ConflictGraph::from_edges(vec![ConflictEdge {
            source: "a".into(),
            target: "b".into(),
            k: 1,
            n_common: 2,
            weight: 0.5,
            z: f64::INFINITY,
            author_set: BTreeSet::new(),
        }])
    }

    #[test]
    fn dot_has_exactly_one_directed_edge_statement() {
        let dot = conflict_dot(&one_edge_graph());
        assert_eq!(dot.matches("->").count(), 1);
        assert!(dot.contains("\"a\" -> \"b\" [weight=0.5, penwidth=0.5];"));
    }

    #[test]
    fn graphml_escapes_and_encodes_infinity() {
        let mut g = one_edge_graph();
        g.nodes.insert("we&ird<name>".into());
        let xml = conflict_graphml(&g, None);
        assert!(xml.contains("we&amp;ird&lt;name&gt;"));
        assert!(xml.contains("<data key=\"z\">INF</data>"));
        assert!(xml.contains("edgedefault=\"directed\""));
    }
}
