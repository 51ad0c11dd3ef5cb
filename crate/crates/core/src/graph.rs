//! The directed, weighted conflict graph produced by the significance filter.

use std::collections::BTreeSet;

/// A retained conflict edge with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictEdge {
    pub source: String,
    pub target: String,
    /// Controversial authors with a social home in `source` and an
    /// anti-social home in `target`.
    pub k: u64,
    /// Qualified authors with significant presence in both endpoints.
    pub n_common: u64,
    /// Conflict intensity, `k / n_common`.
    pub weight: f64,
    /// Null-model z-score that retained the edge (may be +inf).
    pub z: f64,
    /// The k authors behind the edge.
    pub author_set: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConflictGraph {
    /// Endpoints of retained edges, sorted.
    pub nodes: BTreeSet<String>,
    /// Sorted by (source, target).
    pub edges: Vec<ConflictEdge>,
}

impl ConflictGraph {
    pub fn from_edges(mut edges: Vec<ConflictEdge>) -> Self {
        edges.sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
        let mut nodes = BTreeSet::new();
        for e in &edges {
            nodes.insert(e.source.clone());
            nodes.insert(e.target.clone());
        }
        ConflictGraph { nodes, edges }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// (source, target) pairs for reverse-edge lookups.
    pub fn edge_set(&self) -> BTreeSet<(&str, &str)> {
        self.edges
            .iter()
            .map(|e| (e.source.as_str(), e.target.as_str()))
            .collect()
    }

    pub fn out_edges<'a>(&'a self, source: &'a str) -> impl Iterator<Item = &'a ConflictEdge> {
        self.edges.iter().filter(move |e| e.source == source)
    }
}
