//! Shared helpers for the integration and acceptance suites.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Mutex;

use subconflict::config::PipelineConfig;
use subconflict::conflict::{candidate_edges, ConflictEdgeCandidate};
use subconflict::corpus::{self, AnalysisWindow, ParseOutcome};
use subconflict::graph::ConflictGraph;
use subconflict::profiles::{
    classify_all_homes, controversial_authors, qualified_authors, ControversialAuthor,
    HomeAssignment,
};
use subconflict::significance::{filter_graph, EdgeTestResult, TestParams};
use subconflict::stats::StatsTable;

/// Serializes the wall-clock-sensitive tests so their measurements do not
/// contend with each other.
pub static TIMING_LOCK: Mutex<()> = Mutex::new(());

pub fn lock_timing() -> std::sync::MutexGuard<'static, ()> {
    TIMING_LOCK.lock().unwrap_or_else(|p| p.into_inner())
}

/// Everything the in-memory pipeline produces for a corpus.
#[allow(dead_code)] // different test binaries read different fields
pub struct Analysis {
    pub table: StatsTable,
    pub qualified: BTreeSet<String>,
    pub homes: Vec<HomeAssignment>,
    pub controversial: Vec<ControversialAuthor>,
    pub candidates: Vec<ConflictEdgeCandidate>,
    pub results: Vec<EdgeTestResult>,
    pub graph: ConflictGraph,
}

/// Run the whole analysis in memory over newline-delimited record bytes.
pub fn analyze_lines(lines: &[u8], cfg: &PipelineConfig) -> Analysis {
    let window = AnalysisWindow::from_config(cfg);
    let sentinels = corpus::sentinel_set(cfg);
    let records = lines
        .split(|&b| b == b'\n')
        .filter(|l| !l.is_empty())
        .filter_map(|l| match corpus::parse_record(l, &window, &sentinels) {
            ParseOutcome::Record(r) => Some(r),
            ParseOutcome::Skip(_) => None,
        });
    let rows = corpus::aggregate(records, &window).expect("aggregate");
    let table = StatsTable::from_rows(&rows);
    let blocklist: BTreeSet<String> = cfg.author_blocklist.iter().cloned().collect();
    let qualified = qualified_authors(&table, cfg.min_total_comments, &blocklist);
    let homes = classify_all_homes(
        &table.year_view(),
        &qualified,
        cfg.min_sub_comments,
        &cfg.excluded_set(),
    );
    let controversial = controversial_authors(&homes);
    let candidates = candidate_edges(
        &controversial,
        &table.year_view(),
        &qualified,
        cfg.min_pair_authors,
        cfg.min_sub_comments,
    );
    let params = TestParams {
        trials: cfg.mc_trials,
        z_threshold: cfg.z_threshold,
        std_mode: cfg.std_mode,
        seed: cfg.seed,
        stream_tag: 0,
    };
    let (graph, results) = filter_graph(
        &candidates,
        &table.year_view(),
        &qualified,
        cfg.min_sub_comments,
        &params,
        cfg.threads,
    )
    .expect("filter");
    Analysis {
        table,
        qualified,
        homes,
        controversial,
        candidates,
        results,
        graph,
    }
}

/// Relative path -> file bytes for a whole directory tree.
pub fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("read_dir") {
            let entry = entry.expect("dir entry");
            let path = entry.path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let rel = path
                    .strip_prefix(base)
                    .expect("relative path")
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, std::fs::read(&path).expect("read file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// Integer and weighted degree handshake over a conflict graph.
///
/// Integer sums are exact; the weighted sides are compared as exact sorted
/// multisets of edge weights (every edge appears exactly once on each side),
/// plus a grouped float-sum check at tight tolerance.
pub fn assert_handshake(graph: &ConflictGraph) {
    let mut indeg: BTreeMap<&str, u64> = BTreeMap::new();
    let mut outdeg: BTreeMap<&str, u64> = BTreeMap::new();
    let mut in_weights: Vec<f64> = Vec::new();
    let mut out_weights: Vec<f64> = Vec::new();
    for e in &graph.edges {
        *outdeg.entry(e.source.as_str()).or_insert(0) += 1;
        *indeg.entry(e.target.as_str()).or_insert(0) += 1;
        in_weights.push(e.weight);
        out_weights.push(e.weight);
    }
    let e_count = graph.edges.len() as u64;
    assert_eq!(indeg.values().sum::<u64>(), e_count, "indegree handshake");
    assert_eq!(outdeg.values().sum::<u64>(), e_count, "outdegree handshake");

    let mut edge_weights: Vec<f64> = graph.edges.iter().map(|e| e.weight).collect();
    edge_weights.sort_by(f64::total_cmp);
    in_weights.sort_by(f64::total_cmp);
    out_weights.sort_by(f64::total_cmp);
    assert_eq!(in_weights, edge_weights, "incoming weight multiset");
    assert_eq!(out_weights, edge_weights, "outgoing weight multiset");

    let total: f64 = edge_weights.iter().sum();
    let sum_in: f64 = in_weights.iter().sum();
    let sum_out: f64 = out_weights.iter().sum();
    assert!((sum_in - total).abs() <= 1e-9 * (1.0 + total.abs()));
    assert!((sum_out - total).abs() <= 1e-9 * (1.0 + total.abs()));
}
