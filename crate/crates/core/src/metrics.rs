//! Node and edge statistics over the filtered conflict graph: degrees,
//! intensities, controversial-author prevalence, reciprocity, rank tables,
//! and the Spearman correlation report.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::graph::ConflictGraph;
use crate::profiles::ControversialAuthor;
use crate::stats::StatsView;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeMetrics {
    pub subreddit: String,
    pub indegree: u64,
    pub outdegree: u64,
    pub weighted_indegree: f64,
    pub weighted_outdegree: f64,
    /// weighted_indegree / indegree when targeted, else 0.
    pub avg_in_intensity: f64,
    /// weighted_outdegree / outdegree when instigating, else 0.
    pub avg_out_intensity: f64,
    /// Unique authors with significant presence in the subreddit.
    pub size: u64,
    /// Controversial authors with a social home here.
    pub n_con_authors: u64,
    /// 100 * n_con_authors / size.
    pub con_author_percent: f64,
    /// Mean number of subreddits those authors target.
    pub avg_subs_targeted: f64,
    /// Median (midpoint for even counts) of the same.
    pub median_subs_targeted: f64,
}

/// Compute metrics for every node of the graph, sorted by subreddit name.
pub fn node_metrics(
    graph: &ConflictGraph,
    controversial: &[ControversialAuthor],
    stats: &StatsView<'_>,
    presence: u64,
) -> Vec<NodeMetrics> {
    let mut indeg: BTreeMap<&str, (u64, f64)> = BTreeMap::new();
    let mut outdeg: BTreeMap<&str, (u64, f64)> = BTreeMap::new();
    for e in &graph.edges {
        let o = outdeg.entry(e.source.as_str()).or_insert((0, 0.0));
        o.0 += 1;
        o.1 += e.weight;
        let i = indeg.entry(e.target.as_str()).or_insert((0, 0.0));
        i.0 += 1;
        i.1 += e.weight;
    }

    // Anti-social home counts per controversial author with social home here.
    let mut targets_by_home: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for author in controversial {
        for home in &author.social_homes {
            targets_by_home
                .entry(home.as_str())
                .or_default()
                .push(author.antisocial_homes.len() as u64);
        }
    }

    graph
        .nodes
        .iter()
        .map(|node| {
            let (indegree, weighted_indegree) = indeg.get(node.as_str()).copied().unwrap_or((0, 0.0));
            let (outdegree, weighted_outdegree) = outdeg.get(node.as_str()).copied().unwrap_or((0, 0.0));
            let size = stats.subreddit_size(node, presence);
            let targets = targets_by_home.get(node.as_str()).cloned().unwrap_or_default();
            let n_con_authors = targets.len() as u64;
            let con_author_percent = if size > 0 {
                100.0 * n_con_authors as f64 / size as f64
            } else {
                0.0
            };
            let (avg_subs_targeted, median_subs_targeted) = avg_and_median(&targets);
            NodeMetrics {
                subreddit: node.clone(),
                indegree,
                outdegree,
                weighted_indegree,
                weighted_outdegree,
                avg_in_intensity: if indegree > 0 { weighted_indegree / indegree as f64 } else { 0.0 },
                avg_out_intensity: if outdegree > 0 { weighted_outdegree / outdegree as f64 } else { 0.0 },
                size,
                n_con_authors,
                con_author_percent,
                avg_subs_targeted,
                median_subs_targeted,
            }
        })
        .collect()
}

fn avg_and_median(values: &[u64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let avg = sorted.iter().sum::<u64>() as f64 / sorted.len() as f64;
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid] as f64
    } else {
        (sorted[mid - 1] + sorted[mid]) as f64 / 2.0
    };
    (avg, median)
}

/// Fraction of directed edges whose reverse edge also exists.
pub fn reciprocity(graph: &ConflictGraph) -> f64 {
    if graph.edges.is_empty() {
        log::warn!("reciprocity on an empty graph is reported as 0");
        return 0.0;
    }
    let set = graph.edge_set();
    let reciprocated = graph
        .edges
        .iter()
        .filter(|e| set.contains(&(e.target.as_str(), e.source.as_str())))
        .count();
    reciprocated as f64 / graph.edges.len() as f64
}

/// Spearman rank correlation with average ranks for ties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spearman {
    pub rho: f64,
    /// Two-sided p-value from the t approximation; `None` when n < 3 or the
    /// statistic degenerates.
    pub p_value: Option<f64>,
    pub n: usize,
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // 1-based ranks; tied values share the midpoint rank.
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// `None` when either sequence has zero rank variance or fewer than two
/// observations.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<Spearman> {
    assert_eq!(x.len(), y.len(), "sequences must have equal length");
    let n = x.len();
    if n < 2 {
        return None;
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let mean = (n as f64 + 1.0) / 2.0;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = rx[i] - mean;
        let dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let p_value = if n < 3 {
        None
    } else if rho.abs() >= 1.0 {
        Some(0.0)
    } else {
        let df = (n - 2) as f64;
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        StudentsT::new(0.0, 1.0, df)
            .ok()
            .map(|dist| (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
    };
    Some(Spearman { rho, p_value, n })
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationEntry {
    pub name: String,
    pub n: usize,
    /// `None` marks a not-computable entry (too few points or degenerate
    /// ranks).
    pub rho: Option<f64>,
    pub p_value: Option<f64>,
}

fn entry(name: &str, x: &[f64], y: &[f64]) -> CorrelationEntry {
    match spearman(x, y) {
        Some(s) => CorrelationEntry {
            name: name.to_string(),
            n: s.n,
            rho: Some(s.rho),
            p_value: s.p_value,
        },
        None => CorrelationEntry {
            name: name.to_string(),
            n: x.len(),
            rho: None,
            p_value: None,
        },
    }
}

/// The correlation battery over a conflict graph: reciprocated intensities,
/// degree vs average intensity, and size vs conflict involvement.
pub fn correlation_report(graph: &ConflictGraph, metrics: &[NodeMetrics]) -> Vec<CorrelationEntry> {
    let edge_weights: BTreeMap<(&str, &str), f64> = graph
        .edges
        .iter()
        .map(|e| ((e.source.as_str(), e.target.as_str()), e.weight))
        .collect();

    // One observation per unordered reciprocated pair, oriented by name order
    // for determinism.
    let mut fwd = Vec::new();
    let mut rev = Vec::new();
    for (&(s, t), &w) in &edge_weights {
        if s < t {
            if let Some(&wr) = edge_weights.get(&(t, s)) {
                fwd.push(w);
                rev.push(wr);
            }
        }
    }

    let targeted: Vec<&NodeMetrics> = metrics.iter().filter(|m| m.indegree > 0).collect();
    let sources: Vec<&NodeMetrics> = metrics.iter().filter(|m| m.outdegree > 0).collect();
    let col = |rows: &[&NodeMetrics], f: fn(&NodeMetrics) -> f64| -> Vec<f64> {
        rows.iter().map(|m| f(m)).collect()
    };

    vec![
        entry("reciprocated_intensity", &fwd, &rev),
        entry(
            "indegree_vs_avg_in_intensity",
            &col(&targeted, |m| m.indegree as f64),
            &col(&targeted, |m| m.avg_in_intensity),
        ),
        entry(
            "outdegree_vs_avg_out_intensity",
            &col(&sources, |m| m.outdegree as f64),
            &col(&sources, |m| m.avg_out_intensity),
        ),
        entry(
            "size_vs_indegree",
            &col(&targeted, |m| m.size as f64),
            &col(&targeted, |m| m.indegree as f64),
        ),
        entry(
            "size_vs_outdegree",
            &col(&sources, |m| m.size as f64),
            &col(&sources, |m| m.outdegree as f64),
        ),
        entry(
            "size_vs_avg_in_intensity",
            &col(&targeted, |m| m.size as f64),
            &col(&targeted, |m| m.avg_in_intensity),
        ),
        entry(
            "size_vs_avg_out_intensity",
            &col(&sources, |m| m.size as f64),
            &col(&sources, |m| m.avg_out_intensity),
        ),
    ]
}

/// Sortable metric columns for ranking tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankKey {
    Indegree,
    Outdegree,
    WeightedIndegree,
    WeightedOutdegree,
    AvgInIntensity,
    AvgOutIntensity,
    ConAuthorPercent,
    Size,
    NConAuthors,
    AvgSubsTargeted,
    MedianSubsTargeted,
}

impl RankKey {
    pub fn value(&self, m: &NodeMetrics) -> f64 {
        match self {
            RankKey::Indegree => m.indegree as f64,
            RankKey::Outdegree => m.outdegree as f64,
            RankKey::WeightedIndegree => m.weighted_indegree,
            RankKey::WeightedOutdegree => m.weighted_outdegree,
            RankKey::AvgInIntensity => m.avg_in_intensity,
            RankKey::AvgOutIntensity => m.avg_out_intensity,
            RankKey::ConAuthorPercent => m.con_author_percent,
            RankKey::Size => m.size as f64,
            RankKey::NConAuthors => m.n_con_authors as f64,
            RankKey::AvgSubsTargeted => m.avg_subs_targeted,
            RankKey::MedianSubsTargeted => m.median_subs_targeted,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RankKey::Indegree => "indegree",
            RankKey::Outdegree => "outdegree",
            RankKey::WeightedIndegree => "weighted_indegree",
            RankKey::WeightedOutdegree => "weighted_outdegree",
            RankKey::AvgInIntensity => "avg_in_intensity",
            RankKey::AvgOutIntensity => "avg_out_intensity",
            RankKey::ConAuthorPercent => "con_author_percent",
            RankKey::Size => "size",
            RankKey::NConAuthors => "n_con_authors",
            RankKey::AvgSubsTargeted => "avg_subs_targeted",
            RankKey::MedianSubsTargeted => "median_subs_targeted",
        }
    }
}

impl fmt::Display for RankKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RankKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "indegree" => RankKey::Indegree,
            "outdegree" => RankKey::Outdegree,
            "weighted_indegree" => RankKey::WeightedIndegree,
            "weighted_outdegree" => RankKey::WeightedOutdegree,
            "avg_in_intensity" => RankKey::AvgInIntensity,
            "avg_out_intensity" => RankKey::AvgOutIntensity,
            "con_author_percent" => RankKey::ConAuthorPercent,
            "size" => RankKey::Size,
            "n_con_authors" => RankKey::NConAuthors,
            "avg_subs_targeted" => RankKey::AvgSubsTargeted,
            "median_subs_targeted" => RankKey::MedianSubsTargeted,
            other => return Err(format!("unknown ranking key `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedRow {
    pub rank: usize,
    pub subreddit: String,
    pub value: f64,
}

/// Top rows by the requested key, descending, ties broken by subreddit name.
/// `min_con_authors` is a reporting filter; 0 disables it.
pub fn rankings(
    metrics: &[NodeMetrics],
    key: RankKey,
    top_n: usize,
    min_con_authors: u64,
) -> Vec<RankedRow> {
    let mut rows: Vec<&NodeMetrics> = metrics
        .iter()
        .filter(|m| m.n_con_authors >= min_con_authors)
        .collect();
    rows.sort_by(|a, b| {
        key.value(b)
            .total_cmp(&key.value(a))
            .then_with(|| a.subreddit.cmp(&b.subreddit))
    });
    rows.into_iter()
        .take(top_n)
        .enumerate()
        .map(|(i, m)| RankedRow {
            rank: i + 1,
            subreddit: m.subreddit.clone(),
            value: key.value(m),
        })
        .collect()
}
