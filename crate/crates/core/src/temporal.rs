//! Monthly conflict graphs over the yearly cohort, and conflict-focus
//! dynamics (top-target tracks, change counts, monthly rank tables).
//!
//! Monthly graphs reuse the yearly cohort: the same controversial-author set
//! and the same node set as the yearly conflict graph. Within a month, homes
//! are either re-classified from that month's comments alone (default) or
//! carried over from the yearly assignment with a monthly activity
//! requirement; both use the `monthly_presence` threshold instead of the
//! yearly significant-presence threshold, which would starve monthly graphs.

use std::collections::BTreeSet;

use crate::config::{MonthlyHomeMode, PipelineConfig};
use crate::conflict::candidate_edges;
use crate::error::Result;
use crate::graph::ConflictGraph;
use crate::metrics::{node_metrics, rankings, NodeMetrics, RankKey, RankedRow};
use crate::profiles::{classify_homes, ControversialAuthor};
use crate::significance::{filter_graph, EdgeTestResult, TestParams};
use crate::stats::{Scope, StatsTable};

/// The yearly anchors shared by every monthly graph.
#[derive(Debug, Clone)]
pub struct Cohort {
    pub controversial: Vec<ControversialAuthor>,
    pub nodes: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct MonthlyGraph {
    pub month: u8,
    pub graph: ConflictGraph,
    /// Full test report for the month's candidates.
    pub results: Vec<EdgeTestResult>,
    /// Cohort authors that were controversial within the month.
    pub controversial: Vec<ControversialAuthor>,
}

#[derive(Debug, Clone)]
pub struct MonthlySeries {
    pub months: Vec<MonthlyGraph>,
}

/// Build one conflict graph per month in the window, restricted to the
/// yearly cohort.
pub fn monthly_graphs(
    table: &StatsTable,
    cohort: &Cohort,
    qualified: &BTreeSet<String>,
    cfg: &PipelineConfig,
) -> Result<MonthlySeries> {
    let excluded = cfg.excluded_set();
    let mut months = Vec::new();
    for month in cfg.month_start..=cfg.month_end {
        let view = table.view(Scope::Month(month));

        let controversial: Vec<ControversialAuthor> = cohort
            .controversial
            .iter()
            .filter_map(|yearly| {
                let (social, anti) = match cfg.monthly_home_mode {
                    MonthlyHomeMode::Reclassify => {
                        let homes = classify_homes(
                            &view,
                            &yearly.author,
                            cfg.monthly_presence,
                            &excluded,
                        );
                        (homes.social_homes, homes.antisocial_homes)
                    }
                    MonthlyHomeMode::Yearly => {
                        let active = |sub: &String| {
                            view.counts(&yearly.author, sub).total() > cfg.monthly_presence
                        };
                        (
                            yearly.social_homes.iter().filter(|s| active(s)).cloned().collect(),
                            yearly
                                .antisocial_homes
                                .iter()
                                .filter(|s| active(s))
                                .cloned()
                                .collect(),
                        )
                    }
                };
                if social.is_empty() || anti.is_empty() {
                    return None;
                }
                Some(ControversialAuthor {
                    author: yearly.author.clone(),
                    social_homes: social,
                    antisocial_homes: anti,
                })
            })
            .collect();

        let candidates: Vec<_> = candidate_edges(
            &controversial,
            &view,
            qualified,
            cfg.min_pair_authors,
            cfg.monthly_presence,
        )
        .into_iter()
        .filter(|c| cohort.nodes.contains(&c.source) && cohort.nodes.contains(&c.target))
        .collect();

        let params = TestParams {
            trials: cfg.mc_trials,
            z_threshold: cfg.z_threshold,
            std_mode: cfg.std_mode,
            seed: cfg.seed,
            stream_tag: month as u64,
        };
        let (graph, results) = filter_graph(
            &candidates,
            &view,
            qualified,
            cfg.monthly_presence,
            &params,
            cfg.threads,
        )?;
        months.push(MonthlyGraph {
            month,
            graph,
            results,
            controversial,
        });
    }
    Ok(MonthlySeries { months })
}

/// Highest-weight outgoing target; ties go to the lexicographically smallest
/// target name.
pub fn top_target(graph: &ConflictGraph, source: &str) -> Option<String> {
    let mut best: Option<(&str, f64)> = None;
    for e in graph.out_edges(source) {
        match best {
            Some((_, w)) if e.weight <= w => {}
            // Edges iterate in target-name order, so on equal weight the
            // earlier (smaller) name sticks.
            _ => best = Some((e.target.as_str(), e.weight)),
        }
    }
    best.map(|(t, _)| t.to_string())
}

/// Number of adjacent month pairs whose top target differs. A month without
/// any target counts as a change against a month with one, but two empty
/// months in a row do not change.
pub fn change_count(track: &[Option<String>]) -> u32 {
    track.windows(2).filter(|w| w[0] != w[1]).count() as u32
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocusTrack {
    pub source: String,
    pub top_targets: Vec<Option<String>>,
    pub change_count: u32,
}

/// Focus tracks for every source that targeted at least `min_targets`
/// distinct subreddits in the yearly graph.
pub fn focus_tracks(
    series: &MonthlySeries,
    yearly: &ConflictGraph,
    min_targets: u64,
) -> Vec<FocusTrack> {
    let mut sources: Vec<&str> = yearly
        .nodes
        .iter()
        .map(String::as_str)
        .filter(|s| {
            yearly
                .out_edges(s)
                .map(|e| e.target.as_str())
                .collect::<BTreeSet<_>>()
                .len() as u64
                >= min_targets
        })
        .collect();
    sources.sort_unstable();
    sources
        .into_iter()
        .map(|source| {
            let top_targets: Vec<Option<String>> = series
                .months
                .iter()
                .map(|m| top_target(&m.graph, source))
                .collect();
            let change_count = change_count(&top_targets);
            FocusTrack {
                source: source.to_string(),
                top_targets,
                change_count,
            }
        })
        .collect()
}

/// Per-month metrics for ranking tables.
pub fn monthly_metrics(
    table: &StatsTable,
    series: &MonthlySeries,
    cfg: &PipelineConfig,
) -> Vec<(u8, Vec<NodeMetrics>)> {
    series
        .months
        .iter()
        .map(|m| {
            let view = table.view(Scope::Month(m.month));
            (
                m.month,
                node_metrics(&m.graph, &m.controversial, &view, cfg.monthly_presence),
            )
        })
        .collect()
}

/// Per-month top-n tables by the requested key.
pub fn monthly_rankings(
    monthly: &[(u8, Vec<NodeMetrics>)],
    key: RankKey,
    top_n: usize,
) -> Vec<(u8, Vec<RankedRow>)> {
    monthly
        .iter()
        .map(|(month, metrics)| (*month, rankings(metrics, key, top_n, 0)))
        .collect()
}

/// Rank of each cohort node per month under the key (1-based), `None` in
/// months where the node has zero value. The data behind rank-over-time
/// plots.
pub fn rank_trajectories(
    monthly: &[(u8, Vec<NodeMetrics>)],
    nodes: &BTreeSet<String>,
    key: RankKey,
) -> Vec<(String, Vec<Option<usize>>)> {
    let per_month: Vec<Vec<RankedRow>> = monthly
        .iter()
        .map(|(_, metrics)| {
            rankings(metrics, key, usize::MAX, 0)
                .into_iter()
                .filter(|r| r.value > 0.0)
                .collect()
        })
        .collect();
    nodes
        .iter()
        .map(|node| {
            let ranks = per_month
                .iter()
                .map(|rows| rows.iter().find(|r| &r.subreddit == node).map(|r| r.rank))
                .collect();
            (node.clone(), ranks)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ConflictEdge;
    use proptest::prelude::*;

    fn edge(s: &str, t: &str, w: f64) -> ConflictEdge {
        ConflictEdge {
            source: s.into(),
            target: t.into(),
            k: 1,
            n_common: 1,
            weight: w,
            z: f64::INFINITY,
            author_set: BTreeSet::new(),
        }
    }

    fn some(s: &str) -> Option<String> {
        Some(s.to_string())
    }

    #[test]
    fn change_count_endpoints() {
        // Same target all year.
        let steady: Vec<Option<String>> = (0..12).map(|_| some("b")).collect();
        assert_eq!(change_count(&steady), 0);

        // Alternating every month.
        let alternating: Vec<Option<String>> = (0..12)
            .map(|i| if i % 2 == 0 { some("b") } else { some("c") })
            .collect();
        assert_eq!(change_count(&alternating), 11);
    }

    #[test]
    fn change_count_none_transitions() {
        // [B, B, None, B, B, B, B, B, B, B, B, B] -> exactly 2 changes.
        let mut track: Vec<Option<String>> = (0..12).map(|_| some("b")).collect();
        track[2] = None;
        assert_eq!(change_count(&track), 2);

        // None <-> None is not a change.
        let empty: Vec<Option<String>> = vec![None; 12];
        assert_eq!(change_count(&empty), 0);
    }

    proptest! {
        #[test]
        fn change_count_matches_adjacent_scan(track in proptest::collection::vec(
            proptest::option::of(0u8..4), 12)
        ) {
            let track: Vec<Option<String>> = track
                .into_iter()
                .map(|o| o.map(|v| format!("t{v}")))
                .collect();
            // Oracle: explicit indexed loop with match on the None cases.
            let mut expected = 0u32;
            for i in 1..track.len() {
                let differs = match (&track[i - 1], &track[i]) {
                    (None, None) => false,
                    (Some(a), Some(b)) => a != b,
                    _ => true,
                };
                if differs {
                    expected += 1;
                }
            }
            let got = change_count(&track);
            prop_assert_eq!(got, expected);
            prop_assert!(got <= 11);
        }
    }

    #[test]
    fn top_target_breaks_ties_lexicographically() {
        let g = ConflictGraph::from_edges(vec![
            edge("a", "zeta", 0.5),
            edge("a", "beta", 0.5),
            edge("a", "mid", 0.2),
        ]);
        assert_eq!(top_target(&g, "a"), some("beta"));
        assert_eq!(top_target(&g, "nobody"), None);
    }

    #[test]
    fn focus_tracks_apply_the_target_floor() {
        let yearly = ConflictGraph::from_edges(vec![
            edge("big", "t1", 0.1),
            edge("big", "t2", 0.1),
            edge("big", "t3", 0.1),
            edge("big", "t4", 0.1),
            edge("big", "t5", 0.1),
            edge("small", "t1", 0.9),
        ]);
        let months = (1..=12)
            .map(|m| MonthlyGraph {
                month: m,
                graph: ConflictGraph::from_edges(vec![edge("big", "t1", 0.3)]),
                results: Vec::new(),
                controversial: Vec::new(),
            })
            .collect();
        let series = MonthlySeries { months };
        let tracks = focus_tracks(&series, &yearly, 5);
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].source, "big");
        assert_eq!(tracks[0].change_count, 0);
    }
}
