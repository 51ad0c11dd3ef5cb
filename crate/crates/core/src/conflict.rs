//! Candidate conflict edges between subreddit pairs.
//!
//! For an ordered pair (A, B), k counts the controversial authors with a
//! social home in A and an anti-social home in B. A pair produces candidates
//! only when the two directed counts sum to at least `min_pair_authors`, and
//! only directions with k > 0 are emitted. Weights are normalized by the
//! number of common authors so subreddit size does not dominate.

use std::collections::{BTreeMap, BTreeSet};

use crate::profiles::ControversialAuthor;
use crate::stats::StatsView;

/// A directed candidate edge before significance filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictEdgeCandidate {
    pub source: String,
    pub target: String,
    pub k: u64,
    pub n_common: u64,
    /// `k / n_common`, in (0, 1].
    pub weight: f64,
    /// The k forward authors, kept for provenance and co-conflict reuse.
    pub author_set: BTreeSet<String>,
}

/// Qualified authors with strictly more than `min_sub_comments` comments in
/// both subreddits at the view's scope.
pub fn common_authors(
    stats: &StatsView<'_>,
    sub_a: &str,
    sub_b: &str,
    qualified: &BTreeSet<String>,
    min_sub_comments: u64,
) -> BTreeSet<String> {
    stats
        .sub_entries(sub_a)
        .filter(|(_, c)| c.total() > min_sub_comments)
        .filter(|(author, _)| qualified.contains(*author))
        .filter(|(author, _)| stats.counts(author, sub_b).total() > min_sub_comments)
        .map(|(author, _)| author.to_string())
        .collect()
}

/// Build all candidate edges from the controversial-author home assignments.
pub fn candidate_edges(
    controversial: &[ControversialAuthor],
    stats: &StatsView<'_>,
    qualified: &BTreeSet<String>,
    min_pair_authors: u64,
    min_sub_comments: u64,
) -> Vec<ConflictEdgeCandidate> {
    // Directed forward-author sets, keyed (source, target).
    let mut forward: BTreeMap<(&str, &str), BTreeSet<&str>> = BTreeMap::new();
    for author in controversial {
        for social in &author.social_homes {
            for anti in &author.antisocial_homes {
                forward
                    .entry((social.as_str(), anti.as_str()))
                    .or_default()
                    .insert(author.author.as_str());
            }
        }
    }

    // Pair admission is evaluated on unordered pairs.
    let mut pairs: BTreeSet<(&str, &str)> = BTreeSet::new();
    for &(a, b) in forward.keys() {
        pairs.insert(if a < b { (a, b) } else { (b, a) });
    }

    let mut out = Vec::new();
    for (a, b) in pairs {
        let empty = BTreeSet::new();
        let k_ab = forward.get(&(a, b)).unwrap_or(&empty);
        let k_ba = forward.get(&(b, a)).unwrap_or(&empty);
        if (k_ab.len() + k_ba.len()) as u64 >= min_pair_authors {
            let common = common_authors(stats, a, b, qualified, min_sub_comments);
            for (source, target, authors) in [(a, b, k_ab), (b, a, k_ba)] {
                let k = authors.len() as u64;
                if k == 0 {
                    continue;
                }
                // A forward author has significant presence in both endpoints
                // and is qualified, so the commons can never be empty here.
                assert!(
                    common.len() as u64 >= k,
                    "common authors ({}) below k ({k}) for {source}->{target}",
                    common.len()
                );
                out.push(ConflictEdgeCandidate {
                    source: source.to_string(),
                    target: target.to_string(),
                    k,
                    n_common: common.len() as u64,
                    weight: k as f64 / common.len() as f64,
                    author_set: authors.iter().map(|s| s.to_string()).collect(),
                });
            }
        }
    }
    out.sort_by(|x, y| (&x.source, &x.target).cmp(&(&y.source, &y.target)));
    out
}
