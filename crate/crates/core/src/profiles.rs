//! Author qualification, social/anti-social home classification, and
//! controversial-author identification.
//!
//! A subreddit is an author's social home when, over the scope of the view,
//! the author has significant presence there (strictly more than
//! `min_sub_comments` comments) and strictly more upvoted than downvoted
//! comments; anti-social when downvoted comments strictly dominate. Ties are
//! neither. Excluded (default) subreddits never become homes.

use std::collections::BTreeSet;

use crate::stats::{StatsTable, StatsView};

/// Per-author home sets. The two sets are disjoint because classification
/// compares strict majorities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomeAssignment {
    pub author: String,
    pub social_homes: BTreeSet<String>,
    pub antisocial_homes: BTreeSet<String>,
}

impl HomeAssignment {
    pub fn is_controversial(&self) -> bool {
        !self.social_homes.is_empty() && !self.antisocial_homes.is_empty()
    }
}

/// An author with at least one social and one anti-social home.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControversialAuthor {
    pub author: String,
    pub social_homes: BTreeSet<String>,
    pub antisocial_homes: BTreeSet<String>,
}

/// Authors whose total yearly comment count, across all subreddits including
/// excluded defaults, strictly exceeds `min_total`.
pub fn qualified_authors(
    table: &StatsTable,
    min_total: u64,
    blocklist: &BTreeSet<String>,
) -> BTreeSet<String> {
    table
        .authors()
        .filter(|a| !blocklist.contains(*a))
        .filter(|a| table.yearly_total(a) > min_total)
        .map(str::to_string)
        .collect()
}

/// Classify one author's homes over the view's scope.
pub fn classify_homes(
    stats: &StatsView<'_>,
    author: &str,
    min_sub_comments: u64,
    excluded: &BTreeSet<String>,
) -> HomeAssignment {
    let mut social_homes = BTreeSet::new();
    let mut antisocial_homes = BTreeSet::new();
    for (sub, counts) in stats.author_entries(author) {
        if counts.total() <= min_sub_comments || excluded.contains(sub) {
            continue;
        }
        if counts.pos > counts.neg {
            social_homes.insert(sub.to_string());
        } else if counts.neg > counts.pos {
            antisocial_homes.insert(sub.to_string());
        }
    }
    HomeAssignment {
        author: author.to_string(),
        social_homes,
        antisocial_homes,
    }
}

/// Homes for every qualified author, ordered by author name.
pub fn classify_all_homes(
    stats: &StatsView<'_>,
    qualified: &BTreeSet<String>,
    min_sub_comments: u64,
    excluded: &BTreeSet<String>,
) -> Vec<HomeAssignment> {
    qualified
        .iter()
        .map(|a| classify_homes(stats, a, min_sub_comments, excluded))
        .collect()
}

/// Authors with at least one social and one anti-social home.
pub fn controversial_authors(assignments: &[HomeAssignment]) -> Vec<ControversialAuthor> {
    assignments
        .iter()
        .filter(|h| h.is_controversial())
        .map(|h| ControversialAuthor {
            author: h.author.clone(),
            social_homes: h.social_homes.clone(),
            antisocial_homes: h.antisocial_homes.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AuthorSubredditStat, PolarityCounts};

    fn row(author: &str, sub: &str, month: u8, pos: u64, neg: u64, neu: u64) -> AuthorSubredditStat {
        AuthorSubredditStat {
            author: author.into(),
            subreddit: sub.into(),
            month,
            counts: PolarityCounts { pos, neg, neu },
        }
    }

    fn no_excluded() -> BTreeSet<String> {
        BTreeSet::new()
    }

    #[test]
    fn qualification_is_strict() {
        let table = StatsTable::from_rows(&[
            row("at_threshold", "s1", 1, 100, 0, 0),
            row("over", "s1", 1, 101, 0, 0),
        ]);
        let q = qualified_authors(&table, 100, &BTreeSet::new());
        assert!(q.contains("over"));
        assert!(!q.contains("at_threshold"));
    }

    #[test]
    fn qualification_counts_all_subreddits() {
        // 60 in a default sub plus 41 elsewhere crosses the 100 threshold.
        let table = StatsTable::from_rows(&[
            row("u1", "AskReddit", 1, 60, 0, 0),
            row("u1", "s1", 1, 41, 0, 0),
        ]);
        let q = qualified_authors(&table, 100, &BTreeSet::new());
        assert!(q.contains("u1"));
    }

    #[test]
    fn blocklisted_author_never_qualifies() {
        let table = StatsTable::from_rows(&[row("bot", "s1", 1, 500, 0, 0)]);
        let block: BTreeSet<String> = ["bot".to_string()].into();
        assert!(qualified_authors(&table, 100, &block).is_empty());
    }

    #[test]
    fn majority_rule_classifies_homes() {
        let table = StatsTable::from_rows(&[
            row("u1", "s1", 1, 8, 3, 1),  // 12 comments, positive majority
            row("u1", "s2", 1, 5, 5, 1),  // 11 comments, tie
            row("u1", "s3", 1, 4, 5, 1),  // 10 comments, below threshold
            row("u1", "s4", 1, 2, 9, 1),  // 12 comments, negative majority
        ]);
        let v = table.year_view();
        let h = classify_homes(&v, "u1", 10, &no_excluded());
        assert!(h.social_homes.contains("s1"));
        assert!(!h.social_homes.contains("s2") && !h.antisocial_homes.contains("s2"));
        assert!(!h.social_homes.contains("s3") && !h.antisocial_homes.contains("s3"));
        assert!(h.antisocial_homes.contains("s4"));
        assert!(h.social_homes.is_disjoint(&h.antisocial_homes));
    }

    #[test]
    fn excluded_subreddits_never_become_homes() {
        let table = StatsTable::from_rows(&[row("u1", "AskReddit", 1, 50, 1, 0)]);
        let v = table.year_view();
        let excluded: BTreeSet<String> = ["AskReddit".to_string()].into();
        let h = classify_homes(&v, "u1", 10, &excluded);
        assert!(h.social_homes.is_empty() && h.antisocial_homes.is_empty());
    }

    #[test]
    fn controversial_needs_both_kinds() {
        let table = StatsTable::from_rows(&[
            row("social_only", "s1", 1, 20, 0, 0),
            row("both", "s1", 1, 20, 0, 0),
            row("both", "s2", 1, 0, 20, 0),
        ]);
        let v = table.year_view();
        let assignments: Vec<_> = ["both", "social_only"]
            .iter()
            .map(|a| classify_homes(&v, a, 10, &no_excluded()))
            .collect();
        let con = controversial_authors(&assignments);
        assert_eq!(con.len(), 1);
        assert_eq!(con[0].author, "both");
    }

    #[test]
    fn raising_thresholds_never_adds_controversial_authors() {
        // Mixed synthetic counts; verify shrinkage direction at several
        // threshold pairs.
        let mut rows = Vec::new();
        for i in 0..40u64 {
            let a = format!("u{i:02}");
            rows.push(row(&a, "s1", 1, 8 + i % 9, 2, 1));
            rows.push(row(&a, "s2", 1, 2, 6 + i % 7, 1));
            rows.push(row(&a, "s3", 1, 30 + i, 0, 0));
        }
        let table = StatsTable::from_rows(&rows);
        let v = table.year_view();
        let con_at = |min_total: u64, min_sub: u64| -> BTreeSet<String> {
            let q = qualified_authors(&table, min_total, &BTreeSet::new());
            let assignments = classify_all_homes(&v, &q, min_sub, &no_excluded());
            controversial_authors(&assignments)
                .into_iter()
                .map(|c| c.author)
                .collect()
        };
        let base = con_at(40, 10);
        assert!(con_at(60, 10).is_subset(&base));
        assert!(con_at(40, 14).is_subset(&base));
        assert!(base.is_subset(&con_at(40, 6)));
        assert!(!base.is_empty());
    }
}
