//! Indexed view over the aggregate: per-(author, subreddit) monthly polarity
//! counts, queryable by author or by subreddit, at yearly or single-month
//! scope. All downstream stages read the aggregate through this table.

use rustc_hash::FxHashMap;

use crate::corpus::{AuthorSubredditStat, PolarityCounts};

#[derive(Debug, Clone)]
struct Entry {
    author: u32,
    sub: u32,
    monthly: [PolarityCounts; 12],
    yearly: PolarityCounts,
}

#[derive(Debug, Clone)]
pub struct StatsTable {
    authors: Vec<String>,
    subreddits: Vec<String>,
    author_ids: FxHashMap<String, u32>,
    sub_ids: FxHashMap<String, u32>,
    entries: Vec<Entry>,
    /// Entry indices per author, ordered by subreddit name.
    author_index: Vec<Vec<u32>>,
    /// Entry indices per subreddit, ordered by author name.
    sub_index: Vec<Vec<u32>>,
    /// Yearly comment totals per author across all subreddits.
    yearly_totals: Vec<u64>,
}

/// Count scope: the whole window or one month of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Year,
    Month(u8),
}

impl StatsTable {
    pub fn from_rows(rows: &[AuthorSubredditStat]) -> Self {
        let mut authors: Vec<String> = Vec::new();
        let mut subreddits: Vec<String> = Vec::new();
        let mut author_ids: FxHashMap<String, u32> = FxHashMap::default();
        let mut sub_ids: FxHashMap<String, u32> = FxHashMap::default();
        let mut pair_index: FxHashMap<(u32, u32), u32> = FxHashMap::default();
        let mut entries: Vec<Entry> = Vec::new();

        for row in rows {
            let a = *author_ids.entry(row.author.clone()).or_insert_with(|| {
                authors.push(row.author.clone());
                (authors.len() - 1) as u32
            });
            let s = *sub_ids.entry(row.subreddit.clone()).or_insert_with(|| {
                subreddits.push(row.subreddit.clone());
                (subreddits.len() - 1) as u32
            });
            let idx = *pair_index.entry((a, s)).or_insert_with(|| {
                entries.push(Entry {
                    author: a,
                    sub: s,
                    monthly: [PolarityCounts::default(); 12],
                    yearly: PolarityCounts::default(),
                });
                (entries.len() - 1) as u32
            });
            let entry = &mut entries[idx as usize];
            entry.monthly[(row.month - 1) as usize].merge(row.counts);
            entry.yearly.merge(row.counts);
        }

        let mut author_index = vec![Vec::new(); authors.len()];
        let mut sub_index = vec![Vec::new(); subreddits.len()];
        for (i, e) in entries.iter().enumerate() {
            author_index[e.author as usize].push(i as u32);
            sub_index[e.sub as usize].push(i as u32);
        }
        for list in &mut author_index {
            list.sort_by(|&x, &y| {
                subreddits[entries[x as usize].sub as usize]
                    .cmp(&subreddits[entries[y as usize].sub as usize])
            });
        }
        for list in &mut sub_index {
            list.sort_by(|&x, &y| {
                authors[entries[x as usize].author as usize]
                    .cmp(&authors[entries[y as usize].author as usize])
            });
        }

        let mut yearly_totals = vec![0u64; authors.len()];
        for e in &entries {
            yearly_totals[e.author as usize] += e.yearly.total();
        }

        StatsTable {
            authors,
            subreddits,
            author_ids,
            sub_ids,
            entries,
            author_index,
            sub_index,
            yearly_totals,
        }
    }

    pub fn authors(&self) -> impl Iterator<Item = &str> {
        self.authors.iter().map(String::as_str)
    }

    pub fn subreddits(&self) -> impl Iterator<Item = &str> {
        self.subreddits.iter().map(String::as_str)
    }

    /// Total yearly comments by an author across all subreddits (defaults
    /// included); zero for unknown authors.
    pub fn yearly_total(&self, author: &str) -> u64 {
        self.author_ids
            .get(author)
            .map(|&a| self.yearly_totals[a as usize])
            .unwrap_or(0)
    }

    pub fn view(&self, scope: Scope) -> StatsView<'_> {
        if let Scope::Month(m) = scope {
            assert!((1..=12).contains(&m), "month out of range");
        }
        StatsView { table: self, scope }
    }

    pub fn year_view(&self) -> StatsView<'_> {
        self.view(Scope::Year)
    }

    fn entry_counts(&self, entry: &Entry, scope: Scope) -> PolarityCounts {
        match scope {
            Scope::Year => entry.yearly,
            Scope::Month(m) => entry.monthly[(m - 1) as usize],
        }
    }
}

/// A scope-bound read handle over the table.
#[derive(Clone, Copy)]
pub struct StatsView<'a> {
    table: &'a StatsTable,
    scope: Scope,
}

impl<'a> StatsView<'a> {
    pub fn scope(&self) -> Scope {
        self.scope
    }

    pub fn table(&self) -> &'a StatsTable {
        self.table
    }

    /// Counts for one (author, subreddit) pair; zero when absent.
    pub fn counts(&self, author: &str, subreddit: &str) -> PolarityCounts {
        let (Some(&a), Some(&s)) = (
            self.table.author_ids.get(author),
            self.table.sub_ids.get(subreddit),
        ) else {
            return PolarityCounts::default();
        };
        for &idx in &self.table.author_index[a as usize] {
            let e = &self.table.entries[idx as usize];
            if e.sub == s {
                return self.table.entry_counts(e, self.scope);
            }
        }
        PolarityCounts::default()
    }

    /// (subreddit, counts) pairs for one author, ordered by subreddit name.
    pub fn author_entries(&self, author: &str) -> impl Iterator<Item = (&'a str, PolarityCounts)> + '_ {
        let ids: &[u32] = self
            .table
            .author_ids
            .get(author)
            .map(|&a| self.table.author_index[a as usize].as_slice())
            .unwrap_or(&[]);
        ids.iter().map(move |&idx| {
            let e = &self.table.entries[idx as usize];
            (
                self.table.subreddits[e.sub as usize].as_str(),
                self.table.entry_counts(e, self.scope),
            )
        })
    }

    /// (author, counts) pairs for one subreddit, ordered by author name.
    pub fn sub_entries(&self, subreddit: &str) -> impl Iterator<Item = (&'a str, PolarityCounts)> + '_ {
        let ids: &[u32] = self
            .table
            .sub_ids
            .get(subreddit)
            .map(|&s| self.table.sub_index[s as usize].as_slice())
            .unwrap_or(&[]);
        ids.iter().map(move |&idx| {
            let e = &self.table.entries[idx as usize];
            (
                self.table.authors[e.author as usize].as_str(),
                self.table.entry_counts(e, self.scope),
            )
        })
    }

    /// Scoped comment total for one author across all subreddits.
    pub fn author_total(&self, author: &str) -> u64 {
        self.author_entries(author).map(|(_, c)| c.total()).sum()
    }

    /// Number of distinct authors with strictly more than `presence` comments
    /// in the subreddit at this scope.
    pub fn subreddit_size(&self, subreddit: &str, presence: u64) -> u64 {
        self.sub_entries(subreddit)
            .filter(|(_, c)| c.total() > presence)
            .count() as u64
    }
}
