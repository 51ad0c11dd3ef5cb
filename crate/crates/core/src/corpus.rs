//! Comment-archive ingestion: record parsing, vote-polarity classification,
//! and single-pass aggregation into per-(author, subreddit, month) counts.
//!
//! The input is newline-delimited records, one JSON object per line with
//! fields `author`, `subreddit`, `score`, `created_utc` and an optional `id`.
//! Unknown fields are ignored so raw archive dumps can be fed directly.
//! Gzip-compressed files are transparently decompressed.
//!
//! Aggregation either runs fully single-threaded (the reference path used by
//! the oracles) or sharded across worker threads; both produce bit-identical
//! output because group counts are integer sums and the final collection is
//! sorted by key.

use std::borrow::Cow;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use flate2::read::MultiGzDecoder;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};

/// Aggregate polarity of one comment's votes. `score` encodes
/// upvotes minus downvotes, so a negative score means downvotes exceeded
/// upvotes in aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

/// Sign rule partitioning the score axis: positive scores are upvoted
/// comments, negative scores downvoted, zero neutral.
pub fn classify_polarity(score: i64) -> Polarity {
    match score {
        s if s > 0 => Polarity::Positive,
        s if s < 0 => Polarity::Negative,
        _ => Polarity::Neutral,
    }
}

/// One validated comment event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentRecord {
    pub author: String,
    pub subreddit: String,
    pub score: i64,
    /// UTC epoch seconds.
    pub created_utc: i64,
    pub comment_id: Option<String>,
}

/// Why a line was skipped rather than ingested. Skips are counted, never
/// silently dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    DeletedAuthor,
    MalformedField,
    OutOfWindow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseOutcome {
    Record(CommentRecord),
    Skip(SkipReason),
}

/// The analysis window records must fall in (year plus inclusive month range,
/// both UTC). Month boundaries are precomputed so per-record attribution is a
/// 13-entry search instead of a calendar decode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisWindow {
    pub year: i32,
    pub month_start: u8,
    pub month_end: u8,
    /// bounds[i] is the first epoch second of month i+1; bounds[12] opens the
    /// next year.
    bounds: [i64; 13],
}

impl AnalysisWindow {
    pub fn new(year: i32, month_start: u8, month_end: u8) -> Self {
        let mut bounds = [0i64; 13];
        for (i, slot) in bounds.iter_mut().enumerate() {
            let (y, m) = if i == 12 { (year + 1, 1) } else { (year, i as u32 + 1) };
            *slot = NaiveDate::from_ymd_opt(y, m, 1)
                .expect("valid month")
                .and_hms_opt(0, 0, 0)
                .unwrap()
                .and_utc()
                .timestamp();
        }
        AnalysisWindow {
            year,
            month_start,
            month_end,
            bounds,
        }
    }

    pub fn from_config(cfg: &PipelineConfig) -> Self {
        AnalysisWindow::new(cfg.year, cfg.month_start, cfg.month_end)
    }

    /// Month number (1-12) when the timestamp falls inside the window.
    pub fn month_of(&self, created_utc: i64) -> Option<u8> {
        if created_utc < self.bounds[0] || created_utc >= self.bounds[12] {
            return None;
        }
        let month = self.bounds.partition_point(|&b| b <= created_utc) as u8;
        (self.month_start..=self.month_end)
            .contains(&month)
            .then_some(month)
    }
}

/// Per-(author, subreddit, month) polarity counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PolarityCounts {
    pub pos: u64,
    pub neg: u64,
    pub neu: u64,
}

impl PolarityCounts {
    pub fn add(&mut self, polarity: Polarity) {
        match polarity {
            Polarity::Positive => self.pos += 1,
            Polarity::Negative => self.neg += 1,
            Polarity::Neutral => self.neu += 1,
        }
    }

    pub fn merge(&mut self, other: PolarityCounts) {
        self.pos += other.pos;
        self.neg += other.neg;
        self.neu += other.neu;
    }

    pub fn total(&self) -> u64 {
        self.pos + self.neg + self.neu
    }
}

/// One row of the canonical aggregate artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorSubredditStat {
    pub author: String,
    pub subreddit: String,
    pub month: u8,
    pub counts: PolarityCounts,
}

/// Skip counters per category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipCounts {
    pub deleted_author: u64,
    pub malformed: u64,
    pub out_of_window: u64,
}

impl SkipCounts {
    pub fn add(&mut self, reason: SkipReason) {
        match reason {
            SkipReason::DeletedAuthor => self.deleted_author += 1,
            SkipReason::MalformedField => self.malformed += 1,
            SkipReason::OutOfWindow => self.out_of_window += 1,
        }
    }

    pub fn merge(&mut self, other: SkipCounts) {
        self.deleted_author += other.deleted_author;
        self.malformed += other.malformed;
        self.out_of_window += other.out_of_window;
    }

    pub fn total(&self) -> u64 {
        self.deleted_author + self.malformed + self.out_of_window
    }
}

/// Ingestion accounting, written alongside the aggregate artifact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    /// Non-blank input lines seen.
    pub lines: u64,
    /// Lines that became records.
    pub records: u64,
    pub skips: SkipCounts,
}

impl IngestReport {
    /// Every line is either aggregated or counted as a skip.
    pub fn conserved(&self) -> bool {
        self.records + self.skips.total() == self.lines
    }
}

#[derive(Deserialize)]
struct RawRecord<'a> {
    #[serde(borrow)]
    author: Cow<'a, str>,
    #[serde(borrow)]
    subreddit: Cow<'a, str>,
    score: i64,
    created_utc: i64,
    #[serde(default, borrow)]
    id: Option<Cow<'a, str>>,
}

enum RawOutcome<'a> {
    Record {
        raw: RawRecord<'a>,
        month: u8,
        polarity: Polarity,
    },
    Skip(SkipReason),
}

fn parse_raw<'a>(
    line: &'a [u8],
    window: &AnalysisWindow,
    sentinels: &HashSet<String>,
) -> RawOutcome<'a> {
    let raw: RawRecord<'a> = match serde_json::from_slice(line) {
        Ok(r) => r,
        Err(_) => return RawOutcome::Skip(SkipReason::MalformedField),
    };
    if raw.author.is_empty() || raw.subreddit.is_empty() {
        return RawOutcome::Skip(SkipReason::MalformedField);
    }
    if !sentinels.is_empty() && sentinels.contains(raw.author.as_ref()) {
        return RawOutcome::Skip(SkipReason::DeletedAuthor);
    }
    let Some(month) = window.month_of(raw.created_utc) else {
        return RawOutcome::Skip(SkipReason::OutOfWindow);
    };
    let polarity = classify_polarity(raw.score);
    RawOutcome::Record { raw, month, polarity }
}

/// Parse one line into a validated record or a categorized skip.
pub fn parse_record(
    line: &[u8],
    window: &AnalysisWindow,
    sentinels: &HashSet<String>,
) -> ParseOutcome {
    match parse_raw(line, window, sentinels) {
        RawOutcome::Record { raw, .. } => ParseOutcome::Record(CommentRecord {
            author: raw.author.into_owned(),
            subreddit: raw.subreddit.into_owned(),
            score: raw.score,
            created_utc: raw.created_utc,
            comment_id: raw.id.map(Cow::into_owned),
        }),
        RawOutcome::Skip(reason) => ParseOutcome::Skip(reason),
    }
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

#[derive(Default)]
struct Interner {
    ids: FxHashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }
}

type GroupKey = (u32, u32, u8);

/// Streaming group-by counter with an optional spill-to-disk budget.
///
/// When the number of in-memory groups crosses the budget, the current map is
/// drained to a sorted run file; `finish` merges all runs (plus the residual
/// map) by key, summing counts, so the result is identical to the unbounded
/// in-memory aggregation.
pub struct Aggregator {
    authors: Interner,
    subreddits: Interner,
    groups: FxHashMap<GroupKey, PolarityCounts>,
    budget: Option<usize>,
    runs: Vec<PathBuf>,
    spill_dir: Option<tempfile::TempDir>,
}

impl Aggregator {
    pub fn new(budget: Option<usize>) -> Self {
        Aggregator {
            authors: Interner::default(),
            subreddits: Interner::default(),
            groups: FxHashMap::default(),
            budget,
            runs: Vec::new(),
            spill_dir: None,
        }
    }

    pub fn insert(&mut self, author: &str, subreddit: &str, month: u8, polarity: Polarity) -> Result<()> {
        let key = (
            self.authors.intern(author),
            self.subreddits.intern(subreddit),
            month,
        );
        self.groups.entry(key).or_default().add(polarity);
        if let Some(budget) = self.budget {
            if self.groups.len() >= budget {
                self.spill()?;
            }
        }
        Ok(())
    }

    pub fn merge_counts(&mut self, author: &str, subreddit: &str, month: u8, counts: PolarityCounts) -> Result<()> {
        let key = (
            self.authors.intern(author),
            self.subreddits.intern(subreddit),
            month,
        );
        self.groups.entry(key).or_default().merge(counts);
        if let Some(budget) = self.budget {
            if self.groups.len() >= budget {
                self.spill()?;
            }
        }
        Ok(())
    }

    fn drain_sorted(&mut self) -> Vec<AuthorSubredditStat> {
        // Sort by precomputed name ranks; integer keys beat string
        // comparisons by a wide margin at millions of rows.
        let author_rank = name_ranks(&self.authors.names);
        let sub_rank = name_ranks(&self.subreddits.names);
        let mut keyed: Vec<(GroupKey, PolarityCounts)> = self.groups.drain().collect();
        keyed.sort_unstable_by_key(|&((a, s, m), _)| {
            (author_rank[a as usize], sub_rank[s as usize], m)
        });
        keyed
            .into_iter()
            .map(|((a, s, month), counts)| AuthorSubredditStat {
                author: self.authors.name(a).to_string(),
                subreddit: self.subreddits.name(s).to_string(),
                month,
                counts,
            })
            .collect()
    }

    fn spill(&mut self) -> Result<()> {
        if self.groups.is_empty() {
            return Ok(());
        }
        if self.spill_dir.is_none() {
            self.spill_dir = Some(
                tempfile::tempdir().map_err(|e| Error::io("<spill tempdir>", e))?,
            );
        }
        let dir = self.spill_dir.as_ref().unwrap().path();
        let path = dir.join(format!("run-{:05}.csv", self.runs.len()));
        let rows = self.drain_sorted();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::Writer::from_writer(file);
        for row in &rows {
            write_stat_row(&mut w, row).map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.runs.push(path);
        Ok(())
    }

    /// Close the aggregation and return the rows sorted by
    /// (author, subreddit, month).
    pub fn finish(mut self) -> Result<Vec<AuthorSubredditStat>> {
        if self.runs.is_empty() {
            return Ok(self.drain_sorted());
        }
        self.spill()?;
        merge_runs(&self.runs)
    }
}

/// id -> rank under name ordering.
fn name_ranks(names: &[String]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..names.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| names[a as usize].cmp(&names[b as usize]));
    let mut ranks = vec![0u32; names.len()];
    for (rank, &id) in order.iter().enumerate() {
        ranks[id as usize] = rank as u32;
    }
    ranks
}

fn write_stat_row<W: Write>(w: &mut csv::Writer<W>, row: &AuthorSubredditStat) -> std::io::Result<()> {
    w.write_record([
        row.author.as_str(),
        row.subreddit.as_str(),
        &row.month.to_string(),
        &row.counts.pos.to_string(),
        &row.counts.neg.to_string(),
        &row.counts.neu.to_string(),
    ])?;
    Ok(())
}

fn parse_stat_record(rec: &csv::StringRecord, path: &Path, line: u64) -> Result<AuthorSubredditStat> {
    let field = |i: usize| -> Result<&str> {
        rec.get(i).ok_or_else(|| Error::Artifact {
            path: path.to_path_buf(),
            record: line,
            message: format!("expected 6 fields, got {}", rec.len()),
        })
    };
    let num = |i: usize| -> Result<u64> {
        field(i)?.parse().map_err(|e| Error::Artifact {
            path: path.to_path_buf(),
            record: line,
            message: format!("field {i}: {e}"),
        })
    };
    let month = num(2)? as u8;
    if !(1..=12).contains(&month) {
        return Err(Error::Artifact {
            path: path.to_path_buf(),
            record: line,
            message: format!("month {month} out of range"),
        });
    }
    Ok(AuthorSubredditStat {
        author: field(0)?.to_string(),
        subreddit: field(1)?.to_string(),
        month,
        counts: PolarityCounts {
            pos: num(3)?,
            neg: num(4)?,
            neu: num(5)?,
        },
    })
}

struct RunCursor {
    reader: csv::StringRecordsIntoIter<File>,
    head: Option<AuthorSubredditStat>,
    path: PathBuf,
    line: u64,
}

impl RunCursor {
    fn advance(&mut self) -> Result<()> {
        self.head = match self.reader.next() {
            None => None,
            Some(rec) => {
                let rec = rec.map_err(|e| Error::Artifact {
                    path: self.path.clone(),
                    record: self.line,
                    message: e.to_string(),
                })?;
                self.line += 1;
                Some(parse_stat_record(&rec, &self.path, self.line)?)
            }
        };
        Ok(())
    }
}

fn merge_runs(runs: &[PathBuf]) -> Result<Vec<AuthorSubredditStat>> {
    let mut cursors = Vec::with_capacity(runs.len());
    for path in runs {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(file)
            .into_records();
        let mut cursor = RunCursor {
            reader,
            head: None,
            path: path.clone(),
            line: 0,
        };
        cursor.advance()?;
        cursors.push(cursor);
    }

    // Min-heap over (key, run index); equal keys across runs get summed.
    let mut heap: BinaryHeap<std::cmp::Reverse<(String, String, u8, usize)>> = BinaryHeap::new();
    for (i, c) in cursors.iter().enumerate() {
        if let Some(row) = &c.head {
            heap.push(std::cmp::Reverse((
                row.author.clone(),
                row.subreddit.clone(),
                row.month,
                i,
            )));
        }
    }

    let mut out: Vec<AuthorSubredditStat> = Vec::new();
    while let Some(std::cmp::Reverse((_, _, _, i))) = heap.pop() {
        let row = cursors[i].head.take().expect("cursor head present");
        match out.last_mut() {
            Some(last)
                if last.author == row.author
                    && last.subreddit == row.subreddit
                    && last.month == row.month =>
            {
                last.counts.merge(row.counts);
            }
            _ => out.push(row),
        }
        cursors[i].advance()?;
        if let Some(next) = &cursors[i].head {
            heap.push(std::cmp::Reverse((
                next.author.clone(),
                next.subreddit.clone(),
                next.month,
                i,
            )));
        }
    }
    Ok(out)
}

/// Aggregate an already-parsed record stream. Records outside the window are
/// ignored (the parser is responsible for window filtering).
pub fn aggregate(
    records: impl IntoIterator<Item = CommentRecord>,
    window: &AnalysisWindow,
) -> Result<Vec<AuthorSubredditStat>> {
    let mut agg = Aggregator::new(None);
    for rec in records {
        if let Some(month) = window.month_of(rec.created_utc) {
            agg.insert(&rec.author, &rec.subreddit, month, classify_polarity(rec.score))?;
        }
    }
    agg.finish()
}

// ---------------------------------------------------------------------------
// Chunked stream reading
// ---------------------------------------------------------------------------

const CHUNK_BYTES: usize = 16 << 20;

/// A newline-aligned slab of the input stream.
struct Chunk {
    data: Vec<u8>,
    first_line: u64,
    first_offset: u64,
}

struct ChunkReader<R: Read> {
    inner: R,
    carry: Vec<u8>,
    line: u64,
    offset: u64,
    done: bool,
    path: PathBuf,
}

impl<R: Read> ChunkReader<R> {
    fn new(inner: R, path: PathBuf) -> Self {
        ChunkReader {
            inner,
            carry: Vec::new(),
            line: 1,
            offset: 0,
            done: false,
            path,
        }
    }
}

impl<R: Read> Iterator for ChunkReader<R> {
    type Item = Result<Chunk>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let first_line = self.line;
        let first_offset = self.offset;
        let mut buf = std::mem::take(&mut self.carry);
        let want = CHUNK_BYTES as u64;
        match (&mut self.inner).take(want).read_to_end(&mut buf) {
            Ok(n) => {
                if (n as u64) < want {
                    self.done = true;
                }
            }
            Err(e) => {
                self.done = true;
                return Some(Err(Error::CorruptStream {
                    line: self.line,
                    offset: self.offset,
                    message: format!("{}: {e}", self.path.display()),
                }));
            }
        }
        if buf.is_empty() {
            return None;
        }
        if !self.done {
            // Cut at the last newline; the tail carries into the next chunk.
            match buf.iter().rposition(|&b| b == b'\n') {
                Some(pos) => {
                    self.carry = buf.split_off(pos + 1);
                }
                None => {
                    // No newline in the whole chunk; keep growing via carry.
                    self.carry = buf;
                    return self.next();
                }
            }
        }
        let newlines = buf.iter().filter(|&&b| b == b'\n').count() as u64;
        self.line += newlines;
        self.offset += buf.len() as u64;
        Some(Ok(Chunk {
            data: buf,
            first_line,
            first_offset,
        }))
    }
}

/// Open an archive for streaming; `.gz` paths are decompressed on the fly.
pub fn open_input(path: &Path) -> Result<Box<dyn Read + Send>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|ext| ext == "gz") {
        Ok(Box::new(MultiGzDecoder::new(BufReader::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// A chunk's local aggregate. Names are interned chunk-locally so parsing
/// allocates only on first sight of a name within the chunk.
struct ChunkResult {
    authors: Interner,
    subs: Interner,
    groups: FxHashMap<GroupKey, PolarityCounts>,
    skips: SkipCounts,
    lines: u64,
}

fn parse_chunk(chunk: &Chunk, window: &AnalysisWindow, sentinels: &HashSet<String>) -> ChunkResult {
    let mut res = ChunkResult {
        authors: Interner::default(),
        subs: Interner::default(),
        groups: FxHashMap::default(),
        skips: SkipCounts::default(),
        lines: 0,
    };
    for line in chunk.data.split(|&b| b == b'\n') {
        if line.iter().all(|b| b.is_ascii_whitespace()) {
            continue;
        }
        res.lines += 1;
        match parse_raw(line, window, sentinels) {
            RawOutcome::Record { raw, month, polarity } => {
                let key = (res.authors.intern(&raw.author), res.subs.intern(&raw.subreddit), month);
                res.groups.entry(key).or_default().add(polarity);
            }
            RawOutcome::Skip(reason) => res.skips.add(reason),
        }
    }
    res
}

/// Parse and aggregate a whole archive.
///
/// `threads == 1` runs the fully sequential reference path. Otherwise a
/// reader thread feeds newline-aligned chunks to `threads` workers; each
/// worker parses a chunk into a local aggregate and folds it into the shared
/// aggregator under a lock, so parsing and merging overlap and stay
/// work-conserving. The result is identical either way: group sums are
/// commutative integers and the output is sorted by key.
pub fn ingest(
    path: &Path,
    window: &AnalysisWindow,
    sentinels: &HashSet<String>,
    threads: usize,
    budget: Option<usize>,
) -> Result<(Vec<AuthorSubredditStat>, IngestReport)> {
    let reader = open_input(path)?;
    let chunks = ChunkReader::new(reader, path.to_path_buf());

    if threads == 1 {
        let mut agg = Aggregator::new(budget);
        let mut report = IngestReport::default();
        for chunk in chunks {
            let chunk = chunk?;
            for line in chunk.data.split(|&b| b == b'\n') {
                if line.iter().all(|b| b.is_ascii_whitespace()) {
                    continue;
                }
                report.lines += 1;
                match parse_raw(line, window, sentinels) {
                    RawOutcome::Record { raw, month, polarity } => {
                        report.records += 1;
                        agg.insert(&raw.author, &raw.subreddit, month, polarity)?;
                    }
                    RawOutcome::Skip(reason) => report.skips.add(reason),
                }
            }
        }
        let rows = agg.finish()?;
        debug_assert!(report.conserved());
        return Ok((rows, report));
    }

    // More workers than cores just adds switching cost; treat `threads` as a
    // cap, the way thread pools conventionally do.
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let workers = if threads == 0 { cores } else { threads.min(cores) }.max(1);

    // The global aggregation is split into author-hash shards, each behind
    // its own lock, so merging parallelizes alongside parsing. Shards
    // partition the key space, which keeps the union of their rows correct
    // whatever the arrival order.
    let shard_count = (workers * 2).next_power_of_two();
    let shard_budget = budget.map(|b| (b / shard_count).max(1));
    let shards: Vec<std::sync::Mutex<Aggregator>> = (0..shard_count)
        .map(|_| std::sync::Mutex::new(Aggregator::new(shard_budget)))
        .collect();

    let (chunk_tx, chunk_rx) = std::sync::mpsc::sync_channel::<Result<Chunk>>(workers * 2);
    let chunk_rx = std::sync::Arc::new(std::sync::Mutex::new(chunk_rx));
    let report_mx = std::sync::Mutex::new(IngestReport::default());
    let error_mx = std::sync::Mutex::new(None::<Error>);

    std::thread::scope(|scope| {
        scope.spawn(move || {
            for chunk in chunks {
                if chunk_tx.send(chunk).is_err() {
                    break;
                }
            }
        });
        for worker_id in 0..workers {
            let rx = chunk_rx.clone();
            let shards = &shards;
            let report_mx = &report_mx;
            let error_mx = &error_mx;
            scope.spawn(move || {
                let mut local = IngestReport::default();
                // Entry indices of the current chunk, grouped by shard.
                let mut routed: Vec<Vec<(GroupKey, PolarityCounts)>> =
                    vec![Vec::new(); shard_count];
                loop {
                    let next = { rx.lock().expect("chunk queue").recv() };
                    match next {
                        Ok(Ok(chunk)) => {
                            let res = parse_chunk(&chunk, window, sentinels);
                            local.lines += res.lines;
                            local.skips.merge(res.skips);
                            let author_shard: Vec<usize> = res
                                .authors
                                .names
                                .iter()
                                .map(|name| fx_shard(name, shard_count))
                                .collect();
                            for (&key, &counts) in &res.groups {
                                local.records += counts.total();
                                routed[author_shard[key.0 as usize]].push((key, counts));
                            }
                            // Start at a worker-specific shard to avoid
                            // convoying on the same lock.
                            for offset in 0..shard_count {
                                let sid = (worker_id + offset) % shard_count;
                                if routed[sid].is_empty() {
                                    continue;
                                }
                                let mut agg = shards[sid].lock().expect("shard");
                                for &((a, s, month), counts) in &routed[sid] {
                                    if let Err(e) = agg.merge_counts(
                                        res.authors.name(a),
                                        res.subs.name(s),
                                        month,
                                        counts,
                                    ) {
                                        error_mx.lock().expect("error slot").get_or_insert(e);
                                        break;
                                    }
                                }
                                drop(agg);
                                routed[sid].clear();
                            }
                        }
                        Ok(Err(e)) => {
                            error_mx.lock().expect("error slot").get_or_insert(e);
                            break;
                        }
                        Err(_) => break,
                    }
                }
                let mut report = report_mx.lock().expect("report");
                report.lines += local.lines;
                report.records += local.records;
                report.skips.merge(local.skips);
            });
        }
    });

    if let Some(e) = error_mx.into_inner().expect("error slot") {
        return Err(e);
    }
    let report = report_mx.into_inner().expect("report");

    // Shards hold disjoint author sets, so their sorted rows just need one
    // global merge by key.
    let mut rows: Vec<AuthorSubredditStat> = Vec::new();
    for shard in shards {
        let agg = shard.into_inner().expect("shard");
        rows.extend(agg.finish()?);
    }
    rows.sort_unstable_by(|x, y| {
        (&x.author, &x.subreddit, x.month).cmp(&(&y.author, &y.subreddit, y.month))
    });
    debug_assert!(report.conserved());
    Ok((rows, report))
}

/// Stable shard index from an author name.
fn fx_shard(name: &str, shard_count: usize) -> usize {
    use std::hash::{BuildHasher, Hasher};
    let mut h = rustc_hash::FxBuildHasher.build_hasher();
    h.write(name.as_bytes());
    (h.finish() as usize) & (shard_count - 1)
}

pub(crate) fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if threads > 0 {
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))
}

pub fn sentinel_set(cfg: &PipelineConfig) -> HashSet<String> {
    cfg.deleted_author_sentinels.iter().cloned().collect()
}
