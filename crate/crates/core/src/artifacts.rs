//! Canonical on-disk artifacts.
//!
//! Every stage reads the plain sorted text files of earlier stages and
//! writes its own; re-running a stage with unchanged inputs and config
//! produces byte-identical files. Floats are written in Rust's
//! shortest-round-trip form so rereading reproduces the exact value;
//! infinities appear as `inf` / `-inf`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::corpus::{AuthorSubredditStat, IngestReport, PolarityCounts};
use crate::error::{Error, Result};
use crate::metrics::{CorrelationEntry, NodeMetrics, RankedRow};
use crate::profiles::HomeAssignment;
use crate::significance::EdgeTestResult;
use crate::synth::GroundTruth;
use crate::temporal::FocusTrack;

pub const AGGREGATE: &str = "aggregate.csv";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const HOMES: &str = "homes.csv";
pub const CANDIDATES: &str = "candidates.csv";
pub const EDGE_TESTS: &str = "edge_tests.csv";
pub const NODE_METRICS: &str = "node_metrics.csv";
pub const CORRELATIONS: &str = "correlations.csv";
pub const SUMMARY: &str = "summary.json";
pub const COCONFLICT_EDGES: &str = "coconflict_edges.csv";
pub const COMMUNITIES: &str = "communities.csv";
pub const COMMUNITY_REPORT: &str = "community_report.csv";
pub const MONTHLY_DIR: &str = "monthly";
pub const FOCUS_TRACKS: &str = "focus_tracks.csv";
pub const RANK_TARGETED: &str = "rank_targeted.csv";
pub const RANK_INSTIGATING: &str = "rank_instigating.csv";
pub const COMMENTS: &str = "comments.ndjson";
pub const GROUND_TRUTH: &str = "ground_truth.json";

pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, std::num::ParseFloatError> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse(),
    }
}

/// Error unless the artifact exists, naming the stage that produces it.
pub fn require(path: &Path, producer: &'static str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            producer,
        })
    }
}

fn artifact_err(path: &Path, record: u64, message: impl Into<String>) -> Error {
    Error::Artifact {
        path: path.to_path_buf(),
        record,
        message: message.into(),
    }
}

struct CsvWriter {
    inner: csv::Writer<File>,
    path: PathBuf,
}

impl CsvWriter {
    fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut inner = csv::Writer::from_writer(file);
        inner
            .write_record(header)
            .map_err(|e| artifact_err(path, 0, e.to_string()))?;
        Ok(CsvWriter {
            inner,
            path: path.to_path_buf(),
        })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner
            .write_record(fields)
            .map_err(|e| artifact_err(&self.path, 0, e.to_string()))
    }

    fn finish(mut self) -> Result<()> {
        self.inner
            .flush()
            .map_err(|e| Error::io(&self.path, e))
    }
}

struct CsvReader {
    records: csv::StringRecordsIntoIter<File>,
    path: PathBuf,
    line: u64,
}

impl CsvReader {
    fn open(path: &Path, expected_header: &[&str]) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let header = reader
            .headers()
            .map_err(|e| artifact_err(path, 0, e.to_string()))?;
        let got: Vec<&str> = header.iter().collect();
        if got != expected_header {
            return Err(artifact_err(
                path,
                0,
                format!("unexpected header {got:?}, want {expected_header:?}"),
            ));
        }
        Ok(CsvReader {
            records: reader.into_records(),
            path: path.to_path_buf(),
            line: 1,
        })
    }

    fn next_record(&mut self, want_fields: usize) -> Result<Option<csv::StringRecord>> {
        match self.records.next() {
            None => Ok(None),
            Some(rec) => {
                self.line += 1;
                let rec = rec.map_err(|e| artifact_err(&self.path, self.line, e.to_string()))?;
                if rec.len() != want_fields {
                    return Err(artifact_err(
                        &self.path,
                        self.line,
                        format!("expected {want_fields} fields, got {}", rec.len()),
                    ));
                }
                Ok(Some(rec))
            }
        }
    }

    fn f64(&self, rec: &csv::StringRecord, i: usize) -> Result<f64> {
        parse_f64(&rec[i]).map_err(|e| artifact_err(&self.path, self.line, format!("field {i}: {e}")))
    }

    fn u64(&self, rec: &csv::StringRecord, i: usize) -> Result<u64> {
        rec[i]
            .parse()
            .map_err(|e| artifact_err(&self.path, self.line, format!("field {i}: {e}")))
    }
}

// ---------------------------------------------------------------------------
// aggregate.csv
// ---------------------------------------------------------------------------

const AGGREGATE_HEADER: [&str; 6] = ["author", "subreddit", "month", "n_pos", "n_neg", "n_neu"];

pub fn write_aggregate(path: &Path, rows: &[AuthorSubredditStat]) -> Result<()> {
    let mut w = CsvWriter::create(path, &AGGREGATE_HEADER)?;
    for r in rows {
        w.row([
            r.author.as_str(),
            r.subreddit.as_str(),
            &r.month.to_string(),
            &r.counts.pos.to_string(),
            &r.counts.neg.to_string(),
            &r.counts.neu.to_string(),
        ])?;
    }
    w.finish()
}

pub fn read_aggregate(path: &Path) -> Result<Vec<AuthorSubredditStat>> {
    let mut r = CsvReader::open(path, &AGGREGATE_HEADER)?;
    let mut rows = Vec::new();
    while let Some(rec) = r.next_record(6)? {
        let month = r.u64(&rec, 2)? as u8;
        if !(1..=12).contains(&month) {
            return Err(artifact_err(path, r.line, format!("month {month} out of range")));
        }
        rows.push(AuthorSubredditStat {
            author: rec[0].to_string(),
            subreddit: rec[1].to_string(),
            month,
            counts: PolarityCounts {
                pos: r.u64(&rec, 3)?,
                neg: r.u64(&rec, 4)?,
                neu: r.u64(&rec, 5)?,
            },
        });
    }
    Ok(rows)
}

pub fn write_ingest_report(path: &Path, report: &IngestReport) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Internal(format!("serialize ingest report: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// homes.csv
// ---------------------------------------------------------------------------

const HOMES_HEADER: [&str; 3] = ["author", "subreddit", "home_type"];

pub fn write_homes(path: &Path, assignments: &[HomeAssignment]) -> Result<()> {
    let mut w = CsvWriter::create(path, &HOMES_HEADER)?;
    let mut sorted: Vec<&HomeAssignment> = assignments.iter().collect();
    sorted.sort_by(|a, b| a.author.cmp(&b.author));
    for h in sorted {
        // Merge both home kinds in subreddit order within the author.
        let mut rows: Vec<(&str, &str)> = h
            .social_homes
            .iter()
            .map(|s| (s.as_str(), "social"))
            .chain(h.antisocial_homes.iter().map(|s| (s.as_str(), "antisocial")))
            .collect();
        rows.sort();
        for (sub, kind) in rows {
            w.row([h.author.as_str(), sub, kind])?;
        }
    }
    w.finish()
}

pub fn read_homes(path: &Path) -> Result<Vec<HomeAssignment>> {
    let mut r = CsvReader::open(path, &HOMES_HEADER)?;
    let mut map: BTreeMap<String, HomeAssignment> = BTreeMap::new();
    while let Some(rec) = r.next_record(3)? {
        let entry = map
            .entry(rec[0].to_string())
            .or_insert_with(|| HomeAssignment {
                author: rec[0].to_string(),
                social_homes: Default::default(),
                antisocial_homes: Default::default(),
            });
        match &rec[2] {
            "social" => entry.social_homes.insert(rec[1].to_string()),
            "antisocial" => entry.antisocial_homes.insert(rec[1].to_string()),
            other => {
                return Err(artifact_err(path, r.line, format!("unknown home_type {other}")));
            }
        };
    }
    Ok(map.into_values().collect())
}

// ---------------------------------------------------------------------------
// candidates.csv
// ---------------------------------------------------------------------------

const CANDIDATES_HEADER: [&str; 5] = ["source", "target", "k", "n_common", "weight"];

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRow {
    pub source: String,
    pub target: String,
    pub k: u64,
    pub n_common: u64,
    pub weight: f64,
}

pub fn write_candidates(path: &Path, rows: &[crate::conflict::ConflictEdgeCandidate]) -> Result<()> {
    let mut w = CsvWriter::create(path, &CANDIDATES_HEADER)?;
    for c in rows {
        w.row([
            c.source.as_str(),
            c.target.as_str(),
            &c.k.to_string(),
            &c.n_common.to_string(),
            &fmt_f64(c.weight),
        ])?;
    }
    w.finish()
}

pub fn read_candidates(path: &Path) -> Result<Vec<CandidateRow>> {
    let mut r = CsvReader::open(path, &CANDIDATES_HEADER)?;
    let mut rows = Vec::new();
    while let Some(rec) = r.next_record(5)? {
        rows.push(CandidateRow {
            source: rec[0].to_string(),
            target: rec[1].to_string(),
            k: r.u64(&rec, 2)?,
            n_common: r.u64(&rec, 3)?,
            weight: r.f64(&rec, 4)?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// edge_tests.csv
// ---------------------------------------------------------------------------

const EDGE_TESTS_HEADER: [&str; 9] = [
    "source", "target", "k", "n_common", "weight", "null_mean", "null_std", "z", "retained",
];

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTestRow {
    pub source: String,
    pub target: String,
    pub k: u64,
    pub n_common: u64,
    pub weight: f64,
    pub null_mean: f64,
    pub null_std: f64,
    pub z: f64,
    pub retained: bool,
}

fn edge_test_fields(
    source: &str,
    target: &str,
    k: u64,
    n_common: u64,
    weight: f64,
    null_mean: f64,
    null_std: f64,
    z: f64,
    retained: bool,
) -> [String; 9] {
    [
        source.to_string(),
        target.to_string(),
        k.to_string(),
        n_common.to_string(),
        fmt_f64(weight),
        fmt_f64(null_mean),
        fmt_f64(null_std),
        fmt_f64(z),
        retained.to_string(),
    ]
}

pub fn write_edge_tests(path: &Path, results: &[EdgeTestResult]) -> Result<()> {
    let mut w = CsvWriter::create(path, &EDGE_TESTS_HEADER)?;
    for r in results {
        w.row(edge_test_fields(
            &r.candidate.source,
            &r.candidate.target,
            r.candidate.k,
            r.candidate.n_common,
            r.candidate.weight,
            r.null_mean,
            r.null_std,
            r.z,
            r.retained,
        ))?;
    }
    w.finish()
}

/// Monthly edge lists share the schema; only retained rows are written.
pub fn write_retained_edges(path: &Path, results: &[EdgeTestResult]) -> Result<()> {
    let mut w = CsvWriter::create(path, &EDGE_TESTS_HEADER)?;
    for r in results.iter().filter(|r| r.retained) {
        w.row(edge_test_fields(
            &r.candidate.source,
            &r.candidate.target,
            r.candidate.k,
            r.candidate.n_common,
            r.candidate.weight,
            r.null_mean,
            r.null_std,
            r.z,
            r.retained,
        ))?;
    }
    w.finish()
}

pub fn read_edge_tests(path: &Path) -> Result<Vec<EdgeTestRow>> {
    let mut r = CsvReader::open(path, &EDGE_TESTS_HEADER)?;
    let mut rows = Vec::new();
    while let Some(rec) = r.next_record(9)? {
        let retained = match &rec[8] {
            "true" => true,
            "false" => false,
            other => {
                return Err(artifact_err(path, r.line, format!("bad retained flag {other}")));
            }
        };
        rows.push(EdgeTestRow {
            source: rec[0].to_string(),
            target: rec[1].to_string(),
            k: r.u64(&rec, 2)?,
            n_common: r.u64(&rec, 3)?,
            weight: r.f64(&rec, 4)?,
            null_mean: r.f64(&rec, 5)?,
            null_std: r.f64(&rec, 6)?,
            z: r.f64(&rec, 7)?,
            retained,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// metrics artifacts
// ---------------------------------------------------------------------------

const NODE_METRICS_HEADER: [&str; 12] = [
    "subreddit",
    "indegree",
    "outdegree",
    "weighted_indegree",
    "weighted_outdegree",
    "avg_in_intensity",
    "avg_out_intensity",
    "size",
    "n_con_authors",
    "con_author_percent",
    "avg_subs_targeted",
    "median_subs_targeted",
];

pub fn write_node_metrics(path: &Path, metrics: &[NodeMetrics]) -> Result<()> {
    let mut w = CsvWriter::create(path, &NODE_METRICS_HEADER)?;
    for m in metrics {
        w.row([
            m.subreddit.as_str(),
            &m.indegree.to_string(),
            &m.outdegree.to_string(),
            &fmt_f64(m.weighted_indegree),
            &fmt_f64(m.weighted_outdegree),
            &fmt_f64(m.avg_in_intensity),
            &fmt_f64(m.avg_out_intensity),
            &m.size.to_string(),
            &m.n_con_authors.to_string(),
            &fmt_f64(m.con_author_percent),
            &fmt_f64(m.avg_subs_targeted),
            &fmt_f64(m.median_subs_targeted),
        ])?;
    }
    w.finish()
}

pub fn read_node_metrics(path: &Path) -> Result<Vec<NodeMetrics>> {
    let mut r = CsvReader::open(path, &NODE_METRICS_HEADER)?;
    let mut rows = Vec::new();
    while let Some(rec) = r.next_record(12)? {
        rows.push(NodeMetrics {
            subreddit: rec[0].to_string(),
            indegree: r.u64(&rec, 1)?,
            outdegree: r.u64(&rec, 2)?,
            weighted_indegree: r.f64(&rec, 3)?,
            weighted_outdegree: r.f64(&rec, 4)?,
            avg_in_intensity: r.f64(&rec, 5)?,
            avg_out_intensity: r.f64(&rec, 6)?,
            size: r.u64(&rec, 7)?,
            n_con_authors: r.u64(&rec, 8)?,
            con_author_percent: r.f64(&rec, 9)?,
            avg_subs_targeted: r.f64(&rec, 10)?,
            median_subs_targeted: r.f64(&rec, 11)?,
        });
    }
    Ok(rows)
}

pub fn write_correlations(path: &Path, entries: &[CorrelationEntry]) -> Result<()> {
    let mut w = CsvWriter::create(path, &["name", "n", "rho", "p_value"])?;
    for e in entries {
        w.row([
            e.name.as_str(),
            &e.n.to_string(),
            &e.rho.map(fmt_f64).unwrap_or_default(),
            &e.p_value.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.finish()
}

pub fn write_ranking(path: &Path, rows: &[RankedRow]) -> Result<()> {
    let mut w = CsvWriter::create(path, &["rank", "subreddit", "value"])?;
    for r in rows {
        w.row([r.rank.to_string(), r.subreddit.clone(), fmt_f64(r.value)])?;
    }
    w.finish()
}

pub fn write_summary(path: &Path, summary: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::Internal(format!("serialize summary: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// co-conflict artifacts
// ---------------------------------------------------------------------------

const COCONFLICT_HEADER: [&str; 4] = ["a", "b", "weight", "common_count"];

pub fn write_coconflict_edges(path: &Path, edges: &[crate::coconflict::CoConflictEdge]) -> Result<()> {
    let mut w = CsvWriter::create(path, &COCONFLICT_HEADER)?;
    for e in edges {
        w.row([
            e.a.as_str(),
            e.b.as_str(),
            &fmt_f64(e.weight),
            &e.common_count.to_string(),
        ])?;
    }
    w.finish()
}

pub fn read_coconflict_edges(path: &Path) -> Result<Vec<crate::coconflict::CoConflictEdge>> {
    let mut r = CsvReader::open(path, &COCONFLICT_HEADER)?;
    let mut rows = Vec::new();
    while let Some(rec) = r.next_record(4)? {
        rows.push(crate::coconflict::CoConflictEdge {
            a: rec[0].to_string(),
            b: rec[1].to_string(),
            weight: r.f64(&rec, 2)?,
            common_count: r.u64(&rec, 3)?,
        });
    }
    Ok(rows)
}

pub fn write_communities(path: &Path, assignment: &BTreeMap<String, usize>) -> Result<()> {
    let mut w = CsvWriter::create(path, &["subreddit", "community_id"])?;
    for (node, id) in assignment {
        w.row([node.as_str(), &id.to_string()])?;
    }
    w.finish()
}

pub struct CommunityReportRow {
    pub community_id: usize,
    pub size: usize,
    pub mu: f64,
    pub cc: f64,
    pub exemplars: String,
}

pub fn write_community_report(path: &Path, rows: &[CommunityReportRow]) -> Result<()> {
    let mut w = CsvWriter::create(path, &["community_id", "size", "mu", "cc", "exemplars"])?;
    for r in rows {
        w.row([
            r.community_id.to_string(),
            r.size.to_string(),
            fmt_f64(r.mu),
            fmt_f64(r.cc),
            r.exemplars.clone(),
        ])?;
    }
    w.finish()
}

// ---------------------------------------------------------------------------
// temporal artifacts
// ---------------------------------------------------------------------------

pub fn monthly_edges_path(outdir: &Path, month: u8) -> PathBuf {
    outdir.join(MONTHLY_DIR).join(format!("month_{month:02}.csv"))
}

pub fn write_focus_tracks(path: &Path, tracks: &[FocusTrack], months: &[u8]) -> Result<()> {
    let mut header: Vec<String> = vec!["source".to_string()];
    header.extend(months.iter().map(|m| format!("m{m}")));
    header.push("change_count".to_string());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvWriter::create(path, &header_refs)?;
    for t in tracks {
        let mut fields: Vec<String> = vec![t.source.clone()];
        fields.extend(t.top_targets.iter().map(|o| o.clone().unwrap_or_default()));
        fields.push(t.change_count.to_string());
        w.row(fields)?;
    }
    w.finish()
}

pub fn write_rank_trajectories(
    path: &Path,
    rows: &[(String, Vec<Option<usize>>)],
    months: &[u8],
) -> Result<()> {
    let mut header: Vec<String> = vec!["subreddit".to_string()];
    header.extend(months.iter().map(|m| format!("m{m}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvWriter::create(path, &header_refs)?;
    for (node, ranks) in rows {
        let mut fields: Vec<String> = vec![node.clone()];
        fields.extend(ranks.iter().map(|r| r.map(|v| v.to_string()).unwrap_or_default()));
        w.row(fields)?;
    }
    w.finish()
}

// ---------------------------------------------------------------------------
// synth artifacts
// ---------------------------------------------------------------------------

pub fn write_ground_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    let text = serde_json::to_string_pretty(truth)
        .map_err(|e| Error::Internal(format!("serialize ground truth: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| artifact_err(path, 0, e.to_string()))
}

/// Flush-and-sync free plain text write used by a couple of stages.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
