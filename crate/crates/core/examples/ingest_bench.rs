use std::collections::HashSet;
use std::io::Write;
use std::time::Instant;

use subconflict::corpus::{self, AnalysisWindow};

fn write_perf_corpus(path: &std::path::Path, records: u64) {
    let file = std::fs::File::create(path).unwrap();
    let mut w = std::io::BufWriter::with_capacity(4 << 20, file);
    for i in 0..records {
        let author = i % 20_000;
        let sub = (author * 7 + (i / 20_000) % 5) % 211;
        let score = [3i64, -2, 0, 1, -1][(i % 5) as usize];
        let ts = 1451606400 + (i.wrapping_mul(2654435761)) % 31_536_000;
        writeln!(
            w,
            "{{\"author\":\"u{author:05}\",\"subreddit\":\"s{sub:03}\",\"score\":{score},\"created_utc\":{ts}}}"
        )
        .unwrap();
    }
    w.flush().unwrap();
}

fn main() {
    let n: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10_000_000);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("perf.ndjson");
    let t = Instant::now();
    write_perf_corpus(&path, n);
    println!("generate: {:?}", t.elapsed());

    let window = AnalysisWindow::new(2016, 1, 12);
    let sentinels = HashSet::new();

    for threads in [1usize, 2, 4] {
        let t = Instant::now();
        let (rows, report) = corpus::ingest(&path, &window, &sentinels, threads, None).unwrap();
        println!(
            "threads={threads}: {:?} ({} rows, {} lines)",
            t.elapsed(),
            rows.len(),
            report.lines
        );
    }
}
