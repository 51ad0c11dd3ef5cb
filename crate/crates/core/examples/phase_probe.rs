use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::time::Instant;

use subconflict::corpus::{self, AnalysisWindow};

fn main() {
    let n = 4_000_000u64;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("perf.ndjson");
    {
        let file = std::fs::File::create(&path).unwrap();
        let mut w = std::io::BufWriter::with_capacity(4 << 20, file);
        for i in 0..n {
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
    }
    let window = AnalysisWindow::new(2016, 1, 12);
    let sentinels: HashSet<String> = HashSet::new();

    // Phase: read whole file into memory (page-cache warm after generation).
    let t = Instant::now();
    let data = std::fs::read(&path).unwrap();
    println!("read whole file: {:?} ({} MB)", t.elapsed(), data.len() >> 20);

    // Phase: split lines + parse only.
    #[derive(serde::Deserialize)]
    #[allow(dead_code)]
    struct Raw<'a> {
        #[serde(borrow)]
        author: std::borrow::Cow<'a, str>,
        #[serde(borrow)]
        subreddit: std::borrow::Cow<'a, str>,
        score: i64,
        created_utc: i64,
    }
    let t = Instant::now();
    let mut ok = 0u64;
    for line in data.split(|&b| b == b'\n') {
        if line.is_empty() {
            continue;
        }
        if serde_json::from_slice::<Raw>(line).is_ok() {
            ok += 1;
        }
    }
    println!("parse only: {:?} ({ok} records)", t.elapsed());

    // Phase: parse + string-keyed aggregation (the sequential insert path,
    // approximated without the Aggregator plumbing).
    let t = Instant::now();
    let mut ids: HashMap<String, u32> = HashMap::new();
    let mut groups: HashMap<(u32, u32, u8), [u64; 3]> = HashMap::new();
    let mut names = 0u32;
    for line in data.split(|&b| b == b'\n') {
        if line.is_empty() {
            continue;
        }
        if let Ok(raw) = serde_json::from_slice::<Raw>(line) {
            let a = *ids.entry(raw.author.clone().into_owned()).or_insert_with(|| {
                names += 1;
                names
            });
            let s = *ids.entry(raw.subreddit.clone().into_owned()).or_insert_with(|| {
                names += 1;
                names
            });
            let month = ((raw.created_utc / 2_592_000) % 12) as u8;
            groups.entry((a, s, month)).or_insert([0; 3])[(raw.score.rem_euclid(3)) as usize] += 1;
        }
    }
    println!("parse + aggregate: {:?} ({} groups)", t.elapsed(), groups.len());

    // End-to-end via the real ingest at 1 and 2 threads.
    for threads in [1usize, 2] {
        let t = Instant::now();
        let (rows, _) = corpus::ingest(&path, &window, &sentinels, threads, None).unwrap();
        println!("ingest threads={threads}: {:?} ({} rows)", t.elapsed(), rows.len());
    }
}
