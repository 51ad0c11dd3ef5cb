use std::time::Instant;

fn main() {
    let n = 2_000_000u64;
    let lines: Vec<String> = (0..n)
        .map(|i| {
            let author = i % 20_000;
            let sub = (i * 13 + 7) % 211;
            format!(
                "{{\"author\":\"u{author:05}\",\"subreddit\":\"s{sub:03}\",\"score\":{},\"created_utc\":{}}}",
                (i as i64 % 7) - 3,
                1451606400 + (i.wrapping_mul(2654435761)) % 31_536_000
            )
        })
        .collect();

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

    let parse_slice = |slice: &[String]| -> u64 {
        let mut ok = 0u64;
        for l in slice {
            if serde_json::from_str::<Raw>(l).is_ok() {
                ok += 1;
            }
        }
        ok
    };

    for threads in [1usize, 2, 4] {
        let t = Instant::now();
        let chunk = lines.len() / threads;
        let total: u64 = std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|k| {
                    let slice = &lines[k * chunk..((k + 1) * chunk).min(lines.len())];
                    s.spawn(move || parse_slice(slice))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).sum()
        });
        println!("threads={threads}: {:?} parsed={total}", t.elapsed());
    }
}
