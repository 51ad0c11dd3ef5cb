use std::time::Instant;

fn build_map(n: u64, salt: u64) -> usize {
    let mut m: rustc_hash::FxHashMap<(u32, u32, u8), [u64; 3]> = rustc_hash::FxHashMap::default();
    let mut x = salt | 1;
    for _ in 0..n {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let a = (x >> 13) as u32 % 20_000;
        let s = (x >> 43) as u32 % 1_000;
        let mo = ((x >> 7) % 12) as u8;
        m.entry((a, s, mo)).or_insert([0; 3])[0] += 1;
    }
    m.len()
}

fn main() {
    let n = 10_000_000u64;
    for threads in [1usize, 2] {
        let t = Instant::now();
        std::thread::scope(|sc| {
            for k in 0..threads {
                sc.spawn(move || build_map(n / threads as u64, k as u64 * 7 + 1));
            }
        });
        println!(
            "map-build threads={threads}: {:?} ({} inserts total)",
            t.elapsed(),
            n
        );
    }
}
