//! Keyed RNG stream derivation. FNV-1a over the key parts gives a stable
//! 64-bit seed on every platform, so parallel schedules and re-runs cannot
//! change any draw.

pub(crate) fn keyed_seed(global: u64, parts: &[&[u8]]) -> u64 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;
    let mut h = OFFSET;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    eat(&global.to_le_bytes());
    for part in parts {
        eat(part);
        eat(&[0x1f]);
    }
    h
}
