/// Stable per-job seed from the experiment seed, a tag and a rate.
///
/// FNV-1a over the little-endian bytes, finished with the SplitMix64 mixer,
/// so the value is independent of platform, thread count and job order.
pub fn derive_seed(seed: u64, tag: &str, rate: f64) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let bytes = seed.to_le_bytes().into_iter().chain(tag.bytes()).chain(rate.to_bits().to_le_bytes());
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    splitmix64(h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
