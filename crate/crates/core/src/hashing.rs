//! Stable, platform-independent hashing used by the mock backends and for
//! deriving per-item seeds. FNV-1a over bytes, finished with the SplitMix64
//! mixer.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Hash of a string under a seed.
pub fn hash_str(seed: u64, s: &str) -> u64 {
    splitmix64(fnv1a(s.as_bytes()) ^ splitmix64(seed))
}

/// Combine two words into one.
pub fn combine(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b).rotate_left(17))
}

/// Map a hash to `[0, 1)` using its top 53 bits.
pub fn unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Map a hash to `[-1, 1)`.
pub fn signed_unit(h: u64) -> f64 {
    2.0 * unit(h) - 1.0
}
