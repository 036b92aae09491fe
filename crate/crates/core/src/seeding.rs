//! Deterministic seed derivation. All randomness in the crate flows from
//! explicit seeds through these helpers; there is no global RNG state.

/// One splitmix64 step; decorrelates nearby integers.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-item seed derived from a base seed and an index (scene number,
/// group identity, and so on).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index.wrapping_add(1)))
}
