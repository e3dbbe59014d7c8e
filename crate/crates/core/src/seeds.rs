//! Deterministic seed derivation for independent sub-runs.

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-run `index` of a run seeded with `master`.
///
/// Distinct `(master, index)` pairs give unrelated seeds; the value depends on
/// nothing but its arguments, so runs can be scheduled in any order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ mix64(index.wrapping_add(0x5DEE_CE66_D1CE_5EED)))
}

/// Seed for a named purpose (e.g. a baseline) under `master`.
pub fn derive_named(master: u64, tag: &str) -> u64 {
    let h = tag
        .bytes()
        .fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01B3));
    mix64(mix64(master) ^ h)
}
