//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(seed, sample_index, site)`, so a
//! potential entry can be regenerated in isolation: workers can process
//! samples in any order, and a run is bit-identical no matter how the work
//! is split.  The mixer is the splitmix64 finalizer applied after folding in
//! each key component with a distinct odd multiplier.

/// splitmix64 finalizer; full-avalanche 64-bit mix.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Raw 64-bit value for a `(seed, sample_index, site)` key.
#[inline]
pub fn draw_u64(seed: u64, sample_index: u64, site: u64) -> u64 {
    let mut z = mix64(seed ^ 0x9E37_79B9_7F4A_7C15);
    z = mix64(z ^ sample_index.wrapping_mul(0xA076_1D64_78BD_642F));
    mix64(z ^ site.wrapping_mul(0xE703_7ED1_A0B4_28DB))
}

/// Uniform in `[0, 1)` with 53 random bits.
#[inline]
pub fn draw_f64(seed: u64, sample_index: u64, site: u64) -> f64 {
    (draw_u64(seed, sample_index, site) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
