//! Seeded randomness helpers.
//!
//! Every stochastic routine in this crate takes an explicit 64-bit seed and
//! runs on [`ChaCha8Rng`] (rand_chacha 0.9, pinned in Cargo.toml), a
//! counter-based generator whose streams are identical across platforms and
//! releases. Derived seeds are produced by hashing a textual label into the
//! master seed, so independent pieces of work (different methods, deployment
//! indices, purposes) never share a stream and can run in any order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Build the pinned generator from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// FNV-1a 64-bit hash of a label.
fn fnv1a64(label: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in label.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// SplitMix64 finalizer; decorrelates structured seed inputs.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a master seed and a label.
///
/// Labels follow the convention `"{method}:{n}:{deployment}:{purpose}"` in
/// the experiment harness; any distinct string yields a distinct stream.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    splitmix64(master ^ fnv1a64(label))
}
