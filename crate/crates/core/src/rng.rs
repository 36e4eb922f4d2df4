// Copyright 2026 NoiseTensor Contributors
// SPDX-License-Identifier: Apache-2.0

//! Reproducible random streams.
//!
//! Every random draw is a function of a root seed, a stream name and an
//! index (trajectory id, sample id). ChaCha is counter based, so selecting
//! `set_stream(index)` on a generator keyed by `(seed, name)` yields
//! independent sequences that do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Child seed for a named sub-experiment.
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    splitmix64(seed ^ splitmix64(fnv1a(name.as_bytes())))
}

/// Generator for member `index` of the named stream family.
pub fn stream(seed: u64, name: &str, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, name));
    rng.set_stream(index);
    rng
}
