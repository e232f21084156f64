//! Derived random streams.
//!
//! Every replicate owns a ChaCha8 stream keyed by `(master seed, purpose,
//! index)`, so results never depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Purpose tags separating the stream families drawn from one master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Replicate = 1,
    Walk = 2,
    FrozenEnvironment = 3,
    FrozenOffspring = 4,
    Audit = 5,
    Sigma = 6,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Stream for `(master, purpose, index)`.
pub fn stream(master: u64, purpose: Purpose, index: u64) -> Stream {
    let key = splitmix64(master ^ splitmix64(purpose as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Stream for a nested index, e.g. `(grid point, replicate)`.
pub fn substream(master: u64, purpose: Purpose, outer: u64, inner: u64) -> Stream {
    stream(splitmix64(master ^ splitmix64(outer.wrapping_add(0x5851_F42D))), purpose, inner)
}

/// A stream seeded directly from a 64-bit value.
pub fn seeded(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}
