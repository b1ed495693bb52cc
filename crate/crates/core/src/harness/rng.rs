use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Generator for item `index` of `suite`: the seed keys the cipher and
/// `(suite, index)` selects the stream, so draws do not depend on the
/// order in which items are processed.
pub fn stream(seed: u64, suite: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut key = suite.as_bytes().to_vec();
    key.extend_from_slice(&index.to_le_bytes());
    rng.set_stream(fnv1a(&key));
    rng
}
