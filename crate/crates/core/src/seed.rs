//! Stable seed derivation. Seeds are the first eight bytes (little endian) of
//! a SHA-256 digest over length-prefixed parts, so they do not depend on the
//! platform, the compiler, or the standard library's hasher.

use sha2::{Digest, Sha256};

/// One component of a derived seed.
#[derive(Debug, Clone, Copy)]
pub enum SeedPart<'a> {
    U64(u64),
    Str(&'a str),
}

pub fn derive_seed(parts: &[SeedPart<'_>]) -> u64 {
    let mut h = Sha256::new();
    for part in parts {
        match part {
            SeedPart::U64(v) => {
                h.update([0u8]);
                h.update(v.to_le_bytes());
            }
            SeedPart::Str(s) => {
                h.update([1u8]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
        }
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Independent named sub-stream of `seed`.
pub fn substream(seed: u64, tag: &str) -> u64 {
    derive_seed(&[SeedPart::U64(seed), SeedPart::Str(tag)])
}
