//! Deterministic random-number plumbing.
//!
//! # Seed splitting
//!
//! A master seed (u64) is expanded into independent 256-bit replica seeds by a
//! counter-based SplitMix64 ladder: replica `i` hashes the counter
//! `master ⊕ (i+1)·golden` through four SplitMix64 outputs. The rule is a pure
//! function of `(master, i)`, so replica streams are independent of any
//! scheduling order.
//!
//! # Checkpointing
//!
//! The generator is ChaCha12, whose full state is `(seed, stream, word_pos)`;
//! [`RngCheckpoint`] round-trips it bit-exactly through JSON.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// The pseudo-random generator used everywhere in the crate.
pub type Rng = ChaCha12Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One step of the SplitMix64 sequence; advances `state` and returns the next
/// output word.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the 256-bit seed of replica `index` from the master seed.
#[must_use]
pub fn replica_seed(master: u64, index: u64) -> [u8; 32] {
    let mut state = master ^ index.wrapping_add(1).wrapping_mul(GOLDEN);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    seed
}

/// Builds the replica generator for `(master, index)`.
#[must_use]
pub fn replica_rng(master: u64, index: u64) -> Rng {
    Rng::from_seed(replica_seed(master, index))
}

/// Bit-exact snapshot of a ChaCha12 generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngCheckpoint {
    /// 256-bit seed, hex encoded.
    pub seed_hex: String,
    /// Stream identifier.
    pub stream: u64,
    /// 128-bit word position, split to dodge JSON integer limits.
    pub word_pos_hi: u64,
    pub word_pos_lo: u64,
}

impl RngCheckpoint {
    /// Captures the full state of `rng`.
    #[must_use]
    pub fn capture(rng: &Rng) -> Self {
        let pos = rng.get_word_pos();
        Self {
            seed_hex: hex_encode(&rng.get_seed()),
            stream: rng.get_stream(),
            word_pos_hi: (pos >> 64) as u64,
            word_pos_lo: pos as u64,
        }
    }

    /// Rebuilds the generator; the next draw matches the captured one exactly.
    pub fn restore(&self) -> crate::Result<Rng> {
        let seed = hex_decode32(&self.seed_hex).ok_or_else(|| crate::CoreError::Checkpoint {
            message: format!("bad seed hex `{}`", self.seed_hex),
        })?;
        let mut rng = Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(((self.word_pos_hi as u128) << 64) | self.word_pos_lo as u128);
        Ok(rng)
    }
}

fn hex_encode(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

fn hex_decode32(s: &str) -> Option<[u8; 32]> {
    if s.len() != 64 {
        return None;
    }
    let mut out = [0u8; 32];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
    }
    Some(out)
}
