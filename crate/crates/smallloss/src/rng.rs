//! Deterministic stream derivation.
//!
//! Every random draw in a run comes from a ChaCha12 stream keyed by
//! `(master_seed, seed_index, stream_id)`. ChaCha is a counter-mode cipher, so
//! two runs with the same key triple produce bit-identical streams regardless
//! of thread count or draw interleaving across *other* streams. Loss
//! schedules, learner arm draws, and perturbation draws each get their own
//! stream id so that, e.g., adding one extra learner draw cannot shift the
//! environment's losses.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream id for environment loss generation.
pub const STREAM_ENV: u64 = 0x01;
/// Stream id for learner arm draws.
pub const STREAM_LEARNER: u64 = 0x02;
/// Stream id for follow-the-perturbed-leader perturbations.
pub const STREAM_PERTURB: u64 = 0x03;
/// Stream id for property-suite instance generation.
pub const STREAM_SUITE: u64 = 0x04;
/// Stream id for construction-time instance randomness (segment breakpoints,
/// per-segment best arms) as opposed to per-round loss draws.
pub const STREAM_INSTANCE: u64 = 0x05;

/// SplitMix64 step: the standard 64-bit finalizer used to decorrelate
/// nearby integer keys before they seed a stream cipher.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a 32-byte ChaCha key from a key triple by running SplitMix64 over
/// the mixed inputs. Deterministic across platforms and versions.
fn derive_key(master_seed: u64, seed_index: u64, stream_id: u64) -> [u8; 32] {
    let mut state = master_seed
        ^ seed_index.wrapping_mul(0xA24B_AED4_963E_E407)
        ^ stream_id.wrapping_mul(0x9FB2_1C65_1E98_DF25);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Stream for `(master_seed, seed_index, stream_id)`.
pub fn stream(master_seed: u64, seed_index: u64, stream_id: u64) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_key(master_seed, seed_index, stream_id))
}

/// Per-round sub-stream: used by oblivious loss schedules so that the loss
/// vector of round `t` is a pure function of `(key triple, t)` and never
/// depends on how many values earlier rounds consumed.
pub fn round_stream(master_seed: u64, seed_index: u64, stream_id: u64, t: u64) -> ChaCha12Rng {
    let mut state = master_seed
        ^ seed_index.wrapping_mul(0xA24B_AED4_963E_E407)
        ^ stream_id.wrapping_mul(0x9FB2_1C65_1E98_DF25)
        ^ t.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}
