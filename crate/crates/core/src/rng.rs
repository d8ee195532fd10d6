//! Counter-based random streams.
//!
//! Every trial draws from its own ChaCha8 keystream position, addressed by
//! `(master_seed, run_index, trial_index)`: the master seed fixes the key, the
//! run index selects the 64-bit stream id, and the trial index selects a
//! fixed-size window of words inside that stream. No state is shared between
//! trials, so any execution order reproduces the same draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 32-bit words reserved per trial. A trial currently uses four (two `f64`).
pub const WORDS_PER_TRIAL: u128 = 16;

/// Stream positioned at the start of the given trial's window.
pub fn trial_stream(master_seed: u64, run_index: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    rng.set_word_pos(trial_index as u128 * WORDS_PER_TRIAL);
    rng
}
