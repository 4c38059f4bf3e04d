use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The two uniforms every vertex consumes per time slot.
///
/// Slot 0 is initialisation (`Experiment` holds the initial-state draw);
/// slot `t + 1` holds the experiment `X_t(v)` and the tie-break coin `Y_t(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum DrawTag {
    Experiment = 0,
    Coin = 1,
}

pub(crate) const DRAWS_PER_VERTEX: u128 = 2;
/// ChaCha positions count 32-bit words; one f64 uses a u64.
const WORDS_PER_DRAW: u128 = 2;

pub(crate) fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn word_position(slot: usize, vertex: usize, tag: DrawTag, vertices: usize) -> u128 {
    ((slot as u128 * vertices as u128 + vertex as u128) * DRAWS_PER_VERTEX + tag as u128) * WORDS_PER_DRAW
}

/// The uniform a tree replication uses for `(slot, vertex, tag)`, computed by
/// seeking directly to its key. The simulator reads the same values
/// sequentially.
pub fn keyed_uniform(
    seed: u64,
    replication: u64,
    slot: usize,
    vertex: usize,
    tag: DrawTag,
    vertices: usize,
) -> f64 {
    let mut rng = replication_rng(seed, replication);
    rng.set_word_pos(word_position(slot, vertex, tag, vertices));
    rng.random::<f64>()
}
