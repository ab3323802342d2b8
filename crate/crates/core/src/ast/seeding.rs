use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for rollout `index` of an experiment.
///
/// Each rollout gets its own ChaCha stream keyed by the experiment seed, so
/// a rollout's draws do not depend on how many draws other rollouts made or
/// in which order they ran.
pub fn rollout_rng(experiment_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(experiment_seed);
    rng.set_stream(index);
    rng
}

/// Mixes a label into a seed (splitmix64 finalizer), for deriving the seeds
/// of independent stages of one experiment.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
