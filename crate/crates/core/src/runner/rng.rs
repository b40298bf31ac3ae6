use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream per `(experiment, record)`, so records can be drawn in
/// any order and still match a sequential run.
pub fn record_rng(seed: u64, experiment: usize, record: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((experiment as u64) << 32) | (record as u64 & 0xffff_ffff));
    rng
}
