use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::ScenarioConfig;

/// Draws this epoch's new files, one slot per UE.
///
/// Each UE receives a file with probability `file_probability`; its length is
/// normal with the configured mean and deviation, redrawn until positive. The
/// number of draws consumed depends only on the traffic stream itself.
pub fn generate_traffic<R: Rng + ?Sized>(rng: &mut R, config: &ScenarioConfig) -> Vec<Option<f64>> {
    let lengths =
        Normal::new(config.file_length_mean, config.file_length_std).expect("validated mean and deviation");
    (0..config.n_ues)
        .map(|_| {
            if !rng.random_bool(config.file_probability) {
                return None;
            }
            loop {
                let len = lengths.sample(rng);
                if len > 0.0 {
                    return Some(len);
                }
            }
        })
        .collect()
}
