use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClientData;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Fraction of clients made noisy.
    pub client_fraction: f64,
    /// Fraction of each noisy client's training rows whose labels are shuffled.
    pub data_fraction: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            client_fraction: 0.0,
            data_fraction: 1.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("client_fraction", self.client_fraction), ("data_fraction", self.data_fraction)] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidInput(format!("{name} must lie in [0, 1], got {f}")));
            }
        }
        Ok(())
    }

    pub fn noisy_client_count(&self, k: usize) -> usize {
        // small epsilon so that e.g. 0.6 * 10 does not floor to 5
        ((self.client_fraction * k as f64) + 1e-9).floor() as usize
    }
}

/// Permute the labels of a random subset of training rows on `⌊t·K⌋`
/// randomly chosen clients. Returns the sorted ids of the noisy clients.
pub fn inject_noise(clients: &mut [ClientData], spec: &NoiseSpec) -> Result<Vec<usize>> {
    spec.validate()?;
    let k = clients.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut ids: Vec<usize> = (0..k).collect();
    ids.shuffle(&mut rng);
    let mut roster: Vec<usize> = ids[..spec.noisy_client_count(k)].to_vec();
    roster.sort_unstable();
    for &c in &roster {
        let train = &mut clients[c].train;
        let m = train.len();
        let take = ((spec.data_fraction * m as f64) + 1e-9).floor() as usize;
        let mut rows: Vec<usize> = (0..m).collect();
        rows.shuffle(&mut rng);
        let chosen = &rows[..take];
        let mut labels: Vec<usize> = chosen.iter().map(|&i| train.labels[i]).collect();
        labels.shuffle(&mut rng);
        for (&i, l) in chosen.iter().zip(labels) {
            train.labels[i] = l;
        }
    }
    Ok(roster)
}
