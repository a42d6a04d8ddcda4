use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ConceptDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub clients: usize,
    pub server_validation: f64,
    pub server_test: f64,
    pub client_train: f64,
    pub client_validation: f64,
    pub client_test: f64,
    pub seed: u64,
}

impl PartitionPlan {
    pub fn new(clients: usize, seed: u64) -> Self {
        Self {
            clients,
            server_validation: 0.1,
            server_test: 0.1,
            client_train: 0.9,
            client_validation: 0.05,
            client_test: 0.05,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.clients == 0 {
            return Err(Error::InvalidInput("need at least one client".into()));
        }
        let fracs = [
            ("server_validation", self.server_validation),
            ("server_test", self.server_test),
            ("client_train", self.client_train),
            ("client_validation", self.client_validation),
            ("client_test", self.client_test),
        ];
        for (name, f) in fracs {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InvalidInput(format!("{name} must lie in (0, 1), got {f}")));
            }
        }
        if self.server_validation + self.server_test >= 1.0 {
            return Err(Error::InvalidInput("server fractions leave no client data".into()));
        }
        let client_sum = self.client_train + self.client_validation + self.client_test;
        if (client_sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "client fractions must sum to 1, got {client_sum}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientData {
    pub train: ConceptDataset,
    pub validation: ConceptDataset,
    pub test: ConceptDataset,
}

impl ClientData {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all(&self) -> ConceptDataset {
        ConceptDataset::concat([&self.train, &self.validation, &self.test])
            .expect("splits share vocabularies")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub server_validation: ConceptDataset,
    pub server_test: ConceptDataset,
    pub clients: Vec<ClientData>,
}

fn share(total: usize, frac: f64) -> usize {
    ((total as f64) * frac).round() as usize
}

/// Seeded IID split into server validation/test and `K` equal client shares,
/// each further split into train/validation/test.
pub fn partition(data: &ConceptDataset, plan: &PartitionPlan) -> Result<Partition> {
    plan.validate()?;
    let total = data.len();
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(plan.seed));

    let n_val = share(total, plan.server_validation);
    let n_test = share(total, plan.server_test);
    if n_val == 0 || n_test == 0 || n_val + n_test >= total {
        return Err(Error::InvalidInput(format!(
            "{total} samples are too few for the requested server splits"
        )));
    }
    let (server_val, rest) = order.split_at(n_val);
    let (server_test, pool) = rest.split_at(n_test);

    let k = plan.clients;
    if pool.len() < k * 3 {
        return Err(Error::InvalidInput(format!(
            "{} client samples cannot give {k} clients a train/validation/test split",
            pool.len()
        )));
    }
    let base = pool.len() / k;
    let extra = pool.len() % k;
    let mut clients = Vec::with_capacity(k);
    let mut start = 0;
    for c in 0..k {
        let m = base + usize::from(c < extra);
        let idx = &pool[start..start + m];
        start += m;
        let n_cval = share(m, plan.client_validation).max(1);
        let n_ctest = share(m, plan.client_test).max(1);
        if n_cval + n_ctest >= m {
            return Err(Error::InvalidInput(format!(
                "client {c} has {m} samples, too few for its split fractions"
            )));
        }
        let n_train = m - n_cval - n_ctest;
        clients.push(ClientData {
            train: data.subset(&idx[..n_train]),
            validation: data.subset(&idx[n_train..n_train + n_cval]),
            test: data.subset(&idx[n_train + n_cval..]),
        });
    }
    Ok(Partition {
        server_validation: data.subset(server_val),
        server_test: data.subset(server_test),
        clients,
    })
}
