use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;
use serde::Serialize;

use super::codec::Bits;
use crate::error::{Error, Result};

/// `L` i.i.d. uniform records over `[1, K]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dataset {
    #[serde(rename = "K")]
    pub k: usize,
    pub records: Vec<u32>,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Draws records with [`Pcg64`] seeded by `seed_from_u64(seed)`.
pub fn generate_dataset(k: usize, l: usize, seed: u64) -> Result<Dataset> {
    if k < 2 {
        return Err(Error::domain(format!("alphabet size {k} must be at least 2")));
    }
    if k > u32::MAX as usize {
        return Err(Error::domain(format!("alphabet size {k} does not fit in 32 bits")));
    }
    if l == 0 {
        return Err(Error::domain("dataset length must be at least 1"));
    }
    let mut rng = Pcg64::seed_from_u64(seed);
    let records = (0..l).map(|_| rng.random_range(1..=k as u32)).collect();
    Ok(Dataset { k, records, seed })
}

/// Indicator bits of one pattern over a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageBits {
    /// 1-based pattern index.
    pub index: usize,
    pub bits: Bits,
}

/// `bits[l] = 1` iff record `l` lies in `pattern`.
pub fn derive_message(dataset: &Dataset, index: usize, pattern: &[u32]) -> Result<MessageBits> {
    let mut member = vec![false; dataset.k + 1];
    for &v in pattern {
        if v == 0 || v as usize > dataset.k {
            return Err(Error::IndexOutOfRange {
                pattern: index,
                index: v as u64,
                k: dataset.k,
            });
        }
        member[v as usize] = true;
    }
    let bits = dataset.records.iter().map(|&r| member[r as usize]).collect();
    Ok(MessageBits { index, bits })
}
