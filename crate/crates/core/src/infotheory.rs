//! Entropies of [`JointBitDistribution`]s, in bits.

use crate::error::{Error, Result};
use crate::patterns::JointBitDistribution;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `H2(p) = -p log2 p - (1-p) log2 (1-p)`, with `H2(0) = H2(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(h2(p))
}

/// Unchecked `H2`; callers guarantee `p` in `[0, 1]`.
pub(crate) fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - p;
    -(p * p.log2() + q * q.log2())
}

/// Entropy of a law given by integer counts over `total`.
pub(crate) fn entropy_of_counts(counts: impl IntoIterator<Item = u64>, total: u64) -> f64 {
    let total = total as f64;
    let acc: CompensatedSum = counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .collect();
    acc.value().max(0.0)
}

pub fn entropy(dist: &JointBitDistribution) -> f64 {
    entropy_of_counts(dist.counts(), dist.denominator())
}

/// The first `condition_count` coordinates condition the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntropySplit {
    pub condition_count: usize,
}

impl EntropySplit {
    pub fn new(condition_count: usize) -> Self {
        EntropySplit { condition_count }
    }

    fn check(&self, dist: &JointBitDistribution) -> Result<()> {
        if self.condition_count >= dist.arity() {
            return Err(Error::BadSplit {
                condition: self.condition_count,
                arity: dist.arity(),
            });
        }
        Ok(())
    }
}

/// `H(target | condition) = H(joint) - H(condition)`.
pub fn conditional_entropy(dist: &JointBitDistribution, split: EntropySplit) -> Result<f64> {
    split.check(dist)?;
    let condition: Vec<usize> = (0..split.condition_count).collect();
    let h_condition = entropy(&dist.marginal(&condition)?);
    Ok((entropy(dist) - h_condition).max(0.0))
}

/// `I(target; condition) = H(target) - H(target | condition)`.
pub fn mutual_information(dist: &JointBitDistribution, split: EntropySplit) -> Result<f64> {
    split.check(dist)?;
    let target: Vec<usize> = (split.condition_count..dist.arity()).collect();
    let h_target = entropy(&dist.marginal(&target)?);
    Ok((h_target - conditional_entropy(dist, split)?).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{PatternFamily, Signature};
    use std::collections::BTreeMap;

    fn exact(k: usize) -> PatternFamily {
        PatternFamily::new(k, (1..=k as u32).map(|v| vec![v]).collect(), "exact").unwrap()
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.25).unwrap() - 0.8112781245).abs() < 1e-9);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn entropy_examples() {
        let single = PatternFamily::new(8, vec![vec![1, 2]], "m2").unwrap();
        let d = single.joint_distribution(&[1]).unwrap();
        assert!((entropy(&d) - h2(0.25)).abs() < 1e-12);

        let mut counts = BTreeMap::new();
        counts.insert(Signature(vec![true, false]), 5);
        let det = JointBitDistribution::from_counts(2, counts).unwrap();
        assert_eq!(entropy(&det), 0.0);

        let d = exact(3).joint_distribution(&[1, 2]).unwrap();
        assert!((entropy(&d) - 3f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn conditional_entropy_examples() {
        let d = exact(3).joint_distribution(&[1, 2]).unwrap();
        let h = conditional_entropy(&d, EntropySplit::new(1)).unwrap();
        assert!((h - 2.0 / 3.0).abs() < 1e-9);

        let d2 = exact(2).joint_distribution(&[1, 2]).unwrap();
        assert!(conditional_entropy(&d2, EntropySplit::new(1)).unwrap().abs() < 1e-15);

        let h0 = conditional_entropy(&d, EntropySplit::new(0)).unwrap();
        assert!((h0 - entropy(&d)).abs() < 1e-15);

        assert_eq!(
            conditional_entropy(&d, EntropySplit::new(2)),
            Err(Error::BadSplit { condition: 2, arity: 2 })
        );
    }

    #[test]
    fn mutual_information_examples() {
        let d = exact(3).joint_distribution(&[1, 2]).unwrap();
        let i = mutual_information(&d, EntropySplit::new(1)).unwrap();
        assert!((i - 0.2516291673878229).abs() < 1e-9);

        // two patterns cutting K = 4 into four equal cells are independent
        let f = PatternFamily::new(4, vec![vec![1, 2], vec![1, 3]], "ind").unwrap();
        let d = f.joint_distribution(&[1, 2]).unwrap();
        assert!(mutual_information(&d, EntropySplit::new(1)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_beats_naive_on_cancellation() {
        let acc: CompensatedSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(acc.value(), 2.0);
    }
}
