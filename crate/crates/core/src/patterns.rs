//! Search-pattern families and the exact joint law of their indicator bits.
//!
//! A record takes one of `K` equiprobable values. Pattern `m` is a subset
//! `S_m` of `[1, K]`, and message bit `w_m` is 1 exactly when the record falls
//! in `S_m`. For an ordered list of patterns the alphabet splits into cells
//! (Venn atoms) of values sharing one membership signature, and the joint
//! law of the bits is `cell size / K` on each signature. Everything here is
//! integer counting; floating point only appears in [`crate::infotheory`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Alphabet size `K` plus an ordered list of search sets over `[1, K]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternFamily {
    k: usize,
    sets: Vec<Vec<u32>>,
    label: String,
}

impl PatternFamily {
    /// Validates and builds a family. Each set is sorted; identical sets are rejected.
    pub fn new(k: usize, sets: Vec<Vec<u32>>, label: impl Into<String>) -> Result<Self> {
        Self::build(k, sets, label.into(), false)
    }

    /// Like [`PatternFamily::new`] but keeps repeated sets.
    pub fn new_allowing_duplicates(k: usize, sets: Vec<Vec<u32>>, label: impl Into<String>) -> Result<Self> {
        Self::build(k, sets, label.into(), true)
    }

    fn build(k: usize, mut sets: Vec<Vec<u32>>, label: String, allow_duplicates: bool) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("alphabet size K must be at least 1"));
        }
        if sets.is_empty() {
            return Err(Error::domain("a family needs at least one pattern"));
        }
        for (i, set) in sets.iter_mut().enumerate() {
            let pattern = i + 1;
            if set.is_empty() {
                return Err(Error::EmptySet { pattern });
            }
            if let Some(&bad) = set.iter().find(|&&v| v == 0 || v as usize > k) {
                return Err(Error::IndexOutOfRange {
                    pattern,
                    index: bad as u64,
                    k,
                });
            }
            set.sort_unstable();
            if let Some(w) = set.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateIndexInSet { pattern, index: w[0] });
            }
        }
        if !allow_duplicates {
            let mut seen: HashMap<&[u32], usize> = HashMap::with_capacity(sets.len());
            for (i, set) in sets.iter().enumerate() {
                if let Some(&first) = seen.get(set.as_slice()) {
                    return Err(Error::DuplicatePattern { first, second: i + 1 });
                }
                seen.insert(set, i + 1);
            }
        }
        Ok(PatternFamily { k, sets, label })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of patterns (messages) in the family.
    pub fn mu(&self) -> usize {
        self.sets.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sets(&self) -> &[Vec<u32>] {
        &self.sets
    }

    /// Pattern `m`, 1-based.
    pub fn set(&self, m: usize) -> &[u32] {
        &self.sets[m - 1]
    }

    /// Whether alphabet value `value` (1-based) lies in pattern `m` (1-based).
    pub fn contains(&self, m: usize, value: u32) -> bool {
        self.set(m).binary_search(&value).is_ok()
    }

    /// The common pattern size when every pattern has the same size.
    pub fn uniform_size(&self) -> Option<usize> {
        let first = self.sets[0].len();
        self.sets.iter().all(|s| s.len() == first).then_some(first)
    }

    fn check_indices(&self, indices: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.mu() + 1];
        for &m in indices {
            if m == 0 || m > self.mu() {
                return Err(Error::BadIndexList(format!("index {m} outside [1, {}]", self.mu())));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::BadIndexList(format!("index {m} repeated")));
            }
        }
        Ok(())
    }

    /// Venn atoms of the alphabet under the ordered pattern list `indices`.
    pub fn atoms(&self, indices: &[usize]) -> Result<AtomPartition> {
        self.check_indices(indices)?;
        let mut refinement = Refinement::new(self);
        for &m in indices {
            refinement.refine(m);
        }
        let cells = refinement
            .cells_in_alphabet_order()
            .into_iter()
            .map(|c| AtomCell {
                signature: refinement.signatures[c].clone(),
                size: refinement.sizes[c],
            })
            .collect();
        Ok(AtomPartition {
            ordered_indices: indices.to_vec(),
            cells,
        })
    }

    /// Exact joint law of `(w_{m1}, ..., w_{mt})` for `indices = [m1, ..., mt]`.
    pub fn joint_distribution(&self, indices: &[usize]) -> Result<JointBitDistribution> {
        let atoms = self.atoms(indices)?;
        Ok(atoms.into_distribution(self.k as u64))
    }

    /// Canonical document: `{"K": .., "label": .., "sets": [[..], ..]}`.
    pub fn to_document(&self) -> String {
        let doc = FamilyDocument {
            k: self.k as u64,
            label: self.label.clone(),
            sets: self
                .sets
                .iter()
                .map(|s| s.iter().map(|&v| v as u64).collect())
                .collect(),
        };
        serde_json::to_string(&doc).expect("family document serializes")
    }

    pub fn from_document(text: &str) -> Result<Self> {
        let doc: FamilyDocument = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let k = usize::try_from(doc.k).map_err(|_| Error::Parse(format!("K = {} does not fit in memory", doc.k)))?;
        let mut sets = Vec::with_capacity(doc.sets.len());
        for (i, raw) in doc.sets.into_iter().enumerate() {
            let mut set = Vec::with_capacity(raw.len());
            for v in raw {
                if v == 0 || v > k as u64 || v > u32::MAX as u64 {
                    return Err(Error::IndexOutOfRange {
                        pattern: i + 1,
                        index: v,
                        k,
                    });
                }
                set.push(v as u32);
            }
            sets.push(set);
        }
        PatternFamily::new(k, sets, doc.label)
    }
}

pub fn save_family(family: &PatternFamily) -> String {
    family.to_document()
}

pub fn load_family(text: &str) -> Result<PatternFamily> {
    PatternFamily::from_document(text)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyDocument {
    #[serde(rename = "K")]
    k: u64,
    label: String,
    sets: Vec<Vec<u64>>,
}

/// Membership bit tuple over an ordered pattern list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Signature(pub Vec<bool>);

impl Signature {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Signature restricted to `coords`, in that order.
    pub fn project(&self, coords: &[usize]) -> Signature {
        Signature(coords.iter().map(|&c| self.0[c]).collect())
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Signature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("bad signature character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Signature)
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AtomCell {
    pub signature: Signature,
    pub size: u64,
}

/// Cells of the alphabet, listed in order of their smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AtomPartition {
    pub ordered_indices: Vec<usize>,
    pub cells: Vec<AtomCell>,
}

impl AtomPartition {
    pub fn total(&self) -> u64 {
        self.cells.iter().map(|c| c.size).sum()
    }

    pub fn size_of(&self, signature: &Signature) -> u64 {
        self.cells
            .iter()
            .find(|c| &c.signature == signature)
            .map_or(0, |c| c.size)
    }

    pub fn into_distribution(self, denominator: u64) -> JointBitDistribution {
        let arity = self.ordered_indices.len();
        let masses = self.cells.into_iter().map(|c| (c.signature, c.size)).collect();
        JointBitDistribution {
            arity,
            denominator,
            masses,
        }
    }
}

/// Probability mass on bit tuples, stored as integer counts over a common denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointBitDistribution {
    arity: usize,
    denominator: u64,
    masses: BTreeMap<Signature, u64>,
}

impl JointBitDistribution {
    /// Builds a distribution from outcome counts; the denominator is their sum.
    /// Zero counts are dropped.
    pub fn from_counts(arity: usize, counts: BTreeMap<Signature, u64>) -> Result<Self> {
        if let Some(bad) = counts.keys().find(|s| s.len() != arity) {
            return Err(Error::LengthMismatch {
                expected: arity,
                actual: bad.len(),
            });
        }
        let masses: BTreeMap<_, _> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        let denominator: u64 = masses.values().sum();
        if denominator == 0 {
            return Err(Error::domain("distribution has no mass"));
        }
        Ok(JointBitDistribution {
            arity,
            denominator,
            masses,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    /// Numerator of the probability of `signature`.
    pub fn count(&self, signature: &Signature) -> u64 {
        self.masses.get(signature).copied().unwrap_or(0)
    }

    pub fn probability(&self, signature: &Signature) -> f64 {
        self.count(signature) as f64 / self.denominator as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Signature, u64)> {
        self.masses.iter().map(|(s, &c)| (s, c))
    }

    /// Nonzero counts, in signature order.
    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.masses.values().copied()
    }

    /// Law of the coordinates `coords` (in that order).
    pub fn marginal(&self, coords: &[usize]) -> Result<JointBitDistribution> {
        if let Some(&c) = coords.iter().find(|&&c| c >= self.arity) {
            return Err(Error::BadIndexList(format!(
                "coordinate {c} outside arity {}",
                self.arity
            )));
        }
        let mut masses = BTreeMap::new();
        for (sig, count) in &self.masses {
            *masses.entry(sig.project(coords)).or_insert(0) += count;
        }
        Ok(JointBitDistribution {
            arity: coords.len(),
            denominator: self.denominator,
            masses,
        })
    }
}

/// Incremental refinement of `[1, K]` by successive patterns.
///
/// `cell_of[v - 1]` is the cell of alphabet value `v`. Each `refine` call is
/// one pass over the new pattern plus one over the current cells.
pub(crate) struct Refinement<'a> {
    family: &'a PatternFamily,
    cell_of: Vec<u32>,
    pub(crate) sizes: Vec<u64>,
    pub(crate) signatures: Vec<Signature>,
    hits: Vec<u64>,
}

impl<'a> Refinement<'a> {
    pub(crate) fn new(family: &'a PatternFamily) -> Self {
        Refinement {
            family,
            cell_of: vec![0; family.k],
            sizes: vec![family.k as u64],
            signatures: vec![Signature::default()],
            hits: Vec::new(),
        }
    }

    /// Per-cell count of the members of pattern `m`.
    pub(crate) fn hits(&mut self, m: usize) -> &[u64] {
        self.hits.clear();
        self.hits.resize(self.sizes.len(), 0);
        for &v in self.family.set(m) {
            self.hits[self.cell_of[v as usize - 1] as usize] += 1;
        }
        &self.hits
    }

    #[allow(clippy::needless_range_loop)]
    pub(crate) fn refine(&mut self, m: usize) {
        self.hits(m);
        let old_cells = self.sizes.len();
        // new_id[c] is the cell that receives the members of S_m from cell c.
        let mut new_id = vec![u32::MAX; old_cells];
        for c in 0..old_cells {
            let inside = self.hits[c];
            let size = self.sizes[c];
            if inside == 0 {
                self.signatures[c].0.push(false);
            } else if inside == size {
                self.signatures[c].0.push(true);
                new_id[c] = c as u32;
            } else {
                let mut sig = self.signatures[c].clone();
                self.signatures[c].0.push(false);
                self.sizes[c] = size - inside;
                sig.0.push(true);
                new_id[c] = self.sizes.len() as u32;
                self.sizes.push(inside);
                self.signatures.push(sig);
            }
        }
        for &v in self.family.set(m) {
            let slot = &mut self.cell_of[v as usize - 1];
            *slot = new_id[*slot as usize];
        }
    }

    /// Cell ids ordered by smallest member.
    pub(crate) fn cells_in_alphabet_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.sizes.len()];
        let mut order = Vec::with_capacity(self.sizes.len());
        for &c in &self.cell_of {
            if !std::mem::replace(&mut seen[c as usize], true) {
                order.push(c as usize);
            }
        }
        order
    }

    /// Members of every cell, ascending, with cells in order of smallest member.
    pub(crate) fn members_in_alphabet_order(&self) -> Vec<(usize, Vec<u32>)> {
        let order = self.cells_in_alphabet_order();
        let mut slot = vec![0usize; self.sizes.len()];
        for (i, &c) in order.iter().enumerate() {
            slot[c] = i;
        }
        let mut out: Vec<(usize, Vec<u32>)> = order
            .iter()
            .map(|&c| (c, Vec::with_capacity(self.sizes[c] as usize)))
            .collect();
        for (v, &c) in self.cell_of.iter().enumerate() {
            out[slot[c as usize]].1.push(v as u32 + 1);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(k: usize) -> PatternFamily {
        PatternFamily::new(k, (1..=k as u32).map(|v| vec![v]).collect(), "exact").unwrap()
    }

    fn sig(s: &str) -> Signature {
        s.parse().unwrap()
    }

    #[test]
    fn exact_search_family_builds() {
        let f = exact(3);
        assert_eq!(f.mu(), 3);
        assert_eq!(f.sets(), &[vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn circular_listing_for_k8_builds_sorted() {
        let sets: Vec<Vec<u32>> = (0..8u32).map(|k| (0..4).map(|i| (k + i) % 8 + 1).collect()).collect();
        let f = PatternFamily::new(8, sets, "circ").unwrap();
        assert_eq!(f.mu(), 8);
        assert_eq!(f.set(8), &[1, 2, 3, 8]);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            PatternFamily::new(3, vec![vec![1, 4]], "x"),
            Err(Error::IndexOutOfRange {
                pattern: 1,
                index: 4,
                k: 3
            })
        );
        assert_eq!(
            PatternFamily::new(3, vec![vec![]], "x"),
            Err(Error::EmptySet { pattern: 1 })
        );
        assert_eq!(
            PatternFamily::new(3, vec![vec![2, 1, 2]], "x"),
            Err(Error::DuplicateIndexInSet { pattern: 1, index: 2 })
        );
        assert_eq!(
            PatternFamily::new(3, vec![vec![1, 2], vec![2, 1]], "x"),
            Err(Error::DuplicatePattern { first: 1, second: 2 })
        );
        assert!(PatternFamily::new_allowing_duplicates(3, vec![vec![1, 2], vec![2, 1]], "x").is_ok());
        assert!(matches!(
            PatternFamily::new(0, vec![vec![1]], "x"),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn atoms_of_exact_search() {
        let a = exact(3).atoms(&[1, 2]).unwrap();
        assert_eq!(a.cells.len(), 3);
        assert_eq!(a.size_of(&sig("10")), 1);
        assert_eq!(a.size_of(&sig("01")), 1);
        assert_eq!(a.size_of(&sig("00")), 1);
    }

    #[test]
    fn empty_refinement_is_one_cell() {
        let a = exact(5).atoms(&[]).unwrap();
        assert_eq!(
            a.cells,
            vec![AtomCell {
                signature: Signature::default(),
                size: 5
            }]
        );
    }

    #[test]
    fn offset_two_arcs_split_evenly() {
        let sets: Vec<Vec<u32>> = (0..8u32).map(|k| (0..4).map(|i| (k + i) % 8 + 1).collect()).collect();
        let f = PatternFamily::new(8, sets, "circ").unwrap();
        let a = f.atoms(&[1, 3]).unwrap();
        assert_eq!(a.cells.len(), 4);
        assert!(a.cells.iter().all(|c| c.size == 2));
    }

    #[test]
    fn bad_index_lists() {
        let f = exact(3);
        assert!(matches!(f.atoms(&[0]), Err(Error::BadIndexList(_))));
        assert!(matches!(f.atoms(&[4]), Err(Error::BadIndexList(_))));
        assert!(matches!(f.atoms(&[1, 1]), Err(Error::BadIndexList(_))));
    }

    #[test]
    fn joint_distribution_examples() {
        let d = exact(3).joint_distribution(&[1, 2]).unwrap();
        assert_eq!(d.denominator(), 3);
        for s in ["10", "01", "00"] {
            assert_eq!(d.count(&sig(s)), 1);
        }
        assert_eq!(d.count(&sig("11")), 0);

        let single = PatternFamily::new(10, vec![vec![2, 5, 7]], "m3").unwrap();
        let d = single.joint_distribution(&[1]).unwrap();
        assert_eq!((d.count(&sig("1")), d.count(&sig("0"))), (3, 7));

        let d = exact(2).joint_distribution(&[1, 2]).unwrap();
        assert_eq!(d.count(&sig("10")), 1);
        assert_eq!(d.count(&sig("01")), 1);
        assert_eq!(d.iter().count(), 2);
    }

    #[test]
    fn document_round_trip_and_errors() {
        let f = exact(3);
        let doc = f.to_document();
        assert_eq!(doc, r#"{"K":3,"label":"exact","sets":[[1],[2],[3]]}"#);
        assert_eq!(PatternFamily::from_document(&doc).unwrap(), f);

        assert!(PatternFamily::from_document(r#"{"K":0,"label":"z","sets":[[1]]}"#).is_err());
        assert!(matches!(
            PatternFamily::from_document(r#"{"K":3,"label":"z","sets":[[1,-2]]}"#),
            Err(Error::Parse(_))
        ));
        assert!(matches!(PatternFamily::from_document("not json"), Err(Error::Parse(_))));
    }

    #[test]
    fn marginal_rejects_bad_coordinate() {
        let d = exact(3).joint_distribution(&[1, 2]).unwrap();
        assert!(d.marginal(&[2]).is_err());
        assert_eq!(d.marginal(&[1]).unwrap().count(&sig("1")), 1);
    }
}
