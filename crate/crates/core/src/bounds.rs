//! Converse (download lower) bounds for retrieval of dependent messages.
//!
//! For an ordering `k_1, k_2, ...` of the messages, every scheme that is
//! private against each single server downloads at least
//!
//! ```text
//! D / L >= H(w_{k1}) + H(w_{k2} | w_{k1}) / N + H(w_{k3} | w_{k1}, w_{k2}) / N^2 + ...
//! ```
//!
//! bits per record. Which ordering gives the strongest bound is a search
//! problem; [`best_sequence`] offers an exact subset-DP search for small
//! families and a greedy heuristic for large ones.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::constructions::exact_search_family;
use crate::error::{Error, Result};
use crate::infotheory::{entropy_of_counts, CompensatedSum};
use crate::patterns::{PatternFamily, Refinement};

/// Largest message count accepted by [`Strategy::Exhaustive`].
pub const EXHAUSTIVE_CAP: usize = 10;

/// Tolerance used to decide that two candidate bounds tie.
const TIE_TOLERANCE: f64 = 1e-12;

/// Per-symbol entropies of a message ensemble. Message indices are 1-based
/// and assumed valid; the bound functions validate them first.
pub trait EntropyModel {
    fn message_count(&self) -> usize;

    /// `H(w_k)`.
    fn entropy(&self, k: usize) -> f64;

    /// `H(w_k | w_j : j in prefix)`.
    fn conditional_entropy(&self, k: usize, prefix: &[usize]) -> f64;

    /// `H(w_{s_l} | w_{s_1}, ..., w_{s_{l-1}})` for every position `l` of `sequence`.
    fn sequence_conditional_entropies(&self, sequence: &[usize]) -> Vec<f64> {
        (0..sequence.len())
            .map(|l| self.conditional_entropy(sequence[l], &sequence[..l]))
            .collect()
    }

    /// `H(w_k | prefix)` for each `k` in `candidates`.
    fn candidate_conditional_entropies(&self, prefix: &[usize], candidates: &[usize]) -> Vec<f64> {
        candidates
            .iter()
            .map(|&k| self.conditional_entropy(k, prefix))
            .collect()
    }

    fn entropies(&self) -> Vec<f64> {
        (1..=self.message_count()).map(|k| self.entropy(k)).collect()
    }

    fn min_entropy(&self) -> f64 {
        self.entropies().into_iter().fold(f64::INFINITY, f64::min)
    }

    fn max_entropy(&self) -> f64 {
        self.entropies().into_iter().fold(0.0, f64::max)
    }

    /// All messages carry the same entropy, within `tolerance`.
    fn is_balanced(&self, tolerance: f64) -> bool {
        self.max_entropy() - self.min_entropy() <= tolerance
    }
}

/// Messages that are mutually independent, with given per-symbol entropies.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependentModel {
    entropies: Vec<f64>,
}

impl IndependentModel {
    pub fn new(entropies: Vec<f64>) -> Result<Self> {
        if entropies.is_empty() {
            return Err(Error::domain("model needs at least one message"));
        }
        if entropies.iter().any(|h| !h.is_finite() || *h < 0.0) {
            return Err(Error::domain("entropies must be finite and nonnegative"));
        }
        Ok(IndependentModel { entropies })
    }

    /// `mu` independent messages of `h` bits per symbol each.
    pub fn uniform(mu: usize, h: f64) -> Result<Self> {
        Self::new(vec![h; mu])
    }
}

impl EntropyModel for IndependentModel {
    fn message_count(&self) -> usize {
        self.entropies.len()
    }

    fn entropy(&self, k: usize) -> f64 {
        self.entropies[k - 1]
    }

    fn conditional_entropy(&self, k: usize, _prefix: &[usize]) -> f64 {
        self.entropies[k - 1]
    }
}

/// Indicator messages of a [`PatternFamily`] over uniformly distributed records.
///
/// Joint entropies are memoized per index set, so orderings that share a
/// prefix set share work.
#[derive(Debug)]
pub struct PatternFamilyModel {
    family: PatternFamily,
    entropies: Vec<f64>,
    joint_memo: Mutex<HashMap<Vec<usize>, f64>>,
}

impl PatternFamilyModel {
    pub fn new(family: PatternFamily) -> Self {
        let k = family.k() as u64;
        let entropies = family
            .sets()
            .iter()
            .map(|s| entropy_of_counts([s.len() as u64, k - s.len() as u64], k))
            .collect();
        PatternFamilyModel {
            family,
            entropies,
            joint_memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn family(&self) -> &PatternFamily {
        &self.family
    }

    /// `H(w_j : j in indices)`; order and repeats in `indices` do not matter.
    pub fn joint_entropy(&self, indices: &[usize]) -> f64 {
        let mut key = indices.to_vec();
        key.sort_unstable();
        key.dedup();
        if let Some(&h) = self.joint_memo.lock().unwrap().get(&key) {
            return h;
        }
        let mut refinement = Refinement::new(&self.family);
        for &m in &key {
            refinement.refine(m);
        }
        let h = entropy_of_counts(refinement.sizes.iter().copied(), self.family.k() as u64);
        self.joint_memo.lock().unwrap().insert(key, h);
        h
    }
}

impl EntropyModel for PatternFamilyModel {
    fn message_count(&self) -> usize {
        self.family.mu()
    }

    fn entropy(&self, k: usize) -> f64 {
        self.entropies[k - 1]
    }

    fn conditional_entropy(&self, k: usize, prefix: &[usize]) -> f64 {
        if prefix.is_empty() {
            return self.entropy(k);
        }
        let mut with_k = prefix.to_vec();
        with_k.push(k);
        (self.joint_entropy(&with_k) - self.joint_entropy(prefix)).max(0.0)
    }

    fn sequence_conditional_entropies(&self, sequence: &[usize]) -> Vec<f64> {
        let total = self.family.k() as u64;
        let mut refinement = Refinement::new(&self.family);
        let mut previous = 0.0;
        sequence
            .iter()
            .map(|&m| {
                refinement.refine(m);
                let joint = entropy_of_counts(refinement.sizes.iter().copied(), total);
                let term = (joint - previous).max(0.0);
                previous = joint;
                term
            })
            .collect()
    }

    fn candidate_conditional_entropies(&self, prefix: &[usize], candidates: &[usize]) -> Vec<f64> {
        let total = self.family.k() as u64;
        let mut refinement = Refinement::new(&self.family);
        for &m in prefix {
            refinement.refine(m);
        }
        let base = entropy_of_counts(refinement.sizes.iter().copied(), total);
        let sizes = refinement.sizes.clone();
        candidates
            .iter()
            .map(|&k| {
                let hits = refinement.hits(k);
                let split = sizes
                    .iter()
                    .zip(hits)
                    .flat_map(|(&size, &inside)| [inside, size - inside]);
                (entropy_of_counts(split, total) - base).max(0.0)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Exhaustive,
    Greedy,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Exhaustive => "exhaustive",
            Strategy::Greedy => "greedy",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Strategy::Exhaustive),
            "greedy" => Ok(Strategy::Greedy),
            other => Err(Error::Parse(format!("unknown strategy {other:?}"))),
        }
    }
}

/// One evaluation of the converse bound along a message sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverseReport {
    pub sequence: Vec<usize>,
    #[serde(rename = "N")]
    pub servers: usize,
    /// Conditional entropy of each sequence element given its predecessors.
    pub terms: Vec<f64>,
    pub per_record_bound: f64,
    /// `per_record_bound` over the smallest message entropy in the whole model.
    pub normalized_bound: f64,
    /// `(1 - 1/N)^-1`.
    pub asymptote: f64,
    pub gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    /// Set when the sequence was cut short of a full permutation on purpose.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncated_at: Option<usize>,
}

impl ConverseReport {
    /// Upper bound on the achievable rate implied by this bound.
    pub fn rate_upper_bound(&self) -> f64 {
        1.0 / self.normalized_bound
    }
}

fn check_servers(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::NTooSmall(n));
    }
    Ok(())
}

fn check_sequence(model: &dyn EntropyModel, sequence: &[usize]) -> Result<()> {
    let mu = model.message_count();
    if sequence.is_empty() {
        return Err(Error::BadSequence("sequence is empty".into()));
    }
    let mut seen = vec![false; mu + 1];
    for &k in sequence {
        if k == 0 || k > mu {
            return Err(Error::BadSequence(format!("index {k} outside [1, {mu}]")));
        }
        if std::mem::replace(&mut seen[k], true) {
            return Err(Error::BadSequence(format!("index {k} repeated")));
        }
    }
    Ok(())
}

fn weighted_sum(terms: &[f64], n: usize) -> f64 {
    let n = n as f64;
    let mut weight = 1.0;
    let mut acc = CompensatedSum::default();
    for &t in terms {
        acc.add(t * weight);
        weight /= n;
    }
    acc.value()
}

fn report_from_terms(
    model: &dyn EntropyModel,
    n: usize,
    sequence: Vec<usize>,
    terms: Vec<f64>,
) -> Result<ConverseReport> {
    let h_min = model.min_entropy();
    if h_min <= 0.0 {
        return Err(Error::domain(
            "smallest message entropy is zero; the normalized bound is undefined",
        ));
    }
    let per_record_bound = weighted_sum(&terms, n);
    let normalized_bound = per_record_bound / h_min;
    let asymptote = n as f64 / (n as f64 - 1.0);
    Ok(ConverseReport {
        sequence,
        servers: n,
        terms,
        per_record_bound,
        normalized_bound,
        asymptote,
        gap: asymptote - normalized_bound,
        strategy: None,
        truncated_at: None,
    })
}

/// Evaluates the bound along `sequence` (1-based, distinct, possibly partial).
pub fn converse_bound(model: &dyn EntropyModel, n: usize, sequence: &[usize]) -> Result<ConverseReport> {
    check_servers(n)?;
    check_sequence(model, sequence)?;
    let terms = model.sequence_conditional_entropies(sequence);
    report_from_terms(model, n, sequence.to_vec(), terms)
}

/// Lowest-index position whose value is within tolerance of the maximum.
fn argmax_lowest(values: &[f64]) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * max.abs().max(1.0);
    values.iter().position(|&v| v >= max - tol).unwrap_or(0)
}

/// Searches for the ordering with the largest bound.
///
/// `Exhaustive` is exact: the optimal continuation after a prefix depends only
/// on the prefix *set*, so a dynamic program over subsets visits `2^mu` states
/// instead of `mu!` orderings. `Greedy` extends the prefix with the message of
/// largest conditional entropy. Both break ties toward the lowest index.
pub fn best_sequence(
    model: &dyn EntropyModel,
    n: usize,
    strategy: Strategy,
    max_len: Option<usize>,
) -> Result<ConverseReport> {
    check_servers(n)?;
    let mu = model.message_count();
    let depth = max_len.unwrap_or(mu).min(mu);
    if depth == 0 {
        return Err(Error::BadSequence("max_len must be at least 1".into()));
    }
    let sequence = match strategy {
        Strategy::Exhaustive => {
            if mu > EXHAUSTIVE_CAP {
                return Err(Error::TooManyMessagesForExhaustive {
                    mu,
                    cap: EXHAUSTIVE_CAP,
                });
            }
            exhaustive_sequence(model, n, depth)
        }
        Strategy::Greedy => greedy_sequence(model, depth),
    };
    let mut report = converse_bound(model, n, &sequence)?;
    report.strategy = Some(strategy);
    report.truncated_at = max_len.filter(|&m| m < mu);
    Ok(report)
}

fn greedy_sequence(model: &dyn EntropyModel, depth: usize) -> Vec<usize> {
    let mu = model.message_count();
    let mut sequence = Vec::with_capacity(depth);
    let mut unused: Vec<usize> = (1..=mu).collect();
    while sequence.len() < depth {
        let values = model.candidate_conditional_entropies(&sequence, &unused);
        let pick = argmax_lowest(&values);
        sequence.push(unused.remove(pick));
    }
    sequence
}

fn exhaustive_sequence(model: &dyn EntropyModel, n: usize, depth: usize) -> Vec<usize> {
    let mu = model.message_count();
    let full = 1usize << mu;
    let members = |set: usize| -> Vec<usize> { (0..mu).filter(|b| set >> b & 1 == 1).map(|b| b + 1).collect() };
    let inv_n = 1.0 / n as f64;

    // best[set]: largest achievable tail sum once `set` has been placed.
    let mut best = vec![0.0f64; full];
    let mut gains: Vec<Vec<f64>> = vec![Vec::new(); full];
    let mut sets: Vec<usize> = (0..full).filter(|s| (s.count_ones() as usize) < depth).collect();
    sets.sort_by_key(|s| std::cmp::Reverse(s.count_ones()));
    for set in sets {
        let prefix = members(set);
        let candidates: Vec<usize> = (1..=mu).filter(|k| set >> (k - 1) & 1 == 0).collect();
        let weight = inv_n.powi(prefix.len() as i32);
        let cond = model.candidate_conditional_entropies(&prefix, &candidates);
        let mut g = vec![f64::NEG_INFINITY; mu];
        for (&k, h) in candidates.iter().zip(cond) {
            g[k - 1] = h * weight + best[set | 1 << (k - 1)];
        }
        best[set] = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        gains[set] = g;
    }

    let mut set = 0usize;
    let mut sequence = Vec::with_capacity(depth);
    while sequence.len() < depth {
        let k = argmax_lowest(&gains[set]) + 1;
        sequence.push(k);
        set |= 1 << (k - 1);
    }
    sequence
}

/// `C_PIR(mu, N) = (1 + 1/N + ... + 1/N^(mu-1))^-1` for independent messages.
pub fn pir_capacity(mu: usize, n: usize) -> Result<f64> {
    if mu == 0 {
        return Err(Error::domain("message count must be at least 1"));
    }
    if n < 2 {
        return Err(Error::domain(format!("server count {n} must be at least 2")));
    }
    Ok(1.0 / weighted_sum(&vec![1.0; mu], n))
}

/// `(1 - 1/N) H_min / H_max`.
pub fn achievable_rate(model: &dyn EntropyModel, n: usize) -> Result<f64> {
    check_servers(n)?;
    if model.message_count() == 0 {
        return Err(Error::domain("model has no messages"));
    }
    let h_max = model.max_entropy();
    if h_max <= 0.0 {
        return Err(Error::domain("every message is deterministic"));
    }
    Ok((1.0 - 1.0 / n as f64) * model.min_entropy() / h_max)
}

/// `(1 - 1/N)^-1 = N / (N - 1)`, the large-alphabet value of the normalized bound.
pub fn asymptote_reciprocal(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("server count {n} must be at least 2")));
    }
    Ok(n as f64 / (n as f64 - 1.0))
}

/// Balance tolerance for [`sufficient_condition_profile`].
pub const BALANCE_TOLERANCE: f64 = 1e-9;

/// `rho_l = I(w_{k_{l+1}}; w_{k_1..k_l}) / H(w)` for `l = 1..=horizon`.
pub fn sufficient_condition_profile(model: &dyn EntropyModel, sequence: &[usize], horizon: usize) -> Result<Vec<f64>> {
    if !model.is_balanced(BALANCE_TOLERANCE) {
        return Err(Error::NotBalanced {
            min: model.min_entropy(),
            max: model.max_entropy(),
        });
    }
    check_sequence(model, sequence)?;
    if sequence.len() < horizon + 1 {
        return Err(Error::SequenceTooShort {
            len: sequence.len(),
            horizon,
        });
    }
    let h = model.max_entropy();
    if h <= 0.0 {
        return Err(Error::domain("messages carry no information"));
    }
    let prefix = &sequence[..=horizon];
    let terms = model.sequence_conditional_entropies(prefix);
    Ok((1..=horizon)
        .map(|l| ((model.entropy(prefix[l]) - terms[l]) / h).max(0.0))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Figure1Row {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub normalized_bound: f64,
    pub asymptote: f64,
}

/// Normalized bound of exact search along `[1..K]`, for `K = 2..=k_max` and each `N`.
/// Rows are ordered by `K`, then by the order of `n_list`.
pub fn figure1_curve(k_max: usize, n_list: &[usize]) -> Result<Vec<Figure1Row>> {
    if k_max < 2 {
        return Err(Error::domain(format!("K_max = {k_max} must be at least 2")));
    }
    if n_list.is_empty() {
        return Err(Error::domain("server list is empty"));
    }
    let asymptotes = n_list
        .iter()
        .map(|&n| asymptote_reciprocal(n))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity((k_max - 1) * n_list.len());
    for k in 2..=k_max {
        let model = PatternFamilyModel::new(exact_search_family(k)?);
        let sequence: Vec<usize> = (1..=k).collect();
        let terms = model.sequence_conditional_entropies(&sequence);
        let h = model.min_entropy();
        for (&n, &asymptote) in n_list.iter().zip(&asymptotes) {
            rows.push(Figure1Row {
                k,
                n,
                normalized_bound: weighted_sum(&terms, n) / h,
                asymptote,
            });
        }
    }
    Ok(rows)
}
