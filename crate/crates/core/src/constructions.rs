//! Pattern families with known entropy behaviour.
//!
//! * exact search: singletons `{k}`;
//! * disjoint blocks of size `M`, which act as exact search over `K / M`;
//! * nested sets, where each new set takes a `gamma = M / K` share of every
//!   Venn cell of the previous ones, so `H(w_l | w_1..w_{l-1}) -> H2(gamma)`;
//! * half-circle arcs on a circular alphabet, with an exhaustive scan over
//!   ordered arc triples.

use serde::Serialize;

use crate::bounds::{EntropyModel, PatternFamilyModel};
use crate::error::{Error, Result};
use crate::infotheory::h2;
use crate::patterns::{PatternFamily, Refinement, Signature};

/// `mu = K` singleton patterns `{1}, ..., {K}`.
pub fn exact_search_family(k: usize) -> Result<PatternFamily> {
    if k < 2 {
        return Err(Error::domain(format!("exact search needs K >= 2, got {k}")));
    }
    PatternFamily::new(k, (1..=k as u32).map(|v| vec![v]).collect(), "exact")
}

/// Consecutive blocks `{1..M}, {M+1..2M}, ...` covering `[1, K]`.
pub fn disjoint_subfamily(k: usize, m: usize) -> Result<PatternFamily> {
    if m == 0 {
        return Err(Error::domain("pattern size M must be at least 1"));
    }
    if !k.is_multiple_of(m) {
        return Err(Error::NotDivisible { k, m });
    }
    if k / m < 2 {
        return Err(Error::domain(format!("K / M = {} leaves fewer than two blocks", k / m)));
    }
    let sets = (0..k / m)
        .map(|b| ((b * m + 1) as u32..=((b + 1) * m) as u32).collect())
        .collect();
    PatternFamily::new(k, sets, "disjoint")
}

fn check_nested_params(k: usize, m: usize, depth: usize) -> Result<()> {
    if m == 0 || 2 * m > k {
        return Err(Error::domain(format!(
            "nested construction needs 1 <= M <= K/2, got K={k}, M={m}"
        )));
    }
    if depth == 0 {
        return Err(Error::domain("depth must be at least 1"));
    }
    let max = nested_max_depth(k, m);
    if depth > max {
        return Err(Error::DepthTooLarge { depth, max });
    }
    Ok(())
}

/// Largest depth accepted by the nested construction:
/// `max(2, floor(log_{1/gamma} sqrt(K)))`.
///
/// Depth 2 is always allowed so that small alphabets still yield a pair.
pub fn nested_max_depth(k: usize, m: usize) -> usize {
    let gamma = m as f64 / k as f64;
    let levels = (k as f64).sqrt().ln() / (1.0 / gamma).ln();
    ((levels + 1e-9).floor() as usize).max(2)
}

/// `depth` patterns of size `M`, each splitting every cell of the previous ones.
///
/// `S_1 = {1..M}`. Pattern `S_l` takes `floor(gamma * |C|)` lowest members of
/// each cell `C` (cells ordered by smallest member). Any shortfall below `M`
/// is filled first from the cell outside every earlier pattern, lowest values
/// first, then from the largest remaining cell.
pub fn nested_gamma_subfamily(k: usize, m: usize, depth: usize) -> Result<PatternFamily> {
    check_nested_params(k, m, depth)?;
    let gamma = m as f64 / k as f64;
    let mut sets: Vec<Vec<u32>> = vec![(1..=m as u32).collect()];
    while sets.len() < depth {
        let family = PatternFamily::new(k, sets.clone(), "nested")?;
        let mut refinement = Refinement::new(&family);
        for i in 1..=sets.len() {
            refinement.refine(i);
        }
        let zero = Signature(vec![false; sets.len()]);
        let mut take = Vec::with_capacity(m);
        let mut rest: Vec<(bool, Vec<u32>)> = Vec::new();
        for (cell, members) in refinement.members_in_alphabet_order() {
            let quota = (gamma * members.len() as f64).floor() as usize;
            take.extend_from_slice(&members[..quota]);
            rest.push((refinement.signatures[cell] == zero, members[quota..].to_vec()));
        }
        let mut short = m - take.len();
        if let Some((_, pool)) = rest.iter_mut().find(|(is_zero, _)| *is_zero) {
            let n = short.min(pool.len());
            take.extend(pool.drain(..n));
            short -= n;
        }
        while short > 0 {
            let (_, pool) = rest
                .iter_mut()
                .filter(|(_, pool)| !pool.is_empty())
                .max_by(|(_, a), (_, b)| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
                .ok_or_else(|| Error::domain("nested construction ran out of values"))?;
            take.push(pool.remove(0));
            short -= 1;
        }
        take.sort_unstable();
        sets.push(take);
    }
    PatternFamily::new(k, sets, "nested")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NestedBound {
    pub bits: f64,
    /// Terms whose binary-entropy argument left `[0, 1]` and was clamped.
    pub clamped_terms: usize,
}

/// Lower bound on `H(w_l | w_1..w_{l-1})` for the nested family, summed over
/// the `2^(l-1)` cells of the first `l - 1` patterns. Cell `i` has `m_i` ones
/// in the binary expansion of `i`, nominal mass `gamma^(l-1-m_i) (1-gamma)^m_i`,
/// and size within `l - 1` of that mass times `K`.
pub fn nested_conditional_lower_bound(k: usize, m: usize, l: usize) -> Result<NestedBound> {
    if l < 2 {
        return Err(Error::domain(format!("level l = {l} must be at least 2")));
    }
    check_nested_params(k, m, l)?;
    let gamma = m as f64 / k as f64;
    let kf = k as f64;
    let slack = (l - 1) as f64;
    let mut bits = 0.0;
    let mut clamped_terms = 0;
    for i in 0u32..1 << (l - 1) {
        let ones = i.count_ones() as i32;
        let zeros = (l - 1) as i32 - ones;
        let mass = gamma.powi(zeros) * (1.0 - gamma).powi(ones);
        let ratio = (gamma * gamma * mass * kf - slack) / (gamma * mass * kf + slack);
        let arg = if (0.0..=1.0).contains(&ratio) {
            ratio
        } else {
            clamped_terms += 1;
            ratio.clamp(0.0, 1.0)
        };
        bits += h2(arg) * mass;
    }
    Ok(NestedBound { bits, clamped_terms })
}

/// `K` half-circle arcs `S_k = {<k+1>, ..., <k+K/2>}` with `<v> = v mod K + 1`.
pub fn circular_family(k: usize) -> Result<PatternFamily> {
    if !k.is_multiple_of(2) {
        return Err(Error::OddK(k));
    }
    if k < 4 {
        return Err(Error::domain(format!("circular family needs K >= 4, got {k}")));
    }
    let m = k / 2;
    let sets = (1..=k)
        .map(|s| (1..=m).map(|i| ((s + i - 1) % k + 1) as u32).collect())
        .collect();
    PatternFamily::new(k, sets, "circular")
}

/// Best continuation for one `(k1, k2)` head of an arc triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop5Row {
    pub k1: usize,
    pub k2: usize,
    /// `H(w_k2 | w_k1)`.
    pub h2_given_1: f64,
    /// Lowest-index `k3` maximizing `H(w_k3 | w_k1, w_k2)`.
    pub best_k3: usize,
    pub h3_given_12: f64,
    /// `min(h2_given_1, h3_given_12)`.
    pub min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop5ScanReport {
    #[serde(rename = "K")]
    pub k: usize,
    /// Whether `k1` was fixed to 1 by rotational symmetry.
    pub rotation_reduced: bool,
    pub triples_scanned: u64,
    /// Max over ordered triples of `min(H(w_k2 | w_k1), H(w_k3 | w_k1, w_k2))`.
    pub max_min: f64,
    /// First head in scan order attaining `max_min`, with its best `k3`.
    pub argmax: (usize, usize, usize),
    /// Row for `k2` a quarter turn (`K / 4` positions, rounded down) from `k1 = 1`.
    pub quarter_offset: Prop5Row,
    pub rows: Vec<Prop5Row>,
}

fn check_prop5(k: usize) -> Result<()> {
    if !k.is_multiple_of(2) {
        return Err(Error::OddK(k));
    }
    if k < 8 {
        return Err(Error::domain(format!("triple scan needs K >= 8, got {k}")));
    }
    Ok(())
}

fn scan_head(model: &PatternFamilyModel, k1: usize, k2: usize) -> Prop5Row {
    let k = model.message_count();
    let h2_given_1 = model.conditional_entropy(k2, &[k1]);
    let candidates: Vec<usize> = (1..=k).filter(|&c| c != k1 && c != k2).collect();
    let values = model.candidate_conditional_entropies(&[k1, k2], &candidates);
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] + 1e-12 {
            best = i;
        }
    }
    let h3_given_12 = values[best];
    Prop5Row {
        k1,
        k2,
        h2_given_1,
        best_k3: candidates[best],
        h3_given_12,
        min: h2_given_1.min(h3_given_12),
    }
}

fn scan(k: usize, heads: impl Iterator<Item = (usize, usize)>, rotation_reduced: bool) -> Result<Prop5ScanReport> {
    check_prop5(k)?;
    let model = PatternFamilyModel::new(circular_family(k)?);
    let rows: Vec<Prop5Row> = heads.map(|(a, b)| scan_head(&model, a, b)).collect();

    // With k3 chosen to maximize its own term, min(h2, h3) is maximized per
    // head, so the best head gives the best triple.
    let mut best = &rows[0];
    for row in &rows {
        if row.min > best.min + 1e-12 {
            best = row;
        }
    }
    let quarter_offset = scan_head(&model, 1, 1 + k / 4);
    Ok(Prop5ScanReport {
        k,
        rotation_reduced,
        triples_scanned: rows.len() as u64 * (k as u64 - 2),
        max_min: best.min,
        argmax: (best.k1, best.k2, best.best_k3),
        quarter_offset,
        rows,
    })
}

/// Scans every ordered triple of distinct arcs of `circular_family(K)` with
/// `k1 = 1`; every other triple is a rotation of one of these.
pub fn prop5_triple_scan(k: usize) -> Result<Prop5ScanReport> {
    scan(k, (2..=k).map(|b| (1, b)), true)
}

/// Same scan without the rotation reduction; `K` times the work.
pub fn prop5_triple_scan_unreduced(k: usize) -> Result<Prop5ScanReport> {
    let heads = (1..=k).flat_map(move |a| (1..=k).filter(move |&b| b != a).map(move |b| (a, b)));
    scan(k, heads, false)
}

/// `I(w_{l+1}; w_1..w_l)` for exact search: `H2(1/K) - (1 - l/K) H2(1/(K-l))`.
pub fn exact_mi_closed_form(k: usize, l: usize) -> Result<f64> {
    if l == 0 || l >= k {
        return Err(Error::domain(format!("need 1 <= l < K, got l={l}, K={k}")));
    }
    let kf = k as f64;
    let lf = l as f64;
    Ok(h2(1.0 / kf) - (1.0 - lf / kf) * h2(1.0 / (kf - lf)))
}
