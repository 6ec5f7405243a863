//! End-to-end sessions, rate measurement and the privacy audit.

use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Serialize, Serializer};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::codec::{design_codec, Bits, CodecParams};
use super::dataset::{derive_message, generate_dataset};
use super::scheme::{client_decode, client_queries, mask_inverse, server_answer, CompressedStore, Layout, Query};
use crate::bounds::{achievable_rate, best_sequence, ConverseReport, PatternFamilyModel, Strategy, EXHAUSTIVE_CAP};
use crate::error::{Error, Result};
use crate::infotheory::h2;
use crate::patterns::PatternFamily;

/// Significance level of the audit's independence test.
pub const AUDIT_SIGNIFICANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SessionSeeds {
    pub dataset: u64,
    pub queries: u64,
}

impl SessionSeeds {
    /// Splits one user-facing seed into independent dataset and query seeds.
    pub fn from_master(seed: u64) -> Self {
        let mut rng = Pcg64::seed_from_u64(seed);
        SessionSeeds {
            dataset: rng.random(),
            queries: rng.random(),
        }
    }
}

fn bit_string<S: Serializer>(bits: &[Bits], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(bits.iter().map(|b| {
        b.iter()
            .by_vals()
            .map(|x| if x { '1' } else { '0' })
            .collect::<String>()
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionTranscript {
    pub theta: usize,
    #[serde(rename = "N")]
    pub servers: usize,
    #[serde(rename = "L")]
    pub message_bits: usize,
    pub seeds: SessionSeeds,
    /// Coefficient vector sent to each server, as `0`/`1` strings.
    #[serde(serialize_with = "bit_string")]
    pub queries: Vec<Bits>,
    pub answer_bits: Vec<usize>,
    pub download_bits: usize,
    /// The desired message had an atypical block.
    pub atypical: bool,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decode_error: Option<String>,
    /// `L H2(M/K) / D`.
    pub measured_rate: f64,
    #[serde(skip)]
    pub decoded: Option<Bits>,
}

/// Per-symbol probability `M / K` of a balanced family.
fn balanced_probability(family: &PatternFamily) -> Result<f64> {
    let Some(m) = family.uniform_size() else {
        let model = PatternFamilyModel::new(family.clone());
        use crate::bounds::EntropyModel;
        return Err(Error::NotBalanced {
            min: model.min_entropy(),
            max: model.max_entropy(),
        });
    };
    if m == family.k() {
        return Err(Error::domain(
            "patterns cover the whole alphabet; messages carry no information",
        ));
    }
    Ok(m as f64 / family.k() as f64)
}

/// Codec used by every session over `family` with messages of `l` bits.
pub fn session_codec(family: &PatternFamily, l: usize, target_failure: f64) -> Result<CodecParams> {
    design_codec(balanced_probability(family)?, l, target_failure)
}

/// One retrieval of message `theta` from `n` servers over a fresh dataset.
pub fn run_session(
    family: &PatternFamily,
    n: usize,
    l: usize,
    theta: usize,
    seeds: SessionSeeds,
    target_failure: f64,
) -> Result<SessionTranscript> {
    let params = session_codec(family, l, target_failure)?;
    run_session_with(family, &params, n, theta, seeds)
}

/// [`run_session`] with a codec designed once by the caller.
pub fn run_session_with(
    family: &PatternFamily,
    params: &CodecParams,
    n: usize,
    theta: usize,
    seeds: SessionSeeds,
) -> Result<SessionTranscript> {
    let p = balanced_probability(family)?;
    let l = params.message_bits;
    let dataset = generate_dataset(family.k(), l, seeds.dataset)?;
    let store = CompressedStore::new(&dataset, family, params, n)?;
    let layout = *store.layout();
    let (queries, _mask) = client_queries(theta, &layout, seeds.queries)?;
    let answers = queries
        .iter()
        .map(|q| server_answer(q, &store))
        .collect::<Result<Vec<_>>>()?;
    let download_bits: usize = answers.iter().map(|a| a.payload.len()).sum();

    let truth = derive_message(&dataset, theta, family.set(theta))?.bits;
    let (decoded, decode_error) = match client_decode(&answers, &layout, params) {
        Ok(bits) => (Some(bits), None),
        Err(e @ Error::InvalidCodeword { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(SessionTranscript {
        theta,
        servers: n,
        message_bits: l,
        seeds,
        queries: queries.into_iter().map(|q| q.coefficients).collect(),
        answer_bits: answers.iter().map(|a| a.payload.len()).collect(),
        download_bits,
        atypical: store.atypical(theta),
        success: decoded.as_ref() == Some(&truth),
        decode_error,
        measured_rate: l as f64 * h2(p) / download_bits as f64,
        decoded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub trials: usize,
    pub failures: usize,
    pub atypical_sessions: usize,
    pub empirical_error_rate: f64,
    pub mean_measured_rate: f64,
    pub min_measured_rate: f64,
    pub max_measured_rate: f64,
    pub download_bits: usize,
    pub codec: CodecParams,
    /// `(1 - 1/N) H_min / H_max`.
    pub achievable_rate: f64,
    /// `H_min / per_record_bound` for the strongest ordering found.
    pub converse_rate_upper_bound: f64,
    pub converse: ConverseReport,
    /// Every measured rate stays at or below the converse upper bound.
    pub sandwich_holds: bool,
}

/// Draws per-trial `(theta, seeds)` from one master seed.
fn trial_plan(mu: usize, trials: usize, seed: u64) -> Vec<(usize, SessionSeeds)> {
    let mut rng = Pcg64::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let theta = rng.random_range(1..=mu);
            let seeds = SessionSeeds {
                dataset: rng.random(),
                queries: rng.random(),
            };
            (theta, seeds)
        })
        .collect()
}

/// Strongest converse available for the family: exact search when small, greedy otherwise.
pub fn converse_for(family: &PatternFamily, n: usize) -> Result<ConverseReport> {
    let model = PatternFamilyModel::new(family.clone());
    let strategy = if family.mu() <= EXHAUSTIVE_CAP {
        Strategy::Exhaustive
    } else {
        Strategy::Greedy
    };
    best_sequence(&model, n, strategy, None)
}

pub fn rate_experiment(
    family: &PatternFamily,
    n: usize,
    l: usize,
    trials: usize,
    seed: u64,
    target_failure: f64,
) -> Result<RateReport> {
    if trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    let params = session_codec(family, l, target_failure)?;
    let converse = converse_for(family, n)?;
    let upper = converse.rate_upper_bound();
    let model = PatternFamilyModel::new(family.clone());

    let mut failures = 0;
    let mut atypical_sessions = 0;
    let mut rate_sum = 0.0;
    let mut min_rate = f64::INFINITY;
    let mut max_rate = 0.0f64;
    let mut download_bits = 0;
    for (theta, seeds) in trial_plan(family.mu(), trials, seed) {
        let t = run_session_with(family, &params, n, theta, seeds)?;
        failures += usize::from(!t.success);
        atypical_sessions += usize::from(t.atypical);
        rate_sum += t.measured_rate;
        min_rate = min_rate.min(t.measured_rate);
        max_rate = max_rate.max(t.measured_rate);
        download_bits = t.download_bits;
    }
    Ok(RateReport {
        trials,
        failures,
        atypical_sessions,
        empirical_error_rate: failures as f64 / trials as f64,
        mean_measured_rate: rate_sum / trials as f64,
        min_measured_rate: min_rate,
        max_measured_rate: max_rate,
        download_bits,
        codec: params,
        achievable_rate: achievable_rate(&model, n)?,
        converse_rate_upper_bound: upper,
        sandwich_holds: max_rate <= upper + 1e-12,
        converse,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServerAudit {
    pub server: usize,
    /// `ones[t][c]` / trials: frequency of a one at coordinate `c` under the `t`-th audited theta.
    pub frequencies: Vec<Vec<f64>>,
    pub max_abs_deviation: f64,
    /// Binomial standard deviation of one frequency, `sqrt(1/4 / trials)`.
    pub sigma: f64,
    pub frequencies_within_4_sigma: bool,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub independent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    #[serde(rename = "N")]
    pub servers: usize,
    pub messages: usize,
    pub thetas: Vec<usize>,
    pub trials_per_theta: usize,
    pub significance: f64,
    pub per_server: Vec<ServerAudit>,
    pub bijection_samples: usize,
    pub bijection_holds: bool,
    pub passed: bool,
}

/// XOR-folds the coefficient vector to 8 bits: output bit `j` is the parity
/// of coefficients `i` with `i mod 8 = j`.
pub fn query_projection(coefficients: &Bits) -> u8 {
    coefficients.iter_ones().fold(0u8, |acc, i| acc ^ (1 << (i % 8)))
}

/// Pearson chi-square test of independence on a contingency table; empty
/// columns are dropped. Returns `(statistic, degrees of freedom, p-value)`.
pub fn chi_square_independence(table: &[Vec<u64>]) -> (f64, usize, f64) {
    let rows: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let width = table.first().map_or(0, Vec::len);
    let cols: Vec<u64> = (0..width).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let grand: u64 = rows.iter().sum();
    let live_rows = rows.iter().filter(|&&r| r > 0).count();
    let live_cols = cols.iter().filter(|&&c| c > 0).count();
    if live_rows < 2 || live_cols < 2 {
        return (0.0, 0, 1.0);
    }
    let mut stat = 0.0;
    for (r, row) in table.iter().enumerate() {
        if rows[r] == 0 {
            continue;
        }
        for (c, &obs) in row.iter().enumerate() {
            if cols[c] == 0 {
                continue;
            }
            let expected = rows[r] as f64 * cols[c] as f64 / grand as f64;
            stat += (obs as f64 - expected).powi(2) / expected;
        }
    }
    let df = (live_rows - 1) * (live_cols - 1);
    let p = ChiSquared::new(df as f64).map_or(1.0, |d| d.sf(stat));
    (stat, df, p)
}

/// Thetas audited by default: first, second and last message.
pub fn audit_thetas(mu: usize) -> Vec<usize> {
    let mut t = vec![1, 2.min(mu), mu];
    t.dedup();
    t.sort_unstable();
    t.dedup();
    t
}

/// Checks that queries seen by any single server do not depend on `theta`.
///
/// For each audited theta, `trials` fresh query sets are drawn. Per server the
/// report gives the one-frequency of every coordinate and a chi-square test
/// of theta against the 8-bit [`query_projection`]. Separately,
/// `bijection_samples` masks are pushed through every server's query map and
/// back through [`mask_inverse`].
pub fn privacy_audit(
    family: &PatternFamily,
    n: usize,
    trials: usize,
    bijection_samples: usize,
    seed: u64,
) -> Result<AuditReport> {
    balanced_probability(family)?;
    if trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    let mu = family.mu();
    let layout = Layout::new(mu, n, 0)?;
    let thetas = audit_thetas(mu);
    let width = layout.coefficient_len();
    let mut rng = Pcg64::seed_from_u64(seed);

    // ones[server][theta][coordinate], hist[server][theta][projection]
    let mut ones = vec![vec![vec![0u64; width]; thetas.len()]; n];
    let mut hist = vec![vec![vec![0u64; 256]; thetas.len()]; n];
    for (ti, &theta) in thetas.iter().enumerate() {
        for _ in 0..trials {
            let (queries, _) = client_queries(theta, &layout, rng.random())?;
            for (s, q) in queries.iter().enumerate() {
                for c in q.coefficients.iter_ones() {
                    ones[s][ti][c] += 1;
                }
                hist[s][ti][query_projection(&q.coefficients) as usize] += 1;
            }
        }
    }

    let sigma = (0.25 / trials as f64).sqrt();
    let per_server: Vec<ServerAudit> = (0..n)
        .map(|s| {
            let frequencies: Vec<Vec<f64>> = ones[s]
                .iter()
                .map(|row| row.iter().map(|&c| c as f64 / trials as f64).collect())
                .collect();
            let max_abs_deviation = frequencies
                .iter()
                .flatten()
                .fold(0.0f64, |m, &f| m.max((f - 0.5).abs()));
            let (chi_square, degrees_of_freedom, p_value) = chi_square_independence(&hist[s]);
            ServerAudit {
                server: s + 1,
                frequencies,
                max_abs_deviation,
                sigma,
                frequencies_within_4_sigma: max_abs_deviation <= 4.0 * sigma,
                chi_square,
                degrees_of_freedom,
                p_value,
                independent: p_value > AUDIT_SIGNIFICANCE,
            }
        })
        .collect();

    let mut bijection_holds = true;
    for _ in 0..bijection_samples {
        let mask: Bits = (0..width).map(|_| rng.random::<bool>()).collect();
        for &theta in &thetas {
            for server in 1..=n {
                let mut coefficients = mask.clone();
                if server > 1 {
                    let c = layout.coordinate(theta, server - 1);
                    let flipped = !coefficients[c];
                    coefficients.set(c, flipped);
                }
                let query = Query {
                    server_id: server as u8,
                    coefficients,
                };
                bijection_holds &= mask_inverse(&query, theta, &layout)? == mask;
            }
        }
    }

    let passed = bijection_holds && per_server.iter().all(|a| a.frequencies_within_4_sigma && a.independent);
    Ok(AuditReport {
        servers: n,
        messages: mu,
        thetas,
        trials_per_theta: trials,
        significance: AUDIT_SIGNIFICANCE,
        per_server,
        bijection_samples,
        bijection_holds,
        passed,
    })
}

/// Reference point: fetch the whole dataset, `L log2 K` bits, from one server.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport {
    #[serde(rename = "N")]
    pub servers: usize,
    #[serde(rename = "L")]
    pub message_bits: usize,
    pub download_bits: f64,
    /// `H2(M/K) / log2 K`.
    pub rate: f64,
}

pub fn baseline_download_all(family: &PatternFamily, n: usize, l: usize) -> Result<BaselineReport> {
    let p = balanced_probability(family)?;
    if n < 2 {
        return Err(Error::NTooSmall(n));
    }
    if l == 0 {
        return Err(Error::domain("message length must be at least 1"));
    }
    let log_k = (family.k() as f64).log2();
    Ok(BaselineReport {
        servers: n,
        message_bits: l,
        download_bits: l as f64 * log_k,
        rate: h2(p) / log_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{circular_family, exact_search_family};

    #[test]
    fn identity_session_accounting() {
        let family = circular_family(8).unwrap();
        let seeds = SessionSeeds { dataset: 1, queries: 2 };
        let t = run_session(&family, 2, 4096, 3, seeds, 1e-3).unwrap();
        assert!(t.success);
        assert_eq!(t.download_bits, 2 * 4096);
        assert_eq!(t.measured_rate, 0.5);
        assert_eq!(t.answer_bits, vec![4096, 4096]);
        assert_eq!(t, run_session(&family, 2, 4096, 3, seeds, 1e-3).unwrap());
    }

    #[test]
    fn compressed_session_decodes() {
        let family = exact_search_family(4).unwrap();
        let seeds = SessionSeeds { dataset: 5, queries: 6 };
        let t = run_session(&family, 3, 8192, 2, seeds, 1e-3).unwrap();
        assert!(t.success, "{t:?}");
        assert!(t.measured_rate < 2.0 / 3.0 && t.measured_rate > 0.9 * 2.0 / 3.0);
    }

    #[test]
    fn unbalanced_family_is_rejected() {
        let f = PatternFamily::new(4, vec![vec![1], vec![2, 3]], "x").unwrap();
        let seeds = SessionSeeds { dataset: 0, queries: 0 };
        assert!(matches!(
            run_session(&f, 2, 100, 1, seeds, 1e-3),
            Err(Error::NotBalanced { .. })
        ));
    }

    #[test]
    fn small_rate_experiment() {
        let family = circular_family(8).unwrap();
        let r = rate_experiment(&family, 2, 1024, 10, 3, 1e-3).unwrap();
        assert_eq!(r.failures, 0);
        assert_eq!(r.mean_measured_rate, 0.5);
        assert!(r.sandwich_holds);
        assert!(r.converse_rate_upper_bound >= 0.5);
    }

    #[test]
    fn projection_folds_mod_8() {
        let mut b = Bits::repeat(false, 20);
        b.set(1, true);
        b.set(9, true);
        b.set(10, true);
        assert_eq!(query_projection(&b), 0b100);
    }

    #[test]
    fn chi_square_detects_dependence() {
        let (_, df, p) = chi_square_independence(&[vec![50, 50, 0], vec![50, 50, 0]]);
        assert_eq!(df, 1);
        assert!((p - 1.0).abs() < 1e-12);
        let (_, _, p) = chi_square_independence(&[vec![90, 10], vec![10, 90]]);
        assert!(p < 1e-10);
    }

    #[test]
    fn small_audit_passes() {
        let family = circular_family(8).unwrap();
        let r = privacy_audit(&family, 3, 2000, 100, 42).unwrap();
        assert_eq!(r.thetas, vec![1, 2, 8]);
        assert!(r.bijection_holds);
        assert!(
            r.passed,
            "{:?}",
            r.per_server.iter().map(|s| s.p_value).collect::<Vec<_>>()
        );
    }

    #[test]
    fn baseline_values() {
        let r = baseline_download_all(&circular_family(16).unwrap(), 2, 1000).unwrap();
        assert_eq!(r.download_bits, 4000.0);
        assert_eq!(r.rate, 0.25);
    }
}
