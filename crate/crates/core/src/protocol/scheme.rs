//! One-mask XOR retrieval over compressed messages.
//!
//! Each codeword of `B` bits is cut into `N - 1` chunks of `B' = ceil(B / (N - 1))`
//! bits, the last one zero-padded. A query is a coefficient vector with one
//! bit per (message, chunk) coordinate; a server answers with the XOR of the
//! selected chunks. Server 1 receives a uniform mask `h`, server `n` receives
//! `h` with coordinate `(theta, n - 1)` flipped, so each server alone sees a
//! uniform vector whatever `theta` is, and `answer_n XOR answer_1` is chunk
//! `n - 1` of the desired codeword.

use std::sync::OnceLock;

use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;

use super::codec::{decode_codeword, encode, Bits, CodecParams};
use super::dataset::{derive_message, Dataset};
use crate::error::{Error, Result};
use crate::patterns::PatternFamily;

/// Sizes shared by client and servers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Layout {
    pub messages: usize,
    pub servers: usize,
    /// `B`.
    pub codeword_bits: usize,
    /// `B'`.
    pub chunk_bits: usize,
}

impl Layout {
    pub fn new(messages: usize, servers: usize, codeword_bits: usize) -> Result<Self> {
        if messages == 0 {
            return Err(Error::domain("layout needs at least one message"));
        }
        if servers < 2 || servers > u8::MAX as usize {
            return Err(Error::domain(format!("server count {servers} outside [2, 255]")));
        }
        Ok(Layout {
            messages,
            servers,
            codeword_bits,
            chunk_bits: codeword_bits.div_ceil(servers - 1),
        })
    }

    pub fn chunks_per_message(&self) -> usize {
        self.servers - 1
    }

    pub fn coefficient_len(&self) -> usize {
        self.messages * self.chunks_per_message()
    }

    /// Coordinate of chunk `j` (1-based) of message `m` (1-based).
    pub fn coordinate(&self, m: usize, j: usize) -> usize {
        (m - 1) * self.chunks_per_message() + (j - 1)
    }

    /// `N B'`, the download of one session.
    pub fn download_bits(&self) -> usize {
        self.servers * self.chunk_bits
    }

    fn check_theta(&self, theta: usize) -> Result<()> {
        if theta == 0 || theta > self.messages {
            return Err(Error::domain(format!("theta {theta} outside [1, {}]", self.messages)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    /// 1-based.
    pub server_id: u8,
    pub coefficients: Bits,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub server_id: u8,
    pub payload: Bits,
}

/// Queries for servers `1..=N` and the private mask `h`, drawn from a
/// [`Pcg64`] seeded with `seed`.
pub fn client_queries(theta: usize, layout: &Layout, seed: u64) -> Result<(Vec<Query>, Bits)> {
    layout.check_theta(theta)?;
    let mut rng = Pcg64::seed_from_u64(seed);
    let mask: Bits = (0..layout.coefficient_len()).map(|_| rng.random::<bool>()).collect();
    let queries = (1..=layout.servers)
        .map(|n| Query {
            server_id: n as u8,
            coefficients: mask_to_query(&mask, theta, n, layout),
        })
        .collect();
    Ok((queries, mask))
}

fn mask_to_query(mask: &Bits, theta: usize, server: usize, layout: &Layout) -> Bits {
    let mut q = mask.clone();
    if server > 1 {
        let c = layout.coordinate(theta, server - 1);
        let flipped = !q[c];
        q.set(c, flipped);
    }
    q
}

/// Recovers `h` from the query a server received; the map is its own inverse.
pub fn mask_inverse(query: &Query, theta: usize, layout: &Layout) -> Result<Bits> {
    layout.check_theta(theta)?;
    check_query(query, layout)?;
    Ok(mask_to_query(
        &query.coefficients,
        theta,
        query.server_id as usize,
        layout,
    ))
}

fn check_query(query: &Query, layout: &Layout) -> Result<()> {
    if query.coefficients.len() != layout.coefficient_len() {
        return Err(Error::LayoutMismatch(format!(
            "query has {} coefficients, layout needs {}",
            query.coefficients.len(),
            layout.coefficient_len()
        )));
    }
    if query.server_id == 0 || query.server_id as usize > layout.servers {
        return Err(Error::LayoutMismatch(format!(
            "server id {} outside [1, {}]",
            query.server_id, layout.servers
        )));
    }
    Ok(())
}

struct StoredMessage {
    chunks: Vec<Bits>,
    atypical: bool,
}

/// The replicated server state: every message of the family, compressed and
/// chunked on first use. All servers hold identical copies, so one store
/// serves every server in a simulation.
pub struct CompressedStore<'a> {
    dataset: &'a Dataset,
    family: &'a PatternFamily,
    params: &'a CodecParams,
    layout: Layout,
    messages: Vec<OnceLock<StoredMessage>>,
}

impl<'a> CompressedStore<'a> {
    pub fn new(
        dataset: &'a Dataset,
        family: &'a PatternFamily,
        params: &'a CodecParams,
        servers: usize,
    ) -> Result<Self> {
        if family.k() != dataset.k {
            return Err(Error::domain(format!(
                "family alphabet {} differs from dataset alphabet {}",
                family.k(),
                dataset.k
            )));
        }
        if params.message_bits != dataset.len() {
            return Err(Error::LengthMismatch {
                expected: params.message_bits,
                actual: dataset.len(),
            });
        }
        let layout = Layout::new(family.mu(), servers, params.total_bits)?;
        Ok(CompressedStore {
            dataset,
            family,
            params,
            layout,
            messages: (0..family.mu()).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn message(&self, m: usize) -> &StoredMessage {
        self.messages[m - 1].get_or_init(|| {
            let bits = derive_message(self.dataset, m, self.family.set(m))
                .expect("family was checked against the dataset alphabet")
                .bits;
            let encoded = encode(&bits, self.params).expect("message length was checked");
            let width = self.layout.chunk_bits;
            let chunks = (0..self.layout.chunks_per_message())
                .map(|j| {
                    let start = (j * width).min(encoded.bits.len());
                    let end = ((j + 1) * width).min(encoded.bits.len());
                    let mut chunk = Bits::with_capacity(width);
                    chunk.extend_from_bitslice(&encoded.bits[start..end]);
                    chunk.resize(width, false);
                    chunk.set_uninitialized(false);
                    chunk
                })
                .collect();
            StoredMessage {
                chunks,
                atypical: encoded.atypical,
            }
        })
    }

    /// Whether message `m` had an atypical block when compressed.
    pub fn atypical(&self, m: usize) -> bool {
        self.message(m).atypical
    }

    /// Chunk `j` (1-based) of message `m`, padded to `B'` bits.
    pub fn chunk(&self, m: usize, j: usize) -> &Bits {
        &self.message(m).chunks[j - 1]
    }
}

/// XOR of the chunks selected by `query`.
pub fn server_answer(query: &Query, store: &CompressedStore<'_>) -> Result<Answer> {
    let layout = store.layout();
    check_query(query, layout)?;
    let mut payload = Bits::repeat(false, layout.chunk_bits);
    payload.set_uninitialized(false);
    for c in query.coefficients.iter_ones() {
        let m = c / layout.chunks_per_message() + 1;
        let j = c % layout.chunks_per_message() + 1;
        xor_into(&mut payload, store.chunk(m, j));
    }
    Ok(Answer {
        server_id: query.server_id,
        payload,
    })
}

/// Byte-wise XOR of two equal-length vectors that both start at bit 0 of
/// their buffers and keep unused bits zero.
pub(crate) fn xor_into(acc: &mut Bits, other: &Bits) {
    debug_assert_eq!(acc.len(), other.len());
    for (a, b) in acc.as_raw_mut_slice().iter_mut().zip(other.as_raw_slice()) {
        *a ^= *b;
    }
}

/// Rebuilds the desired codeword from all `N` answers and decodes it.
pub fn client_decode(answers: &[Answer], layout: &Layout, params: &CodecParams) -> Result<Bits> {
    if answers.len() != layout.servers {
        return Err(Error::LengthMismatch {
            expected: layout.servers,
            actual: answers.len(),
        });
    }
    for (i, a) in answers.iter().enumerate() {
        if a.server_id as usize != i + 1 {
            return Err(Error::LayoutMismatch(format!(
                "answer {} comes from server {}",
                i + 1,
                a.server_id
            )));
        }
        if a.payload.len() != layout.chunk_bits {
            return Err(Error::LengthMismatch {
                expected: layout.chunk_bits,
                actual: a.payload.len(),
            });
        }
    }
    let mut codeword = Bits::with_capacity(layout.chunk_bits * layout.chunks_per_message());
    for a in &answers[1..] {
        let mut chunk = a.payload.clone();
        xor_into(&mut chunk, &answers[0].payload);
        codeword.extend_from_bitslice(&chunk);
    }
    codeword.truncate(layout.codeword_bits);
    decode_codeword(&codeword, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::circular_family;
    use crate::protocol::codec::design_codec;
    use crate::protocol::dataset::generate_dataset;

    #[test]
    fn queries_differ_from_the_mask_in_one_coordinate() {
        let layout = Layout::new(2, 2, 10).unwrap();
        let (q, h) = client_queries(1, &layout, 5).unwrap();
        assert_eq!(q[0].coefficients, h);
        let mut diff = q[1].coefficients.clone();
        xor_into(&mut diff, &q[0].coefficients);
        assert_eq!(diff.iter_ones().collect::<Vec<_>>(), vec![0]);

        let layout = Layout::new(4, 3, 10).unwrap();
        let (q, _) = client_queries(3, &layout, 9).unwrap();
        for n in 2..=3 {
            let mut diff = q[n - 1].coefficients.clone();
            xor_into(&mut diff, &q[0].coefficients);
            assert_eq!(diff.iter_ones().collect::<Vec<_>>(), vec![layout.coordinate(3, n - 1)]);
        }
        assert!(client_queries(5, &layout, 0).is_err());
        assert!(Layout::new(4, 1, 10).is_err());
    }

    #[test]
    fn mask_inverse_recovers_h() {
        let layout = Layout::new(5, 4, 100).unwrap();
        let (q, h) = client_queries(2, &layout, 1).unwrap();
        for query in &q {
            assert_eq!(mask_inverse(query, 2, &layout).unwrap(), h);
        }
    }

    #[test]
    fn answers_and_decoding() {
        let family = circular_family(8).unwrap();
        let data = generate_dataset(8, 1000, 4).unwrap();
        let params = design_codec(0.5, 1000, 1e-3).unwrap();
        let store = CompressedStore::new(&data, &family, &params, 3).unwrap();
        let layout = *store.layout();
        assert_eq!(layout.chunk_bits, 500);

        let zero = Query {
            server_id: 1,
            coefficients: Bits::repeat(false, layout.coefficient_len()),
        };
        assert!(server_answer(&zero, &store).unwrap().payload.not_any());

        let mut one = zero.clone();
        one.coefficients.set(layout.coordinate(1, 1), true);
        assert_eq!(&server_answer(&one, &store).unwrap().payload, store.chunk(1, 1));

        let (queries, _) = client_queries(6, &layout, 77).unwrap();
        let answers: Vec<Answer> = queries.iter().map(|q| server_answer(q, &store).unwrap()).collect();
        let decoded = client_decode(&answers, &layout, &params).unwrap();
        let truth = derive_message(&data, 6, family.set(6)).unwrap().bits;
        assert_eq!(decoded, truth);

        let mut corrupted = answers.clone();
        let flipped = !corrupted[2].payload[7];
        corrupted[2].payload.set(7, flipped);
        assert_ne!(client_decode(&corrupted, &layout, &params).unwrap(), truth);

        let bad = Query {
            server_id: 1,
            coefficients: Bits::repeat(false, 3),
        };
        assert!(matches!(server_answer(&bad, &store), Err(Error::LayoutMismatch(_))));
        assert!(matches!(
            client_decode(&answers[..2], &layout, &params),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
