//! Simulation of private search over replicated servers.
//!
//! Records are drawn uniformly, every pattern yields a message of indicator
//! bits, each message is compressed to a fixed-length codeword, and the
//! client fetches one codeword with the one-mask XOR scheme. All randomness
//! comes from [`rand_pcg::Pcg64`] (PCG XSL-RR 128/64) seeded through
//! `SeedableRng::seed_from_u64`.

pub mod codec;
pub mod dataset;
pub mod scheme;
pub mod session;
pub mod wire;

pub use codec::{decode_codeword, design_codec, encode, Bits, BlockCode, CodecParams, Encoded};
pub use dataset::{derive_message, generate_dataset, Dataset, MessageBits};
pub use scheme::{client_decode, client_queries, mask_inverse, server_answer, Answer, CompressedStore, Layout, Query};
pub use session::{
    baseline_download_all, privacy_audit, rate_experiment, run_session, AuditReport, BaselineReport, RateReport,
    SessionSeeds, SessionTranscript,
};
