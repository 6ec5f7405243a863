//! Fixed-length enumerative coding of Bernoulli(p) bit strings.
//!
//! A message of `L` bits is cut into blocks of `n` bits (the last block may
//! be shorter). A block whose weight lies in the window `[w_lo, w_hi]` is
//! replaced by its index among all windowed blocks: blocks are ordered by
//! weight first and lexicographically within one weight. The index fits in
//! `b = bits(count - 1)` bits. Blocks outside the window are atypical; they
//! encode as index 0 and raise a flag, which the caller counts as a failure.

use bitvec::prelude::*;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};
use crate::infotheory::h2;

pub type Bits = BitVec<u8, Lsb0>;

pub const DEFAULT_BLOCK_LENGTH: usize = 4096;

/// Window and index table for one block length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockCode {
    pub length: usize,
    pub w_lo: usize,
    pub w_hi: usize,
    /// Codeword bits per block.
    pub bits: usize,
    /// Probability that a Bernoulli(p) block falls outside the window.
    pub tail_mass: f64,
    /// `offsets[i]` = number of windowed blocks of weight below `w_lo + i`;
    /// the final entry is the total count.
    #[serde(skip)]
    offsets: Vec<BigUint>,
}

/// Complete codec description for messages of a fixed length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodecParams {
    /// Per-bit probability of a one, as given (before any complementing).
    pub p: f64,
    pub message_bits: usize,
    pub target_failure: f64,
    /// Balanced bits are stored verbatim.
    pub identity: bool,
    /// Ones are rarer than zeros after this flag is applied.
    pub complemented: bool,
    pub full_blocks: usize,
    pub block: BlockCode,
    pub tail: Option<BlockCode>,
    /// `B`, the codeword length.
    pub total_bits: usize,
    /// Union bound over blocks of the atypical probability.
    pub predicted_failure: f64,
    /// `B / (L H2(p)) - 1`.
    pub overhead: f64,
}

impl CodecParams {
    pub fn block_length(&self) -> usize {
        self.block.length
    }

    pub fn weight_window(&self) -> (usize, usize) {
        (self.block.w_lo, self.block.w_hi)
    }

    pub fn codeword_bits(&self) -> usize {
        self.block.bits
    }

    pub fn blocks_per_message(&self) -> usize {
        self.full_blocks + usize::from(self.tail.is_some())
    }

    fn blocks(&self) -> impl Iterator<Item = &BlockCode> {
        std::iter::repeat_n(&self.block, self.full_blocks).chain(self.tail.as_ref())
    }
}

/// `C(n, w)` for `w` in `lo..=hi`.
fn binomial_row(n: usize, lo: usize, hi: usize) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(hi - lo + 1);
    let mut c = BigUint::one();
    for w in 0..=hi {
        if w >= lo {
            row.push(c.clone());
        }
        c = c * (n - w) as u64 / (w + 1) as u64;
    }
    row
}

/// Bits needed to write every value below `count`.
fn index_bits(count: &BigUint) -> usize {
    if count.is_zero() {
        return 0;
    }
    (count - 1u32).bits() as usize
}

fn design_block(q: f64, n: usize, budget: f64) -> Result<BlockCode> {
    let binom = Binomial::new(q, n as u64).map_err(|e| Error::domain(e.to_string()))?;
    let tail = |lo: usize, hi: usize| -> f64 {
        let below = if lo == 0 { 0.0 } else { binom.cdf(lo as u64 - 1) };
        below + binom.sf(hi as u64)
    };
    let centre = q * n as f64;
    let (lo0, hi0) = (centre.floor() as usize, (centre.ceil() as usize).min(n));
    let mut d = 0;
    loop {
        if d > lo0 || hi0 + d > n {
            return Err(Error::InfeasibleBudget(format!(
                "block of {n} bits needs a tail mass of at most {budget:e}, but the window reaches [0, {n}] first"
            )));
        }
        let (lo, hi) = (lo0 - d, hi0 + d);
        let mass = tail(lo, hi);
        if mass <= budget {
            let mut offsets = Vec::with_capacity(hi - lo + 2);
            let mut acc = BigUint::zero();
            offsets.push(acc.clone());
            for c in binomial_row(n, lo, hi) {
                acc += c;
                offsets.push(acc.clone());
            }
            return Ok(BlockCode {
                length: n,
                w_lo: lo,
                w_hi: hi,
                bits: index_bits(&acc),
                tail_mass: mass,
                offsets,
            });
        }
        d += 1;
    }
}

/// Chooses block windows so that the union-bound failure is at most `target_failure`.
///
/// `p` is the probability of a one. For `p > 1/2` the bits are complemented
/// before coding; `p = 1/2` gives the identity codec with `B = L`.
pub fn design_codec(p: f64, message_bits: usize, target_failure: f64) -> Result<CodecParams> {
    design_codec_with_block(p, message_bits, target_failure, DEFAULT_BLOCK_LENGTH)
}

pub fn design_codec_with_block(
    p: f64,
    message_bits: usize,
    target_failure: f64,
    block_length: usize,
) -> Result<CodecParams> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "bit probability {p} must lie strictly inside (0, 1)"
        )));
    }
    if message_bits == 0 {
        return Err(Error::domain("message length must be at least 1"));
    }
    if block_length == 0 {
        return Err(Error::domain("block length must be at least 1"));
    }
    if !(0.0..=1.0).contains(&target_failure) {
        return Err(Error::domain(format!("target failure {target_failure} outside [0, 1]")));
    }
    let complemented = p > 0.5;
    let q = if complemented { 1.0 - p } else { p };
    let n = block_length.min(message_bits);
    let full_blocks = message_bits / n;
    let rest = message_bits % n;

    if q == 0.5 {
        let identity_block = |len: usize| BlockCode {
            length: len,
            w_lo: 0,
            w_hi: len,
            bits: len,
            tail_mass: 0.0,
            offsets: Vec::new(),
        };
        return Ok(CodecParams {
            p,
            message_bits,
            target_failure,
            identity: true,
            complemented: false,
            full_blocks,
            block: identity_block(n),
            tail: (rest > 0).then(|| identity_block(rest)),
            total_bits: message_bits,
            predicted_failure: 0.0,
            overhead: 0.0,
        });
    }

    let blocks = full_blocks + usize::from(rest > 0);
    let budget = target_failure / blocks as f64;
    let block = design_block(q, n, budget)?;
    let tail = if rest > 0 {
        Some(design_block(q, rest, budget)?)
    } else {
        None
    };
    let total_bits = full_blocks * block.bits + tail.as_ref().map_or(0, |t| t.bits);
    let predicted_failure = full_blocks as f64 * block.tail_mass + tail.as_ref().map_or(0.0, |t| t.tail_mass);
    Ok(CodecParams {
        p,
        message_bits,
        target_failure,
        identity: false,
        complemented,
        full_blocks,
        block,
        tail,
        total_bits,
        predicted_failure,
        overhead: total_bits as f64 / (message_bits as f64 * h2(q)) - 1.0,
    })
}

/// Codeword plus the atypical flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub bits: Bits,
    pub atypical: bool,
}

/// Pending exact update `value * num / den`, kept in machine words until it
/// would overflow.
struct Scaled {
    value: BigUint,
    num: u64,
    den: u64,
}

impl Scaled {
    fn new(value: BigUint) -> Self {
        Scaled { value, num: 1, den: 1 }
    }

    fn scale(&mut self, num: u64, den: u64) {
        match (self.num.checked_mul(num), self.den.checked_mul(den)) {
            (Some(a), Some(b)) => {
                self.num = a;
                self.den = b;
            }
            _ => {
                self.flush();
                self.num = num;
                self.den = den;
            }
        }
    }

    fn flush(&mut self) -> &BigUint {
        if self.num != 1 || self.den != 1 {
            self.value *= self.num;
            self.value /= self.den;
            self.num = 1;
            self.den = 1;
        }
        &self.value
    }
}

/// Rank of `block` among blocks of the same length and weight, lexicographic
/// with position 0 most significant.
fn lex_rank(block: &BitSlice<u8, Lsb0>) -> BigUint {
    // Right-to-left: at distance j from the end with t ones seen, `cur` = C(j, t).
    let mut cur = Scaled::new(BigUint::one());
    let mut rank = BigUint::zero();
    let mut t = 0u64;
    for (j, bit) in block.iter().by_vals().rev().enumerate() {
        let j = j as u64;
        if bit {
            // C(j, t + 1) = C(j, t) (j - t) / (t + 1); Pascal gives C(j + 1, t + 1).
            let term = cur.flush() * (j - t) / (t + 1);
            rank += &term;
            cur.value += term;
            t += 1;
        } else if t > 0 {
            cur.scale(j + 1, j + 1 - t);
        }
    }
    rank
}

/// Inverse of [`lex_rank`] for a block of `len` bits and weight `w`.
fn lex_unrank(mut rank: BigUint, len: usize, w: usize, out: &mut Bits) {
    let mut k = w as u64;
    // cur = C(c, k) with c = remaining positions after the current one.
    let mut cur = BigUint::zero();
    if len > 0 && (k as usize) < len {
        let n = len as u64;
        cur = binomial_row(len, w, w).pop().unwrap() * (n - k) / n;
    }
    for i in 0..len {
        let c = (len - 1 - i) as u64;
        if k == 0 {
            out.push(false);
            continue;
        }
        if k == c + 1 {
            out.push(true);
            k -= 1;
            continue;
        }
        if rank >= cur {
            out.push(true);
            rank -= &cur;
            if c > 0 {
                cur = cur * k / c;
            }
            k -= 1;
        } else {
            out.push(false);
            if c > 0 && k < c {
                cur = cur * (c - k) / c;
            }
        }
    }
}

fn write_index(value: &BigUint, bits: usize, out: &mut Bits) {
    for i in 0..bits {
        out.push(value.bit(i as u64));
    }
}

fn read_index(bits: &BitSlice<u8, Lsb0>) -> BigUint {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (i, b) in bits.iter().by_vals().enumerate() {
        if b {
            bytes[i / 8] |= 1 << (i % 8);
        }
    }
    BigUint::from_bytes_le(&bytes)
}

impl BlockCode {
    fn encode(&self, block: &BitSlice<u8, Lsb0>, out: &mut Bits) -> bool {
        let w = block.count_ones();
        if w < self.w_lo || w > self.w_hi {
            write_index(&BigUint::zero(), self.bits, out);
            return true;
        }
        let index = &self.offsets[w - self.w_lo] + lex_rank(block);
        write_index(&index, self.bits, out);
        false
    }

    fn decode(&self, codeword: &BitSlice<u8, Lsb0>, block_no: usize, out: &mut Bits) -> Result<()> {
        let index = read_index(codeword);
        if &index >= self.offsets.last().unwrap() {
            return Err(Error::InvalidCodeword { block: block_no });
        }
        // Largest weight whose offset does not exceed the index.
        let slot = self.offsets.partition_point(|o| o <= &index) - 1;
        let rank = index - &self.offsets[slot];
        lex_unrank(rank, self.length, self.w_lo + slot, out);
        Ok(())
    }
}

pub fn encode(message: &BitSlice<u8, Lsb0>, params: &CodecParams) -> Result<Encoded> {
    if message.len() != params.message_bits {
        return Err(Error::LengthMismatch {
            expected: params.message_bits,
            actual: message.len(),
        });
    }
    if params.identity {
        return Ok(Encoded {
            bits: message.to_bitvec(),
            atypical: false,
        });
    }
    let source: Bits = if params.complemented {
        !message.to_bitvec()
    } else {
        message.to_bitvec()
    };
    let mut bits = Bits::with_capacity(params.total_bits);
    let mut atypical = false;
    let mut start = 0;
    for code in params.blocks() {
        atypical |= code.encode(&source[start..start + code.length], &mut bits);
        start += code.length;
    }
    Ok(Encoded { bits, atypical })
}

/// Inverts [`encode`] on typical messages. Indices beyond the window count
/// cannot come from `encode` and give [`Error::InvalidCodeword`].
pub fn decode_codeword(codeword: &BitSlice<u8, Lsb0>, params: &CodecParams) -> Result<Bits> {
    if codeword.len() != params.total_bits {
        return Err(Error::LengthMismatch {
            expected: params.total_bits,
            actual: codeword.len(),
        });
    }
    if params.identity {
        return Ok(codeword.to_bitvec());
    }
    let mut out = Bits::with_capacity(params.message_bits);
    let mut start = 0;
    for (block_no, code) in params.blocks().enumerate() {
        code.decode(&codeword[start..start + code.bits], block_no, &mut out)?;
        start += code.bits;
    }
    if params.complemented {
        out = !out;
    }
    Ok(out)
}

/// Exact count of windowed blocks for a block code, for reporting.
pub fn window_count(code: &BlockCode) -> Option<f64> {
    code.offsets.last().and_then(|c| c.to_f64())
}
