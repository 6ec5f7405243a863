//! Byte encoding of queries and answers:
//! `server_id: u8 | bit length: u32 LE | ceil(len / 8) bytes`, bit `i` stored
//! at byte `i / 8`, bit position `i % 8`.

use super::codec::Bits;
use super::scheme::{Answer, Query};
use crate::error::{Error, Result};

fn pack(server_id: u8, bits: &Bits) -> Vec<u8> {
    let len = u32::try_from(bits.len()).expect("bit strings are shorter than 2^32");
    let mut out = Vec::with_capacity(5 + bits.len().div_ceil(8));
    out.push(server_id);
    out.extend_from_slice(&len.to_le_bytes());
    let mut body = bits.clone();
    body.set_uninitialized(false);
    out.extend_from_slice(body.as_raw_slice());
    out
}

fn unpack(bytes: &[u8]) -> Result<(u8, Bits)> {
    if bytes.len() < 5 {
        return Err(Error::Parse(format!(
            "record of {} bytes is shorter than its header",
            bytes.len()
        )));
    }
    let server_id = bytes[0];
    let len = u32::from_le_bytes(bytes[1..5].try_into().unwrap()) as usize;
    let body = &bytes[5..];
    if body.len() != len.div_ceil(8) {
        return Err(Error::Parse(format!(
            "{len} bits need {} payload bytes, found {}",
            len.div_ceil(8),
            body.len()
        )));
    }
    let mut bits = Bits::from_slice(body);
    if bits[len..].any() {
        return Err(Error::Parse("nonzero padding bits".into()));
    }
    bits.truncate(len);
    Ok((server_id, bits))
}

impl Query {
    pub fn to_bytes(&self) -> Vec<u8> {
        pack(self.server_id, &self.coefficients)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (server_id, coefficients) = unpack(bytes)?;
        Ok(Query {
            server_id,
            coefficients,
        })
    }
}

impl Answer {
    pub fn to_bytes(&self) -> Vec<u8> {
        pack(self.server_id, &self.payload)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (server_id, payload) = unpack(bytes)?;
        Ok(Answer { server_id, payload })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bitvec::prelude::*;

    #[test]
    fn layout_of_bytes() {
        let q = Query {
            server_id: 2,
            coefficients: bitvec![u8, Lsb0; 1, 0, 0, 0, 0, 0, 0, 0, 0, 1],
        };
        assert_eq!(q.to_bytes(), vec![2, 10, 0, 0, 0, 0b0000_0001, 0b0000_0010]);
        assert_eq!(Query::from_bytes(&q.to_bytes()).unwrap(), q);
    }

    #[test]
    fn round_trips_and_rejects_garbage() {
        let a = Answer {
            server_id: 7,
            payload: (0..1001).map(|i| i % 3 == 0).collect(),
        };
        assert_eq!(Answer::from_bytes(&a.to_bytes()).unwrap(), a);
        let empty = Answer {
            server_id: 1,
            payload: Bits::new(),
        };
        assert_eq!(Answer::from_bytes(&empty.to_bytes()).unwrap(), empty);

        assert!(matches!(Query::from_bytes(&[1, 2]), Err(Error::Parse(_))));
        assert!(matches!(Query::from_bytes(&[1, 9, 0, 0, 0, 0]), Err(Error::Parse(_))));
        assert!(matches!(
            Query::from_bytes(&[1, 3, 0, 0, 0, 0xff]),
            Err(Error::Parse(_))
        ));
    }
}
