//! Binary checkpoint files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "CTRLZCKP"
//! version      u32
//! id           u64
//! episode      u64
//! param_count  u64
//! eval_count   u64
//! params       param_count x f64
//! evaluation   eval_count x f64
//! ```
//!
//! Optimizer accumulators are not part of the file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Checkpoint, ParameterVector};
use crate::error::{Error, Result};
use crate::stats::RewardSamples;

pub const MAGIC: &[u8; 8] = b"CTRLZCKP";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 8 + 4 + 8 * 4;

pub fn encode(checkpoint: &Checkpoint) -> Vec<u8> {
    let params = checkpoint.params.values();
    let evals = checkpoint.evaluation.values();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * (params.len() + evals.len()));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&checkpoint.id.to_le_bytes());
    buf.extend_from_slice(&checkpoint.episode_index.to_le_bytes());
    buf.extend_from_slice(&(params.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(evals.len() as u64).to_le_bytes());
    for v in params.iter().chain(evals) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Format("unexpected end of file".into()));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, count: u64) -> Result<Vec<f64>> {
        let n = usize::try_from(count)
            .ok()
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| Error::Format(format!("count {count} too large")))?;
        Ok(self
            .take(n)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut cur = Cursor { bytes };
    if cur.take(8)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let id = cur.u64()?;
    let episode_index = cur.u64()?;
    let param_count = cur.u64()?;
    let eval_count = cur.u64()?;
    let params = cur.f64s(param_count)?;
    let evals = cur.f64s(eval_count)?;
    if !cur.bytes.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes", cur.bytes.len())));
    }
    Ok(Checkpoint {
        id,
        episode_index,
        params: ParameterVector::new(params).map_err(|e| Error::Format(e.to_string()))?,
        evaluation: RewardSamples::new(evals).map_err(|e| Error::Format(e.to_string()))?,
    })
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode(checkpoint))?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        Checkpoint {
            id: 3,
            episode_index: 90,
            params: ParameterVector::new(vec![1.5, -0.0, 1e-300]).unwrap(),
            evaluation: RewardSamples::new(vec![200.0, 17.0]).unwrap(),
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample());
        assert_eq!(&bytes[..8], b"CTRLZCKP");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[20..28].try_into().unwrap()), 90);
        assert_eq!(u64::from_le_bytes(bytes[28..36].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[36..44].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[44..52].try_into().unwrap()), 1.5);
        assert_eq!(bytes.len(), 44 + 5 * 8);
    }

    #[test]
    fn round_trip_preserves_negative_zero() {
        let back = decode(&encode(&sample())).unwrap();
        assert_eq!(back, sample());
        assert!(back.params.values()[1].is_sign_negative());
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode(&sample());
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode(&bad_magic), Err(Error::Format(_))));

        let mut bad_version = bytes.clone();
        bad_version[8] = 9;
        assert!(decode(&bad_version).is_err());

        assert!(decode(&bytes[..bytes.len() - 1]).is_err());

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(decode(&trailing).is_err());

        let mut huge = bytes;
        huge[28..36].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode(&huge).is_err());
    }

    #[test]
    fn rejects_empty_evaluation() {
        let mut bytes = encode(&sample());
        bytes[36..44].copy_from_slice(&0u64.to_le_bytes());
        bytes.truncate(bytes.len() - 16);
        assert!(decode(&bytes).is_err());
    }
}
