//! EGSF binary feature matrices.
//!
//! Layout: magic `EGSF`, then little-endian `u32` version (1), count and dim,
//! then `count * dim` little-endian `f32` values in row-major order.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const EGSF_MAGIC: [u8; 4] = *b"EGSF";
pub const EGSF_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// Dense row-major matrix of 32-bit features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::LengthMismatch {
                expected: rows * dim,
                found: data.len(),
            });
        }
        Ok(FeatureMatrix { rows, dim, data })
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f32>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(FeatureMatrix {
            rows: rows.len(),
            dim,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(&EGSF_MAGIC);
        out.extend_from_slice(&EGSF_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Decode and check against the expected shape.
    pub fn from_bytes(bytes: &[u8], expected_dim: usize, expected_count: usize) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::TruncatedPayload {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
        if magic != EGSF_MAGIC {
            return Err(Error::BadMagic(magic));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let version = word(4);
        if version != EGSF_VERSION {
            return Err(Error::UnsupportedVersion {
                what: "EGSF",
                found: version as u64,
                expected: EGSF_VERSION as u64,
            });
        }
        let count = word(8) as usize;
        let dim = word(12) as usize;
        if dim != expected_dim {
            return Err(Error::DimMismatch {
                expected: expected_dim,
                found: dim,
            });
        }
        if count != expected_count {
            return Err(Error::CountMismatch {
                expected: expected_count,
                found: count,
            });
        }
        let payload = &bytes[HEADER_LEN..];
        let need = count * dim * 4;
        if payload.len() != need {
            return Err(Error::TruncatedPayload {
                expected: HEADER_LEN + need,
                found: bytes.len(),
            });
        }
        let mut data = Vec::with_capacity(count * dim);
        for (k, chunk) in payload.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature {
                    row: k / dim,
                    col: k % dim,
                });
            }
            data.push(v);
        }
        Ok(FeatureMatrix {
            rows: count,
            dim,
            data,
        })
    }
}

/// Read an EGSF file, checking the header against the expected shape.
pub fn load_feature_file(
    path: impl AsRef<Path>,
    expected_dim: usize,
    expected_count: usize,
) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FeatureMatrix::from_bytes(&bytes, expected_dim, expected_count)
}

pub fn write_feature_file(path: impl AsRef<Path>, matrix: &FeatureMatrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Check a file against a pinned hash; an empty pin always passes.
pub fn verify_sha256(path: impl AsRef<Path>, expected: &str) -> Result<()> {
    if expected.is_empty() {
        return Ok(());
    }
    let path = path.as_ref();
    let found = sha256_file(path)?;
    if !found.eq_ignore_ascii_case(expected) {
        return Err(Error::HashMismatch {
            path: path.to_path_buf(),
            expected: expected.to_string(),
            found,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(version: u32, count: u32, dim: u32) -> Vec<u8> {
        let mut b = EGSF_MAGIC.to_vec();
        b.extend_from_slice(&version.to_le_bytes());
        b.extend_from_slice(&count.to_le_bytes());
        b.extend_from_slice(&dim.to_le_bytes());
        b
    }

    #[test]
    fn decodes_three_rows_of_4096() {
        let mut bytes = header(1, 3, 4096);
        for k in 0..3 * 4096 {
            bytes.extend_from_slice(&(k as f32 * 0.25).to_le_bytes());
        }
        let m = FeatureMatrix::from_bytes(&bytes, 4096, 3).unwrap();
        assert_eq!((m.rows(), m.dim()), (3, 4096));
        assert_eq!(m.row(2)[1], (2 * 4096 + 1) as f32 * 0.25);
    }

    #[test]
    fn dim_mismatch() {
        let mut bytes = header(1, 1, 4095);
        bytes.extend(std::iter::repeat_n(0u8, 4095 * 4));
        assert!(matches!(
            FeatureMatrix::from_bytes(&bytes, 4096, 1),
            Err(Error::DimMismatch {
                expected: 4096,
                found: 4095
            })
        ));
    }

    #[test]
    fn count_mismatch_and_truncation() {
        let mut bytes = header(1, 2, 2);
        bytes.extend(std::iter::repeat_n(0u8, 12));
        assert!(matches!(
            FeatureMatrix::from_bytes(&bytes, 2, 3),
            Err(Error::CountMismatch { .. })
        ));
        assert!(matches!(
            FeatureMatrix::from_bytes(&bytes, 2, 2),
            Err(Error::TruncatedPayload { .. })
        ));
        assert!(matches!(
            FeatureMatrix::from_bytes(&bytes[..10], 2, 2),
            Err(Error::TruncatedPayload { .. })
        ));
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = header(1, 0, 2);
        bytes[0] = b'X';
        assert!(matches!(
            FeatureMatrix::from_bytes(&bytes, 2, 0),
            Err(Error::BadMagic(_))
        ));
        let bytes = header(7, 0, 2);
        assert!(matches!(
            FeatureMatrix::from_bytes(&bytes, 2, 0),
            Err(Error::UnsupportedVersion { found: 7, .. })
        ));
    }

    #[test]
    fn nan_payload_rejected() {
        let mut bytes = header(1, 2, 2);
        for v in [0.0f32, 1.0, f32::NAN, 3.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        assert!(matches!(
            FeatureMatrix::from_bytes(&bytes, 2, 2),
            Err(Error::NonFiniteFeature { row: 1, col: 0 })
        ));
    }

    #[test]
    fn header_is_little_endian() {
        let m = FeatureMatrix::new(1, 2, vec![1.0, -2.0]).unwrap();
        let b = m.to_bytes();
        assert_eq!(&b[..4], b"EGSF");
        assert_eq!(&b[4..16], &[1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&b[16..20], &1.0f32.to_le_bytes());
    }

    #[test]
    fn hash_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    proptest! {
        #[test]
        fn round_trip(rows in 0usize..6, dim in 1usize..9, seed in any::<u64>()) {
            let data: Vec<f32> = (0..rows * dim)
                .map(|k| ((seed.wrapping_mul(k as u64 + 1) % 20001) as f32 - 10000.0) / 37.0)
                .collect();
            let m = FeatureMatrix::new(rows, dim, data).unwrap();
            let back = FeatureMatrix::from_bytes(&m.to_bytes(), dim, rows).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
