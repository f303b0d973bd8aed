//! Raster ingestion and emission.
//!
//! Two formats are supported:
//!
//! * CSV matrix: comma-separated values, one raster row per line.
//! * Flat binary: an ASCII header line `"rows cols\n"` followed by
//!   `rows * cols` little-endian IEEE-754 `f64` values in row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::GridField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterFormat {
    Csv,
    Binary,
}

impl RasterFormat {
    /// `.csv` means CSV, anything else is treated as the binary raster.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => RasterFormat::Csv,
            _ => RasterFormat::Binary,
        }
    }
}

pub fn read_field(path: &Path, format: RasterFormat) -> Result<GridField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        RasterFormat::Csv => {
            let text = String::from_utf8(bytes).map_err(|_| Error::Parse {
                line: 0,
                msg: "file is not valid UTF-8".into(),
            })?;
            parse_csv(&text)
        }
        RasterFormat::Binary => decode_binary(&bytes),
    }
}

pub fn write_field(field: &GridField, path: &Path, format: RasterFormat) -> Result<()> {
    let bytes = match format {
        RasterFormat::Csv => to_csv(field.values()).into_bytes(),
        RasterFormat::Binary => encode_binary(field),
    };
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_binary(field: &GridField) -> Vec<u8> {
    let mut out = format!("{} {}\n", field.nrows(), field.ncols()).into_bytes();
    out.reserve(field.len() * 8);
    for v in field.to_row_major() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<GridField> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing header line".into(),
        })?;
    let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| Error::Parse {
        line: 1,
        msg: "header is not ASCII".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: format!("bad header {header:?}: {e}"),
        })?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header must be \"rows cols\", got {header:?}"),
        });
    };
    let payload = &bytes[newline + 1..];
    let expected = rows * cols;
    if payload.len() != expected * 8 {
        if payload.len() < expected * 8 {
            return Err(Error::Truncated {
                expected,
                found: payload.len() / 8,
            });
        }
        return Err(Error::Parse {
            line: 2,
            msg: format!(
                "payload has {} bytes, expected {}",
                payload.len(),
                expected * 8
            ),
        });
    }
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GridField::from_row_major(rows, cols, &data)
}

pub fn parse_csv(text: &str) -> Result<GridField> {
    let matrix = parse_csv_matrix(text)?;
    GridField::new(matrix)
}

/// Parses a rectangular numeric CSV (no header) into a matrix.
pub fn parse_csv_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                let v: f64 = t.trim().parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("not a number: {:?}", t.trim()),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite(format!("csv line {}", idx + 1)))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("row has {} values, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

/// Formats a matrix as CSV using shortest round-trip float formatting.
pub fn to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.len() * 12);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", m[(r, c)]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binary_round_trip_identity_pattern() {
        let field = GridField::new(DMatrix::identity(3, 3)).unwrap();
        let back = decode_binary(&encode_binary(&field)).unwrap();
        assert_eq!(back.values(), field.values());
    }

    #[test]
    fn ragged_csv_names_the_row() {
        let err = parse_csv("1,2,3\n4,5\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_payload_is_truncation() {
        let mut bytes = b"2 3\n".to_vec();
        for v in 0..5 {
            bytes.extend_from_slice(&(v as f64).to_le_bytes());
        }
        assert!(matches!(
            decode_binary(&bytes),
            Err(Error::Truncated {
                expected: 6,
                found: 5
            })
        ));
    }

    #[test]
    fn malformed_header_and_nan() {
        assert!(matches!(
            decode_binary(b"2 x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_csv("1,NaN\n2,3\n"),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn file_round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let field = GridField::new(DMatrix::from_fn(5, 4, |r, c| {
            (r as f64 + 0.1).ln() * 1e3 - c as f64 / 7.0
        }))
        .unwrap();
        for (name, fmt) in [
            ("a.bin", RasterFormat::Binary),
            ("a.csv", RasterFormat::Csv),
        ] {
            let path = dir.path().join(name);
            assert_eq!(RasterFormat::from_path(&path), fmt);
            write_field(&field, &path, fmt).unwrap();
            let back = read_field(&path, fmt).unwrap();
            for (a, b) in back.values().iter().zip(field.values().iter()) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
            }
        }
    }

    proptest! {
        #[test]
        fn binary_round_trip_is_bit_exact(
            rows in 2usize..8,
            cols in 2usize..8,
            seed in proptest::collection::vec(-1e300f64..1e300, 64),
        ) {
            let data: Vec<f64> = seed.iter().cycle().take(rows * cols).copied().collect();
            let field = GridField::from_row_major(rows, cols, &data).unwrap();
            let back = decode_binary(&encode_binary(&field)).unwrap();
            for (a, b) in back.to_row_major().iter().zip(data.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
