//! IDX container reader and writer.
//!
//! Layout (all integers big-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic: `0x00000803` images, `0x00000801` labels |
//! | 4      | 4·k  | one u32 count per dimension             |
//! | 4+4k   | Πdims| unsigned-byte payload, row-major        |
//!
//! Images have three dimensions `[n, rows, cols]`, labels one `[n]`. Input
//! that starts with the gzip signature `1f 8b` is decompressed first.

use std::io::Read;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

const GZIP_SIGNATURE: [u8; 2] = [0x1f, 0x8b];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxHeader {
    pub magic: u32,
    pub dims: Vec<u32>,
}

impl IdxHeader {
    pub fn byte_len(&self) -> usize {
        4 + 4 * self.dims.len()
    }

    pub fn payload_len(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }
}

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

/// Returns the raw IDX bytes, inflating gzip input when needed.
pub fn maybe_decompress(bytes: &[u8]) -> Result<std::borrow::Cow<'_, [u8]>> {
    if bytes.starts_with(&GZIP_SIGNATURE) {
        let mut out = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut out)
            .map_err(|e| Error::Format(format!("corrupt gzip stream: {e}")))?;
        Ok(out.into())
    } else {
        Ok(bytes.into())
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format(format!("truncated IDX header at byte {offset}")))
}

/// Reads the header for an expected magic number and number of dimensions,
/// returning it with the payload slice. Bytes after the payload are ignored.
fn split(bytes: &[u8], magic: u32, ndims: usize) -> Result<(IdxHeader, &[u8])> {
    let found = read_u32(bytes, 0)?;
    if found != magic {
        return format_err(format!("magic {found:#010x}, expected {magic:#010x}"));
    }
    let dims = (0..ndims)
        .map(|k| read_u32(bytes, 4 + 4 * k))
        .collect::<Result<Vec<_>>>()?;
    let header = IdxHeader { magic, dims };
    let start = header.byte_len();
    let end = start
        .checked_add(header.payload_len())
        .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    let payload = bytes.get(start..end).ok_or_else(|| {
        Error::Format(format!(
            "payload truncated: need {} bytes, have {}",
            header.payload_len(),
            bytes.len().saturating_sub(start)
        ))
    })?;
    Ok((header, payload))
}

pub fn parse_idx_header(bytes: &[u8]) -> Result<IdxHeader> {
    let magic = read_u32(bytes, 0)?;
    let ndims = match magic {
        IMAGE_MAGIC => 3,
        LABEL_MAGIC => 1,
        other => return format_err(format!("unknown IDX magic {other:#010x}")),
    };
    let dims = (0..ndims)
        .map(|k| read_u32(bytes, 4 + 4 * k))
        .collect::<Result<Vec<_>>>()?;
    Ok(IdxHeader { magic, dims })
}

/// Parses an image file into an `n × (rows·cols)` matrix scaled to `[0, 1]`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Matrix> {
    let raw = maybe_decompress(bytes)?;
    let (header, payload) = split(&raw, IMAGE_MAGIC, 3)?;
    let n = header.dims[0] as usize;
    let pixels = header.dims[1] as usize * header.dims[2] as usize;
    let data = payload.iter().map(|&p| f64::from(p) / 255.0).collect();
    Matrix::new(n, pixels, data)
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let raw = maybe_decompress(bytes)?;
    let (_, payload) = split(&raw, LABEL_MAGIC, 1)?;
    Ok(payload.iter().map(|&l| l as usize).collect())
}

/// Serializes `[0, 1]` features back to bytes (`round(255·x)`), as
/// `[n, rows, cols]` images.
pub fn write_idx_images(features: &Matrix, rows: u32, cols: u32) -> Result<Vec<u8>> {
    if (rows as usize) * (cols as usize) != features.cols() {
        return Err(Error::Shape(format!(
            "{rows}x{cols} images need {} features, matrix has {}",
            rows as usize * cols as usize,
            features.cols()
        )));
    }
    let mut out = Vec::with_capacity(16 + features.len());
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(features.rows() as u32).to_be_bytes());
    out.extend_from_slice(&rows.to_be_bytes());
    out.extend_from_slice(&cols.to_be_bytes());
    for &v in features.as_slice() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Argument(format!("feature {v} outside [0, 1]")));
        }
        out.push((v * 255.0).round() as u8);
    }
    Ok(out)
}

pub fn write_idx_labels(labels: &[usize]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    for &l in labels {
        let byte = u8::try_from(l).map_err(|_| Error::Argument(format!("label {l} does not fit a byte")))?;
        out.push(byte);
    }
    Ok(out)
}
