//! Binary model file, all integers and floats little-endian:
//!
//! ```text
//! "BLSM" | u32 version=1
//! | u32 vocab_size | u32 embed_dim | u32 hidden_dim | u32 num_classes
//! | u32 max_len | u32 dropout_rate (f32 bits) | u32 seed
//! | u32 entry_count | entry_count × (u32 byte, u32 index)
//! | f32 arrays: E, fwd{W_i,W_f,W_o,W_g,U_i,U_f,U_o,U_g,b_i,b_f,b_o,b_g}, bwd{same}, W_out, b_out
//! | u32 CRC32 of every preceding byte
//! ```

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::{Hyperparams, ModelParams};
use crate::corpus::Vocabulary;

pub const MAGIC: [u8; 4] = *b"BLSM";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 7 * 4 + 4;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("Io: {0}")]
    Io(#[from] io::Error),
    #[error("BadMagic: expected \"BLSM\", found {0:?}")]
    BadMagic([u8; 4]),
    #[error("VersionMismatch: expected {FORMAT_VERSION}, found {0}")]
    VersionMismatch(u32),
    #[error("Truncated: file has {actual} bytes, layout needs {needed}")]
    Truncated { needed: usize, actual: usize },
    #[error("TrailingBytes: {0} unexpected byte(s) after the checksum")]
    TrailingBytes(usize),
    #[error("ShapeMismatch: {0}")]
    ShapeMismatch(String),
    #[error("ChecksumMismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
}

pub fn encode(params: &ModelParams<f32>, hp: &Hyperparams, vocab: &Vocabulary) -> Vec<u8> {
    let entries: Vec<(u8, u32)> = vocab.entries().collect();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * entries.len() + 4 * params.param_count() + 4);
    buf.extend_from_slice(&MAGIC);
    let header = [
        FORMAT_VERSION,
        hp.vocab_size as u32,
        hp.embed_dim as u32,
        hp.hidden_dim as u32,
        hp.num_classes as u32,
        hp.max_len as u32,
        hp.dropout_rate.to_bits(),
        hp.seed,
        entries.len() as u32,
    ];
    for v in header {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for (byte, index) in entries {
        buf.extend_from_slice(&u32::from(byte).to_le_bytes());
        buf.extend_from_slice(&index.to_le_bytes());
    }
    for arr in params.arrays() {
        for v in arr {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

pub fn save(
    params: &ModelParams<f32>,
    hp: &Hyperparams,
    vocab: &Vocabulary,
    path: impl AsRef<Path>,
) -> Result<(), FormatError> {
    fs::write(path, encode(params, hp, vocab))?;
    Ok(())
}

pub fn load(
    path: impl AsRef<Path>,
) -> Result<(ModelParams<f32>, Hyperparams, Vocabulary), FormatError> {
    decode(&fs::read(path)?)
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes"))
}

fn need(bytes: &[u8], needed: usize) -> Result<(), FormatError> {
    if bytes.len() < needed {
        Err(FormatError::Truncated {
            needed,
            actual: bytes.len(),
        })
    } else {
        Ok(())
    }
}

/// Parses a model image. Nothing is returned unless the whole file is
/// well-formed and its checksum matches.
pub fn decode(bytes: &[u8]) -> Result<(ModelParams<f32>, Hyperparams, Vocabulary), FormatError> {
    need(bytes, 4)?;
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    need(bytes, 8)?;
    let version = u32_at(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(FormatError::VersionMismatch(version));
    }
    need(bytes, HEADER_LEN)?;
    let field = |k: usize| u32_at(bytes, 8 + 4 * k);
    let hp = Hyperparams {
        vocab_size: field(0) as usize,
        embed_dim: field(1) as usize,
        hidden_dim: field(2) as usize,
        num_classes: field(3) as usize,
        max_len: field(4) as usize,
        dropout_rate: f32::from_bits(field(5)),
        seed: field(6),
    };
    hp.validate()
        .map_err(|e| FormatError::ShapeMismatch(e.to_string()))?;
    let entry_count = field(7) as usize;

    let vocab_end = HEADER_LEN
        .checked_add(entry_count.saturating_mul(8))
        .ok_or_else(|| FormatError::ShapeMismatch("vocabulary too large".into()))?;
    let param_count = super::param_count_for(&hp);
    let total = vocab_end
        .checked_add(param_count.saturating_mul(4))
        .and_then(|n| n.checked_add(4))
        .ok_or_else(|| FormatError::ShapeMismatch("parameter block too large".into()))?;
    need(bytes, total)?;
    if bytes.len() > total {
        return Err(FormatError::TrailingBytes(bytes.len() - total));
    }
    let stored = u32_at(bytes, total - 4);
    let computed = crc32fast::hash(&bytes[..total - 4]);
    if stored != computed {
        return Err(FormatError::ChecksumMismatch { stored, computed });
    }

    let mut entries = Vec::with_capacity(entry_count);
    for k in 0..entry_count {
        let off = HEADER_LEN + 8 * k;
        let byte = u8::try_from(u32_at(bytes, off)).map_err(|_| {
            FormatError::ShapeMismatch(format!("vocabulary entry {k} is not a byte"))
        })?;
        entries.push((byte, u32_at(bytes, off + 4)));
    }
    let vocab_size = u32::try_from(hp.vocab_size)
        .map_err(|_| FormatError::ShapeMismatch("vocab_size overflows u32".into()))?;
    let vocab =
        Vocabulary::from_entries(vocab_size, entries).map_err(FormatError::ShapeMismatch)?;

    let mut params = ModelParams::zeros(&hp);
    let mut off = vocab_end;
    for arr in params.arrays_mut() {
        for v in arr.iter_mut() {
            *v = f32::from_bits(u32_at(bytes, off));
            off += 4;
        }
    }
    if !params.is_finite() {
        return Err(FormatError::ShapeMismatch("non-finite parameter".into()));
    }
    Ok((params, hp, vocab))
}
