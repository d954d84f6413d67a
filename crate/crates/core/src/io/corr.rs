//! Correspondence tables: a little-endian `u64` count followed by one
//! `(view_i, row_i, col_i, view_j, row_j, col_j)` record of `u32`s per entry.

use std::path::Path;

use crate::domain::{Correspondence, CorrespondenceSet, Pixel};
use crate::error::{Error, Result};

const RECORD: usize = 6 * 4;

pub fn encode(set: &CorrespondenceSet) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + set.len() * RECORD);
    out.extend_from_slice(&(set.len() as u64).to_le_bytes());
    for e in set.entries() {
        let fields = [
            e.view_i,
            e.pixel_i.row,
            e.pixel_i.col,
            e.view_j,
            e.pixel_j.row,
            e.pixel_j.col,
        ];
        for v in fields {
            let v = u32::try_from(v)
                .map_err(|_| Error::InvalidArgument(format!("correspondence {e} does not fit in u32 fields")))?;
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses a table; entries must already be in canonical order and unique.
pub fn decode(bytes: &[u8], what: &Path) -> Result<CorrespondenceSet> {
    let bad = |m: String| Error::format(what, m);
    let Some((head, body)) = bytes.split_first_chunk::<8>() else {
        return Err(bad("missing entry count".into()));
    };
    let count = u64::from_le_bytes(*head);
    let expected = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(RECORD))
        .ok_or_else(|| bad(format!("implausible entry count {count}")))?;
    if body.len() != expected {
        return Err(bad(format!(
            "{count} entries need {expected} bytes, found {}",
            body.len()
        )));
    }
    let entries = body
        .chunks_exact(RECORD)
        .map(|r| {
            let f = |k: usize| u32::from_le_bytes([r[4 * k], r[4 * k + 1], r[4 * k + 2], r[4 * k + 3]]) as usize;
            Correspondence {
                view_i: f(0),
                pixel_i: Pixel::new(f(1), f(2)),
                view_j: f(3),
                pixel_j: Pixel::new(f(4), f(5)),
            }
        })
        .collect();
    CorrespondenceSet::new(entries).map_err(|e| bad(e.to_string()))
}

pub fn write(path: &Path, set: &CorrespondenceSet) -> Result<()> {
    std::fs::write(path, encode(set)?).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<CorrespondenceSet> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}
