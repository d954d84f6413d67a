//! Lighting vectors as text: nine numbers per line, one line per vector.
//! Blank lines and `#` comments are ignored. Numbers are written in the
//! shortest form that parses back to the same `f64`.

use std::path::Path;

use crate::domain::LightingVector;
use crate::error::{Error, Result};

pub fn format(vectors: &[LightingVector]) -> String {
    let mut out = String::new();
    for v in vectors {
        let line: Vec<String> = v.0.iter().map(|x| format!("{x:e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse(text: &str, what: &Path) -> Result<Vec<LightingVector>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(what, format!("line {}: {e}", k + 1)))?;
        let Ok(sigma) = <[f64; 9]>::try_from(nums.as_slice()) else {
            return Err(Error::format(
                what,
                format!("line {}: expected 9 numbers, found {}", k + 1, nums.len()),
            ));
        };
        let v = LightingVector(sigma);
        if !v.is_finite() {
            return Err(Error::format(what, format!("line {}: non-finite coefficient", k + 1)));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn write(path: &Path, vectors: &[LightingVector]) -> Result<()> {
    std::fs::write(path, format(vectors)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Vec<LightingVector>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

/// Interprets a lighting file for `views` views of `channels` channels:
/// either one line per channel, shared by every view, or one line per view
/// and channel, view-major. Returns `[view][channel]`.
pub fn per_view(vectors: Vec<LightingVector>, views: usize, channels: usize, what: &Path) -> Result<Vec<Vec<LightingVector>>> {
    if vectors.len() == channels {
        Ok(vec![vectors; views])
    } else if vectors.len() == views * channels {
        Ok(vectors.chunks(channels).map(<[_]>::to_vec).collect())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{}: {} lighting vector(s), expected {channels} (shared) or {} ({views} views x {channels} channels)",
            what.display(),
            vectors.len(),
            views * channels
        )))
    }
}
