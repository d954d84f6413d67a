//! Portable float maps (`Pf` grayscale, `PF` RGB).
//!
//! Rows are stored bottom-to-top; a negative scale marks little-endian data.
//! [`PfmImage`] keeps rows top-to-bottom, channels interleaved.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    /// 1 or 3.
    pub channels: usize,
    /// `data[(row * width + col) * channels + c]`, row 0 at the top.
    pub data: Vec<f32>,
}

impl PfmImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<PfmImage> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!("PFM holds 1 or 3 channels, not {channels}")));
        }
        if width == 0 || height == 0 || data.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {width}x{height}x{channels} PFM",
                data.len()
            )));
        }
        Ok(PfmImage {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn get(&self, index: usize, channel: usize) -> f32 {
        self.data[index * self.channels + channel]
    }

    pub fn encode(&self) -> Vec<u8> {
        let tag = if self.channels == 3 { "PF" } else { "Pf" };
        let mut out = format!("{tag}\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        let row_len = self.width * self.channels;
        out.reserve(self.data.len() * 4);
        for row in (0..self.height).rev() {
            for v in &self.data[row * row_len..(row + 1) * row_len] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Parses a PFM file held in memory. `what` names the source in errors.
    pub fn decode(bytes: &[u8], what: &Path) -> Result<PfmImage> {
        let bad = |m: &str| Error::format(what, m);
        let mut pos = 0;
        let mut tokens = Vec::with_capacity(4);
        // Header: tag, width, height, scale, each followed by whitespace;
        // the last one by exactly one whitespace byte.
        while tokens.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
        }
        if pos >= bytes.len() {
            return Err(bad("missing pixel data"));
        }
        pos += 1;
        let channels = match tokens[0] {
            "Pf" => 1,
            "PF" => 3,
            t => return Err(bad(&format!("unknown magic {t:?}"))),
        };
        let dim = |t: &str| t.parse::<usize>().ok().filter(|&v| v > 0);
        let (Some(width), Some(height)) = (dim(tokens[1]), dim(tokens[2])) else {
            return Err(bad("invalid dimensions"));
        };
        let scale: f64 = tokens[3].parse().map_err(|_| bad("invalid scale"))?;
        if scale == 0.0 || !scale.is_finite() {
            return Err(bad("invalid scale"));
        }
        let little = scale < 0.0;
        let n = width
            .checked_mul(height)
            .and_then(|v| v.checked_mul(channels))
            .ok_or_else(|| bad("dimensions overflow"))?;
        let payload = &bytes[pos..];
        if payload.len() != n * 4 {
            return Err(bad(&format!("expected {} payload bytes, found {}", n * 4, payload.len())));
        }
        let row_len = width * channels;
        let mut data = vec![0.0f32; n];
        for (k, chunk) in payload.chunks_exact(4).enumerate() {
            let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
            let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
            let (file_row, rest) = (k / row_len, k % row_len);
            data[(height - 1 - file_row) * row_len + rest] = v;
        }
        Ok(PfmImage {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn read(path: &Path) -> Result<PfmImage> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }
}
