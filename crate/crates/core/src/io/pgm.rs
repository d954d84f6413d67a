//! Binary PGM (`P5`) masks: 255 inside the domain, 0 outside.

use std::path::Path;

use crate::domain::PixelDomain;
use crate::error::{Error, Result};

pub fn encode_mask(domain: &PixelDomain) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", domain.width(), domain.height()).into_bytes();
    out.extend(domain.mask().iter().map(|&m| if m { 255u8 } else { 0 }));
    out
}

/// Parses a mask; any nonzero sample is inside the domain.
pub fn decode_mask(bytes: &[u8], what: &Path) -> Result<PixelDomain> {
    let bad = |m: &str| Error::format(what, m);
    let mut pos = 0;
    let mut tokens: Vec<&str> = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
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
    if tokens[0] != "P5" {
        return Err(bad(&format!("expected binary PGM (P5), found {:?}", tokens[0])));
    }
    let num = |t: &str| t.parse::<usize>().ok().filter(|&v| v > 0);
    let (Some(width), Some(height), Some(maxval)) = (num(tokens[1]), num(tokens[2]), num(tokens[3])) else {
        return Err(bad("invalid header values"));
    };
    if maxval > 255 {
        return Err(bad("16-bit masks are not supported"));
    }
    pos += 1;
    let payload = bytes.get(pos..).unwrap_or(&[]);
    if payload.len() != width * height {
        return Err(bad(&format!(
            "expected {} mask bytes, found {}",
            width * height,
            payload.len()
        )));
    }
    PixelDomain::new(width, height, payload.iter().map(|&b| b != 0).collect())
        .map_err(|e| bad(&e.to_string()))
}

pub fn write_mask(path: &Path, domain: &PixelDomain) -> Result<()> {
    std::fs::write(path, encode_mask(domain)).map_err(|e| Error::io(path, e))
}

pub fn read_mask(path: &Path) -> Result<PixelDomain> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_mask(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn comments_are_skipped() {
        let bytes = b"P5\n# made by hand\n2 1\n255\n\x00\xff";
        let d = decode_mask(bytes, Path::new("m.pgm")).unwrap();
        assert_eq!(d.mask(), &[false, true]);
    }

    #[test]
    fn empty_mask_is_rejected() {
        let bytes = b"P5\n2 1\n255\n\x00\x00";
        assert!(matches!(decode_mask(bytes, Path::new("m.pgm")), Err(Error::Format { .. })));
    }

    proptest! {
        #[test]
        fn round_trip(w in 1usize..8, h in 1usize..8, bits in proptest::collection::vec(any::<bool>(), 64)) {
            let mut mask: Vec<bool> = bits[..w * h].to_vec();
            mask[0] = true;
            let d = PixelDomain::new(w, h, mask).unwrap();
            prop_assert_eq!(decode_mask(&encode_mask(&d), Path::new("m.pgm")).unwrap(), d);
        }
    }
}
