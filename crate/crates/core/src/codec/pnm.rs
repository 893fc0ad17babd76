//! Binary PNM codecs: P5 (PGM, grayscale) and P6 (PPM, RGB).
//!
//! Headers are parsed strictly: maxval must be 255 and the sample payload
//! must match the header dimensions exactly, with no trailing bytes.
//! Comments (`#` to end of line) are accepted inside header whitespace.

use crate::error::{Error, Result};
use crate::raster::Raster;

pub fn decode(bytes: &[u8]) -> Result<Raster> {
    let channels: u8 = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(Error::MalformedFile("bad PNM magic".into())),
    };
    let mut cursor = Cursor {
        bytes,
        pos: 2,
    };
    let width = cursor.read_number("width")?;
    let height = cursor.read_number("height")?;
    let maxval = cursor.read_number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedDepth(format!(
            "PNM maxval {maxval}, only 255 supported"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::MalformedFile(format!(
            "PNM dimensions {width}x{height} must be >= 1"
        )));
    }
    // Exactly one whitespace byte separates the header from the samples.
    match cursor.next_byte() {
        Some(b) if b.is_ascii_whitespace() => {}
        _ => {
            return Err(Error::MalformedFile(
                "missing whitespace between PNM header and samples".into(),
            ))
        }
    }
    let expected = (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(channels as usize))
        .ok_or_else(|| Error::MalformedFile("PNM dimensions overflow".into()))?;
    let data = &bytes[cursor.pos..];
    if data.len() < expected {
        return Err(Error::MalformedFile(format!(
            "PNM payload truncated: expected {expected} bytes, got {}",
            data.len()
        )));
    }
    if data.len() > expected {
        return Err(Error::MalformedFile(format!(
            "PNM payload has {} trailing bytes",
            data.len() - expected
        )));
    }
    Raster::new(width, height, channels, data.to_vec())
}

pub fn encode(img: &Raster) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.samples());
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn next_byte(&mut self) -> Option<u8> {
        let b = self.bytes.get(self.pos).copied();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read_number(&mut self, field: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit())
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::MalformedFile(format!(
                "PNM header: expected numeric {field}"
            )));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| Error::MalformedFile(format!("PNM header: invalid {field}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_in_header_are_skipped() {
        let bytes = b"P5 # a comment\n1 1\n# another\n255\n\x2a";
        let r = decode(bytes).unwrap();
        assert_eq!(r.samples(), &[42]);
    }

    #[test]
    fn non_255_maxval_is_unsupported_depth() {
        assert!(matches!(
            decode(b"P5\n1 1\n65535\n\x00\x00"),
            Err(Error::UnsupportedDepth(_))
        ));
    }

    #[test]
    fn truncated_and_padded_payloads_are_rejected() {
        assert!(decode(b"P6\n2 1\n255\n\x00\x00\x00\xff\xff").is_err());
        assert!(decode(b"P6\n2 1\n255\n\x00\x00\x00\xff\xff\xff\xff").is_err());
    }

    #[test]
    fn zero_dimensions_are_rejected() {
        assert!(decode(b"P5\n0 1\n255\n").is_err());
        assert!(decode(b"P5\n1 0\n255\n").is_err());
    }
}
