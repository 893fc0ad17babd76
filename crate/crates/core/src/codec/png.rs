//! Minimal PNG codec: 8-bit grayscale (color type 0) and RGB (color
//! type 2), non-interlaced. The zlib layer is miniz_oxide; chunk
//! framing, CRC-32 and row filters live here.
//!
//! Decode handles all five row filters. Encode always writes filter
//! `None` rows and a single IDAT chunk, so output bytes are a pure
//! function of the input raster.

use crate::error::{Error, Result};
use crate::raster::Raster;

pub const SIGNATURE: &[u8] = &[0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

// Keeps a crafted header from demanding an absurd allocation.
const MAX_RAW_BYTES: usize = 1 << 31;

pub fn decode(bytes: &[u8]) -> Result<Raster> {
    let body = bytes
        .strip_prefix(SIGNATURE)
        .ok_or_else(|| Error::MalformedFile("bad PNG signature".into()))?;

    let mut chunks = ChunkReader { body, pos: 0 };
    let header = match chunks.next_chunk()? {
        Some(c) if c.kind == *b"IHDR" => parse_ihdr(c.data)?,
        _ => return Err(Error::MalformedFile("PNG must start with IHDR".into())),
    };

    let mut idat: Vec<u8> = Vec::new();
    let mut idat_done = false;
    let mut seen_iend = false;
    while let Some(chunk) = chunks.next_chunk()? {
        match &chunk.kind {
            b"IDAT" => {
                if idat_done {
                    return Err(Error::MalformedFile("non-consecutive IDAT chunks".into()));
                }
                idat.extend_from_slice(chunk.data);
            }
            b"IEND" => {
                if !chunk.data.is_empty() {
                    return Err(Error::MalformedFile("IEND carries data".into()));
                }
                seen_iend = true;
                break;
            }
            b"IHDR" => return Err(Error::MalformedFile("duplicate IHDR".into())),
            kind => {
                if !idat.is_empty() {
                    idat_done = true;
                }
                // Ancillary chunks (lowercase first letter) are skipped;
                // PLTE on a truecolor image is a suggested palette.
                let critical = kind[0].is_ascii_uppercase();
                if critical && kind != b"PLTE" {
                    return Err(Error::UnsupportedFeature(format!(
                        "critical PNG chunk {}",
                        String::from_utf8_lossy(kind)
                    )));
                }
            }
        }
    }
    if !seen_iend {
        return Err(Error::MalformedFile("missing IEND".into()));
    }
    if chunks.pos != body.len() {
        return Err(Error::MalformedFile("trailing bytes after IEND".into()));
    }
    if idat.is_empty() {
        return Err(Error::MalformedFile("no IDAT data".into()));
    }

    let channels = header.channels as usize;
    let row_bytes = header.width as usize * channels;
    let raw_len = (row_bytes + 1)
        .checked_mul(header.height as usize)
        .filter(|&n| n <= MAX_RAW_BYTES)
        .ok_or_else(|| Error::MalformedFile("PNG dimensions too large".into()))?;

    let raw = miniz_oxide::inflate::decompress_to_vec_zlib_with_limit(&idat, raw_len)
        .map_err(|e| Error::MalformedFile(format!("zlib stream: {e}")))?;
    if raw.len() != raw_len {
        return Err(Error::MalformedFile(format!(
            "decompressed image data is {} bytes, expected {raw_len}",
            raw.len()
        )));
    }

    let samples = unfilter(&raw, header.height as usize, row_bytes, channels)?;
    Raster::new(header.width, header.height, header.channels, samples)
}

pub fn encode(img: &Raster) -> Vec<u8> {
    let channels = img.channels() as usize;
    let row_bytes = img.width() as usize * channels;
    let mut raw = Vec::with_capacity((row_bytes + 1) * img.height() as usize);
    for row in img.samples().chunks_exact(row_bytes) {
        raw.push(0); // filter: None
        raw.extend_from_slice(row);
    }
    let compressed = miniz_oxide::deflate::compress_to_vec_zlib(&raw, 6);

    let mut ihdr = Vec::with_capacity(13);
    ihdr.extend_from_slice(&img.width().to_be_bytes());
    ihdr.extend_from_slice(&img.height().to_be_bytes());
    ihdr.push(8); // bit depth
    ihdr.push(if img.channels() == 1 { 0 } else { 2 }); // color type
    ihdr.extend_from_slice(&[0, 0, 0]); // compression, filter, interlace

    let mut out = SIGNATURE.to_vec();
    write_chunk(&mut out, b"IHDR", &ihdr);
    write_chunk(&mut out, b"IDAT", &compressed);
    write_chunk(&mut out, b"IEND", &[]);
    out
}

struct Header {
    width: u32,
    height: u32,
    channels: u8,
}

fn parse_ihdr(data: &[u8]) -> Result<Header> {
    if data.len() != 13 {
        return Err(Error::MalformedFile("IHDR must be 13 bytes".into()));
    }
    let width = u32::from_be_bytes(data[0..4].try_into().unwrap());
    let height = u32::from_be_bytes(data[4..8].try_into().unwrap());
    let (depth, color, compression, filter, interlace) =
        (data[8], data[9], data[10], data[11], data[12]);
    if width == 0 || height == 0 {
        return Err(Error::MalformedFile(format!(
            "PNG dimensions {width}x{height} must be >= 1"
        )));
    }
    if depth != 8 {
        return Err(Error::UnsupportedDepth(format!(
            "PNG bit depth {depth}, only 8 supported"
        )));
    }
    let channels = match color {
        0 => 1,
        2 => 3,
        3 => return Err(Error::UnsupportedColorType("palette PNG".into())),
        4 | 6 => return Err(Error::UnsupportedColorType("PNG with alpha".into())),
        other => {
            return Err(Error::UnsupportedColorType(format!(
                "PNG color type {other}"
            )))
        }
    };
    if compression != 0 || filter != 0 {
        return Err(Error::MalformedFile(
            "unknown PNG compression/filter method".into(),
        ));
    }
    if interlace != 0 {
        return Err(Error::UnsupportedFeature("interlaced PNG".into()));
    }
    Ok(Header {
        width,
        height,
        channels,
    })
}

struct Chunk<'a> {
    kind: [u8; 4],
    data: &'a [u8],
}

struct ChunkReader<'a> {
    body: &'a [u8],
    pos: usize,
}

impl<'a> ChunkReader<'a> {
    fn next_chunk(&mut self) -> Result<Option<Chunk<'a>>> {
        if self.pos == self.body.len() {
            return Ok(None);
        }
        let rest = &self.body[self.pos..];
        if rest.len() < 12 {
            return Err(Error::MalformedFile("truncated PNG chunk".into()));
        }
        let len = u32::from_be_bytes(rest[0..4].try_into().unwrap()) as usize;
        if len > rest.len().saturating_sub(12) {
            return Err(Error::MalformedFile("PNG chunk length overruns file".into()));
        }
        let kind: [u8; 4] = rest[4..8].try_into().unwrap();
        if !kind.iter().all(|b| b.is_ascii_alphabetic()) {
            return Err(Error::MalformedFile("invalid PNG chunk type".into()));
        }
        let data = &rest[8..8 + len];
        let stored_crc = u32::from_be_bytes(rest[8 + len..12 + len].try_into().unwrap());
        if crc32(&rest[4..8 + len]) != stored_crc {
            return Err(Error::MalformedFile(format!(
                "CRC mismatch in {} chunk",
                String::from_utf8_lossy(&kind)
            )));
        }
        self.pos += 12 + len;
        Ok(Some(Chunk { kind, data }))
    }
}

fn write_chunk(out: &mut Vec<u8>, kind: &[u8; 4], data: &[u8]) {
    out.extend_from_slice(&(data.len() as u32).to_be_bytes());
    let start = out.len();
    out.extend_from_slice(kind);
    out.extend_from_slice(data);
    let crc = crc32(&out[start..]);
    out.extend_from_slice(&crc.to_be_bytes());
}

fn unfilter(raw: &[u8], height: usize, row_bytes: usize, bpp: usize) -> Result<Vec<u8>> {
    let mut out = vec![0u8; height * row_bytes];
    for y in 0..height {
        let src = &raw[y * (row_bytes + 1)..(y + 1) * (row_bytes + 1)];
        let filter = src[0];
        let row = &src[1..];
        let (prev_rows, cur) = out.split_at_mut(y * row_bytes);
        let prev = &prev_rows[prev_rows.len().saturating_sub(row_bytes)..];
        let cur = &mut cur[..row_bytes];
        match filter {
            0 => cur.copy_from_slice(row),
            1 => {
                for i in 0..row_bytes {
                    let a = if i >= bpp { cur[i - bpp] } else { 0 };
                    cur[i] = row[i].wrapping_add(a);
                }
            }
            2 => {
                for i in 0..row_bytes {
                    let b = if y > 0 { prev[i] } else { 0 };
                    cur[i] = row[i].wrapping_add(b);
                }
            }
            3 => {
                for i in 0..row_bytes {
                    let a = if i >= bpp { cur[i - bpp] as u16 } else { 0 };
                    let b = if y > 0 { prev[i] as u16 } else { 0 };
                    cur[i] = row[i].wrapping_add(((a + b) / 2) as u8);
                }
            }
            4 => {
                for i in 0..row_bytes {
                    let a = if i >= bpp { cur[i - bpp] } else { 0 };
                    let b = if y > 0 { prev[i] } else { 0 };
                    let c = if y > 0 && i >= bpp { prev[i - bpp] } else { 0 };
                    cur[i] = row[i].wrapping_add(paeth(a, b, c));
                }
            }
            other => {
                return Err(Error::MalformedFile(format!(
                    "unknown PNG row filter {other}"
                )))
            }
        }
    }
    Ok(out)
}

fn paeth(a: u8, b: u8, c: u8) -> u8 {
    let (ai, bi, ci) = (a as i16, b as i16, c as i16);
    let p = ai + bi - ci;
    let (pa, pb, pc) = ((p - ai).abs(), (p - bi).abs(), (p - ci).abs());
    if pa <= pb && pa <= pc {
        a
    } else if pb <= pc {
        b
    } else {
        c
    }
}

fn crc32(data: &[u8]) -> u32 {
    // ISO-HDLC CRC-32, as required by the PNG chunk format.
    static TABLE: std::sync::OnceLock<[u32; 256]> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut table = [0u32; 256];
        for (n, entry) in table.iter_mut().enumerate() {
            let mut c = n as u32;
            for _ in 0..8 {
                c = if c & 1 != 0 { 0xEDB8_8320 ^ (c >> 1) } else { c >> 1 };
            }
            *entry = c;
        }
        table
    });
    let mut crc = 0xFFFF_FFFFu32;
    for &byte in data {
        crc = table[((crc ^ byte as u32) & 0xFF) as usize] ^ (crc >> 8);
    }
    crc ^ 0xFFFF_FFFF
}
