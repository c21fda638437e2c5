//! Binary PGM (P5) and PPM (P6) codecs.

use std::fs;
use std::path::Path;

use super::GrayImage;
use crate::{Error, Result};

const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_netpbm(&bytes)
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img, 255)).map_err(|e| Error::io(path, e))
}

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    maxval: u32,
    payload_offset: usize,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(start, format!("{what} out of range")))
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(Error::format(0, "expected magic P5 or P6")),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(2, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(
            maxval_at,
            format!("maxval {maxval} not in 1..=65535"),
        ));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::format(cur.pos, "missing whitespace after maxval")),
    }
    Ok(Header {
        channels,
        width,
        height,
        maxval,
        payload_offset: cur.pos,
    })
}

/// Decodes a P5 or P6 buffer. Color is reduced to BT.601 luma.
pub fn decode_netpbm(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_header(bytes)?;
    let sample_bytes = if h.maxval < 256 { 1 } else { 2 };
    let samples = h
        .width
        .checked_mul(h.height)
        .and_then(|n| n.checked_mul(h.channels))
        .ok_or_else(|| Error::format(2, "image dimensions overflow"))?;
    let needed = samples * sample_bytes;
    let payload = &bytes[h.payload_offset..];
    if payload.len() < needed {
        return Err(Error::format(
            bytes.len(),
            format!(
                "truncated raster: {} of {needed} payload bytes present",
                payload.len()
            ),
        ));
    }
    let read = |i: usize| -> f64 {
        if sample_bytes == 1 {
            payload[i] as f64
        } else {
            u16::from_be_bytes([payload[2 * i], payload[2 * i + 1]]) as f64
        }
    };
    let maxval = h.maxval as f64;
    let mut data = Vec::with_capacity(h.width * h.height);
    for p in 0..h.width * h.height {
        let v = if h.channels == 1 {
            read(p)
        } else {
            LUMA_R * read(3 * p) + LUMA_G * read(3 * p + 1) + LUMA_B * read(3 * p + 2)
        };
        data.push((v / maxval).clamp(0.0, 1.0) as f32);
    }
    GrayImage::new(h.width, h.height, data)
}

fn quantize(v: f32, maxval: u32) -> u32 {
    ((v as f64) * maxval as f64).round() as u32
}

/// Encodes as P5 with `maxval` 255 (one byte per sample) or larger
/// (two big-endian bytes per sample).
pub fn encode_pgm(img: &GrayImage, maxval: u16) -> Vec<u8> {
    let maxval = maxval.max(1) as u32;
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), maxval).into_bytes();
    for &v in img.data() {
        push_sample(&mut out, quantize(v, maxval), maxval);
    }
    out
}

/// Encodes an 8-bit RGB raster (`rgb.len() == 3 * width * height`) as P6.
pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    debug_assert_eq!(rgb.len(), 3 * width * height);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

fn push_sample(out: &mut Vec<u8>, q: u32, maxval: u32) {
    if maxval < 256 {
        out.push(q as u8);
    } else {
        out.extend_from_slice(&(q as u16).to_be_bytes());
    }
}
