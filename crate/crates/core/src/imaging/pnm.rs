//! Netpbm grayscale (P2/P5) and color (P3/P6) reading, binary PGM writing.

use std::path::Path;

use crate::error::{Error, Result};

use super::GrayImage;

fn bad(reason: impl Into<String>) -> Error {
    Error::Format {
        format: "PNM",
        reason: reason.into(),
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(bad(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("{what} out of range")))
    }
}

/// Decodes a PGM or PPM file; color is converted by averaging channels.
pub fn decode_pnm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(bad("missing magic number"));
    }
    let (channels, binary) = match bytes[1] {
        b'2' => (1, false),
        b'5' => (1, true),
        b'3' => (3, false),
        b'6' => (3, true),
        m => return Err(bad(format!("unsupported magic P{}", m as char))),
    };
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(bad("zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(bad(format!("maxval {maxval} out of range")));
    }
    if channels == 3 && maxval > 255 {
        return Err(bad("only 8-bit PPM is supported"));
    }
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| bad("image too large"))?;

    let samples: Vec<u32> = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        if h.pos >= bytes.len() || !bytes[h.pos].is_ascii_whitespace() {
            return Err(bad("missing raster separator"));
        }
        let data = &bytes[h.pos + 1..];
        let wide = maxval > 255;
        let need = if wide { count * 2 } else { count };
        if data.len() < need {
            return Err(bad(format!(
                "truncated raster: {} of {need} bytes",
                data.len()
            )));
        }
        if wide {
            data[..need]
                .chunks_exact(2)
                .map(|b| u16::from_be_bytes([b[0], b[1]]) as u32)
                .collect()
        } else {
            data[..need].iter().map(|&b| b as u32).collect()
        }
    } else {
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            h.skip_space();
            if h.pos >= bytes.len() {
                return Err(bad(format!("truncated raster: {i} of {count} samples")));
            }
            out.push(h.number("sample")? as u32);
        }
        out
    };
    if let Some(v) = samples.iter().find(|&&v| v as usize > maxval) {
        return Err(bad(format!("sample {v} exceeds maxval {maxval}")));
    }

    let scale = maxval as f64;
    let pixels = samples
        .chunks_exact(channels)
        .map(|px| px.iter().map(|&v| v as f64).sum::<f64>() / (channels as f64 * scale))
        .collect();
    GrayImage::new(height, width, pixels)
}

/// Binary 8-bit PGM with round-half-up quantization (values clamped to `[0, 1]`).
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(
        img.pixels()
            .iter()
            .map(|&p| (p.clamp(0.0, 1.0) * 255.0 + 0.5).floor().min(255.0) as u8),
    );
    out
}

pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_pnm(&std::fs::read(path)?)
}

pub fn save_image(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    std::fs::write(path, encode_pgm(img))?;
    Ok(())
}
