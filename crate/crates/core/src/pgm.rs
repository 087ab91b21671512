//! PGM (portable graymap) reading and writing.
//!
//! Both the binary `P5` and the plain `P2` variants are supported with a
//! maxval of at most 255. Sample values are kept as stored; no rescaling is
//! applied when the maxval is below 255.

use crate::error::{Error, Result};
use crate::image::Image;

/// Plain PGM lines must not exceed 70 characters.
const PLAIN_LINE_LIMIT: usize = 70;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn error(&self, reason: impl Into<String>) -> Error {
        Error::Decode {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    /// Skips whitespace and `#` comments running to end of line.
    fn skip_separators(&mut self) {
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

    fn read_uint(&mut self, what: &str) -> Result<usize> {
        self.skip_separators();
        let start = self.pos;
        let mut value: usize = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(usize::from(b - b'0')))
                .ok_or_else(|| self.error(format!("{what} is too large")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(match self.bytes.get(self.pos) {
                None => self.error(format!("unexpected end of data, expected {what}")),
                Some(_) => self.error(format!("expected {what}")),
            });
        }
        if let Some(&b) = self.bytes.get(self.pos) {
            if !(b.is_ascii_whitespace() || b == b'#') {
                return Err(self.error(format!("unexpected byte 0x{b:02x} after {what}")));
            }
        }
        Ok(value)
    }
}

/// Decodes a `P5` or `P2` PGM file.
pub fn load_pgm(bytes: &[u8]) -> Result<Image> {
    let mut cur = Cursor { bytes, pos: 0 };
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(cur.error("missing P5/P2 magic number")),
    };
    cur.pos = 2;
    match bytes.get(2) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        None => return Err(cur.error("unexpected end of data after magic number")),
        Some(_) => return Err(cur.error("magic number must be followed by whitespace")),
    }

    let width = cur.read_uint("width")?;
    let height = cur.read_uint("height")?;
    let maxval_pos = {
        cur.skip_separators();
        cur.pos
    };
    let maxval = cur.read_uint("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Decode {
            offset: maxval_pos,
            reason: format!("maxval {maxval} outside 1..=255"),
        });
    }
    if width == 0 || height == 0 {
        return Err(cur.error(format!("dimensions must be positive, got {width}x{height}")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| cur.error("dimensions overflow"))?;

    let pixels = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(cur.error("expected single whitespace before raster")),
        }
        let available = bytes.len() - cur.pos;
        if available < count {
            return Err(Error::Decode {
                offset: bytes.len(),
                reason: format!("truncated raster: expected {count} bytes, found {available}"),
            });
        }
        let raster = &bytes[cur.pos..cur.pos + count];
        if let Some(i) = raster.iter().position(|&v| usize::from(v) > maxval) {
            return Err(Error::Decode {
                offset: cur.pos + i,
                reason: format!("sample {} exceeds maxval {maxval}", raster[i]),
            });
        }
        raster.to_vec()
    } else {
        let mut pixels = Vec::with_capacity(count);
        for _ in 0..count {
            cur.skip_separators();
            let at = cur.pos;
            let v = cur.read_uint("sample")?;
            if v > maxval {
                return Err(Error::Decode {
                    offset: at,
                    reason: format!("sample {v} exceeds maxval {maxval}"),
                });
            }
            pixels.push(v as u8);
        }
        pixels
    };

    Image::new(width, height, pixels)
}

/// Encodes an image as PGM with maxval 255; `ascii` selects the plain `P2`
/// variant.
pub fn save_pgm(img: &Image, ascii: bool) -> Vec<u8> {
    let (w, h) = img.dimensions();
    if !ascii {
        let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
        out.extend_from_slice(img.pixels());
        return out;
    }

    let mut out = format!("P2\n{w} {h}\n255\n");
    for y in 0..h {
        let mut line_len = 0;
        for &v in img.row(y) {
            let token = v.to_string();
            if line_len > 0 && line_len + 1 + token.len() > PLAIN_LINE_LIMIT {
                out.push('\n');
                line_len = 0;
            }
            if line_len > 0 {
                out.push(' ');
                line_len += 1;
            }
            out.push_str(&token);
            line_len += token.len();
        }
        out.push('\n');
    }
    out.into_bytes()
}
