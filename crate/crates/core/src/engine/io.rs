//! PGM (P2/P5, 8 or 16 bit) and raw little-endian `f32` images.
//!
//! PGM samples load as `value / maxval` in `[0, 1]` and are clamped and
//! rescaled on save. The raw format is `width: u32, height: u32` followed by
//! row-major `f32` pixels, all little-endian.

use std::fs;
use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Header tokens, skipping `#` comments; returns the tokens and the offset
/// just past the single whitespace byte that ends the header.
fn header(bytes: &[u8], count: usize) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
            i += 1;
        }
        if start == i {
            return Err(format_err("truncated PGM header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    Ok((tokens, i + 1))
}

fn parse_num(tok: &str, what: &str) -> Result<usize> {
    tok.parse().map_err(|_| format_err(format!("bad PGM {what}: {tok:?}")))
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let (tok, body) = header(bytes, 4)?;
    let binary = match tok[0].as_str() {
        "P5" => true,
        "P2" => false,
        m => return Err(format_err(format!("unsupported magic {m:?}; expected P2 or P5"))),
    };
    let w = parse_num(&tok[1], "width")?;
    let h = parse_num(&tok[2], "height")?;
    let maxval = parse_num(&tok[3], "maxval")?;
    if w == 0 || h == 0 {
        return Err(format_err("PGM dimensions must be positive"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(format!("PGM maxval {maxval} out of range")));
    }
    let n = w * h;
    let scale = 1.0 / maxval as f64;
    let data: Vec<f64> = if binary {
        let wide = maxval > 255;
        let need = n * if wide { 2 } else { 1 };
        let raw = bytes.get(body..body + need).ok_or_else(|| format_err("truncated PGM raster"))?;
        if wide {
            raw.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale).collect()
        } else {
            raw.iter().map(|&v| v as f64 * scale).collect()
        }
    } else {
        let text = std::str::from_utf8(bytes.get(body.min(bytes.len())..).unwrap_or_default())
            .map_err(|_| format_err("P2 raster is not ASCII"))?;
        let vals: Vec<f64> = text
            .split_ascii_whitespace()
            .take(n)
            .map(|t| parse_num(t, "sample").map(|v| v as f64 * scale))
            .collect::<Result<_>>()?;
        if vals.len() != n {
            return Err(format_err("truncated PGM raster"));
        }
        vals
    };
    Image::new(w, h, data)
}

/// Binary PGM with `maxval` 255 or 65535.
pub fn encode_pgm(img: &Image, sixteen_bit: bool) -> Vec<u8> {
    let maxval: u32 = if sixteen_bit { 65535 } else { 255 };
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), maxval).into_bytes();
    for &v in img.data() {
        let q = (v.clamp(0.0, 1.0) * maxval as f64).round() as u32;
        if sixteen_bit {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    out
}

pub fn read_pgm(path: &Path) -> Result<Image> {
    decode_pgm(&fs::read(path)?)
}

pub fn write_pgm(path: &Path, img: &Image, sixteen_bit: bool) -> Result<()> {
    Ok(fs::write(path, encode_pgm(img, sixteen_bit))?)
}

pub fn encode_raw(img: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * img.data().len());
    out.extend_from_slice(&(img.width() as u32).to_le_bytes());
    out.extend_from_slice(&(img.height() as u32).to_le_bytes());
    for &v in img.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_raw(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 8 {
        return Err(format_err("raw image shorter than its header"));
    }
    let w = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if body.len() != 4 * w * h {
        return Err(format_err(format!("raw {w}x{h} image needs {} bytes, got {}", 4 * w * h, body.len())));
    }
    let data = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
    Image::new(w, h, data).map_err(|e| format_err(e.to_string()))
}

pub fn read_raw(path: &Path) -> Result<Image> {
    decode_raw(&fs::read(path)?)
}

pub fn write_raw(path: &Path, img: &Image) -> Result<()> {
    Ok(fs::write(path, encode_raw(img))?)
}

/// Reads PGM or raw by extension (`.raw`/`.f32` are raw, anything else PGM).
pub fn read_image(path: &Path) -> Result<Image> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("raw") | Some("f32") => read_raw(path),
        _ => read_pgm(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_pgm_with_comment() {
        let img = decode_pgm(b"P2\n# a comment\n3 2\n4\n0 1 2\n3 4 4\n").unwrap();
        assert_eq!((img.width(), img.height()), (3, 2));
        assert_eq!(img.data(), &[0.0, 0.25, 0.5, 0.75, 1.0, 1.0]);
    }

    #[test]
    fn binary_round_trips() {
        let img = Image::from_fn(7, 3, |x, y| (x + 7 * y) as f64 / 20.0).unwrap();
        for wide in [false, true] {
            let back = decode_pgm(&encode_pgm(&img, wide)).unwrap();
            let tol = if wide { 1.0 / 65535.0 } else { 1.0 / 255.0 };
            assert!(back.max_abs_diff(&img, 0).unwrap() <= tol);
        }
        let raw = decode_raw(&encode_raw(&img)).unwrap();
        assert!(raw.max_abs_diff(&img, 0).unwrap() < 1e-7);
    }

    #[test]
    fn malformed_inputs() {
        assert!(decode_pgm(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(decode_pgm(b"P5\n4 4\n255\n\0\0").is_err());
        assert!(decode_pgm(b"P2\n2 1\n255\n1").is_err());
        assert!(decode_raw(&[1, 0, 0, 0, 1, 0, 0, 0]).is_err());
    }
}
