//! Binary PGM (P5) depth map IO.
//!
//! 8-bit files store depth levels directly. 16-bit files (maxval > 255,
//! big-endian samples) store `level × 256`, which keeps 1/256-level
//! precision across a round trip.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::map::DepthMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

pub fn encode(map: &DepthMap, depth: BitDepth) -> Vec<u8> {
    let maxval = match depth {
        BitDepth::Eight => 255,
        BitDepth::Sixteen => 65535,
    };
    let mut out = format!("P5\n{} {}\n{}\n", map.width(), map.height(), maxval).into_bytes();
    match depth {
        BitDepth::Eight => out.extend(map.samples().iter().map(|v| v.round().clamp(0.0, 255.0) as u8)),
        BitDepth::Sixteen => {
            for v in map.samples() {
                let q = (v * 256.0).round().clamp(0.0, 65535.0) as u16;
                out.extend_from_slice(&q.to_be_bytes());
            }
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<DepthMap, String> {
    let mut pos = 0;
    let mut token = || -> std::result::Result<&[u8], String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        Ok(&bytes[start..pos])
    };
    if token()? != b"P5" {
        return Err("not a binary PGM (expected P5)".into());
    }
    let mut number = |name: &str| -> std::result::Result<usize, String> {
        let t = token()?;
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("bad {name} in header"))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} out of range"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = width * height;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    let samples: Vec<f64> = if maxval <= 255 {
        if raster.len() < n {
            return Err(format!("raster has {} bytes, need {n}", raster.len()));
        }
        raster[..n].iter().map(|&b| b as f64).collect()
    } else {
        if raster.len() < 2 * n {
            return Err(format!("raster has {} bytes, need {}", raster.len(), 2 * n));
        }
        raster[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 256.0)
            .collect()
    };
    DepthMap::new(width, height, samples).map_err(|e| e.to_string())
}

pub fn read(path: &Path) -> Result<DepthMap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|reason| Error::Format {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn write(path: &Path, map: &DepthMap, depth: BitDepth) -> Result<()> {
    fs::write(path, encode(map, depth)).map_err(|e| Error::io(path, e))
}

/// Writes a 0/255 byte mask as an 8-bit PGM.
pub fn write_mask(path: &Path, width: usize, height: usize, mask: &[bool]) -> Result<()> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(mask.iter().map(|&m| if m { 255u8 } else { 0 }));
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
