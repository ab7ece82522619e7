//! Block transform coding and the quantization-bin constraint set.
//!
//! Maps are split into 8×8 blocks, each block goes through an orthonormal
//! 2D DCT-II and every coefficient is mapped to a midtread uniform bin. The
//! decoder only sees bin indices, so for each block the original coefficient
//! vector is known to lie in the hypercube of its 64 bins. [`clip_to_bins`] is
//! the Euclidean projection onto that hypercube; since the transform is
//! orthonormal it is also the projection in pixel space.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::map::DepthMap;

pub const BLOCK: usize = 8;
pub const BLOCK_LEN: usize = BLOCK * BLOCK;

/// Container magic for serialized descriptions.
pub const QDM_MAGIC: &[u8; 4] = b"QDM1";

pub type BinIndices = [i32; BLOCK_LEN];

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!("non-finite {what} at index {i}"))),
        None => Ok(()),
    }
}

/// 8×8 pixel samples, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelBlock(pub [f64; BLOCK_LEN]);

/// 64 DCT coefficients, index `8·u + v` for vertical frequency `u` and
/// horizontal frequency `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffBlock(pub [f64; BLOCK_LEN]);

impl PixelBlock {
    pub fn new(values: [f64; BLOCK_LEN]) -> Result<Self> {
        check_finite(&values, "pixel")?;
        Ok(PixelBlock(values))
    }

    pub fn filled(value: f64) -> Self {
        PixelBlock([value; BLOCK_LEN])
    }
}

impl CoeffBlock {
    pub fn new(values: [f64; BLOCK_LEN]) -> Result<Self> {
        check_finite(&values, "coefficient")?;
        Ok(CoeffBlock(values))
    }
}

/// Unnormalized DCT-II cosines, `cosines[u][x] = cos((2x+1)uπ/16)`.
fn cosines() -> &'static [[f64; BLOCK]; BLOCK] {
    static COS: OnceLock<[[f64; BLOCK]; BLOCK]> = OnceLock::new();
    COS.get_or_init(|| {
        let mut m = [[0.0; BLOCK]; BLOCK];
        for (u, row) in m.iter_mut().enumerate() {
            for (x, v) in row.iter_mut().enumerate() {
                *v = ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / (2 * BLOCK) as f64).cos();
            }
        }
        m
    })
}

/// Orthonormal scale `a(u)·a(v)` per coefficient, applied after the cosine
/// sums. The DC entry is exactly 1/8, so constant blocks round-trip exactly.
fn scales() -> &'static [f64; BLOCK_LEN] {
    static SCALE: OnceLock<[f64; BLOCK_LEN]> = OnceLock::new();
    SCALE.get_or_init(|| {
        let k = |u: usize| if u == 0 { 1.0f64 } else { 2.0 };
        std::array::from_fn(|i| (k(i / BLOCK) * k(i % BLOCK)).sqrt() / BLOCK as f64)
    })
}

/// Orthonormal 2D DCT-II (`Y = C·X·Cᵀ`).
pub fn forward_dct(block: &PixelBlock) -> Result<CoeffBlock> {
    check_finite(&block.0, "pixel")?;
    Ok(CoeffBlock(forward_dct_unchecked(&block.0)))
}

/// Inverse of [`forward_dct`] (`X = Cᵀ·Y·C`). No clamping.
pub fn inverse_dct(coeffs: &CoeffBlock) -> Result<PixelBlock> {
    check_finite(&coeffs.0, "coefficient")?;
    Ok(PixelBlock(inverse_dct_unchecked(&coeffs.0)))
}

fn forward_dct_unchecked(x: &[f64; BLOCK_LEN]) -> [f64; BLOCK_LEN] {
    let c = cosines();
    // columns: tmp[u][j] = Σ_i C[u][i]·x[i][j]
    let mut tmp = [0.0; BLOCK_LEN];
    for u in 0..BLOCK {
        for j in 0..BLOCK {
            let mut acc = 0.0;
            for i in 0..BLOCK {
                acc += c[u][i] * x[i * BLOCK + j];
            }
            tmp[u * BLOCK + j] = acc;
        }
    }
    let mut y = [0.0; BLOCK_LEN];
    for u in 0..BLOCK {
        for v in 0..BLOCK {
            let mut acc = 0.0;
            for j in 0..BLOCK {
                acc += tmp[u * BLOCK + j] * c[v][j];
            }
            y[u * BLOCK + v] = acc * scales()[u * BLOCK + v];
        }
    }
    y
}

fn inverse_dct_unchecked(y: &[f64; BLOCK_LEN]) -> [f64; BLOCK_LEN] {
    let c = cosines();
    let s = scales();
    // tmp[i][v] = Σ_u C[u][i]·y[u][v]
    let mut tmp = [0.0; BLOCK_LEN];
    for i in 0..BLOCK {
        for v in 0..BLOCK {
            let mut acc = 0.0;
            for u in 0..BLOCK {
                acc += c[u][i] * (y[u * BLOCK + v] * s[u * BLOCK + v]);
            }
            tmp[i * BLOCK + v] = acc;
        }
    }
    let mut x = [0.0; BLOCK_LEN];
    for i in 0..BLOCK {
        for j in 0..BLOCK {
            let mut acc = 0.0;
            for v in 0..BLOCK {
                acc += tmp[i * BLOCK + v] * c[v][j];
            }
            x[i * BLOCK + j] = acc;
        }
    }
    x
}

/// Per-coefficient quantization step sizes, same ordering as [`CoeffBlock`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantTable([f64; BLOCK_LEN]);

/// Baseline luminance table, natural (row-major) order.
const JPEG_LUMA: [u16; BLOCK_LEN] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

impl QuantTable {
    pub fn new(steps: [f64; BLOCK_LEN]) -> Result<Self> {
        if let Some(k) = steps.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "quantization step {k} must be positive and finite, got {}",
                steps[k]
            )));
        }
        Ok(QuantTable(steps))
    }

    /// The same step for every coefficient.
    pub fn flat(step: f64) -> Result<Self> {
        QuantTable::new([step; BLOCK_LEN])
    }

    /// Luminance table scaled by an IJG-style quality factor in `1..=100`.
    pub fn jpeg_luminance(quality: u32) -> Result<Self> {
        if !(1..=100).contains(&quality) {
            return Err(Error::InvalidParameter(format!(
                "quality must be in 1..=100, got {quality}"
            )));
        }
        let scale = if quality < 50 { 5000 / quality } else { 200 - 2 * quality };
        let mut steps = [0.0; BLOCK_LEN];
        for (s, &base) in steps.iter_mut().zip(JPEG_LUMA.iter()) {
            let q = (base as u32 * scale + 50) / 100;
            *s = q.clamp(1, 255) as f64;
        }
        QuantTable::new(steps)
    }

    pub fn steps(&self) -> &[f64; BLOCK_LEN] {
        &self.0
    }

    pub fn max_step(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

/// Closed interval per coefficient: the hypercube a block's true
/// coefficients are known to lie in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinConstraints {
    pub lo: [f64; BLOCK_LEN],
    pub hi: [f64; BLOCK_LEN],
}

impl BinConstraints {
    pub fn contains(&self, coeffs: &CoeffBlock, slack: f64) -> bool {
        self.violations(coeffs, slack) == 0
    }

    pub fn violations(&self, coeffs: &CoeffBlock, slack: f64) -> usize {
        coeffs
            .0
            .iter()
            .enumerate()
            .filter(|&(k, &y)| y < self.lo[k] - slack || y > self.hi[k] + slack)
            .count()
    }
}

/// Midtread uniform quantizer, round half away from zero.
///
/// The index is nudged by one when floating-point division lands a value
/// on the wrong side of a bin edge, so `y` always lies inside
/// `bin_bounds(quantize(y))` as computed by [`bin_bounds`].
pub fn quantize(coeffs: &CoeffBlock, table: &QuantTable) -> Result<BinIndices> {
    check_finite(&coeffs.0, "coefficient")?;
    let mut out = [0i32; BLOCK_LEN];
    for k in 0..BLOCK_LEN {
        let y = coeffs.0[k];
        let step = table.0[k];
        let mut idx = (y / step).round();
        let (lo, hi) = bin_edges(idx, step);
        if y < lo {
            idx -= 1.0;
        } else if y > hi {
            idx += 1.0;
        }
        if idx.abs() > i32::MAX as f64 {
            return Err(Error::InvalidInput(format!(
                "coefficient {y} overflows the bin index range for step {step}"
            )));
        }
        out[k] = idx as i32;
    }
    Ok(out)
}

#[inline]
fn bin_edges(index: f64, step: f64) -> (f64, f64) {
    let centre = index * step;
    (centre - step / 2.0, centre + step / 2.0)
}

/// Midpoint reconstruction `index·Δ`; this is the standard decode.
pub fn dequantize(indices: &BinIndices, table: &QuantTable) -> CoeffBlock {
    let mut out = [0.0; BLOCK_LEN];
    for k in 0..BLOCK_LEN {
        out[k] = indices[k] as f64 * table.0[k];
    }
    CoeffBlock(out)
}

pub fn bin_bounds(indices: &BinIndices, table: &QuantTable) -> BinConstraints {
    let mut lo = [0.0; BLOCK_LEN];
    let mut hi = [0.0; BLOCK_LEN];
    for k in 0..BLOCK_LEN {
        let (l, h) = bin_edges(indices[k] as f64, table.0[k]);
        lo[k] = l;
        hi[k] = h;
    }
    BinConstraints { lo, hi }
}

/// Moves every out-of-range coefficient to its nearest bin edge.
pub fn clip_to_bins(coeffs: &CoeffBlock, bounds: &BinConstraints) -> CoeffBlock {
    let mut out = coeffs.0;
    for k in 0..BLOCK_LEN {
        out[k] = out[k].max(bounds.lo[k]).min(bounds.hi[k]);
    }
    CoeffBlock(out)
}

/// Everything the decoder knows about one view.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDescription {
    pub width: usize,
    pub height: usize,
    pub orig_width: usize,
    pub orig_height: usize,
    pub table: QuantTable,
    /// Row-major over blocks.
    pub blocks: Vec<BinIndices>,
}

fn padded_len(n: usize) -> usize {
    n.div_ceil(BLOCK) * BLOCK
}

fn read_block(map: &DepthMap, bx: usize, by: usize) -> PixelBlock {
    let mut out = [0.0; BLOCK_LEN];
    for i in 0..BLOCK {
        let row = &map.row(by * BLOCK + i)[bx * BLOCK..(bx + 1) * BLOCK];
        out[i * BLOCK..(i + 1) * BLOCK].copy_from_slice(row);
    }
    PixelBlock(out)
}

fn assemble(width: usize, height: usize, blocks: &[PixelBlock]) -> Result<DepthMap> {
    let bw = width / BLOCK;
    let mut samples = vec![0.0; width * height];
    for (b, block) in blocks.iter().enumerate() {
        let (bx, by) = (b % bw, b / bw);
        for i in 0..BLOCK {
            let start = (by * BLOCK + i) * width + bx * BLOCK;
            samples[start..start + BLOCK].copy_from_slice(&block.0[i * BLOCK..(i + 1) * BLOCK]);
        }
    }
    DepthMap::new(width, height, samples)
}

impl QuantizedDescription {
    pub fn blocks_wide(&self) -> usize {
        self.width / BLOCK
    }

    pub fn blocks_high(&self) -> usize {
        self.height / BLOCK
    }

    pub fn validate(&self) -> Result<()> {
        if !self.width.is_multiple_of(BLOCK) || !self.height.is_multiple_of(BLOCK) {
            return Err(Error::CorruptDescription(format!(
                "padded size {}×{} is not a multiple of {BLOCK}",
                self.width, self.height
            )));
        }
        if self.width != padded_len(self.orig_width) || self.height != padded_len(self.orig_height) {
            return Err(Error::CorruptDescription(format!(
                "padded size {}×{} does not match original size {}×{}",
                self.width, self.height, self.orig_width, self.orig_height
            )));
        }
        let expected = self.blocks_wide() * self.blocks_high();
        if self.blocks.len() != expected {
            return Err(Error::CorruptDescription(format!(
                "expected {expected} blocks, found {}",
                self.blocks.len()
            )));
        }
        Ok(())
    }

    pub fn block_bounds(&self, block: usize) -> BinConstraints {
        bin_bounds(&self.blocks[block], &self.table)
    }

    /// Pads `map` to the description's block grid; maps already at the
    /// padded size pass through.
    pub fn pad(&self, map: &DepthMap) -> Result<DepthMap> {
        if map.dims() == (self.width, self.height) {
            return Ok(map.clone());
        }
        if map.dims() != (self.orig_width, self.orig_height) {
            return Err(Error::InvalidInput(format!(
                "map is {}×{}, description expects {}×{} (padded {}×{})",
                map.width(),
                map.height(),
                self.orig_width,
                self.orig_height,
                self.width,
                self.height
            )));
        }
        map.pad_replicate(self.width, self.height)
    }

    /// Centroid decode at the padded size, without cropping or clamping.
    pub fn decode_padded(&self) -> Result<DepthMap> {
        self.validate()?;
        let blocks: Vec<PixelBlock> = self
            .blocks
            .par_iter()
            .map(|idx| PixelBlock(inverse_dct_unchecked(&dequantize(idx, &self.table).0)))
            .collect();
        assemble(self.width, self.height, &blocks)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 16 + 8 * BLOCK_LEN + 4 * BLOCK_LEN * self.blocks.len());
        out.extend_from_slice(QDM_MAGIC);
        for v in [self.width, self.height, self.orig_width, self.orig_height] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for s in self.table.steps() {
            out.extend_from_slice(&s.to_le_bytes());
        }
        for block in &self.blocks {
            for i in block {
                out.extend_from_slice(&i.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: &str| Error::CorruptDescription(m.to_string());
        let header = 4 + 16 + 8 * BLOCK_LEN;
        if bytes.len() < header {
            return Err(corrupt("truncated header"));
        }
        if &bytes[..4] != QDM_MAGIC {
            return Err(corrupt("bad magic, expected QDM1"));
        }
        let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
        let (width, height, orig_width, orig_height) = (u32_at(4), u32_at(8), u32_at(12), u32_at(16));
        let mut steps = [0.0; BLOCK_LEN];
        for (k, s) in steps.iter_mut().enumerate() {
            let off = 20 + 8 * k;
            *s = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        }
        let table = QuantTable::new(steps).map_err(|e| Error::CorruptDescription(e.to_string()))?;
        let body = &bytes[header..];
        let block_bytes = 4 * BLOCK_LEN;
        if !body.len().is_multiple_of(block_bytes) {
            return Err(corrupt("trailing bytes after last block"));
        }
        let blocks = body
            .chunks_exact(block_bytes)
            .map(|chunk| {
                let mut idx = [0i32; BLOCK_LEN];
                for (k, v) in idx.iter_mut().enumerate() {
                    *v = i32::from_le_bytes(chunk[4 * k..4 * k + 4].try_into().unwrap());
                }
                idx
            })
            .collect();
        let desc = QuantizedDescription {
            width,
            height,
            orig_width,
            orig_height,
            table,
            blocks,
        };
        desc.validate()?;
        Ok(desc)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        QuantizedDescription::from_bytes(&bytes)
    }
}

/// Blockwise DCT + quantization of a map padded by edge replication.
pub fn encode_map(map: &DepthMap, table: &QuantTable) -> Result<QuantizedDescription> {
    if map.is_empty() {
        return Err(Error::InvalidInput("cannot encode an empty map".into()));
    }
    let (width, height) = (padded_len(map.width()), padded_len(map.height()));
    let padded = map.pad_replicate(width, height)?;
    let bw = width / BLOCK;
    let blocks = (0..bw * (height / BLOCK))
        .into_par_iter()
        .map(|b| {
            let block = read_block(&padded, b % bw, b / bw);
            quantize(&CoeffBlock(forward_dct_unchecked(&block.0)), table)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QuantizedDescription {
        width,
        height,
        orig_width: map.width(),
        orig_height: map.height(),
        table: *table,
        blocks,
    })
}

/// Standard decode: centroid reconstruction, cropped and clamped to [0, 255].
pub fn decode_map(desc: &QuantizedDescription) -> Result<DepthMap> {
    Ok(desc
        .decode_padded()?
        .crop(desc.orig_width, desc.orig_height)?
        .clamped(0.0, 255.0))
}

/// Counts of one projection pass over a whole map.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClipStats {
    pub clipped: usize,
    pub total: usize,
}

impl ClipStats {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.clipped as f64 / self.total as f64
        }
    }
}

/// Projects every block of a padded-size map onto its bins.
pub fn project_onto_description(map: &DepthMap, desc: &QuantizedDescription) -> Result<(DepthMap, ClipStats)> {
    desc.validate()?;
    if map.dims() != (desc.width, desc.height) {
        return Err(Error::InvalidInput(format!(
            "map is {}×{}, description grid is {}×{}",
            map.width(),
            map.height(),
            desc.width,
            desc.height
        )));
    }
    let bw = desc.blocks_wide();
    let results: Vec<(PixelBlock, usize)> = (0..desc.blocks.len())
        .into_par_iter()
        .map(|b| {
            let block = read_block(map, b % bw, b / bw);
            let coeffs = CoeffBlock(forward_dct_unchecked(&block.0));
            let bounds = desc.block_bounds(b);
            let clipped = bounds.violations(&coeffs, 0.0);
            if clipped == 0 {
                return (block, 0);
            }
            // only the clipped correction goes back through the inverse
            let projected = clip_to_bins(&coeffs, &bounds);
            let delta: [f64; BLOCK_LEN] = std::array::from_fn(|k| projected.0[k] - coeffs.0[k]);
            let fix = inverse_dct_unchecked(&delta);
            (PixelBlock(std::array::from_fn(|k| block.0[k] + fix[k])), clipped)
        })
        .collect();
    let clipped = results.iter().map(|(_, n)| n).sum();
    let blocks: Vec<PixelBlock> = results.into_iter().map(|(b, _)| b).collect();
    let out = assemble(desc.width, desc.height, &blocks)?;
    Ok((
        out,
        ClipStats {
            clipped,
            total: desc.blocks.len() * BLOCK_LEN,
        },
    ))
}

/// Number of coefficients of a padded-size map lying outside their bins by
/// more than `slack`.
pub fn constraint_violations(map: &DepthMap, desc: &QuantizedDescription, slack: f64) -> Result<usize> {
    let padded = desc.pad(map)?;
    let bw = desc.blocks_wide();
    Ok((0..desc.blocks.len())
        .into_par_iter()
        .map(|b| {
            let coeffs = CoeffBlock(forward_dct_unchecked(&read_block(&padded, b % bw, b / bw).0));
            desc.block_bounds(b).violations(&coeffs, slack)
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat(step: f64) -> QuantTable {
        QuantTable::flat(step).unwrap()
    }

    /// Direct double-sum DCT-II.
    fn naive_dct(x: &[f64; BLOCK_LEN]) -> [f64; BLOCK_LEN] {
        let a = |u: usize| if u == 0 { (0.125f64).sqrt() } else { 0.5 };
        let mut y = [0.0; BLOCK_LEN];
        for u in 0..8 {
            for v in 0..8 {
                let mut s = 0.0;
                for i in 0..8 {
                    for j in 0..8 {
                        s += x[i * 8 + j]
                            * ((2 * i + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos()
                            * ((2 * j + 1) as f64 * v as f64 * std::f64::consts::PI / 16.0).cos();
                    }
                }
                y[u * 8 + v] = a(u) * a(v) * s;
            }
        }
        y
    }

    #[test]
    fn constant_block_has_only_dc() {
        let y = forward_dct(&PixelBlock::filled(128.0)).unwrap();
        assert_eq!(y.0[0], 1024.0);
        assert!(y.0[1..].iter().all(|c| c.abs() < 1e-9));
        let z = forward_dct(&PixelBlock::filled(0.0)).unwrap();
        assert!(z.0.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn impulse_matches_basis_formula() {
        let mut x = [0.0; BLOCK_LEN];
        x[0] = 1.0;
        let y = forward_dct(&PixelBlock(x)).unwrap();
        let expected = naive_dct(&x);
        for k in 0..BLOCK_LEN {
            assert!((y.0[k] - expected[k]).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn dc_only_inverts_to_constant() {
        let mut y = [0.0; BLOCK_LEN];
        y[0] = 1024.0;
        let x = inverse_dct(&CoeffBlock(y)).unwrap();
        assert!(x.0.iter().all(|&v| v == 128.0));
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut x = [0.0; BLOCK_LEN];
        x[5] = f64::INFINITY;
        assert!(matches!(forward_dct(&PixelBlock(x)), Err(Error::InvalidInput(_))));
        assert!(matches!(inverse_dct(&CoeffBlock(x)), Err(Error::InvalidInput(_))));
        assert!(PixelBlock::new(x).is_err());
    }

    #[test]
    fn quantizer_examples() {
        let mut y = [0.0; BLOCK_LEN];
        y[0] = 17.0;
        y[1] = -17.0;
        y[2] = 0.0;
        y[3] = 15.0;
        y[4] = -15.0;
        let idx = quantize(&CoeffBlock(y), &flat(10.0)).unwrap();
        assert_eq!(&idx[..5], &[2, -2, 0, 2, -2]);
        let deq = dequantize(&idx, &flat(10.0));
        assert_eq!(deq.0[0], 20.0);
        assert_eq!(deq.0[1], -20.0);
        let b = bin_bounds(&idx, &flat(10.0));
        assert_eq!((b.lo[0], b.hi[0]), (15.0, 25.0));
        let zero = bin_bounds(&[0; BLOCK_LEN], &flat(16.0));
        assert_eq!((zero.lo[7], zero.hi[7]), (-8.0, 8.0));
        assert!(dequantize(&[0; BLOCK_LEN], &flat(3.0)).0.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn clip_examples() {
        let mut idx = [0i32; BLOCK_LEN];
        idx[0] = 2;
        let b = bin_bounds(&idx, &flat(10.0));
        let mut y = [0.0; BLOCK_LEN];
        y[0] = 27.0;
        y[1] = 3.0;
        y[2] = -6.0;
        let c = clip_to_bins(&CoeffBlock(y), &b);
        assert_eq!(c.0[0], 25.0);
        assert_eq!(c.0[1], 3.0);
        assert_eq!(c.0[2], -5.0);
    }

    #[test]
    fn table_validation() {
        assert!(QuantTable::flat(0.0).is_err());
        assert!(QuantTable::flat(-1.0).is_err());
        assert!(QuantTable::flat(f64::NAN).is_err());
        assert!(QuantTable::jpeg_luminance(0).is_err());
        let q50 = QuantTable::jpeg_luminance(50).unwrap();
        assert_eq!(q50.steps()[0], 16.0);
        assert_eq!(q50.steps()[63], 99.0);
        let q100 = QuantTable::jpeg_luminance(100).unwrap();
        assert!(q100.steps().iter().all(|&s| s == 1.0));
    }

    #[test]
    fn encode_constant_map() {
        let map = DepthMap::filled(16, 16, 128.0);
        let desc = encode_map(&map, &flat(16.0)).unwrap();
        assert_eq!(desc.blocks.len(), 4);
        for b in &desc.blocks {
            assert_eq!(b[0], 64);
            assert!(b[1..].iter().all(|&i| i == 0));
        }
        let dec = decode_map(&desc).unwrap();
        assert_eq!(dec, map);
        let (same, stats) = project_onto_description(&dec, &desc).unwrap();
        assert_eq!((same, stats.clipped), (map, 0));
    }

    #[test]
    fn encode_pads_odd_sizes() {
        let map = DepthMap::from_fn(13, 9, |r, c| (r * 13 + c) as f64).unwrap();
        let desc = encode_map(&map, &flat(4.0)).unwrap();
        assert_eq!((desc.width, desc.height), (16, 16));
        assert_eq!((desc.orig_width, desc.orig_height), (13, 9));
        assert_eq!(desc.blocks.len(), 4);
        let dec = decode_map(&desc).unwrap();
        assert_eq!(dec.dims(), (13, 9));
    }

    #[test]
    fn empty_map_is_rejected() {
        let map = DepthMap::new(0, 0, vec![]).unwrap();
        assert!(matches!(encode_map(&map, &flat(8.0)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn zero_map_decodes_to_zero() {
        let desc = encode_map(&DepthMap::filled(8, 16, 0.0), &flat(24.0)).unwrap();
        assert!(decode_map(&desc).unwrap().samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn decode_rejects_inconsistent_block_count() {
        let mut desc = encode_map(&DepthMap::filled(16, 16, 10.0), &flat(8.0)).unwrap();
        desc.blocks.pop();
        assert!(matches!(decode_map(&desc), Err(Error::CorruptDescription(_))));
    }

    #[test]
    fn centroid_representable_map_round_trips() {
        // Build the fixture by decoding a random description, then require
        // encode/decode to reproduce it.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let table = flat(6.0);
        let mut blocks = Vec::new();
        for _ in 0..4 {
            let mut idx = [0i32; BLOCK_LEN];
            idx[0] = rng.gen_range(100..200);
            for v in idx.iter_mut().skip(1) {
                *v = rng.gen_range(-2..=2);
            }
            blocks.push(idx);
        }
        let desc = QuantizedDescription {
            width: 16,
            height: 16,
            orig_width: 16,
            orig_height: 16,
            table,
            blocks,
        };
        let fixture = desc.decode_padded().unwrap();
        let again = encode_map(&fixture, &table).unwrap();
        assert_eq!(again.blocks, desc.blocks);
        let a = again.decode_padded().unwrap();
        let max = a
            .samples()
            .iter()
            .zip(fixture.samples())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(max < 1e-9);
    }

    #[test]
    fn decode_psnr_respects_bin_width_bound() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for step in [4.0, 12.0, 24.0] {
            let (a, b, c0) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(80.0..160.0));
            let map = DepthMap::from_fn(32, 24, |r, c| {
                c0 + a * c as f64 + b * r as f64 + 5.0 * (0.2 * c as f64).sin()
            })
            .unwrap();
            let dec = decode_map(&encode_map(&map, &flat(step)).unwrap()).unwrap();
            let mse: f64 = dec
                .samples()
                .iter()
                .zip(map.samples())
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                / map.samples().len() as f64;
            let psnr = 10.0 * (255.0f64.powi(2) / mse).log10();
            let bound = 10.0 * (255.0f64.powi(2) / (step * step / 4.0)).log10();
            assert!(psnr >= bound, "step {step}: {psnr} < {bound}");
        }
    }

    #[test]
    fn container_round_trip_and_corruption() {
        let map = DepthMap::from_fn(13, 9, |r, c| (3 * r + c) as f64).unwrap();
        let desc = encode_map(&map, &QuantTable::jpeg_luminance(75).unwrap()).unwrap();
        let bytes = desc.to_bytes();
        assert_eq!(&bytes[..4], b"QDM1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 16);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 13);
        assert_eq!(bytes.len(), 20 + 512 + 4 * 64 * 4);
        assert_eq!(QuantizedDescription::from_bytes(&bytes).unwrap(), desc);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(QuantizedDescription::from_bytes(&bad).is_err());
        assert!(QuantizedDescription::from_bytes(&bytes[..bytes.len() - 4]).is_err());
        let mut shrunk = bytes.clone();
        shrunk[12..16].copy_from_slice(&5u32.to_le_bytes());
        assert!(QuantizedDescription::from_bytes(&shrunk).is_err());
    }

    #[test]
    fn encode_is_deterministic() {
        let map = DepthMap::from_fn(40, 24, |r, c| ((r * c) % 255) as f64).unwrap();
        let a = encode_map(&map, &flat(9.0)).unwrap();
        let b = encode_map(&map, &flat(9.0)).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        let da = decode_map(&a).unwrap();
        let db = decode_map(&b).unwrap();
        assert!(da.samples().iter().zip(db.samples()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    fn block_strategy(lo: f64, hi: f64) -> impl Strategy<Value = [f64; BLOCK_LEN]> {
        prop::collection::vec(lo..hi, BLOCK_LEN).prop_map(|v| v.try_into().unwrap())
    }

    proptest! {
        #[test]
        fn round_trip_and_parseval(x in block_strategy(0.0, 255.0)) {
            let y = forward_dct(&PixelBlock(x)).unwrap();
            let back = inverse_dct(&y).unwrap();
            for k in 0..BLOCK_LEN {
                prop_assert!((back.0[k] - x[k]).abs() <= 1e-9);
            }
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny = y.0.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((nx - ny).abs() <= 1e-9 * nx.max(1.0));
        }

        #[test]
        fn quantizer_is_consistent(y in block_strategy(-3000.0, 3000.0), step in 0.01f64..200.0) {
            let table = flat(step);
            let idx = quantize(&CoeffBlock(y), &table).unwrap();
            prop_assert!(bin_bounds(&idx, &table).contains(&CoeffBlock(y), 0.0));
            let deq = dequantize(&idx, &table);
            for k in 0..BLOCK_LEN {
                prop_assert!((deq.0[k] - y[k]).abs() <= step / 2.0 * (1.0 + 1e-12));
            }
        }

        #[test]
        fn clip_is_a_projection(a in block_strategy(-500.0, 500.0), b in block_strategy(-500.0, 500.0),
                                idx in prop::collection::vec(-20i32..20, BLOCK_LEN), step in 0.5f64..40.0) {
            let idx: BinIndices = idx.try_into().unwrap();
            let bounds = bin_bounds(&idx, &flat(step));
            let ca = clip_to_bins(&CoeffBlock(a), &bounds);
            let cb = clip_to_bins(&CoeffBlock(b), &bounds);
            prop_assert_eq!(clip_to_bins(&ca, &bounds), ca);
            prop_assert!(bounds.contains(&ca, 0.0));
            let d_in: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let d_out: f64 = ca.0.iter().zip(&cb.0).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            prop_assert!(d_out <= d_in + 1e-12);
            for k in 0..BLOCK_LEN {
                prop_assert!(bounds.lo[k] <= bounds.hi[k]);
                prop_assert!((bounds.hi[k] - bounds.lo[k] - step).abs() <= 1e-12 * (bounds.hi[k].abs() + bounds.lo[k].abs() + step));
            }
        }
    }
}
