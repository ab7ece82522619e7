//! PSNR against 8-bit references, the averaged two-view score, error maps.

use crate::error::Result;
use crate::map::DepthMap;

pub const PEAK: f64 = 255.0;

/// `10·log10(255² / MSE)`; identical maps give `f64::INFINITY`.
pub fn psnr(a: &DepthMap, b: &DepthMap) -> Result<f64> {
    a.ensure_same_dims(b)?;
    if a.is_empty() {
        return Ok(f64::INFINITY);
    }
    let sse: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let mse = sse / a.samples().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PEAK * PEAK / mse).log10())
}

/// PSNR after rounding both maps to integer levels in [0, 255].
pub fn psnr_8bit(a: &DepthMap, b: &DepthMap) -> Result<f64> {
    let q = |m: &DepthMap| m.map(|v| v.round().clamp(0.0, PEAK));
    psnr(&q(a), &q(b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityScore {
    pub psnr_left: f64,
    pub psnr_right: f64,
    /// Mean of the two view PSNRs.
    pub g: f64,
}

impl QualityScore {
    pub fn from_psnrs(psnr_left: f64, psnr_right: f64) -> Self {
        QualityScore {
            psnr_left,
            psnr_right,
            g: (psnr_left + psnr_right) / 2.0,
        }
    }
}

pub fn quality_g(i1: &DepthMap, i2: &DepthMap, ref_l: &DepthMap, ref_r: &DepthMap) -> Result<QualityScore> {
    Ok(QualityScore::from_psnrs(psnr(i1, ref_l)?, psnr(i2, ref_r)?))
}

pub fn error_map(a: &DepthMap, b: &DepthMap) -> Result<DepthMap> {
    a.ensure_same_dims(b)?;
    let samples = a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).abs()).collect();
    DepthMap::new(a.width(), a.height(), samples)
}

/// CSV rendering: fixed 6 decimals, `inf` for the infinite sentinel.
pub fn format_db(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_examples() {
        let a = DepthMap::filled(4, 3, 10.0);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let zero = DepthMap::filled(4, 3, 0.0);
        let full = DepthMap::filled(4, 3, 255.0);
        assert_eq!(psnr(&zero, &full).unwrap(), 0.0);
        let b = DepthMap::filled(4, 3, 26.0);
        let p = psnr(&a, &b).unwrap();
        assert!((p - 10.0 * (65025.0f64 / 256.0).log10()).abs() < 1e-12);
        assert!((p - 24.05).abs() < 0.01);
        assert!(psnr(&a, &DepthMap::filled(3, 4, 0.0)).is_err());
    }

    #[test]
    fn g_is_the_mean() {
        let s = QualityScore::from_psnrs(30.0, 40.0);
        assert_eq!(s.g, 35.0);
        let l = DepthMap::filled(2, 2, 1.0);
        let r = DepthMap::filled(2, 2, 2.0);
        let q = quality_g(&l, &r, &l, &r).unwrap();
        assert_eq!((q.psnr_left, q.psnr_right, q.g), (f64::INFINITY, f64::INFINITY, f64::INFINITY));

        let (l2, r2) = (l.map(|v| v + 3.0), r.map(|v| v + 1.0));
        let ab = quality_g(&l2, &r2, &l, &r).unwrap();
        let ba = quality_g(&r2, &l2, &r, &l).unwrap();
        assert_eq!(ab.g, ba.g);
    }

    #[test]
    fn error_map_examples() {
        let a = DepthMap::filled(3, 2, 10.0);
        let b = DepthMap::filled(3, 2, 3.0);
        assert!(error_map(&a, &b).unwrap().samples().iter().all(|&v| v == 7.0));
        assert_eq!(error_map(&a, &b).unwrap(), error_map(&b, &a).unwrap());
        assert!(error_map(&a, &a).unwrap().samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eight_bit_rounding() {
        let a = DepthMap::filled(2, 2, 10.4);
        let b = DepthMap::filled(2, 2, 9.6);
        assert_eq!(psnr_8bit(&a, &b).unwrap(), f64::INFINITY);
        assert_eq!(format_db(f64::INFINITY), "inf");
        assert_eq!(format_db(24.0), "24.000000");
    }

    #[test]
    fn psnr_decreases_with_uniform_error() {
        let a = DepthMap::filled(5, 5, 100.0);
        let mut last = f64::INFINITY;
        for e in 1..40 {
            let p = psnr(&a, &a.map(|v| v + e as f64 * 0.5)).unwrap();
            assert!(p < last);
            last = p;
        }
    }
}
