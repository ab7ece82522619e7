//! View-to-view projection for a rectified pair.
//!
//! Every source pixel is lifted to the world and re-projected into the
//! target view. Rows are preserved, so projected samples are bucketed per
//! target row and each target pixel is interpolated from at most two of
//! them: `p1` from the half-open interval `(c−1, c]` and `p2` from `[c, c+1)`.
//! The result is smoothed with a bilateral filter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{back_project, check_rectified, project, CameraParams};

pub use crate::map::DepthMap;

/// A source pixel after re-projection into the target view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedSample {
    pub row: usize,
    pub col: f64,
    pub depth: f64,
    pub src_row: usize,
    pub src_col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilateralParams {
    pub sigma_s: f64,
    pub sigma_r: f64,
    /// Window half-width; 0 disables the filter.
    pub radius: usize,
}

impl Default for BilateralParams {
    fn default() -> Self {
        BilateralParams {
            sigma_s: 2.0,
            sigma_r: 10.0,
            radius: 3,
        }
    }
}

impl BilateralParams {
    pub fn disabled() -> Self {
        BilateralParams {
            radius: 0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_s > 0.0 && self.sigma_s.is_finite()) || !(self.sigma_r > 0.0 && self.sigma_r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bilateral sigmas must be positive, got sigma_s={} sigma_r={}",
                self.sigma_s, self.sigma_r
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpParams {
    /// Depth tolerance for preferring candidates close to the current value.
    pub tau: f64,
    pub bilateral: BilateralParams,
    /// World depth per depth level.
    pub depth_scale: f64,
}

impl Default for WarpParams {
    fn default() -> Self {
        WarpParams {
            tau: 8.0,
            bilateral: BilateralParams::default(),
            depth_scale: 1.0,
        }
    }
}

/// Re-projects every positive-depth source pixel into the target view.
///
/// Returns one bucket per target row (as many rows as `src`), each sorted by
/// target column and then source column. Samples with a target column
/// outside `[−1, width]` or a target row off the grid are dropped.
///
/// The target location is the source pixel plus the difference between the
/// re-projection through `dst_cam` and through `src_cam`, so back-projection
/// round-off cancels and identical cameras map every pixel exactly onto itself.
pub fn forward_warp(
    src: &DepthMap,
    src_cam: &CameraParams,
    dst_cam: &CameraParams,
    depth_scale: f64,
) -> Result<Vec<Vec<ProjectedSample>>> {
    check_rectified(src_cam, dst_cam)?;
    if !(depth_scale > 0.0 && depth_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("depth scale must be positive, got {depth_scale}")));
    }
    let (width, height) = src.dims();
    let samples: Vec<Vec<ProjectedSample>> = (0..height)
        .into_par_iter()
        .map(|r| -> Result<Vec<ProjectedSample>> {
            let mut out = Vec::with_capacity(width);
            for c in 0..width {
                let depth = src.get(r, c);
                if depth <= 0.0 {
                    continue;
                }
                let world = back_project(r as f64, c as f64, depth * depth_scale, src_cam)?;
                let here = project(&world, src_cam)?;
                let there = project(&world, dst_cam)?;
                let row = (r as f64 + (there.row - here.row)).round();
                let col = c as f64 + (there.col - here.col);
                if row < 0.0 || row >= height as f64 || col < -1.0 || col > width as f64 {
                    continue;
                }
                out.push(ProjectedSample {
                    row: row as usize,
                    col,
                    depth,
                    src_row: r,
                    src_col: c,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut buckets = vec![Vec::new(); height];
    for s in samples.into_iter().flatten() {
        buckets[s.row].push(s);
    }
    for b in &mut buckets {
        b.sort_by(|a, b| a.col.total_cmp(&b.col).then(a.src_col.cmp(&b.src_col)));
    }
    Ok(buckets)
}

fn pick(candidates: impl Iterator<Item = ProjectedSample> + Clone, current: f64, tau: f64) -> Option<ProjectedSample> {
    let better = |best: Option<ProjectedSample>, s: ProjectedSample| match best {
        Some(b) if (b.depth, b.src_col, b.src_row) <= (s.depth, s.src_col, s.src_row) => Some(b),
        _ => Some(s),
    };
    candidates
        .clone()
        .filter(|s| (s.depth - current).abs() <= tau)
        .fold(None, better)
        .or_else(|| candidates.fold(None, better))
}

/// Edge-adaptive interpolation of target pixel `(row, col)`.
///
/// `p1` is taken from candidates with column in `(c−1, c]`, `p2` from
/// `[c, c+1)`. Within each interval candidates within `tau` of `current` are
/// preferred; among those (or among all, if none qualify) the smallest depth
/// wins, ties going to the smallest source column. With both present the
/// result is linear in column, unless only one of them is within `tau` of
/// `current`: then the pair straddles an edge and that one's depth is used.
/// With a single candidate its depth is returned; with none, `current`.
pub fn interpolate_at(
    row: usize,
    col: usize,
    candidates: &[ProjectedSample],
    current: f64,
    tau: f64,
) -> f64 {
    let c = col as f64;
    let in_row = candidates.iter().copied().filter(|s| s.row == row);
    let p1 = pick(in_row.clone().filter(|s| s.col > c - 1.0 && s.col <= c), current, tau);
    let p2 = pick(in_row.filter(|s| s.col >= c && s.col < c + 1.0), current, tau);
    let near = |s: &ProjectedSample| (s.depth - current).abs() <= tau;
    match (p1, p2) {
        (Some(a), Some(b)) if near(&a) != near(&b) => {
            if near(&a) {
                a.depth
            } else {
                b.depth
            }
        }
        (Some(a), Some(b)) if a == b => a.depth,
        (Some(a), Some(b)) => {
            let span = b.col - a.col;
            if span > 0.0 {
                a.depth + (b.depth - a.depth) * (c - a.col) / span
            } else {
                0.5 * (a.depth + b.depth)
            }
        }
        (Some(a), None) | (None, Some(a)) => a.depth,
        (None, None) => current,
    }
}

/// Gaussian-spatial × Gaussian-range weighted mean over a
/// `(2·radius+1)²` window, truncated at the borders.
pub fn bilateral_filter(map: &DepthMap, params: &BilateralParams) -> Result<DepthMap> {
    params.validate()?;
    if params.radius == 0 || map.is_empty() {
        return Ok(map.clone());
    }
    let rad = params.radius as isize;
    let side = 2 * params.radius + 1;
    let spatial: Vec<f64> = (0..side * side)
        .map(|i| {
            let (dr, dc) = ((i / side) as isize - rad, (i % side) as isize - rad);
            (-((dr * dr + dc * dc) as f64) / (2.0 * params.sigma_s * params.sigma_s)).exp()
        })
        .collect();
    let range_denom = 2.0 * params.sigma_r * params.sigma_r;
    let (w, h) = (map.width() as isize, map.height() as isize);
    let samples: Vec<f64> = (0..h)
        .into_par_iter()
        .flat_map_iter(|r| {
            let spatial = &spatial;
            (0..w).map(move |c| {
                let centre = map.get(r as usize, c as usize);
                let (mut num, mut den) = (0.0, 0.0);
                for rr in (r - rad).max(0)..=(r + rad).min(h - 1) {
                    let krow = ((rr - r + rad) as usize) * side;
                    for cc in (c - rad).max(0)..=(c + rad).min(w - 1) {
                        let v = map.get(rr as usize, cc as usize);
                        let diff = v - centre;
                        let wgt = spatial[krow + (cc - c + rad) as usize] * (-(diff * diff) / range_denom).exp();
                        num += wgt * diff;
                        den += wgt;
                    }
                }
                // the centre weight is exactly 1, so den ≥ 1
                centre + num / den
            })
        })
        .collect();
    DepthMap::new(map.width(), map.height(), samples)
}

/// Forward warp plus interpolation against `dst_current`, before filtering.
pub fn warp_and_interpolate(
    src: &DepthMap,
    src_cam: &CameraParams,
    dst_cam: &CameraParams,
    dst_current: &DepthMap,
    params: &WarpParams,
) -> Result<DepthMap> {
    src.ensure_same_dims(dst_current)?;
    let buckets = forward_warp(src, src_cam, dst_cam, params.depth_scale)?;
    let width = dst_current.width();
    let samples: Vec<f64> = buckets
        .par_iter()
        .enumerate()
        .flat_map_iter(|(r, bucket)| {
            (0..width).map(move |c| {
                let cf = c as f64;
                let lo = bucket.partition_point(|s| s.col <= cf - 1.0);
                let hi = bucket.partition_point(|s| s.col < cf + 1.0);
                interpolate_at(r, c, &bucket[lo..hi], dst_current.get(r, c), params.tau)
            })
        })
        .collect();
    DepthMap::new(width, dst_current.height(), samples)
}

/// The full projection step: warp, interpolate, bilateral filter.
pub fn project_view(
    src: &DepthMap,
    src_cam: &CameraParams,
    dst_cam: &CameraParams,
    dst_current: &DepthMap,
    params: &WarpParams,
) -> Result<DepthMap> {
    params.bilateral.validate()?;
    let warped = warp_and_interpolate(src, src_cam, dst_cam, dst_current, params)?;
    bilateral_filter(&warped, &params.bilateral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RectifiedPair;
    use rand::{Rng, SeedableRng};

    fn sample(col: f64, depth: f64, src_col: usize) -> ProjectedSample {
        ProjectedSample {
            row: 0,
            col,
            depth,
            src_row: 0,
            src_col,
        }
    }

    #[test]
    fn interpolation_examples() {
        assert_eq!(interpolate_at(0, 5, &[sample(5.0, 40.0, 5)], 0.0, 8.0), 40.0);
        let two = [sample(4.5, 10.0, 4), sample(5.5, 20.0, 5)];
        assert_eq!(interpolate_at(0, 5, &two, 12.0, 100.0), 15.0);
        assert_eq!(interpolate_at(0, 5, &[sample(3.9, 1.0, 3), sample(6.0, 2.0, 6)], 77.0, 8.0), 77.0);
        assert_eq!(interpolate_at(0, 5, &[], 77.0, 8.0), 77.0);
    }

    #[test]
    fn tau_filter_precedes_depth_minimum() {
        // both in (c−1, c]: 30 fails |30−85| ≤ 8, 90 passes
        let left = [sample(4.3, 30.0, 1), sample(4.7, 90.0, 2)];
        assert_eq!(interpolate_at(0, 5, &left, 85.0, 8.0), 90.0);
        // none pass → plain minimum
        assert_eq!(interpolate_at(0, 5, &left, 200.0, 8.0), 30.0);
    }

    #[test]
    fn no_blend_across_an_edge() {
        let straddle = [sample(4.5, 40.0, 4), sample(5.5, 100.0, 5)];
        assert_eq!(interpolate_at(0, 5, &straddle, 42.0, 8.0), 40.0);
        assert_eq!(interpolate_at(0, 5, &straddle, 97.0, 8.0), 100.0);
        // neither near: ordinary blend
        assert_eq!(interpolate_at(0, 5, &straddle, 70.0, 8.0), 70.0);
    }

    #[test]
    fn open_outer_endpoints_and_ties() {
        // exactly one column away on either side is excluded
        assert_eq!(interpolate_at(0, 5, &[sample(4.0, 9.0, 0), sample(6.0, 9.0, 1)], 50.0, 8.0), 50.0);
        // equal depths: smaller source column wins
        let tie = [sample(4.8, 60.0, 9), sample(4.2, 60.0, 3)];
        let p = pick(tie.iter().copied(), 60.0, 8.0).unwrap();
        assert_eq!(p.src_col, 3);
    }

    #[test]
    fn other_rows_are_ignored() {
        let mut s = sample(5.0, 12.0, 5);
        s.row = 1;
        assert_eq!(interpolate_at(0, 5, &[s], 3.0, 8.0), 3.0);
    }

    #[test]
    fn bilateral_constant_and_collapse() {
        let flat = DepthMap::filled(9, 7, 42.0);
        let out = bilateral_filter(&flat, &BilateralParams::default()).unwrap();
        assert!(out.samples().iter().all(|&v| (v - 42.0).abs() < 1e-12));

        let distinct = DepthMap::from_fn(6, 5, |r, c| (r * 6 + c) as f64 * 3.0).unwrap();
        let p = BilateralParams {
            sigma_s: 2.0,
            sigma_r: 1e-9,
            radius: 2,
        };
        let out = bilateral_filter(&distinct, &p).unwrap();
        assert_eq!(out, distinct);
    }

    #[test]
    fn bilateral_three_by_three_oracle() {
        let mut m = DepthMap::filled(3, 3, 0.0);
        m.set(1, 1, 100.0);
        let p = BilateralParams {
            sigma_s: 1.0,
            sigma_r: 50.0,
            radius: 1,
        };
        let out = bilateral_filter(&m, &p).unwrap();
        // centre: weight 1 on 100; edges exp(-1/2)·exp(-2), corners exp(-1)·exp(-2)
        let range = (-(100.0f64 * 100.0) / (2.0 * 2500.0)).exp();
        let den = 1.0 + 4.0 * (-0.5f64).exp() * range + 4.0 * (-1.0f64).exp() * range;
        assert!((out.get(1, 1) - 100.0 / den).abs() < 1e-12);
        // corner (0,0): neighbours (0,1),(1,0) zero, (1,1)=100
        let den00 = 1.0 + 2.0 * (-0.5f64).exp() + (-1.0f64).exp() * range;
        assert!((out.get(0, 0) - 100.0 * (-1.0f64).exp() * range / den00).abs() < 1e-12);
    }

    #[test]
    fn bilateral_rejects_bad_sigmas() {
        let m = DepthMap::filled(3, 3, 1.0);
        for (s, r) in [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)] {
            let p = BilateralParams {
                sigma_s: s,
                sigma_r: r,
                radius: 1,
            };
            assert!(matches!(bilateral_filter(&m, &p), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn identity_warp_lands_on_grid() {
        let cam = CameraParams::pinhole(120.0, 31.5, 17.0, 3.0).unwrap();
        let map = DepthMap::from_fn(20, 10, |r, c| 40.0 + (r * 3 + c) as f64).unwrap();
        let buckets = forward_warp(&map, &cam, &cam, 1.0).unwrap();
        for (r, b) in buckets.iter().enumerate() {
            assert_eq!(b.len(), 20);
            for (c, s) in b.iter().enumerate() {
                assert_eq!((s.row, s.col, s.depth), (r, c as f64, map.get(r, c)));
            }
        }
        assert!(forward_warp(&DepthMap::new(0, 0, vec![]).unwrap(), &cam, &cam, 1.0).unwrap().is_empty());
    }

    #[test]
    fn constant_depth_shifts_by_disparity() {
        let pair = RectifiedPair::standard(100.0, 32.0, 8.0, 10.0).unwrap();
        let map = DepthMap::filled(64, 16, 50.0);
        let buckets = forward_warp(&map, &pair.left, &pair.right, 1.0).unwrap();
        for b in &buckets {
            // columns 0..19 leave the grid on the left (col < −1)
            assert_eq!(b.len(), 64 - 19);
            for s in b {
                assert!((s.src_col as f64 - s.col - 20.0).abs() < 1e-9);
                assert_eq!(s.row, s.src_row);
            }
        }
    }

    #[test]
    fn non_rectified_cameras_are_rejected() {
        let a = CameraParams::pinhole(100.0, 0.0, 0.0, 0.0).unwrap();
        let mut b = a;
        b.e[2][3] = 4.0;
        let m = DepthMap::filled(4, 4, 10.0);
        assert!(matches!(forward_warp(&m, &a, &b, 1.0), Err(Error::InvalidConfiguration(_))));
    }

    #[test]
    fn constant_scene_stays_constant() {
        let pair = RectifiedPair::standard(80.0, 16.0, 16.0, 6.0).unwrap();
        let map = DepthMap::filled(32, 32, 120.0);
        let out = project_view(&map, &pair.left, &pair.right, &map, &WarpParams::default()).unwrap();
        assert!(out.samples().iter().all(|&v| (v - 120.0).abs() < 1e-9));
    }

    #[test]
    fn holes_keep_current_and_identity_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let cam = CameraParams::pinhole(90.0, 12.0, 9.0, -2.0).unwrap();
        let src = DepthMap::from_fn(24, 18, |_, _| rng.gen_range(1.0..255.0)).unwrap();
        let params = WarpParams {
            bilateral: BilateralParams::disabled(),
            ..Default::default()
        };
        let other = DepthMap::filled(24, 18, 3.0);
        assert_eq!(project_view(&src, &cam, &cam, &other, &params).unwrap(), src);

        // zero-depth pixels are not warped, so their targets are holes
        let mut holey = src.clone();
        holey.set(4, 7, 0.0);
        let out = warp_and_interpolate(&holey, &cam, &cam, &other, &params).unwrap();
        assert_eq!(out.get(4, 7).to_bits(), other.get(4, 7).to_bits());
    }
}
