//! Alternating projections between the two views.
//!
//! One half-iteration warps the source view onto the target view and then
//! projects every 8×8 block of the result onto the target's quantization
//! hypercube. A full iteration runs left→right and right→left (or the
//! reverse). Both views start at the centroid decode.
//!
//! The iterates live on the padded block grid so that each half-iteration
//! output satisfies its bin constraints exactly; maps are cropped and
//! clamped to [0, 255] only when reported or returned.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec::{project_onto_description, ClipStats, QuantizedDescription};
use crate::error::{Error, Result};
use crate::geometry::{CameraParams, RectifiedPair};
use crate::map::DepthMap;
use crate::metrics::{quality_g, QualityScore};
use crate::warp::{project_view, WarpParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Left,
    Right,
}

impl View {
    pub fn other(self) -> View {
        match self {
            View::Left => View::Right,
            View::Right => View::Left,
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            View::Left => "left",
            View::Right => "right",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub max_iters: usize,
    /// Mean absolute per-sample change (levels) below which a half-step counts as settled.
    pub eps: f64,
    pub warp: WarpParams,
    /// View updated first; `Right` means the first half-step warps left→right.
    pub first_target: View,
    /// Also keep the iterate with the best averaged PSNR (needs ground truth).
    pub keep_best: bool,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            max_iters: 10,
            eps: 0.01,
            warp: WarpParams::default(),
            first_target: View::Right,
            keep_best: false,
        }
    }
}

impl RefineOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be non-negative, got {}", self.eps)));
        }
        if !(self.warp.tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be non-negative, got {}", self.warp.tau)));
        }
        self.warp.bilateral.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfStepStats {
    pub mean_change: f64,
    pub clip: ClipStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfStep {
    /// 1-based full-iteration index.
    pub iter: usize,
    /// The view updated by this half-step.
    pub view: View,
    pub mean_change: f64,
    pub clip_fraction: f64,
    pub quality: Option<QualityScore>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationReport {
    pub steps: Vec<HalfStep>,
    pub iterations: usize,
    pub converged: bool,
}

/// Warps `src` onto the target view and clips the result onto `dst_desc`.
///
/// `src` and `dst_current` must share dimensions: either the description's
/// original size (padded by edge replication internally and cropped on
/// return) or its padded size (in which case the output satisfies every
/// block constraint exactly).
pub fn half_iteration(
    src: &DepthMap,
    src_cam: &CameraParams,
    dst_cam: &CameraParams,
    dst_desc: &QuantizedDescription,
    dst_current: &DepthMap,
    options: &RefineOptions,
) -> Result<(DepthMap, HalfStepStats)> {
    src.ensure_same_dims(dst_current)?;
    dst_desc.validate()?;
    let projected = project_view(src, src_cam, dst_cam, dst_current, &options.warp)?;
    let padded = dst_desc.pad(&projected)?;
    let (clipped, clip) = project_onto_description(&padded, dst_desc)?;
    let out = clipped.crop(dst_current.width(), dst_current.height())?;
    let mean_change = out.mean_abs_diff(dst_current)?;
    Ok((out, HalfStepStats { mean_change, clip }))
}

/// True iff both half-steps of the last full iteration changed by at most `eps`.
pub fn has_converged(report: &IterationReport, options: &RefineOptions) -> bool {
    let n = report.steps.len();
    if n < 2 || !n.is_multiple_of(2) {
        return false;
    }
    report.steps[n - 2..].iter().all(|s| s.mean_change <= options.eps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestIterate {
    pub left: DepthMap,
    pub right: DepthMap,
    /// Index into [`IterationReport::steps`].
    pub step: usize,
    pub quality: QualityScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub left: DepthMap,
    pub right: DepthMap,
    pub report: IterationReport,
    pub best: Option<BestIterate>,
}

fn emit(map: &DepthMap, desc: &QuantizedDescription) -> Result<DepthMap> {
    Ok(map.crop(desc.orig_width, desc.orig_height)?.clamped(0.0, 255.0))
}

/// Runs the alternating projection until both half-steps settle or
/// `max_iters` full iterations have run.
pub fn refine(
    left_desc: &QuantizedDescription,
    right_desc: &QuantizedDescription,
    cams: &RectifiedPair,
    options: &RefineOptions,
    ground_truth: Option<(&DepthMap, &DepthMap)>,
) -> Result<Refinement> {
    options.validate()?;
    RectifiedPair::new(cams.left, cams.right)?;
    left_desc.validate()?;
    right_desc.validate()?;
    if (left_desc.width, left_desc.height, left_desc.orig_width, left_desc.orig_height)
        != (right_desc.width, right_desc.height, right_desc.orig_width, right_desc.orig_height)
    {
        return Err(Error::InvalidInput("left and right descriptions have different sizes".into()));
    }
    if let Some((l, r)) = ground_truth {
        let want = (left_desc.orig_width, left_desc.orig_height);
        if l.dims() != want || r.dims() != want {
            return Err(Error::InvalidInput(format!(
                "ground truth must be {}×{}",
                want.0, want.1
            )));
        }
    }

    let mut left = left_desc.decode_padded()?;
    let mut right = right_desc.decode_padded()?;
    let mut report = IterationReport::default();
    let mut best: Option<BestIterate> = None;

    'outer: for iter in 1..=options.max_iters {
        let mut target = options.first_target;
        for _ in 0..2 {
            let (src, src_cam, dst_cam, desc, current) = match target {
                View::Right => (&left, &cams.left, &cams.right, right_desc, &right),
                View::Left => (&right, &cams.right, &cams.left, left_desc, &left),
            };
            let (updated, stats) = half_iteration(src, src_cam, dst_cam, desc, current, options)?;
            match target {
                View::Right => right = updated,
                View::Left => left = updated,
            }

            let quality = match ground_truth {
                Some((gl, gr)) => Some(quality_g(&emit(&left, left_desc)?, &emit(&right, right_desc)?, gl, gr)?),
                None => None,
            };
            report.steps.push(HalfStep {
                iter,
                view: target,
                mean_change: stats.mean_change,
                clip_fraction: stats.clip.fraction(),
                quality,
            });
            if let (true, Some(q)) = (options.keep_best, quality) {
                if best.as_ref().is_none_or(|b| q.g > b.quality.g) {
                    best = Some(BestIterate {
                        left: emit(&left, left_desc)?,
                        right: emit(&right, right_desc)?,
                        step: report.steps.len() - 1,
                        quality: q,
                    });
                }
            }
            target = target.other();
        }
        report.iterations = iter;
        if has_converged(&report, options) {
            report.converged = true;
            break 'outer;
        }
    }

    Ok(Refinement {
        left: emit(&left, left_desc)?,
        right: emit(&right, right_desc)?,
        report,
        best,
    })
}
