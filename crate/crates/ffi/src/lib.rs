//! C interface to `depthpocs`.
//!
//! Every object crosses the boundary as an opaque heap handle created by a
//! `dp_*_new`/`dp_*_read`/producing call and released by the matching
//! `dp_*_free`. Fallible calls return a [`DpStatus`]; on failure a message is
//! kept per thread and can be fetched with [`dp_last_error_message`].
//! Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use depthpocs::codec::{decode_map, encode_map, QuantTable, QuantizedDescription};
use depthpocs::error::ErrorKind;
use depthpocs::geometry::{CameraParams, RectifiedPair};
use depthpocs::metrics::{psnr, quality_g, QualityScore};
use depthpocs::pgm::{self, BitDepth};
use depthpocs::pocs::{refine, RefineOptions, Refinement, View};
use depthpocs::warp::{BilateralParams, WarpParams};
use depthpocs::{DepthMap, Error};

/// Result of every fallible call. Values 2–4 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpStatus {
    Ok = 0,
    /// Null pointer, bad length or otherwise malformed argument.
    InvalidArgument = 1,
    InvalidConfig = 2,
    Io = 3,
    Numerical = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

pub const DP_VIEW_LEFT: u32 = 0;
pub const DP_VIEW_RIGHT: u32 = 1;

pub struct DpDepthMap(DepthMap);
pub struct DpDescription(QuantizedDescription);
pub struct DpCameraPair(RectifiedPair);
pub struct DpRefineResult(Refinement);

/// Solver settings; obtain defaults from [`dp_refine_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpRefineOptions {
    pub max_iters: u32,
    pub eps: f64,
    pub tau: f64,
    pub sigma_s: f64,
    pub sigma_r: f64,
    /// 0 disables the bilateral filter.
    pub radius: u32,
    pub depth_scale: f64,
    /// `DP_VIEW_RIGHT` warps left→right first.
    pub first_target: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpQuality {
    pub psnr_left: f64,
    pub psnr_right: f64,
    pub g: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpHalfStep {
    pub iter: u32,
    pub view: u32,
    pub mean_change: f64,
    pub clip_fraction: f64,
    /// False when the refinement ran without ground truth; `quality` is then zeroed.
    pub has_quality: bool,
    pub quality: DpQuality,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail(DpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e.kind() {
            ErrorKind::InvalidConfig => DpStatus::InvalidConfig,
            ErrorKind::Io => DpStatus::Io,
            ErrorKind::Numerical => DpStatus::Numerical,
        };
        Fail(status, e.to_string())
    }
}

fn bad(msg: impl Into<String>) -> Fail {
    Fail(DpStatus::InvalidArgument, msg.into())
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DpStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error: panic caught at the C boundary".into());
            DpStatus::Internal
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| bad(format!("{what} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(bad("output pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(bad("path is null"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| bad("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn array<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(bad(format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn view_from(v: u32) -> Result<View, Fail> {
    match v {
        DP_VIEW_LEFT => Ok(View::Left),
        DP_VIEW_RIGHT => Ok(View::Right),
        other => Err(bad(format!("unknown view {other}"))),
    }
}

fn view_to(v: View) -> u32 {
    match v {
        View::Left => DP_VIEW_LEFT,
        View::Right => DP_VIEW_RIGHT,
    }
}

fn quality_to(q: QualityScore) -> DpQuality {
    DpQuality {
        psnr_left: q.psnr_left,
        psnr_right: q.psnr_right,
        g: q.g,
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn dp_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Copies `width·height` row-major samples into a new map.
///
/// # Safety
/// `samples` must point to `width·height` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn dp_map_new(
    width: usize,
    height: usize,
    samples: *const f64,
    out: *mut *mut DpDepthMap,
) -> DpStatus {
    guard(|| {
        let n = width.checked_mul(height).ok_or_else(|| bad("map size overflows"))?;
        let data = if n == 0 { &[][..] } else { array(samples, n, "samples")? };
        let map = DepthMap::new(width, height, data.to_vec()).map_err(|e| bad(e.to_string()))?;
        put(out, DpDepthMap(map))
    })
}

/// # Safety
/// `map` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dp_map_free(map: *mut DpDepthMap) {
    free(map)
}

/// # Safety
/// `map` must be a live handle; `width` and `height` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_map_dims(map: *const DpDepthMap, width: *mut usize, height: *mut usize) -> DpStatus {
    guard(|| {
        let m = get(map, "map")?;
        if width.is_null() || height.is_null() {
            return Err(bad("output pointer is null"));
        }
        *width = m.0.width();
        *height = m.0.height();
        Ok(())
    })
}

/// Copies the samples out; `len` must equal `width·height`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dp_map_copy_samples(map: *const DpDepthMap, out: *mut f64, len: usize) -> DpStatus {
    guard(|| {
        let m = get(map, "map")?;
        let src = m.0.samples();
        if len != src.len() {
            return Err(bad(format!("buffer holds {len} samples, map has {}", src.len())));
        }
        if len > 0 {
            if out.is_null() {
                return Err(bad("output buffer is null"));
            }
            ptr::copy_nonoverlapping(src.as_ptr(), out, len);
        }
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dp_pgm_read(path: *const c_char, out: *mut *mut DpDepthMap) -> DpStatus {
    guard(|| {
        let map = pgm::read(&path_arg(path)?)?;
        put(out, DpDepthMap(map))
    })
}

/// Writes an 8-bit PGM, or a 16-bit one storing levels × 256.
///
/// # Safety
/// `path` must be a NUL-terminated string; `map` a live handle.
#[no_mangle]
pub unsafe extern "C" fn dp_pgm_write(path: *const c_char, map: *const DpDepthMap, sixteen_bit: bool) -> DpStatus {
    guard(|| {
        let m = get(map, "map")?;
        let depth = if sixteen_bit { BitDepth::Sixteen } else { BitDepth::Eight };
        pgm::write(&path_arg(path)?, &m.0, depth)?;
        Ok(())
    })
}

unsafe fn encode_with(map: *const DpDepthMap, table: depthpocs::Result<QuantTable>, out: *mut *mut DpDescription) -> DpStatus {
    guard(|| {
        let m = get(map, "map")?;
        let table = table.map_err(|e| Fail(DpStatus::InvalidConfig, e.to_string()))?;
        put(out, DpDescription(encode_map(&m.0, &table)?))
    })
}

/// Quantizes with the same step for all 64 coefficients.
///
/// # Safety
/// `map` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_encode_flat(map: *const DpDepthMap, step: f64, out: *mut *mut DpDescription) -> DpStatus {
    encode_with(map, QuantTable::flat(step), out)
}

/// Quantizes with the luminance table scaled to `quality` (1–100).
///
/// # Safety
/// `map` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_encode_quality(
    map: *const DpDepthMap,
    quality: u32,
    out: *mut *mut DpDescription,
) -> DpStatus {
    encode_with(map, QuantTable::jpeg_luminance(quality), out)
}

/// # Safety
/// `desc` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dp_description_free(desc: *mut DpDescription) {
    free(desc)
}

/// Standard decode: centroid reconstruction, cropped and clamped to [0, 255].
///
/// # Safety
/// `desc` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_decode(desc: *const DpDescription, out: *mut *mut DpDepthMap) -> DpStatus {
    guard(|| put(out, DpDepthMap(decode_map(&get(desc, "description")?.0)?)))
}

/// Serializes to the QDM1 container. With `buf` null only `needed` is set;
/// otherwise `cap` must be at least `needed`.
///
/// # Safety
/// `buf`, when not null, must have `cap` writable bytes; `needed` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_description_to_bytes(
    desc: *const DpDescription,
    buf: *mut u8,
    cap: usize,
    needed: *mut usize,
) -> DpStatus {
    guard(|| {
        let bytes = get(desc, "description")?.0.to_bytes();
        if needed.is_null() {
            return Err(bad("needed is null"));
        }
        *needed = bytes.len();
        if buf.is_null() {
            return Ok(());
        }
        if cap < bytes.len() {
            return Err(bad(format!("buffer holds {cap} bytes, description needs {}", bytes.len())));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        Ok(())
    })
}

/// # Safety
/// `bytes` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn dp_description_from_bytes(
    bytes: *const u8,
    len: usize,
    out: *mut *mut DpDescription,
) -> DpStatus {
    guard(|| {
        if bytes.is_null() {
            return Err(bad("bytes is null"));
        }
        let data = std::slice::from_raw_parts(bytes, len);
        put(out, DpDescription(QuantizedDescription::from_bytes(data)?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_description_read(path: *const c_char, out: *mut *mut DpDescription) -> DpStatus {
    guard(|| put(out, DpDescription(QuantizedDescription::read_from(&path_arg(path)?)?)))
}

/// # Safety
/// `path` must be a NUL-terminated string; `desc` a live handle.
#[no_mangle]
pub unsafe extern "C" fn dp_description_write(path: *const c_char, desc: *const DpDescription) -> DpStatus {
    guard(|| {
        get(desc, "description")?.0.write_to(&path_arg(path)?)?;
        Ok(())
    })
}

unsafe fn camera(k: *const f64, e: *const f64) -> Result<CameraParams, Fail> {
    let k = array(k, 9, "K")?;
    let e = array(e, 12, "E")?;
    let km = std::array::from_fn(|i| std::array::from_fn(|j| k[i * 3 + j]));
    let em = std::array::from_fn(|i| std::array::from_fn(|j| e[i * 4 + j]));
    Ok(CameraParams::new(km, em)?)
}

/// Builds a rectified pair from row-major `K` (9 values) and `E` (12 values)
/// for each view.
///
/// # Safety
/// Each matrix pointer must reference the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn dp_camera_pair_new(
    k_left: *const f64,
    e_left: *const f64,
    k_right: *const f64,
    e_right: *const f64,
    out: *mut *mut DpCameraPair,
) -> DpStatus {
    guard(|| {
        let pair = RectifiedPair::new(camera(k_left, e_left)?, camera(k_right, e_right)?)?;
        put(out, DpCameraPair(pair))
    })
}

/// Left camera at the origin, right camera `baseline` along +x, shared
/// focal length and principal point.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_camera_pair_standard(
    focal: f64,
    cx: f64,
    cy: f64,
    baseline: f64,
    out: *mut *mut DpCameraPair,
) -> DpStatus {
    guard(|| put(out, DpCameraPair(RectifiedPair::standard(focal, cx, cy, baseline)?)))
}

/// # Safety
/// `pair` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dp_camera_pair_free(pair: *mut DpCameraPair) {
    free(pair)
}

#[no_mangle]
pub extern "C" fn dp_refine_options_default() -> DpRefineOptions {
    let d = RefineOptions::default();
    DpRefineOptions {
        max_iters: d.max_iters as u32,
        eps: d.eps,
        tau: d.warp.tau,
        sigma_s: d.warp.bilateral.sigma_s,
        sigma_r: d.warp.bilateral.sigma_r,
        radius: d.warp.bilateral.radius as u32,
        depth_scale: d.warp.depth_scale,
        first_target: view_to(d.first_target),
    }
}

fn options_from(o: &DpRefineOptions) -> Result<RefineOptions, Fail> {
    let opts = RefineOptions {
        max_iters: o.max_iters as usize,
        eps: o.eps,
        warp: WarpParams {
            tau: o.tau,
            bilateral: BilateralParams {
                sigma_s: o.sigma_s,
                sigma_r: o.sigma_r,
                radius: o.radius as usize,
            },
            depth_scale: o.depth_scale,
        },
        first_target: view_from(o.first_target)?,
        keep_best: false,
    };
    opts.validate().map_err(|e| Fail(DpStatus::InvalidConfig, e.to_string()))?;
    Ok(opts)
}

/// Jointly refines two descriptions. `options` may be null for defaults.
/// Pass both truth maps to get per-half-step quality in the trace, or
/// neither.
///
/// # Safety
/// All non-null pointers must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_refine(
    left: *const DpDescription,
    right: *const DpDescription,
    cameras: *const DpCameraPair,
    options: *const DpRefineOptions,
    truth_left: *const DpDepthMap,
    truth_right: *const DpDepthMap,
    out: *mut *mut DpRefineResult,
) -> DpStatus {
    guard(|| {
        let (l, r) = (get(left, "left")?, get(right, "right")?);
        let cams = get(cameras, "cameras")?;
        let opts = match options.as_ref() {
            Some(o) => options_from(o)?,
            None => RefineOptions::default(),
        };
        let truth = match (truth_left.as_ref(), truth_right.as_ref()) {
            (Some(a), Some(b)) => Some((&a.0, &b.0)),
            (None, None) => None,
            _ => return Err(bad("pass both truth maps or neither")),
        };
        put(out, DpRefineResult(refine(&l.0, &r.0, &cams.0, &opts, truth)?))
    })
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dp_refine_result_free(result: *mut DpRefineResult) {
    free(result)
}

/// New map handle holding a copy of the refined view.
///
/// # Safety
/// `result` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_refine_result_map(
    result: *const DpRefineResult,
    view: u32,
    out: *mut *mut DpDepthMap,
) -> DpStatus {
    guard(|| {
        let res = &get(result, "result")?.0;
        let map = match view_from(view)? {
            View::Left => res.left.clone(),
            View::Right => res.right.clone(),
        };
        put(out, DpDepthMap(map))
    })
}

/// # Safety
/// `result` must be a live handle; the output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn dp_refine_result_summary(
    result: *const DpRefineResult,
    iterations: *mut u32,
    converged: *mut bool,
    half_steps: *mut usize,
) -> DpStatus {
    guard(|| {
        let report = &get(result, "result")?.0.report;
        if iterations.is_null() || converged.is_null() || half_steps.is_null() {
            return Err(bad("output pointer is null"));
        }
        *iterations = report.iterations as u32;
        *converged = report.converged;
        *half_steps = report.steps.len();
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_refine_result_step(
    result: *const DpRefineResult,
    index: usize,
    out: *mut DpHalfStep,
) -> DpStatus {
    guard(|| {
        let steps = &get(result, "result")?.0.report.steps;
        let s = steps
            .get(index)
            .ok_or_else(|| bad(format!("half-step {index} out of range (have {})", steps.len())))?;
        if out.is_null() {
            return Err(bad("output pointer is null"));
        }
        *out = DpHalfStep {
            iter: s.iter as u32,
            view: view_to(s.view),
            mean_change: s.mean_change,
            clip_fraction: s.clip_fraction,
            has_quality: s.quality.is_some(),
            quality: s.quality.map_or(
                DpQuality {
                    psnr_left: 0.0,
                    psnr_right: 0.0,
                    g: 0.0,
                },
                quality_to,
            ),
        };
        Ok(())
    })
}

/// PSNR in dB with peak 255; identical maps give +infinity.
///
/// # Safety
/// `a`, `b` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_psnr(a: *const DpDepthMap, b: *const DpDepthMap, out: *mut f64) -> DpStatus {
    guard(|| {
        let v = psnr(&get(a, "a")?.0, &get(b, "b")?.0)?;
        if out.is_null() {
            return Err(bad("output pointer is null"));
        }
        *out = v;
        Ok(())
    })
}

/// Per-view PSNR against the references and their mean.
///
/// # Safety
/// All maps must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dp_quality_g(
    left: *const DpDepthMap,
    right: *const DpDepthMap,
    ref_left: *const DpDepthMap,
    ref_right: *const DpDepthMap,
    out: *mut DpQuality,
) -> DpStatus {
    guard(|| {
        let q = quality_g(
            &get(left, "left")?.0,
            &get(right, "right")?.0,
            &get(ref_left, "ref_left")?.0,
            &get(ref_right, "ref_right")?.0,
        )?;
        if out.is_null() {
            return Err(bad("output pointer is null"));
        }
        *out = quality_to(q);
        Ok(())
    })
}
