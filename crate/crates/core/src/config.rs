//! TOML run configuration and camera files.
//!
//! A run file looks like:
//!
//! ```toml
//! output_dir = "out"        # relative to this file
//! seed = 0
//!
//! [quant]
//! step = 24.0               # flat table; or `quality = 50` for the scaled luminance table
//!
//! [refine]                  # every key optional, defaults shown
//! max_iters = 10
//! eps = 0.01
//! tau = 8.0
//! sigma_s = 2.0
//! sigma_r = 10.0
//! radius = 3
//! first = "left"            # view warped first
//! keep_best = false
//! depth_scale = 1.0
//!
//! # either a synthetic scene (the bundled one when both sections are absent) ...
//! [scene]
//! preset = "bundled"
//!
//! # ... or user data
//! [input]
//! left = "left.pgm"
//! right = "right.pgm"
//! camera_file = "cameras.toml"   # or inline [cameras.left] / [cameras.right]
//! ```
//!
//! A camera file holds `[left]` and `[right]` tables with `k` (9 numbers,
//! row-major) and `e` (12 numbers, row-major), plus an optional top-level
//! `depth_scale`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec::QuantTable;
use crate::error::{Error, Result};
use crate::geometry::{CameraParams, RectifiedPair};
use crate::pocs::{RefineOptions, View};
use crate::scene::{Primitive, SceneSpec};
use crate::warp::{BilateralParams, WarpParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraEntry {
    pub k: [f64; 9],
    pub e: [f64; 12],
}

impl CameraEntry {
    pub fn to_params(&self) -> Result<CameraParams> {
        let k = std::array::from_fn(|i| std::array::from_fn(|j| self.k[3 * i + j]));
        let e = std::array::from_fn(|i| std::array::from_fn(|j| self.e[4 * i + j]));
        CameraParams::new(k, e)
    }

    pub fn from_params(cam: &CameraParams) -> Self {
        CameraEntry {
            k: std::array::from_fn(|i| cam.k[i / 3][i % 3]),
            e: std::array::from_fn(|i| cam.e[i / 4][i % 4]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_scale: Option<f64>,
    pub left: CameraEntry,
    pub right: CameraEntry,
}

impl CameraFile {
    pub fn from_pair(pair: &RectifiedPair) -> Self {
        CameraFile {
            depth_scale: None,
            left: CameraEntry::from_params(&pair.left),
            right: CameraEntry::from_params(&pair.right),
        }
    }

    pub fn pair(&self) -> Result<RectifiedPair> {
        RectifiedPair::new(self.left.to_params()?, self.right.to_params()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| Error::InvalidConfiguration(format!("{}: {}", path.display(), e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("camera file serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantSpec {
    Step(f64),
    Quality(u32),
}

impl QuantSpec {
    pub fn table(&self) -> Result<QuantTable> {
        match *self {
            QuantSpec::Step(s) => QuantTable::flat(s),
            QuantSpec::Quality(q) => QuantTable::jpeg_luminance(q),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawQuant {
    step: Option<f64>,
    quality: Option<u32>,
}

/// `[refine]` section; unset keys fall back to [`RefineOptions::default`].
#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RefineSection {
    pub max_iters: Option<usize>,
    pub eps: Option<f64>,
    pub tau: Option<f64>,
    pub sigma_s: Option<f64>,
    pub sigma_r: Option<f64>,
    pub radius: Option<usize>,
    pub first: Option<View>,
    pub keep_best: Option<bool>,
    pub depth_scale: Option<f64>,
}

impl RefineSection {
    pub fn options(&self, camera_depth_scale: Option<f64>) -> Result<RefineOptions> {
        let d = RefineOptions::default();
        let b = BilateralParams::default();
        let opts = RefineOptions {
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            eps: self.eps.unwrap_or(d.eps),
            warp: WarpParams {
                tau: self.tau.unwrap_or(d.warp.tau),
                bilateral: BilateralParams {
                    sigma_s: self.sigma_s.unwrap_or(b.sigma_s),
                    sigma_r: self.sigma_r.unwrap_or(b.sigma_r),
                    radius: self.radius.unwrap_or(b.radius),
                },
                depth_scale: self.depth_scale.or(camera_depth_scale).unwrap_or(1.0),
            },
            first_target: self.first.map_or(d.first_target, View::other),
            keep_best: self.keep_best.unwrap_or(false),
        };
        opts.validate()
            .map_err(|e| Error::InvalidConfiguration(e.to_string()))?;
        if !(opts.warp.depth_scale > 0.0) {
            return Err(Error::InvalidConfiguration("depth_scale must be positive".into()));
        }
        Ok(opts)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCameras {
    left: CameraEntry,
    right: CameraEntry,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    left: PathBuf,
    right: PathBuf,
    camera_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawScene {
    preset: Option<String>,
    width: Option<usize>,
    height: Option<usize>,
    focal: Option<f64>,
    baseline: Option<f64>,
    cx: Option<f64>,
    cy: Option<f64>,
    primitives: Option<Vec<Primitive>>,
    round_to_levels: Option<bool>,
    noise: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
    #[serde(default)]
    compare_8bit: bool,
    #[serde(default)]
    quant: RawQuant,
    #[serde(default)]
    refine: RefineSection,
    scene: Option<RawScene>,
    input: Option<RawInput>,
    cameras: Option<RawCameras>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CameraSource {
    File(PathBuf),
    Inline(CameraFile),
}

impl CameraSource {
    pub fn load(&self) -> Result<CameraFile> {
        match self {
            CameraSource::File(p) => CameraFile::load(p),
            CameraSource::Inline(c) => Ok(c.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Scene(SceneSpec),
    Files {
        left: PathBuf,
        right: PathBuf,
        cameras: CameraSource,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub quant: QuantSpec,
    pub refine: RefineSection,
    pub source: Source,
    pub seed: u64,
    /// Round maps to integer levels before computing the final scores.
    pub compare_8bit: bool,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfiguration(msg.into())
}

fn scene_from(raw: RawScene, seed: u64) -> Result<SceneSpec> {
    let mut spec = match raw.preset.as_deref() {
        None | Some("bundled") => SceneSpec::bundled(),
        Some(other) => return Err(invalid(format!("unknown scene preset {other:?}"))),
    };
    macro_rules! take {
        ($($f:ident),*) => { $( if let Some(v) = raw.$f { spec.$f = v; } )* };
    }
    take!(width, height, focal, baseline, cx, cy, primitives, round_to_levels, noise);
    spec.seed = seed;
    Ok(spec)
}

impl RunConfig {
    /// Parses a run file; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawRun = toml::from_str(text).map_err(|e| invalid(e.message().to_string()))?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };
        let quant = match (raw.quant.step, raw.quant.quality) {
            (Some(s), None) => QuantSpec::Step(s),
            (None, Some(q)) => QuantSpec::Quality(q),
            (None, None) => QuantSpec::Step(24.0),
            (Some(_), Some(_)) => return Err(invalid("[quant] takes either step or quality, not both")),
        };
        quant.table().map_err(|e| invalid(e.to_string()))?;
        let seed = raw.seed.unwrap_or(0);
        let source = match (raw.scene, raw.input) {
            (Some(_), Some(_)) => return Err(invalid("use either [scene] or [input], not both")),
            (scene, None) => {
                if raw.cameras.is_some() {
                    return Err(invalid("[cameras] only applies to [input] runs"));
                }
                let raw_scene = scene.unwrap_or_default();
                Source::Scene(scene_from(raw_scene, seed)?)
            }
            (None, Some(input)) => {
                let cameras = match (input.camera_file, raw.cameras) {
                    (Some(f), None) => CameraSource::File(resolve(f)),
                    (None, Some(c)) => CameraSource::Inline(CameraFile {
                        depth_scale: None,
                        left: c.left,
                        right: c.right,
                    }),
                    _ => return Err(invalid("[input] needs exactly one of camera_file or [cameras]")),
                };
                Source::Files {
                    left: resolve(input.left),
                    right: resolve(input.right),
                    cameras,
                }
            }
        };
        // surface bad solver parameters before any work happens
        raw.refine.options(None)?;
        Ok(RunConfig {
            output_dir: resolve(raw.output_dir.unwrap_or_else(|| PathBuf::from("out"))),
            quant,
            refine: raw.refine,
            source,
            seed,
            compare_8bit: raw.compare_8bit,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base)
    }

    /// Default config: bundled scene, flat step 24, default solver.
    pub fn bundled(output_dir: PathBuf) -> Self {
        RunConfig {
            output_dir,
            quant: QuantSpec::Step(24.0),
            refine: RefineSection::default(),
            source: Source::Scene(SceneSpec::bundled()),
            seed: 0,
            compare_8bit: false,
        }
    }
}
