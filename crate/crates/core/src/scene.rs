//! Synthetic rectified stereo scenes with analytic ground-truth depth.
//!
//! Primitives live in the `(x, y, d)` world. For a pixel the camera ray is
//! the set of back-projected points for all depths, which is affine in `d`;
//! each primitive is intersected in closed form and the nearest hit wins.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{back_project, project, CameraParams, RectifiedPair};
use crate::map::DepthMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Primitive {
    /// Infinite plane `d = d0 + gx·x + gy·y`.
    Plane { d0: f64, gx: f64, gy: f64 },
    /// Axis-aligned box `[x0, x1] × [y0, y1] × [d0, d1]`.
    Box {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        d0: f64,
        d1: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub focal: f64,
    pub baseline: f64,
    pub cx: f64,
    pub cy: f64,
    pub primitives: Vec<Primitive>,
    /// Round ground truth to integer levels (an 8-bit capture).
    #[serde(default = "default_true")]
    pub round_to_levels: bool,
    /// Half-width of uniform per-pixel noise added to each view.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

impl SceneSpec {
    /// 256×256 slanted back wall, floor plane and a box in front.
    pub fn bundled() -> Self {
        SceneSpec {
            width: 256,
            height: 256,
            focal: 200.0,
            baseline: 10.0,
            cx: 127.5,
            cy: 127.5,
            primitives: vec![
                Primitive::Plane {
                    d0: 160.0,
                    gx: 0.15,
                    gy: 0.0,
                },
                Primitive::Plane {
                    d0: 230.0,
                    gx: 0.0,
                    gy: -1.5,
                },
                Primitive::Box {
                    x0: -40.0,
                    x1: 10.0,
                    y0: -50.0,
                    y1: 20.0,
                    d0: 90.0,
                    d1: 110.0,
                },
            ],
            round_to_levels: true,
            noise: 0.0,
            seed: 0,
        }
    }

    pub fn cameras(&self) -> Result<RectifiedPair> {
        RectifiedPair::standard(self.focal, self.cx, self.cy, self.baseline)
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidScene("scene must be at least 1×1".into()));
        }
        if self.primitives.is_empty() {
            return Err(Error::InvalidScene("scene has no primitives".into()));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::InvalidScene("noise must be non-negative".into()));
        }
        for p in &self.primitives {
            if let Primitive::Box { x0, x1, y0, y1, d0, d1 } = *p {
                if !(x0 <= x1 && y0 <= y1 && d0 <= d1) {
                    return Err(Error::InvalidScene(format!("box has inverted extents: {p:?}")));
                }
            }
        }
        Ok(())
    }
}

/// Ray through a (sub-)pixel: world point `origin + d·dir` with third
/// coordinate `d`.
#[derive(Debug, Clone, Copy)]
struct Ray {
    ox: f64,
    oy: f64,
    dx: f64,
    dy: f64,
}

impl Ray {
    fn through(row: f64, col: f64, cam: &CameraParams) -> Result<Ray> {
        let a = back_project(row, col, 1.0, cam)?;
        let b = back_project(row, col, 2.0, cam)?;
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        Ok(Ray {
            ox: a.x - dx,
            oy: a.y - dy,
            dx,
            dy,
        })
    }
}

/// Parameter interval `{d : lo ≤ o + d·s ≤ hi}`.
fn slab(o: f64, s: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if s == 0.0 {
        return (lo <= o && o <= hi).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let (a, b) = ((lo - o) / s, (hi - o) / s);
    Some((a.min(b), a.max(b)))
}

impl Primitive {
    /// Nearest positive depth at which `ray` meets the primitive.
    fn intersect(&self, ray: &Ray) -> Option<f64> {
        match *self {
            Primitive::Plane { d0, gx, gy } => {
                let den = 1.0 - gx * ray.dx - gy * ray.dy;
                if den == 0.0 {
                    return None;
                }
                let d = (d0 + gx * ray.ox + gy * ray.oy) / den;
                (d > 0.0).then_some(d)
            }
            Primitive::Box { x0, x1, y0, y1, d0, d1 } => {
                let (ax, bx) = slab(ray.ox, ray.dx, x0, x1)?;
                let (ay, by) = slab(ray.oy, ray.dy, y0, y1)?;
                let lo = ax.max(ay).max(d0).max(0.0);
                let hi = bx.min(by).min(d1);
                (lo <= hi && lo > 0.0).then_some(lo)
            }
        }
    }
}

fn depth_along(spec: &SceneSpec, row: f64, col: f64, cam: &CameraParams) -> Result<Option<f64>> {
    let ray = Ray::through(row, col, cam)?;
    Ok(spec
        .primitives
        .iter()
        .filter_map(|p| p.intersect(&ray))
        .min_by(f64::total_cmp))
}

/// Nearest-surface depth at a (possibly sub-pixel) location of one view.
pub fn render_depth_at(spec: &SceneSpec, row: f64, col: f64, cam: &CameraParams) -> Result<f64> {
    depth_along(spec, row, col, cam)?.ok_or_else(|| {
        Error::InvalidScene(format!("pixel ({row}, {col}) is not covered by any primitive"))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub left: DepthMap,
    pub right: DepthMap,
    pub cameras: RectifiedPair,
    /// Per-pixel flag: the surface point is also visible in the other view.
    /// Only for testing; the decoder never sees it.
    pub left_mask: Vec<bool>,
    pub right_mask: Vec<bool>,
}

fn render_view(spec: &SceneSpec, cam: &CameraParams) -> Result<DepthMap> {
    let mut samples = Vec::with_capacity(spec.width * spec.height);
    for r in 0..spec.height {
        for c in 0..spec.width {
            samples.push(render_depth_at(spec, r as f64, c as f64, cam)?);
        }
    }
    DepthMap::new(spec.width, spec.height, samples)
}

fn visibility(spec: &SceneSpec, map: &DepthMap, from: &CameraParams, to: &CameraParams) -> Result<Vec<bool>> {
    let mut mask = Vec::with_capacity(map.samples().len());
    for r in 0..map.height() {
        for c in 0..map.width() {
            let d = map.get(r, c);
            let p = project(&back_project(r as f64, c as f64, d, from)?, to)?;
            let inside = p.col >= 0.0
                && p.col <= (spec.width - 1) as f64
                && p.row >= 0.0
                && p.row <= (spec.height - 1) as f64;
            let seen = inside
                && match depth_along(spec, p.row, p.col, to)? {
                    Some(other) => (other - d).abs() <= 1e-6 * d.max(1.0),
                    None => false,
                };
            mask.push(seen);
        }
    }
    Ok(mask)
}

/// Renders both ground-truth views, their cameras and visibility masks.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let cameras = spec.cameras()?;
    let left = render_view(spec, &cameras.left)?;
    let right = render_view(spec, &cameras.right)?;
    let left_mask = visibility(spec, &left, &cameras.left, &cameras.right)?;
    let right_mask = visibility(spec, &right, &cameras.right, &cameras.left)?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut finish = |m: DepthMap| {
        m.into_samples()
            .into_iter()
            .map(|v| {
                let v = if spec.noise > 0.0 { v + rng.gen_range(-spec.noise..=spec.noise) } else { v };
                if spec.round_to_levels {
                    v.round().clamp(0.0, 255.0)
                } else {
                    v
                }
            })
            .collect::<Vec<_>>()
    };
    let (w, h) = (spec.width, spec.height);
    let left = DepthMap::new(w, h, finish(left))?;
    let right = DepthMap::new(w, h, finish(right))?;
    Ok(Scene {
        left,
        right,
        cameras,
        left_mask,
        right_mask,
    })
}
