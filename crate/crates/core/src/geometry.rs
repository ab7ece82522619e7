//! Pinhole cameras in the `(x, y, d)` world used by the warp.
//!
//! A pixel at row `r`, column `c` with depth `d` is the world point
//! `(x, y, d)` satisfying `(c, r, 1)ᵀ = α·K·E·(x, y, d, 1)ᵀ` for some
//! `α > 0`. The depth sample is the third world coordinate, so it carries
//! over unchanged to the other view.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHO_TOL: f64 = 1e-9;

/// Intrinsics `K` (3×3) and extrinsics `E = [R | t]` (3×4), both row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraParams {
    pub k: [[f64; 3]; 3],
    pub e: [[f64; 4]; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
    pub d: f64,
}

/// Sub-pixel image location plus the depth that passed through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePoint {
    pub row: f64,
    pub col: f64,
    pub depth: f64,
}

impl CameraParams {
    pub fn new(k: [[f64; 3]; 3], e: [[f64; 4]; 3]) -> Result<Self> {
        let cam = CameraParams { k, e };
        cam.validate()?;
        Ok(cam)
    }

    /// `K = [f 0 cx; 0 f cy; 0 0 1]`, `E = [I | (tx, 0, 0)]`.
    pub fn pinhole(focal: f64, cx: f64, cy: f64, tx: f64) -> Result<Self> {
        CameraParams::new(
            [[focal, 0.0, cx], [0.0, focal, cy], [0.0, 0.0, 1.0]],
            [[1.0, 0.0, 0.0, tx], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfiguration(m));
        if self.k.iter().flatten().chain(self.e.iter().flatten()).any(|v| !v.is_finite()) {
            return bad("camera matrices must be finite".into());
        }
        let k = &self.k;
        if k[1][0] != 0.0 || k[2][0] != 0.0 || k[2][1] != 0.0 {
            return bad("K must be upper triangular".into());
        }
        if !(k[0][0] > 0.0 && k[1][1] > 0.0) {
            return bad(format!("K focal lengths must be positive, got {} and {}", k[0][0], k[1][1]));
        }
        if k[2][2] != 1.0 {
            return bad(format!("K[2][2] must be 1, got {}", k[2][2]));
        }
        let r = self.rotation();
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|m| r[m][i] * r[m][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > ORTHO_TOL {
                    return bad(format!("rotation part of E is not orthonormal (RᵀR[{i}][{j}] = {dot})"));
                }
            }
        }
        Ok(())
    }

    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let e = &self.e;
        [
            [e[0][0], e[0][1], e[0][2]],
            [e[1][0], e[1][1], e[1][2]],
            [e[2][0], e[2][1], e[2][2]],
        ]
    }

    pub fn translation(&self) -> [f64; 3] {
        [self.e[0][3], self.e[1][3], self.e[2][3]]
    }

    pub fn focal_x(&self) -> f64 {
        self.k[0][0]
    }

    /// `P = K·E`.
    pub fn projection(&self) -> [[f64; 4]; 3] {
        let mut p = [[0.0; 4]; 3];
        for (i, row) in p.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|m| self.k[i][m] * self.e[m][j]).sum();
            }
        }
        p
    }
}

/// Lifts pixel `(row, col)` with depth `d` to its world point.
///
/// With `P = K·E` and `s = 1/α`, the projection relation rearranges to the
/// 3×3 system `x·P₀ + y·P₁ − s·(c, r, 1)ᵀ = −(d·P₂ + P₃)` in the unknowns
/// `(x, y, s)`, where `Pⱼ` is column `j` of `P`. It is solved by Gaussian
/// elimination with partial pivoting; a singular system or `s ≤ 0` (point
/// not in front of the camera) has no valid solution.
pub fn back_project(row: f64, col: f64, depth: f64, cam: &CameraParams) -> Result<WorldPoint> {
    let none = || Error::NoSolution { row, col, depth };
    if !(depth > 0.0 && depth.is_finite() && row.is_finite() && col.is_finite()) {
        return Err(none());
    }
    let p = cam.projection();
    let pix = [col, row, 1.0];
    let mut a = [[0.0; 4]; 3];
    for i in 0..3 {
        a[i] = [p[i][0], p[i][1], -pix[i], -(depth * p[i][2] + p[i][3])];
    }
    let scale = a.iter().flat_map(|r| r[..3].iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    for col_i in 0..3 {
        let pivot = (col_i..3)
            .max_by(|&i, &j| a[i][col_i].abs().total_cmp(&a[j][col_i].abs()))
            .unwrap();
        if a[pivot][col_i].abs() <= 1e-12 * scale {
            return Err(none());
        }
        a.swap(col_i, pivot);
        for i in col_i + 1..3 {
            let f = a[i][col_i] / a[col_i][col_i];
            for j in col_i..4 {
                a[i][j] -= f * a[col_i][j];
            }
        }
    }
    let mut sol = [0.0; 3];
    for i in (0..3).rev() {
        let tail: f64 = (i + 1..3).map(|j| a[i][j] * sol[j]).sum();
        sol[i] = (a[i][3] - tail) / a[i][i];
    }
    let [x, y, s] = sol;
    if !(s > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(none());
    }
    Ok(WorldPoint { x, y, d: depth })
}

/// Re-projects a world point; the depth coordinate passes through.
pub fn project(point: &WorldPoint, cam: &CameraParams) -> Result<ImagePoint> {
    let p = cam.projection();
    let v = [point.x, point.y, point.d, 1.0];
    let h: [f64; 3] = std::array::from_fn(|i| (0..4).map(|j| p[i][j] * v[j]).sum());
    if !(h[2] > 0.0) {
        return Err(Error::BehindCamera {
            x: point.x,
            y: point.y,
            d: point.d,
        });
    }
    Ok(ImagePoint {
        row: h[1] / h[2],
        col: h[0] / h[2],
        depth: point.d,
    })
}

/// Two views sharing `K` and `R`, with translations differing only along x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectifiedPair {
    pub left: CameraParams,
    pub right: CameraParams,
}

impl RectifiedPair {
    pub fn new(left: CameraParams, right: CameraParams) -> Result<Self> {
        left.validate()?;
        right.validate()?;
        check_rectified(&left, &right)?;
        Ok(RectifiedPair { left, right })
    }

    /// Left camera at the origin, right camera `baseline` units along +x.
    pub fn standard(focal: f64, cx: f64, cy: f64, baseline: f64) -> Result<Self> {
        RectifiedPair::new(
            CameraParams::pinhole(focal, cx, cy, 0.0)?,
            CameraParams::pinhole(focal, cx, cy, -baseline)?,
        )
    }

    /// `t_left.x − t_right.x`; positive when the right camera sits at +x.
    pub fn baseline(&self) -> f64 {
        self.left.e[0][3] - self.right.e[0][3]
    }

    pub fn focal(&self) -> f64 {
        self.left.focal_x()
    }

    /// Column displacement left → right, `f·b/z`, where `z` is the camera-space
    /// depth of the point (equal to `d` when the optical axis is the world d axis).
    pub fn disparity(&self, point: &WorldPoint) -> f64 {
        let r = self.left.rotation();
        let t = self.left.translation();
        let z = r[2][0] * point.x + r[2][1] * point.y + r[2][2] * point.d + t[2];
        self.focal() * self.baseline() / z
    }
}

/// Checks the rectification preconditions the row-wise warp relies on.
pub fn check_rectified(a: &CameraParams, b: &CameraParams) -> Result<()> {
    let close = |x: f64, y: f64| (x - y).abs() <= ORTHO_TOL * (1.0 + x.abs().max(y.abs()));
    let same_k = a.k.iter().flatten().zip(b.k.iter().flatten()).all(|(x, y)| close(*x, *y));
    let (ra, rb) = (a.rotation(), b.rotation());
    let same_r = ra.iter().flatten().zip(rb.iter().flatten()).all(|(x, y)| close(*x, *y));
    let (ta, tb) = (a.translation(), b.translation());
    let along_x = close(ta[1], tb[1]) && close(ta[2], tb[2]);
    if !(same_k && same_r && along_x) {
        return Err(Error::InvalidConfiguration(
            "cameras are not a rectified pair (need identical K and R, translations differing only in x)".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn identity() -> CameraParams {
        CameraParams::pinhole(1.0, 0.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn identity_camera_examples() {
        let p = back_project(3.0, 4.0, 2.0, &identity()).unwrap();
        assert_eq!((p.x, p.y, p.d), (8.0, 6.0, 2.0));
        let q = back_project(5.0, 7.0, 1.0, &identity()).unwrap();
        assert_eq!((q.x, q.y, q.d), (7.0, 5.0, 1.0));
        let img = project(&WorldPoint { x: 8.0, y: 6.0, d: 2.0 }, &identity()).unwrap();
        assert_eq!((img.row, img.col, img.depth), (3.0, 4.0, 2.0));
    }

    #[test]
    fn disparity_example() {
        let pair = RectifiedPair::standard(100.0, 64.0, 48.0, 10.0).unwrap();
        let p = back_project(20.0, 70.0, 50.0, &pair.left).unwrap();
        let img = project(&p, &pair.right).unwrap();
        assert!((img.row - 20.0).abs() < 1e-9);
        assert!((70.0 - img.col - 20.0).abs() < 1e-9);
        assert!((pair.disparity(&p) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_behind_camera() {
        assert!(matches!(back_project(0.0, 0.0, 0.0, &identity()), Err(Error::NoSolution { .. })));
        assert!(matches!(back_project(0.0, 0.0, -3.0, &identity()), Err(Error::NoSolution { .. })));
        // camera looking along −d: every positive-depth pixel is behind it
        let flipped = CameraParams::new(
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            [[1.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0]],
        )
        .unwrap();
        assert!(back_project(1.0, 1.0, 5.0, &flipped).is_err());
        assert!(matches!(
            project(&WorldPoint { x: 0.0, y: 0.0, d: 5.0 }, &flipped),
            Err(Error::BehindCamera { .. })
        ));
        // optical axis orthogonal to d: the ray never reaches a given d plane at s>0
        let sideways = CameraParams::new(
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            [[0.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0]],
        )
        .unwrap();
        assert!(back_project(0.0, 0.0, 1.0, &sideways).is_err());
    }

    #[test]
    fn camera_validation() {
        let mut k = [[100.0, 0.0, 5.0], [0.0, 100.0, 5.0], [0.0, 0.0, 1.0]];
        let e = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]];
        assert!(CameraParams::new(k, e).is_ok());
        k[2][2] = 2.0;
        assert!(CameraParams::new(k, e).is_err());
        let mut e2 = e;
        e2[0][0] = 1.1;
        assert!(CameraParams::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], e2).is_err());
    }

    #[test]
    fn rectification_check() {
        let l = CameraParams::pinhole(100.0, 10.0, 10.0, 0.0).unwrap();
        let r = CameraParams::pinhole(100.0, 10.0, 10.0, -5.0).unwrap();
        assert!(RectifiedPair::new(l, r).is_ok());
        let mut bad = r;
        bad.e[1][3] = 1.0;
        assert!(matches!(RectifiedPair::new(l, bad), Err(Error::InvalidConfiguration(_))));
        let other_k = CameraParams::pinhole(90.0, 10.0, 10.0, -5.0).unwrap();
        assert!(RectifiedPair::new(l, other_k).is_err());
    }

    #[test]
    fn round_trip_random_general_cameras() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let cam = random_camera(&mut rng);
            let (r, c, d) = (rng.gen_range(0.0..200.0), rng.gen_range(0.0..300.0), rng.gen_range(1.0..255.0));
            let Ok(p) = back_project(r, c, d, &cam) else { continue };
            let img = project(&p, &cam).unwrap();
            assert!((img.row - r).abs() < 1e-6 && (img.col - c).abs() < 1e-6);
            assert_eq!(img.depth, d);
        }
    }

    fn random_camera(rng: &mut impl Rng) -> CameraParams {
        let f: f64 = rng.gen_range(50.0..500.0);
        let (a, b): (f64, f64) = (rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
        // rotation about x then y, small angles keep the d axis in front
        let (ca, sa, cb, sb) = (a.cos(), a.sin(), b.cos(), b.sin());
        let rx = [[1.0, 0.0, 0.0], [0.0, ca, -sa], [0.0, sa, ca]];
        let ry = [[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]];
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = (0..3).map(|m| ry[i][m] * rx[m][j]).sum();
            }
        }
        let t = [rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0), rng.gen_range(0.0..10.0)];
        CameraParams::new(
            [[f, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..300.0)], [0.0, f * rng.gen_range(0.9..1.1), rng.gen_range(0.0..200.0)], [0.0, 0.0, 1.0]],
            std::array::from_fn(|i| [r[i][0], r[i][1], r[i][2], t[i]]),
        )
        .unwrap()
    }
}
