use crate::error::{Error, Result};

/// Row-major grid of real-valued depth samples in 8-bit level units.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{}×{} map needs {} samples, got {}",
                width,
                height,
                width * height,
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite sample at row {} col {}",
                i / width.max(1),
                i % width.max(1)
            )));
        }
        Ok(DepthMap {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(value.is_finite());
        DepthMap {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                samples.push(f(r, c));
            }
        }
        DepthMap::new(width, height, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.samples[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.samples[row * self.width + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.samples[row * self.width..(row + 1) * self.width]
    }

    /// Extends the map to `width × height` by replicating the last column and row.
    pub fn pad_replicate(&self, width: usize, height: usize) -> Result<DepthMap> {
        if width < self.width || height < self.height {
            return Err(Error::InvalidInput(format!(
                "cannot pad {}×{} down to {}×{}",
                self.width, self.height, width, height
            )));
        }
        if (width, height) == self.dims() {
            return Ok(self.clone());
        }
        if self.is_empty() {
            return Err(Error::InvalidInput("cannot pad an empty map".into()));
        }
        let mut samples = Vec::with_capacity(width * height);
        for r in 0..height {
            let src = self.row(r.min(self.height - 1));
            samples.extend_from_slice(src);
            let last = src[self.width - 1];
            samples.extend(std::iter::repeat_n(last, width - self.width));
        }
        Ok(DepthMap {
            width,
            height,
            samples,
        })
    }

    /// Keeps the top-left `width × height` window.
    pub fn crop(&self, width: usize, height: usize) -> Result<DepthMap> {
        if width > self.width || height > self.height {
            return Err(Error::InvalidInput(format!(
                "cannot crop {}×{} to {}×{}",
                self.width, self.height, width, height
            )));
        }
        let mut samples = Vec::with_capacity(width * height);
        for r in 0..height {
            samples.extend_from_slice(&self.row(r)[..width]);
        }
        Ok(DepthMap {
            width,
            height,
            samples,
        })
    }

    pub fn clamped(&self, lo: f64, hi: f64) -> DepthMap {
        self.map(|v| v.clamp(lo, hi))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DepthMap {
        DepthMap {
            width: self.width,
            height: self.height,
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.samples.iter().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    pub fn mean_abs_diff(&self, other: &DepthMap) -> Result<f64> {
        self.ensure_same_dims(other)?;
        if self.is_empty() {
            return Ok(0.0);
        }
        let sum: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(sum / self.samples.len() as f64)
    }

    pub fn ensure_same_dims(&self, other: &DepthMap) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: {}×{} vs {}×{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}
