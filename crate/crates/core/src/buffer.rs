//! Raster carriers shared by every stage of the pipeline.

use crate::error::{Error, Result};

/// A `height × width × channels` array of `f32`, row-major with interleaved
/// channels.
///
/// Color buffers hold unit-interval intensities; density buffers hold
/// non-negative values. Only finiteness is enforced on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::invalid(
                "image",
                format!("dimensions must be positive, got {width}x{height}x{channels}"),
            ));
        }
        if data.len() != width * height * channels {
            return Err(Error::Shape(format!(
                "{}x{}x{} image needs {} values, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("image", format!("non-finite value at index {i}")));
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            data,
        })
    }

    /// Zero-filled buffer. Panics on zero dimensions.
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        assert!(width > 0 && height > 0 && channels > 0, "empty image");
        assert!(value.is_finite());
        ImageBuffer {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    /// Builds a buffer by evaluating `f(x, y, c)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        assert!(width > 0 && height > 0 && channels > 0, "empty image");
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        ImageBuffer {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f32) {
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn ensure_shape(&self, other: &ImageBuffer, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )))
        }
    }
}

/// Per-pixel positive depths in scene units. Disparity is `1 / depth`.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(
                "depth map",
                format!("dimensions must be positive, got {width}x{height}"),
            ));
        }
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} depth map needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid(
                "depth map",
                format!(
                    "depth at ({}, {}) is {}, must be positive and finite",
                    i % width,
                    i / width,
                    data[i]
                ),
            ));
        }
        Ok(DepthMap {
            width,
            height,
            data,
        })
    }

    /// Depth map with a single value everywhere. Panics on invalid input.
    pub fn constant(width: usize, height: usize, depth: f32) -> Self {
        Self::new(width, height, vec![depth; width * height]).expect("valid constant depth")
    }

    /// Panics when `f` yields a non-positive or non-finite depth.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data).expect("valid depth map")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn disparity_at(&self, index: usize) -> f64 {
        1.0 / self.data[index] as f64
    }

    pub fn disparities(&self) -> Vec<f64> {
        self.data.iter().map(|&d| 1.0 / d as f64).collect()
    }

    /// Smallest and largest depth.
    pub fn range(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, 0.0f32), |(lo, hi), &d| (lo.min(d), hi.max(d)))
    }

    /// Lower median of all depths.
    pub fn median(&self) -> f32 {
        let mut v = self.data.clone();
        let mid = (v.len() - 1) / 2;
        let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
        *m
    }

    pub(crate) fn ensure_matches(&self, image: &ImageBuffer) -> Result<()> {
        if self.width == image.width() && self.height == image.height() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "depth {}x{} vs image {}x{}",
                self.width,
                self.height,
                image.width(),
                image.height()
            )))
        }
    }
}
