//! Per-pixel sensor frames produced by the renderer.
//!
//! A depth value of exactly 0.0 marks an invalid pixel (no hit within the
//! sensor range). Valid values are camera-frame z depths, not Euclidean
//! ranges, so back-projection with the pinhole model reconstructs the hit
//! point exactly. The renderer cuts rays off by Euclidean range, which
//! keeps every back-projected point within `max_range` of the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major depth image, `data[v * width + u]`, z depth in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthFrame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthFrame {
    pub fn new(width: usize, height: usize) -> Self {
        DepthFrame { width, height, data: vec![0.0; width * height] }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::config(format!(
                "depth frame data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(DepthFrame { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, z: f64) {
        self.data[v * self.width + u] = z;
    }

    /// Valid pixels carry a strictly positive depth.
    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.at(u, v) > 0.0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Row-major class-id image aligned with a [`DepthFrame`]. Id 0 is plain
/// structure (walls, floor) or out-of-range; object ids start at 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFrame {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl ClassFrame {
    pub fn new(width: usize, height: usize) -> Self {
        ClassFrame { width, height, data: vec![0; width * height] }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<u16>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::config(format!(
                "class frame data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(ClassFrame { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> u16 {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, id: u16) {
        self.data[v * self.width + u] = id;
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    /// True if any pixel carries the given class id.
    pub fn contains_class(&self, id: u16) -> bool {
        self.data.iter().any(|&c| c == id)
    }
}
