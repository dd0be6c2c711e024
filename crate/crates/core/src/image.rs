//! Reconstruction images and sinograms.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};

/// Row-major grid of attenuation coefficients.
///
/// Row 0 is the top of the image (largest `y`), column 0 the left edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value.max(0.0); rows * cols],
        }
    }

    /// Builds an image from row-major values, clamping negatives to zero.
    pub fn from_values(rows: usize, cols: usize, mut data: Vec<f64>) -> Result<Self> {
        check_len("image", rows * cols, data.len())?;
        for v in &mut data {
            if !v.is_finite() {
                return Err(Error::Domain("image values must be finite".into()));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds an image without clamping. Used for signed intermediate results
    /// (e.g. linearity checks on unclamped reconstructions).
    pub fn from_signed_values(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("image", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn clamp_nonnegative(&mut self) {
        for v in &mut self.data {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }

    pub fn same_shape(&self, other: &Image) -> Result<()> {
        check_len("image rows", self.rows, other.rows)?;
        check_len("image cols", self.cols, other.cols)
    }
}

/// Line-integral measurements `S[d, p]`, stored with flat index `d * views + p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    detectors: usize,
    views: usize,
    data: Vec<f64>,
}

impl Sinogram {
    pub fn zeros(detectors: usize, views: usize) -> Self {
        Self {
            detectors,
            views,
            data: vec![0.0; detectors * views],
        }
    }

    /// Builds a sinogram from flat values, clamping negatives to zero.
    pub fn from_values(detectors: usize, views: usize, mut data: Vec<f64>) -> Result<Self> {
        check_len("sinogram", detectors * views, data.len())?;
        for v in &mut data {
            if !v.is_finite() {
                return Err(Error::Domain("sinogram values must be finite".into()));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(Self {
            detectors,
            views,
            data,
        })
    }

    pub fn from_signed_values(detectors: usize, views: usize, data: Vec<f64>) -> Result<Self> {
        check_len("sinogram", detectors * views, data.len())?;
        Ok(Self {
            detectors,
            views,
            data,
        })
    }

    pub fn detectors(&self) -> usize {
        self.detectors
    }

    pub fn views(&self) -> usize {
        self.views
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, detector: usize, view: usize) -> f64 {
        self.data[detector * self.views + view]
    }

    /// Value for a flat ray index.
    pub fn ray(&self, ray: usize) -> f64 {
        self.data[ray]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            detectors: self.detectors,
            views: self.views,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Extracts one view as a detector-ordered column.
    pub fn view_column(&self, view: usize) -> Vec<f64> {
        (0..self.detectors).map(|d| self.get(d, view)).collect()
    }
}
