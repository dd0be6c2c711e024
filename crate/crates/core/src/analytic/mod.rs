//! Analytic reconstructions used as initial solutions: fan-beam filtered
//! back-projection and direct numerical integration of the fan-beam inverse
//! Radon transform.
//!
//! Both work with the detector coordinate projected onto the line through the
//! rotation centre (the "isocentre line"), i.e. physical coordinate divided by
//! the magnification `(a + d) / d`. A pixel at `(x, y)` seen from view `φ` has
//! source-frame coordinates
//!
//! ```text
//! X = x cos φ + y sin φ            (along the detector line)
//! Y = d − x sin φ + y cos φ        (from the source towards the origin)
//! ```
//!
//! and the ray through it meets the isocentre line at `p = d X / Y`.

mod dint;
mod fbp;

pub use dint::{
    direct_integration_reconstruct, DerivativeScheme, DirectIntegrationReport,
    InverseRadonParams,
};
pub use fbp::{fbp_reconstruct, fbp_reconstruct_with, FbpParams, RampFilter};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::geometry::ScanGeometry;
use crate::image::{Image, Sinogram};
use crate::math;

/// `∂S/∂p` per view, same `[detector, view]` layout as the sinogram.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDerivative {
    detectors: usize,
    views: usize,
    values: Vec<f64>,
}

impl RadialDerivative {
    pub fn detectors(&self) -> usize {
        self.detectors
    }

    pub fn views(&self) -> usize {
        self.views
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, detector: usize, view: usize) -> f64 {
        self.values[detector * self.views + view]
    }

    pub fn view_column(&self, view: usize) -> Vec<f64> {
        (0..self.detectors).map(|d| self.get(d, view)).collect()
    }
}

/// Finite-difference derivative along the detector axis, divided by `pitch`.
///
/// Central differences in the interior (or forward differences with
/// [`DerivativeScheme::Forward`]); one-sided at the ends.
pub fn radial_derivative(
    sinogram: &Sinogram,
    pitch: f64,
    scheme: DerivativeScheme,
) -> Result<RadialDerivative> {
    let (nd, np) = (sinogram.detectors(), sinogram.views());
    if nd < 3 {
        return Err(Error::Config("radial derivative needs at least 3 detectors".into()));
    }
    if !(pitch > 0.0) {
        return Err(Error::Config("detector pitch must be positive".into()));
    }
    let s = |d: usize, p: usize| sinogram.get(d, p);
    let mut values = vec![0.0; nd * np];
    for p in 0..np {
        for d in 0..nd {
            let v = match (scheme, d) {
                (_, 0) => (s(1, p) - s(0, p)) / pitch,
                (_, d) if d == nd - 1 => (s(d, p) - s(d - 1, p)) / pitch,
                (DerivativeScheme::Central, d) => (s(d + 1, p) - s(d - 1, p)) / (2.0 * pitch),
                (DerivativeScheme::Forward, d) => (s(d + 1, p) - s(d, p)) / pitch,
            };
            values[d * np + p] = v;
        }
    }
    Ok(RadialDerivative {
        detectors: nd,
        views: np,
        values,
    })
}

fn check_sinogram(sinogram: &Sinogram, geometry: &ScanGeometry) -> Result<()> {
    geometry.validate()?;
    check_len("sinogram detectors", geometry.detector_count, sinogram.detectors())?;
    check_len("sinogram views", geometry.view_count, sinogram.views())
}

/// Samples of a function of the isocentre coordinate on a uniform grid.
struct UniformTable {
    start: f64,
    step: f64,
    values: Vec<f64>,
}

impl UniformTable {
    /// Linear interpolation; `None` outside the tabulated range.
    #[inline]
    fn interpolate(&self, p: f64) -> Option<f64> {
        let u = (p - self.start) / self.step;
        let last = self.values.len() - 1;
        if !(u >= 0.0) || u > last as f64 {
            return None;
        }
        let i = (math::floor(u) as usize).min(last.saturating_sub(1));
        let w = u - i as f64;
        if last == 0 {
            return Some(self.values[0]);
        }
        Some(self.values[i] * (1.0 - w) + self.values[i + 1] * w)
    }
}

/// Source-frame view of one projection angle.
#[derive(Clone, Copy)]
struct ViewFrame {
    sin: f64,
    cos: f64,
    source_distance: f64,
}

impl ViewFrame {
    fn new(geometry: &ScanGeometry, view: usize) -> Self {
        let phi = geometry.view_angle(view);
        Self {
            sin: math::sin(phi),
            cos: math::cos(phi),
            source_distance: geometry.source_to_origin_mm,
        }
    }

    /// `(X, Y)` of a world point.
    #[inline]
    fn project(&self, x: f64, y: f64) -> (f64, f64) {
        (
            x * self.cos + y * self.sin,
            self.source_distance - x * self.sin + y * self.cos,
        )
    }
}

/// Accumulates `contribution(view, X, Y)` over all views for every pixel, in
/// fixed view order per pixel. Returns the image and the number of skipped
/// (pixel, view) pairs where the contribution was `None`.
fn backproject<F>(geometry: &ScanGeometry, contribution: F) -> (Vec<f64>, usize)
where
    F: Fn(usize, f64, f64) -> Option<f64> + Sync,
{
    let (rows, cols) = (geometry.image_rows, geometry.image_cols);
    let pitch = geometry.pixel_pitch_mm;
    let frames: Vec<ViewFrame> = (0..geometry.view_count)
        .map(|v| ViewFrame::new(geometry, v))
        .collect();
    let row_pass = |r: usize, out: &mut [f64]| -> usize {
        let y = (rows as f64 / 2.0 - r as f64 - 0.5) * pitch;
        let mut skipped = 0;
        for (view, frame) in frames.iter().enumerate() {
            for (c, acc) in out.iter_mut().enumerate() {
                let x = (c as f64 + 0.5 - cols as f64 / 2.0) * pitch;
                let (big_x, big_y) = frame.project(x, y);
                match contribution(view, big_x, big_y) {
                    Some(v) => *acc += v,
                    None => skipped += 1,
                }
            }
        }
        skipped
    };

    let mut image = vec![0.0; rows * cols];
    #[cfg(feature = "parallel")]
    let skipped = {
        use rayon::prelude::*;
        image
            .par_chunks_mut(cols)
            .enumerate()
            .map(|(r, out)| row_pass(r, out))
            .sum()
    };
    #[cfg(not(feature = "parallel"))]
    let skipped = image
        .chunks_mut(cols)
        .enumerate()
        .map(|(r, out)| row_pass(r, out))
        .sum();
    (image, skipped)
}

fn finish_image(geometry: &ScanGeometry, values: Vec<f64>, clamp: bool) -> Result<Image> {
    let mut img = Image::from_signed_values(geometry.image_rows, geometry.image_cols, values)?;
    if clamp {
        img.clamp_nonnegative();
    }
    Ok(img)
}
