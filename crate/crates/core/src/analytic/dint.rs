//! Direct integration of the fan-beam inverse Radon transform.
//!
//! For each pixel the reconstruction is the double sum
//!
//! ```text
//! μ(x, y) = C Σ_φ (R Δφ / Y) Σ_k [g(p0 + t_k) − g(p0 − t_k)] Δp / t_k
//! g(p)    = √(1 + p²/R²) ∂S/∂p(p, φ),   p0 = R X / Y
//! ```
//!
//! with the inner principal value taken over `|p − R X / Y| ≥ singularity_epsilon`.
//! Nodes are placed in pairs symmetric about the pole and the derivative is
//! interpolated linearly between detectors. There is no compensation for the
//! excluded window. The constant is `C = −1 / (4π²)`; with it a uniform disk
//! reconstructs to its own value.
//!
//! The inner sum depends on the pixel only through the pole position, so it
//! is tabulated per view on a grid `pole_table_oversample` times finer than
//! the detector pitch and interpolated linearly. Poles outside the table are
//! summed exactly.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{backproject, check_sinogram, finish_image, radial_derivative, UniformTable};
use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;
use crate::image::{Image, Sinogram};
use crate::math;

/// Overall constant of the inversion formula.
pub const INVERSION_CONSTANT: f64 = -1.0 / (4.0 * PI * PI);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeScheme {
    Central,
    /// Placed at the midpoints between detectors.
    #[default]
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseRadonParams {
    /// Fan radius `R` of the formula, in mm.
    pub radius_mm: f64,
    pub derivative_scheme: DerivativeScheme,
    /// Half-width of the window around the pole excluded from the inner sum,
    /// in isocentre-line mm.
    pub singularity_epsilon: f64,
    /// Quadrature nodes on each side of the pole; the node spacing is the
    /// detector span divided by `p_samples − 1`.
    pub p_samples: usize,
    pub pole_table_oversample: usize,
    pub clamp_nonnegative: bool,
}

impl InverseRadonParams {
    /// `R` = source-to-origin distance, forward differences, an exclusion
    /// window of 1% of the (isocentre) detector pitch, one node per detector.
    ///
    /// With a narrow window and forward differences the node pairs of a pole
    /// on a detector land on the difference midpoints, and the inner sum acts
    /// as a Shepp-Logan ramp. Central differences or a half-pitch window
    /// roll the ramp off well before Nyquist and blur sharp edges.
    pub fn for_geometry(geometry: &ScanGeometry) -> Self {
        Self {
            radius_mm: geometry.source_to_origin_mm,
            derivative_scheme: DerivativeScheme::Forward,
            singularity_epsilon: 0.01 * geometry.detector_pitch() / geometry.magnification(),
            p_samples: geometry.detector_count,
            pole_table_oversample: 4,
            clamp_nonnegative: true,
        }
    }

    pub fn validate(&self, geometry: &ScanGeometry) -> Result<()> {
        if !(self.radius_mm > 0.0) {
            return Err(Error::Config("inverse Radon radius must be positive".into()));
        }
        if !(self.singularity_epsilon > 0.0) {
            return Err(Error::Config("singularity_epsilon must be positive".into()));
        }
        if self.p_samples < geometry.detector_count {
            return Err(Error::Config(alloc::format!(
                "p_samples ({}) must be at least the detector count ({})",
                self.p_samples,
                geometry.detector_count
            )));
        }
        if self.pole_table_oversample == 0 {
            return Err(Error::Config("pole_table_oversample must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DirectIntegrationReport {
    /// (pixel, view) pairs skipped because the pixel is not in front of the source.
    pub skipped_contributions: usize,
    /// Poles outside the tabulated range, summed exactly instead.
    pub untabulated_poles: usize,
}

pub fn direct_integration_reconstruct(
    sinogram: &Sinogram,
    geometry: &ScanGeometry,
    params: &InverseRadonParams,
) -> Result<(Image, DirectIntegrationReport)> {
    check_sinogram(sinogram, geometry)?;
    params.validate(geometry)?;
    let nd = geometry.detector_count;
    if nd < 3 {
        return Err(Error::Config("direct integration needs at least 3 detectors".into()));
    }
    let mag = geometry.magnification();
    let derivative = radial_derivative(sinogram, geometry.detector_pitch(), params.derivative_scheme)?;
    let radius = params.radius_mm;

    // Detector range on the isocentre line.
    let first = geometry.detector_coordinate(0) / mag;
    let last = geometry.detector_coordinate(nd - 1) / mag;
    let detector_step = (last - first) / (nd - 1) as f64;
    let span = last - first;
    let node_step = span / (params.p_samples - 1) as f64;
    let eps = params.singularity_epsilon;
    // Offsets from the pole: midpoint rule on [eps, eps + span], so the
    // covered region is exactly |t| >= eps for any node count. Nodes come in
    // pairs p0 ± t, making the excluded window symmetric about the pole.
    let offsets: Vec<f64> = (0..params.p_samples)
        .map(|k| eps + (k as f64 + 0.5) * node_step)
        .collect();

    // Integrand √(1 + p²/R²) ∂S/∂p with the chain factor onto the isocentre
    // coordinate. Central differences sit on the detectors, forward
    // differences on the midpoints between them. Linear in between, zero
    // outside.
    let (sample_start, samples) = match params.derivative_scheme {
        DerivativeScheme::Central => (first, nd),
        DerivativeScheme::Forward => (first + 0.5 * detector_step, nd - 1),
    };
    let integrands: Vec<Vec<f64>> = (0..geometry.view_count)
        .map(|view| {
            derivative.view_column(view)[..samples]
                .iter()
                .enumerate()
                .map(|(i, ds)| {
                    let p = sample_start + i as f64 * detector_step;
                    math::sqrt(1.0 + p * p / (radius * radius)) * ds * mag
                })
                .collect()
        })
        .collect();
    let sample = |g: &[f64], p: f64| -> f64 {
        let u = (p - sample_start) / detector_step;
        if !(u >= 0.0) || u > (samples - 1) as f64 {
            return 0.0;
        }
        let i = (math::floor(u) as usize).min(samples - 2);
        let w = u - i as f64;
        g[i] * (1.0 - w) + g[i + 1] * w
    };
    let inner = |g: &[f64], pole: f64| -> f64 {
        let mut acc = 0.0;
        for &t in &offsets {
            acc += (sample(g, pole + t) - sample(g, pole - t)) / t;
        }
        acc * node_step
    };

    let k = params.pole_table_oversample;
    let table_step = detector_step / k as f64;
    let table_len = k * (nd - 1) + 1;
    let tables: Vec<UniformTable> = integrands
        .iter()
        .map(|g| UniformTable {
            start: first,
            step: table_step,
            values: (0..table_len)
                .map(|t| inner(g, first + t as f64 * table_step))
                .collect(),
        })
        .collect();

    let step = geometry.view_angle_step();
    let untabulated = core::sync::atomic::AtomicUsize::new(0);
    let (values, skipped) = backproject(geometry, |view, x, y| {
        if y <= 0.0 {
            return None;
        }
        let pole = radius * x / y;
        let inner = tables[view].interpolate(pole).unwrap_or_else(|| {
            untabulated.fetch_add(1, core::sync::atomic::Ordering::Relaxed);
            inner(&integrands[view], pole)
        });
        Some(INVERSION_CONSTANT * radius * step / y * inner)
    });
    let image = finish_image(geometry, values, params.clamp_nonnegative)?;
    Ok((
        image,
        DirectIntegrationReport {
            skipped_contributions: skipped,
            untabulated_poles: untabulated.into_inner(),
        },
    ))
}
