//! Image and sinogram quality measures.

use crate::error::{check_len, Result};
use crate::image::{Image, Sinogram};
use crate::math;
use crate::projector::{forward_project, RaySystem};

pub fn rmse(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let sq: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(math::sqrt(sq / a.len() as f64))
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` when the images agree.
pub fn psnr(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    let e = rmse(a, b)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * math::log10(peak / e))
}

pub fn max_abs_error(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// `‖forward_project(image) − S‖₂ / ‖S‖₂`, 0 when both vanish.
pub fn sinogram_residual(image: &Image, sinogram: &Sinogram, system: &RaySystem) -> Result<f64> {
    let projected = forward_project(image, system)?;
    check_len("sinogram", projected.len(), sinogram.len())?;
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (p, s) in projected.values().iter().zip(sinogram.values()) {
        diff += (p - s) * (p - s);
        norm += s * s;
    }
    Ok(if norm == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        math::sqrt(diff / norm)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub rmse: f64,
    pub psnr_db: f64,
    pub max_abs_error: f64,
    pub relative_sinogram_residual: f64,
}

impl QualityReport {
    /// Scores `image` against `truth` (PSNR peak = truth maximum) and against
    /// the measured sinogram.
    pub fn evaluate(
        image: &Image,
        truth: &Image,
        sinogram: &Sinogram,
        system: &RaySystem,
    ) -> Result<Self> {
        Ok(Self {
            rmse: rmse(image, truth)?,
            psnr_db: psnr(image, truth, truth.max_value())?,
            max_abs_error: max_abs_error(image, truth)?,
            relative_sinogram_residual: sinogram_residual(image, sinogram, system)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ScanGeometry;
    use crate::phantom::EllipsePhantomSpec;
    use crate::projector::build_ray_system;
    use proptest::prelude::*;

    #[test]
    fn identical_images() {
        let a = EllipsePhantomSpec::shepp_logan().render(16, 16);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(max_abs_error(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn zero_versus_ones() {
        let z = Image::zeros(3, 4);
        let o = Image::filled(3, 4, 1.0);
        assert_eq!(rmse(&z, &o).unwrap(), 1.0);
        assert_eq!(psnr(&z, &o, 10.0).unwrap(), 20.0);
        assert!(rmse(&z, &Image::zeros(4, 3)).is_err());
    }

    #[test]
    fn self_residual_is_zero() {
        let g = ScanGeometry {
            detector_count: 31,
            view_count: 12,
            image_rows: 24,
            image_cols: 24,
            ..ScanGeometry::default()
        };
        let truth = EllipsePhantomSpec::shepp_logan().render(24, 24);
        let (system, sino) = build_ray_system(&g, &truth).unwrap();
        assert!(sinogram_residual(&truth, &sino, &system).unwrap() <= 1e-12);
        let zero = Image::zeros(24, 24);
        let zs = Sinogram::zeros(31, 12);
        assert_eq!(sinogram_residual(&zero, &zs, &system).unwrap(), 0.0);
        assert_eq!(sinogram_residual(&zero, &sino, &system).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn rmse_scales_with_factor(
            a in proptest::collection::vec(0.0f64..10.0, 12),
            b in proptest::collection::vec(0.0f64..10.0, 12),
            c in 0.0f64..100.0,
        ) {
            let ia = Image::from_values(3, 4, a).unwrap();
            let ib = Image::from_values(3, 4, b).unwrap();
            let base = rmse(&ia, &ib).unwrap();
            prop_assert_eq!(base, rmse(&ib, &ia).unwrap());
            let scaled = rmse(&ia.scaled(c), &ib.scaled(c)).unwrap();
            prop_assert!((scaled - c * base).abs() <= 1e-12 * (c * base).max(1.0));
        }
    }

    #[test]
    fn report_fields() {
        let g = ScanGeometry {
            detector_count: 31,
            view_count: 12,
            image_rows: 24,
            image_cols: 24,
            ..ScanGeometry::default()
        };
        let truth = EllipsePhantomSpec::shepp_logan().render(24, 24);
        let (system, sino) = build_ray_system(&g, &truth).unwrap();
        let report = QualityReport::evaluate(&truth.scaled(0.5), &truth, &sino, &system).unwrap();
        assert!(report.rmse > 0.0 && report.psnr_db.is_finite());
        assert!((report.relative_sinogram_residual - 0.5).abs() < 1e-12);
    }
}
