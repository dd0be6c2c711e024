//! Randomized multiplicative correction of an initial reconstruction.
//!
//! The pair algorithm picks two rays with no cell in common. When both
//! measurements are positive it transfers an amount `x` of line integral from
//! one ray to the other so that the ratio of the current line integrals
//! equals the ratio of the measurements, scaling every cell on a ray by the
//! same factor:
//!
//! ```text
//! x  = (r · li2 − li1) / (1 + r),   r = s1 / s2
//! e ← e + x · e / li1   on ray 1      (new integral li1 + x)
//! e ← e − x · e / li2   on ray 2      (new integral li2 − x)
//! ```
//!
//! The single-ray algorithm rescales one ray so its integral matches the
//! measurement; it needs a well-scaled start and is kept for comparison.

mod driver;
mod pool;

pub use driver::{
    initial_scale, initial_scale_factor, run_correction, Algorithm, CorrectionConfig, ResidualSample, RunReport,
};
pub use pool::{generate_pair_pool, generate_pair_pool_for_budget, PairPool, DEFAULT_ATTEMPT_CAP};

use crate::error::{Error, Result};
use crate::geometry::PathView;
use crate::image::{Image, Sinogram};
use crate::projector::{line_integral_values, RaySystem};

/// Relative tolerance below which a pair is treated as already consistent:
/// `|x| <= X_TOLERANCE · max(li1, li2)`.
pub const X_TOLERANCE: f64 = 1e-12;

/// Solves `(li1 + x) / (li2 − x) = s1 / s2` for `x`.
pub fn pair_update_solve_x(li1: f64, li2: f64, s1: f64, s2: f64) -> Result<f64> {
    for (name, v) in [("li1", li1), ("li2", li2), ("s1", s1), ("s2", s2)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(alloc::format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    let ratio = s1 / s2;
    Ok((ratio * li2 - li1) / (1.0 + ratio))
}

/// Applies the transfer `x` to two disjoint paths whose current integrals are
/// `li1` and `li2`. Cells off both paths are untouched.
pub fn apply_pair_update(
    image: &mut Image,
    path1: PathView<'_>,
    path2: PathView<'_>,
    li1: f64,
    li2: f64,
    x: f64,
) {
    apply_pair_update_values(image.values_mut(), path1, path2, li1, li2, x);
}

#[inline]
fn apply_pair_update_values(
    values: &mut [f64],
    path1: PathView<'_>,
    path2: PathView<'_>,
    li1: f64,
    li2: f64,
    x: f64,
) {
    let up = x / li1;
    for &c in path1.cells {
        let e = &mut values[c as usize];
        *e += up * *e;
    }
    let down = x / li2;
    for &c in path2.cells {
        let e = &mut values[c as usize];
        *e -= down * *e;
    }
}

/// Outcome of one pair draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairOutcome {
    /// Case (A), ratios differed: the transfer was applied.
    Updated { li1: f64, li2: f64, x: f64 },
    /// Case (A), ratios already agree within [`X_TOLERANCE`].
    Consistent,
    /// Case (B): at least one measurement is zero. Nothing is done.
    RejectedCaseB,
    /// Case (A) but a current filtered integral is zero, so no multiplicative
    /// update exists.
    SkippedZeroIntegral,
}

impl PairOutcome {
    /// Whether the pair counts against the iteration budget.
    pub fn is_usable(&self) -> bool {
        !matches!(self, PairOutcome::RejectedCaseB)
    }
}

/// One iteration of the pair algorithm on filtered paths.
///
/// The system must be filtered and the image already zero-masked.
pub fn pair_iteration(
    image: &mut Image,
    sinogram: &Sinogram,
    system: &RaySystem,
    pair: (u32, u32),
) -> Result<PairOutcome> {
    if !system.is_filtered() {
        return Err(Error::Config(
            "pair iteration needs a ray system with filtered paths".into(),
        ));
    }
    let n = system.ray_count();
    let (r1, r2) = (pair.0 as usize, pair.1 as usize);
    crate::error::check_index("ray", r1, n)?;
    crate::error::check_index("ray", r2, n)?;
    Ok(pair_step(image.values_mut(), sinogram.values(), system, r1, r2))
}

#[inline]
pub(crate) fn pair_step(
    values: &mut [f64],
    sinogram: &[f64],
    system: &RaySystem,
    ray1: usize,
    ray2: usize,
) -> PairOutcome {
    let (s1, s2) = (sinogram[ray1], sinogram[ray2]);
    if !(s1 > 0.0 && s2 > 0.0) {
        return PairOutcome::RejectedCaseB;
    }
    let p1 = system.filtered_path(ray1).unwrap_or(PathView::EMPTY);
    let p2 = system.filtered_path(ray2).unwrap_or(PathView::EMPTY);
    let li1 = line_integral_values(values, p1);
    let li2 = line_integral_values(values, p2);
    if !(li1 > 0.0 && li2 > 0.0) {
        return PairOutcome::SkippedZeroIntegral;
    }
    let ratio = s1 / s2;
    let x = (ratio * li2 - li1) / (1.0 + ratio);
    if x.abs() <= X_TOLERANCE * li1.max(li2) {
        return PairOutcome::Consistent;
    }
    apply_pair_update_values(values, p1, p2, li1, li2, x);
    PairOutcome::Updated { li1, li2, x }
}

/// Outcome of one single-ray draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingleRayOutcome {
    Updated { li: f64, factor: f64 },
    Consistent,
    /// `S = 0`: every cell on the ray was set to zero.
    Zeroed,
    /// `S > 0` but the current integral is zero; nothing can be rescaled.
    SkippedZeroIntegral,
    EmptyPath,
}

/// One iteration of the single-ray algorithm: scale every cell on the ray by
/// `S / li`. Uses filtered paths when the system has them.
pub fn single_ray_update(
    image: &mut Image,
    sinogram: &Sinogram,
    system: &RaySystem,
    ray: usize,
) -> Result<SingleRayOutcome> {
    crate::error::check_index("ray", ray, system.ray_count())?;
    Ok(single_ray_step(image.values_mut(), sinogram.values(), system, ray))
}

pub(crate) fn single_ray_step(
    values: &mut [f64],
    sinogram: &[f64],
    system: &RaySystem,
    ray: usize,
) -> SingleRayOutcome {
    let full = system.path(ray);
    if full.is_empty() {
        return SingleRayOutcome::EmptyPath;
    }
    let s = sinogram[ray];
    if !(s > 0.0) {
        for &c in full.cells {
            values[c as usize] = 0.0;
        }
        return SingleRayOutcome::Zeroed;
    }
    let path = system.filtered_path(ray).unwrap_or(full);
    let li = line_integral_values(values, path);
    if !(li > 0.0) {
        return SingleRayOutcome::SkippedZeroIntegral;
    }
    let factor = s / li;
    if (factor - 1.0).abs() <= X_TOLERANCE {
        return SingleRayOutcome::Consistent;
    }
    for &c in path.cells {
        values[c as usize] *= factor;
    }
    SingleRayOutcome::Updated { li, factor }
}
