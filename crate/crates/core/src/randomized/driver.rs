use alloc::vec::Vec;
use core::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{pair_step, single_ray_step, PairOutcome, PairPool, SingleRayOutcome};
use crate::error::{check_len, Error, Result};
use crate::image::{Image, Sinogram};
use crate::metrics::sinogram_residual;
use crate::projector::{apply_zero_mask, forward_project, RaySystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    /// Multiplicative rescaling of one ray at a time. Fragile: needs a start
    /// whose line integrals are already close to the measurements.
    SingleRay,
    #[default]
    Pair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionConfig {
    /// Usable iterations to perform (case-(B) pairs are not counted).
    pub iteration_budget: usize,
    /// Seeds the ray draws of the single-ray algorithm. The pair algorithm
    /// takes its randomness from the pool.
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Record the relative sinogram residual every this many usable
    /// iterations; 0 disables the trace.
    pub residual_log_stride: usize,
    /// Stop once a logged residual is at or below this value.
    pub stop_residual: Option<f64>,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            iteration_budget: 125_000,
            seed: 0,
            algorithm: Algorithm::Pair,
            residual_log_stride: 0,
            stop_residual: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSample {
    pub iteration: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub usable_iterations: usize,
    pub updated: usize,
    pub consistent: usize,
    pub rejected_case_b: usize,
    pub skipped_zero_integral: usize,
    /// Updates with `x <= -li1` or `x >= li2`, which would flip cell signs.
    pub sign_violations: usize,
    /// Pool entries (or single-ray draws) consumed.
    pub draws: usize,
    pub stopped_early: bool,
    pub initial_scale_factor: Option<f64>,
    pub residual_trace: Vec<ResidualSample>,
    /// Wall time of the iteration loop; `None` without the `std` feature.
    pub elapsed: Option<Duration>,
}

/// `Σ S / Σ forward_project(image)`.
pub fn initial_scale_factor(image: &Image, sinogram: &Sinogram, system: &RaySystem) -> Result<f64> {
    let projected = forward_project(image, system)?;
    check_len("sinogram", projected.len(), sinogram.len())?;
    let measured: f64 = sinogram.values().iter().sum();
    let current: f64 = projected.values().iter().sum();
    if current > 0.0 {
        Ok(measured / current)
    } else if measured == 0.0 {
        Ok(1.0)
    } else {
        Err(Error::ScalingImpossible)
    }
}

/// Globally rescales `image` so its total projection matches the sinogram's.
pub fn initial_scale(image: &Image, sinogram: &Sinogram, system: &RaySystem) -> Result<Image> {
    Ok(image.scaled(initial_scale_factor(image, sinogram, system)?))
}

/// Runs the correction loop from `initial`.
///
/// The system must carry filtered paths (see
/// [`prepare_for_correction`](crate::projector::prepare_for_correction)); the
/// initial image is zero-masked first. The pair algorithm consumes `pool`
/// strictly in order and counts only case-(A) pairs against the budget.
pub fn run_correction(
    initial: &Image,
    sinogram: &Sinogram,
    system: &RaySystem,
    pool: &PairPool,
    config: &CorrectionConfig,
) -> Result<(Image, RunReport)> {
    let g = system.geometry();
    check_len("initial rows", g.image_rows, initial.rows())?;
    check_len("initial cols", g.image_cols, initial.cols())?;
    check_len("sinogram detectors", g.detector_count, sinogram.detectors())?;
    check_len("sinogram views", g.view_count, sinogram.views())?;
    let mask = system.zero_mask().ok_or_else(|| {
        Error::Config("correction needs a ray system with filtered paths".into())
    })?;
    if let Some(fp) = pool.fingerprint {
        if config.algorithm == Algorithm::Pair && fp != g.fingerprint() {
            return Err(Error::Config(
                "pair pool was generated for a different geometry".into(),
            ));
        }
    }
    if let Some(stop) = config.stop_residual {
        if !(stop >= 0.0) {
            return Err(Error::Config("stop_residual must be nonnegative".into()));
        }
    }
    let mut image = apply_zero_mask(initial, mask)?;
    let mut report = RunReport::default();
    if config.algorithm == Algorithm::SingleRay && config.iteration_budget > 0 {
        let factor = initial_scale_factor(&image, sinogram, system)?;
        image = image.scaled(factor);
        report.initial_scale_factor = Some(factor);
    }

    #[cfg(feature = "std")]
    let started = std::time::Instant::now();

    let stride = config.residual_log_stride;
    let log_residual = |image: &Image, report: &mut RunReport| -> Result<bool> {
        let residual = sinogram_residual(image, sinogram, system)?;
        report.residual_trace.push(ResidualSample {
            iteration: report.usable_iterations,
            residual,
        });
        Ok(config.stop_residual.is_some_and(|stop| residual <= stop))
    };

    let s = sinogram.values();
    match config.algorithm {
        Algorithm::Pair => {
            let mut pairs = pool.pairs.iter();
            while report.usable_iterations < config.iteration_budget {
                let Some(&(a, b)) = pairs.next() else {
                    return Err(Error::PoolExhausted {
                        usable: report.usable_iterations,
                        budget: config.iteration_budget,
                        consumed: report.draws,
                    });
                };
                report.draws += 1;
                let (a, b) = (a as usize, b as usize);
                if a >= system.ray_count() || b >= system.ray_count() {
                    return Err(Error::OutOfRange {
                        what: "ray",
                        index: a.max(b),
                        len: system.ray_count(),
                    });
                }
                match pair_step(image.values_mut(), s, system, a, b) {
                    PairOutcome::RejectedCaseB => {
                        report.rejected_case_b += 1;
                        continue;
                    }
                    PairOutcome::Updated { li1, li2, x } => {
                        report.updated += 1;
                        if !(x > -li1 && x < li2) {
                            report.sign_violations += 1;
                        }
                    }
                    PairOutcome::Consistent => report.consistent += 1,
                    PairOutcome::SkippedZeroIntegral => report.skipped_zero_integral += 1,
                }
                report.usable_iterations += 1;
                if stride > 0
                    && report.usable_iterations % stride == 0
                    && log_residual(&image, &mut report)?
                {
                    report.stopped_early = true;
                    break;
                }
            }
        }
        Algorithm::SingleRay => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let rays = system.ray_count() as u32;
            let mut empty_draws = 0usize;
            while report.usable_iterations < config.iteration_budget {
                let ray = rng.random_range(0..rays) as usize;
                report.draws += 1;
                match single_ray_step(image.values_mut(), s, system, ray) {
                    SingleRayOutcome::EmptyPath => {
                        empty_draws += 1;
                        if empty_draws > 1000 && empty_draws == report.draws {
                            return Err(Error::Config("every drawn ray misses the grid".into()));
                        }
                        continue;
                    }
                    SingleRayOutcome::Updated { .. } => report.updated += 1,
                    SingleRayOutcome::Consistent => report.consistent += 1,
                    SingleRayOutcome::Zeroed => report.rejected_case_b += 1,
                    SingleRayOutcome::SkippedZeroIntegral => report.skipped_zero_integral += 1,
                }
                report.usable_iterations += 1;
                if stride > 0
                    && report.usable_iterations % stride == 0
                    && log_residual(&image, &mut report)?
                {
                    report.stopped_early = true;
                    break;
                }
            }
        }
    }

    #[cfg(feature = "std")]
    {
        report.elapsed = Some(started.elapsed());
    }
    Ok((image, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{fbp_reconstruct, RampFilter};
    use crate::geometry::ScanGeometry;
    use crate::metrics::rmse;
    use crate::phantom::EllipsePhantomSpec;
    use crate::projector::{build_ray_system, prepare_for_correction};
    use crate::randomized::{generate_pair_pool_for_budget, PairPool};
    use alloc::vec;

    struct Setup {
        truth: Image,
        sino: Sinogram,
        system: RaySystem,
    }

    fn setup(views: usize) -> Setup {
        let g = ScanGeometry {
            detector_count: 121,
            image_rows: 80,
            image_cols: 80,
            ..ScanGeometry::default()
        }
        .with_views(views);
        let truth = EllipsePhantomSpec::shepp_logan().render(80, 80);
        let (system, sino) = build_ray_system(&g, &truth).unwrap();
        let system = prepare_for_correction(system, &sino).unwrap();
        Setup { truth, sino, system }
    }

    #[test]
    fn zero_budget_returns_masked_initial() {
        let s = setup(40);
        let initial = Image::filled(80, 80, 0.5);
        let pool = PairPool::new(vec![], 0, None);
        let config = CorrectionConfig {
            iteration_budget: 0,
            ..CorrectionConfig::default()
        };
        let (out, report) = run_correction(&initial, &s.sino, &s.system, &pool, &config).unwrap();
        let masked = apply_zero_mask(&initial, s.system.zero_mask().unwrap()).unwrap();
        assert_eq!(out, masked);
        assert_eq!(report.usable_iterations, 0);
    }

    #[test]
    fn ground_truth_is_a_fixed_point() {
        let s = setup(40);
        let pool = generate_pair_pool_for_budget(&s.system, &s.sino, 5000, 1, None).unwrap();
        let config = CorrectionConfig {
            iteration_budget: 5000,
            ..CorrectionConfig::default()
        };
        let (out, report) = run_correction(&s.truth, &s.sino, &s.system, &pool, &config).unwrap();
        for (a, b) in out.values().iter().zip(s.truth.values()) {
            assert!((a - b).abs() <= 1e-9);
        }
        assert_eq!(report.usable_iterations, 5000);
        assert_eq!(report.draws, pool.len());
        assert_eq!(report.rejected_case_b, pool.len() - 5000);
    }

    #[test]
    fn exhausted_pool_is_an_error() {
        let s = setup(40);
        let pool = generate_pair_pool_for_budget(&s.system, &s.sino, 100, 1, None).unwrap();
        let config = CorrectionConfig {
            iteration_budget: 101,
            ..CorrectionConfig::default()
        };
        let err = run_correction(&s.truth, &s.sino, &s.system, &pool, &config).unwrap_err();
        assert_eq!(
            err,
            Error::PoolExhausted {
                usable: 100,
                budget: 101,
                consumed: pool.len()
            }
        );
    }

    #[test]
    fn unfiltered_system_is_rejected() {
        let s = setup(20);
        let raw = s.system.clone().unfiltered();
        let pool = PairPool::new(vec![], 0, None);
        assert!(matches!(
            run_correction(&s.truth, &s.sino, &raw, &pool, &CorrectionConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn correction_improves_fbp_and_preserves_zero_set() {
        let s = setup(60);
        let g = s.system.geometry().clone();
        let initial = fbp_reconstruct(&s.sino, &g, RampFilter::RamLak).unwrap();
        let budget = 20_000;
        let pool = generate_pair_pool_for_budget(&s.system, &s.sino, budget, 9, None).unwrap();
        let config = CorrectionConfig {
            iteration_budget: budget,
            residual_log_stride: 5000,
            ..CorrectionConfig::default()
        };
        let (out, report) = run_correction(&initial, &s.sino, &s.system, &pool, &config).unwrap();
        let before = rmse(&initial, &s.truth).unwrap();
        let after = rmse(&out, &s.truth).unwrap();
        assert!(after < before, "rmse {after} !< {before}");
        assert_eq!(report.sign_violations, 0);
        assert_eq!(report.residual_trace.len(), 4);
        let mask = s.system.zero_mask().unwrap();
        for (cell, &v) in out.values().iter().enumerate() {
            if mask.is_forced(cell) {
                assert_eq!(v, 0.0);
            }
            assert!(v >= 0.0);
        }
        // Bit-identical rerun.
        let (again, _) = run_correction(&initial, &s.sino, &s.system, &pool, &config).unwrap();
        assert_eq!(
            out.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            again.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn residual_stop_criterion() {
        let s = setup(40);
        let pool = generate_pair_pool_for_budget(&s.system, &s.sino, 3000, 2, None).unwrap();
        let config = CorrectionConfig {
            iteration_budget: 3000,
            residual_log_stride: 1000,
            stop_residual: Some(1.0),
            ..CorrectionConfig::default()
        };
        let (_, report) =
            run_correction(&s.truth.scaled(1.1), &s.sino, &s.system, &pool, &config).unwrap();
        assert!(report.stopped_early);
        assert_eq!(report.usable_iterations, 1000);
    }

    #[test]
    fn initial_scale_examples() {
        let s = setup(30);
        assert!((initial_scale_factor(&s.truth, &s.sino, &s.system).unwrap() - 1.0).abs() < 1e-12);
        let half = s.truth.scaled(0.5);
        assert!((initial_scale_factor(&half, &s.sino, &s.system).unwrap() - 2.0).abs() < 1e-12);
        let rescaled = initial_scale(&half, &s.sino, &s.system).unwrap();
        let total: f64 = forward_project(&rescaled, &s.system).unwrap().values().iter().sum();
        let measured: f64 = s.sino.values().iter().sum();
        assert!((total - measured).abs() <= 1e-12 * measured);
        assert_eq!(
            initial_scale_factor(&Image::zeros(80, 80), &s.sino, &s.system),
            Err(Error::ScalingImpossible)
        );
    }

    #[test]
    fn single_ray_algorithm_runs_deterministically() {
        let s = setup(40);
        let g = s.system.geometry().clone();
        let initial = fbp_reconstruct(&s.sino, &g, RampFilter::RamLak).unwrap();
        let config = CorrectionConfig {
            iteration_budget: 4000,
            seed: 5,
            algorithm: Algorithm::SingleRay,
            ..CorrectionConfig::default()
        };
        let pool = PairPool::new(vec![], 0, None);
        let (a, report) = run_correction(&initial, &s.sino, &s.system, &pool, &config).unwrap();
        let (b, _) = run_correction(&initial, &s.sino, &s.system, &pool, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(report.usable_iterations, 4000);
        let factor = report.initial_scale_factor.unwrap();
        assert!((0.5..2.0).contains(&factor));
        assert!(a.values().iter().all(|v| v.is_finite() && *v >= 0.0));
    }
}
