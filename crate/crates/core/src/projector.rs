//! Ray systems, line integrals, forward projection and the zero set.
//!
//! A [`RaySystem`] stores every ray path of a geometry in compressed
//! row form. After [`filter_ray_paths`] it also carries the zero mask and a
//! second, filtered copy of each path that omits forced-zero cells; the
//! correction loop only ever reads and writes through filtered paths.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_index, check_len, Error, Result};
use crate::geometry::{PathView, RayPath, ScanGeometry, Tracer};
use crate::image::{Image, Sinogram};

#[derive(Debug, Clone, Default, PartialEq)]
struct PathTable {
    offsets: Vec<usize>,
    cells: Vec<u32>,
    segments: Vec<f64>,
    sums: Vec<f64>,
}

impl PathTable {
    fn with_rays(rays: usize) -> Self {
        let mut offsets = Vec::with_capacity(rays + 1);
        offsets.push(0);
        Self {
            offsets,
            sums: Vec::with_capacity(rays),
            ..Self::default()
        }
    }

    fn close_ray(&mut self, sum: f64) {
        self.offsets.push(self.cells.len());
        self.sums.push(sum);
    }

    fn append(&mut self, other: PathTable) {
        let base = self.cells.len();
        self.offsets
            .extend(other.offsets[1..].iter().map(|o| o + base));
        self.cells.extend(other.cells);
        self.segments.extend(other.segments);
        self.sums.extend(other.sums);
    }

    #[inline]
    fn view(&self, ray: usize) -> PathView<'_> {
        let (a, b) = (self.offsets[ray], self.offsets[ray + 1]);
        PathView {
            cells: &self.cells[a..b],
            segments: &self.segments[a..b],
        }
    }
}

/// Per-cell flag, `true` when the cell is provably zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroMask {
    forced: Vec<bool>,
}

impl ZeroMask {
    pub fn empty(cells: usize) -> Self {
        Self {
            forced: vec![false; cells],
        }
    }

    pub fn from_flags(forced: Vec<bool>) -> Self {
        Self { forced }
    }

    pub fn len(&self) -> usize {
        self.forced.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forced.is_empty()
    }

    pub fn is_forced(&self, cell: usize) -> bool {
        self.forced[cell]
    }

    pub fn forced_count(&self) -> usize {
        self.forced.iter().filter(|&&f| f).count()
    }

    pub fn flags(&self) -> &[bool] {
        &self.forced
    }
}

/// All ray paths for one geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySystem {
    geometry: ScanGeometry,
    full: PathTable,
    filtered: Option<(ZeroMask, PathTable)>,
}

impl RaySystem {
    /// Traces every ray of `geometry`, in flat-index order.
    pub fn trace(geometry: &ScanGeometry) -> Result<Self> {
        geometry.validate()?;
        let trace_detector = |det: usize| {
            let mut tracer = Tracer::default();
            let mut table = PathTable::with_rays(geometry.view_count);
            for view in 0..geometry.view_count {
                let sum = tracer.trace_geometry_ray(
                    geometry,
                    det,
                    view,
                    &mut table.cells,
                    &mut table.segments,
                );
                table.close_ray(sum);
            }
            table
        };

        #[cfg(feature = "parallel")]
        let chunks: Vec<PathTable> = {
            use rayon::prelude::*;
            (0..geometry.detector_count)
                .into_par_iter()
                .map(trace_detector)
                .collect()
        };
        #[cfg(not(feature = "parallel"))]
        let chunks: Vec<PathTable> = (0..geometry.detector_count).map(trace_detector).collect();

        let mut full = PathTable::with_rays(geometry.ray_count());
        for chunk in chunks {
            full.append(chunk);
        }
        Ok(Self {
            geometry: geometry.clone(),
            full,
            filtered: None,
        })
    }

    pub fn geometry(&self) -> &ScanGeometry {
        &self.geometry
    }

    pub fn ray_count(&self) -> usize {
        self.full.sums.len()
    }

    /// Total number of stored (cell, segment) entries over all full paths.
    pub fn entry_count(&self) -> usize {
        self.full.cells.len()
    }

    #[inline]
    pub fn path(&self, ray: usize) -> PathView<'_> {
        self.full.view(ray)
    }

    pub fn sum_of_segments(&self, ray: usize) -> f64 {
        self.full.sums[ray]
    }

    pub fn ray_path(&self, ray: usize) -> Result<RayPath> {
        check_index("ray", ray, self.ray_count())?;
        let view = self.path(ray);
        Ok(RayPath {
            ray_index: ray,
            cells: view.cells.to_vec(),
            segments_mm: view.segments.to_vec(),
            sum_of_segments_mm: self.full.sums[ray],
        })
    }

    pub fn is_filtered(&self) -> bool {
        self.filtered.is_some()
    }

    pub fn zero_mask(&self) -> Option<&ZeroMask> {
        self.filtered.as_ref().map(|(mask, _)| mask)
    }

    /// Path restricted to non-forced-zero cells; `None` before filtering.
    #[inline]
    pub fn filtered_path(&self, ray: usize) -> Option<PathView<'_>> {
        self.filtered.as_ref().map(|(_, table)| table.view(ray))
    }

    /// Drops the filtered paths and mask, keeping the full paths.
    pub fn unfiltered(mut self) -> Self {
        self.filtered = None;
        self
    }

    fn check_image(&self, image: &Image) -> Result<()> {
        check_len("image rows", self.geometry.image_rows, image.rows())?;
        check_len("image cols", self.geometry.image_cols, image.cols())
    }

    fn check_sinogram(&self, sinogram: &Sinogram) -> Result<()> {
        check_len("sinogram detectors", self.geometry.detector_count, sinogram.detectors())?;
        check_len("sinogram views", self.geometry.view_count, sinogram.views())
    }
}

/// Weighted sum `Σ seg_i · e_i` over a path.
#[inline]
pub fn line_integral(image: &Image, path: PathView<'_>) -> f64 {
    line_integral_values(image.values(), path)
}

#[inline]
pub(crate) fn line_integral_values(values: &[f64], path: PathView<'_>) -> f64 {
    path.iter().map(|(c, s)| s * values[c as usize]).sum()
}

/// Traces all rays and simulates the noiseless sinogram of `ground_truth`.
pub fn build_ray_system(
    geometry: &ScanGeometry,
    ground_truth: &Image,
) -> Result<(RaySystem, Sinogram)> {
    geometry.validate()?;
    if ground_truth.rows() != geometry.image_rows || ground_truth.cols() != geometry.image_cols {
        return Err(Error::Config(alloc::format!(
            "image is {}x{} but geometry expects {}x{}",
            ground_truth.rows(),
            ground_truth.cols(),
            geometry.image_rows,
            geometry.image_cols
        )));
    }
    let system = RaySystem::trace(geometry)?;
    let sinogram = forward_project(ground_truth, &system)?;
    Ok((system, sinogram))
}

/// `S[d, p]` = line integral of `image` along the full path of ray `(d, p)`.
pub fn forward_project(image: &Image, system: &RaySystem) -> Result<Sinogram> {
    system.check_image(image)?;
    let g = system.geometry();
    let values = image.values();
    let data: Vec<f64> = (0..system.ray_count())
        .map(|ray| line_integral_values(values, system.path(ray)))
        .collect();
    Sinogram::from_signed_values(g.detector_count, g.view_count, data)
}

/// Marks every cell crossed by at least one ray whose sinogram value is 0.0.
pub fn build_zero_mask(sinogram: &Sinogram, system: &RaySystem) -> Result<ZeroMask> {
    build_zero_mask_with_threshold(sinogram, system, 0.0)
}

/// As [`build_zero_mask`], treating rays with `S <= threshold` as zero rays.
pub fn build_zero_mask_with_threshold(
    sinogram: &Sinogram,
    system: &RaySystem,
    threshold: f64,
) -> Result<ZeroMask> {
    system.check_sinogram(sinogram)?;
    if !(threshold >= 0.0) {
        return Err(Error::Config("zero threshold must be nonnegative".into()));
    }
    let mut mask = ZeroMask::empty(system.geometry().cell_count());
    for (ray, &s) in sinogram.values().iter().enumerate() {
        if s <= threshold {
            for &cell in system.path(ray).cells {
                mask.forced[cell as usize] = true;
            }
        }
    }
    Ok(mask)
}

/// Attaches `mask` to the system and builds the filtered path of every ray:
/// its full path minus forced-zero cells, order preserved, segments unchanged.
pub fn filter_ray_paths(system: RaySystem, mask: ZeroMask) -> Result<RaySystem> {
    check_len("zero mask", system.geometry.cell_count(), mask.len())?;
    let mut table = PathTable::with_rays(system.ray_count());
    for ray in 0..system.ray_count() {
        let mut sum = 0.0;
        for (cell, seg) in system.path(ray).iter() {
            if !mask.forced[cell as usize] {
                table.cells.push(cell);
                table.segments.push(seg);
                sum += seg;
            }
        }
        table.close_ray(sum);
    }
    Ok(RaySystem {
        filtered: Some((mask, table)),
        ..system
    })
}

/// Builds the zero mask from `sinogram` and filters the system with it.
pub fn prepare_for_correction(system: RaySystem, sinogram: &Sinogram) -> Result<RaySystem> {
    let mask = build_zero_mask(sinogram, &system)?;
    filter_ray_paths(system, mask)
}

/// Copy of `image` with every forced-zero cell set to 0.
pub fn apply_zero_mask(image: &Image, mask: &ZeroMask) -> Result<Image> {
    let mut out = image.clone();
    apply_zero_mask_in_place(&mut out, mask)?;
    Ok(out)
}

pub fn apply_zero_mask_in_place(image: &mut Image, mask: &ZeroMask) -> Result<()> {
    check_len("zero mask", image.len(), mask.len())?;
    for (v, &forced) in image.values_mut().iter_mut().zip(&mask.forced) {
        if forced {
            *v = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::EllipsePhantomSpec;

    fn small_geometry() -> ScanGeometry {
        ScanGeometry {
            detector_count: 41,
            view_count: 24,
            image_rows: 32,
            image_cols: 32,
            ..ScanGeometry::default()
        }
    }

    fn disk(rows: usize, cols: usize) -> Image {
        EllipsePhantomSpec::circle(0.0, 0.0, 0.5, 1.0).render(rows, cols)
    }

    #[test]
    fn line_integral_examples() {
        let img = Image::from_values(1, 5, vec![0.0, 0.0, 2.0, 3.0, 4.0]).unwrap();
        let path = PathView {
            cells: &[2, 3, 4],
            segments: &[0.5, 1.0, 0.25],
        };
        assert_eq!(line_integral(&img, path), 5.0);
        assert_eq!(line_integral(&img, PathView::EMPTY), 0.0);

        let g = ScanGeometry::default();
        let ones = Image::filled(250, 250, 1.0);
        let central = g.trace_ray(179, 0).unwrap();
        assert_eq!(line_integral(&ones, central.view()), 250.0);
        assert_eq!(line_integral(&Image::zeros(250, 250), central.view()), 0.0);
    }

    #[test]
    fn simulated_sinogram_is_forward_projection() {
        let g = small_geometry();
        let truth = disk(32, 32);
        let (system, sino) = build_ray_system(&g, &truth).unwrap();
        assert_eq!(forward_project(&truth, &system).unwrap(), sino);
        assert_eq!((sino.detectors(), sino.views()), (41, 24));
        assert!(sino.values().iter().all(|&v| v >= 0.0));

        let zero = forward_project(&Image::zeros(32, 32), &system).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));

        let ones = forward_project(&Image::filled(32, 32, 1.0), &system).unwrap();
        for ray in 0..system.ray_count() {
            assert!((ones.ray(ray) - system.sum_of_segments(ray)).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = small_geometry();
        assert!(matches!(
            build_ray_system(&g, &Image::zeros(31, 32)),
            Err(Error::Config(_))
        ));
        let system = RaySystem::trace(&g).unwrap();
        assert!(forward_project(&Image::zeros(32, 31), &system).is_err());
        assert!(build_zero_mask(&Sinogram::zeros(41, 23), &system).is_err());
    }

    #[test]
    fn forward_projection_is_linear() {
        let g = small_geometry();
        let system = RaySystem::trace(&g).unwrap();
        let a = disk(32, 32);
        let b = EllipsePhantomSpec::shepp_logan().render(32, 32);
        let combo = Image::from_values(
            32,
            32,
            a.values().iter().zip(b.values()).map(|(x, y)| 2.5 * x + 0.75 * y).collect(),
        )
        .unwrap();
        let (sa, sb) = (
            forward_project(&a, &system).unwrap(),
            forward_project(&b, &system).unwrap(),
        );
        let sc = forward_project(&combo, &system).unwrap();
        for i in 0..sc.len() {
            let expect = 2.5 * sa.ray(i) + 0.75 * sb.ray(i);
            assert!((sc.ray(i) - expect).abs() <= 1e-9 * expect.abs().max(1e-300));
        }
        let scaled = forward_project(&a.scaled(3.0), &system).unwrap();
        for i in 0..sa.len() {
            assert!((scaled.ray(i) - 3.0 * sa.ray(i)).abs() <= 1e-12 * sa.ray(i).max(1.0));
        }
    }

    #[test]
    fn zero_mask_examples() {
        let g = small_geometry();
        let system = RaySystem::trace(&g).unwrap();
        let positive = Sinogram::from_values(41, 24, vec![1.0; 41 * 24]).unwrap();
        assert_eq!(build_zero_mask(&positive, &system).unwrap().forced_count(), 0);

        // A single zero ray masks exactly its own cells.
        let ray = g.ray_index(20, 3).unwrap();
        let mut values = vec![1.0; 41 * 24];
        values[ray] = 0.0;
        let one_zero = Sinogram::from_values(41, 24, values).unwrap();
        let mask = build_zero_mask(&one_zero, &system).unwrap();
        let mut expected: Vec<u32> = system.path(ray).cells.to_vec();
        expected.sort_unstable();
        let got: Vec<u32> = (0..mask.len() as u32).filter(|&c| mask.is_forced(c as usize)).collect();
        assert_eq!(got, expected);

        // A threshold promotes small values to zero rays.
        let tiny = Sinogram::from_values(41, 24, vec![1e-9; 41 * 24]).unwrap();
        assert_eq!(build_zero_mask(&tiny, &system).unwrap().forced_count(), 0);
        assert!(build_zero_mask_with_threshold(&tiny, &system, 1e-6).unwrap().forced_count() > 0);
    }

    #[test]
    fn zero_mask_matches_phantom_support() {
        let g = small_geometry();
        let truth = disk(32, 32);
        let (system, sino) = build_ray_system(&g, &truth).unwrap();
        let mask = build_zero_mask(&sino, &system).unwrap();
        for cell in 0..mask.len() {
            if truth.values()[cell] > 0.0 {
                assert!(!mask.is_forced(cell), "support cell {cell} masked");
            }
        }
        // Corner cells see zero rays.
        assert!(mask.is_forced(0));
        assert!(mask.is_forced(32 * 32 - 1));
    }

    #[test]
    fn filtering_examples() {
        let g = small_geometry();
        let system = RaySystem::trace(&g).unwrap();
        let n = g.cell_count();

        let none = filter_ray_paths(system.clone(), ZeroMask::empty(n)).unwrap();
        for ray in 0..none.ray_count() {
            let (f, p) = (none.filtered_path(ray).unwrap(), none.path(ray));
            assert_eq!(f.cells, p.cells);
            assert_eq!(f.segments, p.segments);
        }

        let all = filter_ray_paths(system.clone(), ZeroMask::from_flags(vec![true; n])).unwrap();
        assert!((0..all.ray_count()).all(|r| all.filtered_path(r).unwrap().is_empty()));

        let flags: Vec<bool> = (0..n).map(|c| (c * 7) % 3 == 0).collect();
        let mixed = filter_ray_paths(system, ZeroMask::from_flags(flags.clone())).unwrap();
        for ray in 0..mixed.ray_count() {
            let full = mixed.path(ray);
            let filtered = mixed.filtered_path(ray).unwrap();
            let masked_on_ray = full.cells.iter().filter(|&&c| flags[c as usize]).count();
            assert_eq!(filtered.len() + masked_on_ray, full.len());
            let kept: Vec<u32> = full.cells.iter().copied().filter(|&c| !flags[c as usize]).collect();
            assert_eq!(filtered.cells, &kept[..]);
        }
    }

    #[test]
    fn zero_consistency_and_filtered_equivalence() {
        let g = small_geometry();
        let truth = disk(32, 32);
        let (system, sino) = build_ray_system(&g, &truth).unwrap();
        let system = prepare_for_correction(system, &sino).unwrap();
        let mask = system.zero_mask().unwrap();
        let noisy = Image::filled(32, 32, 0.3);
        let masked = apply_zero_mask(&noisy, mask).unwrap();
        for ray in 0..system.ray_count() {
            if sino.ray(ray) == 0.0 {
                assert_eq!(line_integral(&masked, system.path(ray)), 0.0);
            }
            let f = line_integral(&masked, system.filtered_path(ray).unwrap());
            let p = line_integral(&masked, system.path(ray));
            assert_eq!(f, p);
        }
    }

    #[test]
    fn apply_zero_mask_examples() {
        let img = Image::from_values(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(apply_zero_mask(&img, &ZeroMask::empty(4)).unwrap(), img);
        let all = ZeroMask::from_flags(vec![true; 4]);
        assert_eq!(apply_zero_mask(&img, &all).unwrap(), Image::zeros(2, 2));
        let some = ZeroMask::from_flags(vec![true, false, false, true]);
        let once = apply_zero_mask(&img, &some).unwrap();
        assert_eq!(once.values(), &[0.0, 2.0, 3.0, 0.0]);
        assert_eq!(apply_zero_mask(&once, &some).unwrap(), once);
        assert!(apply_zero_mask(&img, &ZeroMask::empty(3)).is_err());
    }
}
