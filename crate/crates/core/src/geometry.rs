//! Fan-beam scan geometry and exact ray/pixel-grid intersection.
//!
//! World coordinates are millimetres with the rotation centre at the origin,
//! `x` to the right and `y` up. The reconstruction grid is centred on the
//! origin; image row 0 is the top row. Tracing runs in pixel units and scales
//! segment lengths back to millimetres.
//!
//! For view `p` the source sits at `(d sin φ, -d cos φ)` with
//! `φ = p · 2π / views`, and detector `i` at `dc_i (cos φ, sin φ) + a (-sin φ, cos φ)`
//! where `a` is the origin-to-detector distance and `dc_i` the detector
//! coordinate along the detector line.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{check_index, Error, Result};
use crate::math;

/// Crossing points closer than this (in pixel units) are merged.
pub const CROSSING_MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    fn scaled(self, factor: f64) -> Self {
        Self::new(self.x * factor, self.y * factor)
    }
}

/// Fan-beam scanning parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGeometry {
    pub source_to_origin_mm: f64,
    pub source_to_detectors_mm: f64,
    pub detector_count: usize,
    pub view_count: usize,
    pub image_rows: usize,
    pub image_cols: usize,
    pub pixel_pitch_mm: f64,
    /// Spacing of detector coordinates on the detector line. `None` uses the
    /// magnified unit spacing `(a + d) / d`.
    pub detector_pitch_mm: Option<f64>,
}

impl Default for ScanGeometry {
    fn default() -> Self {
        Self {
            source_to_origin_mm: 800.0,
            source_to_detectors_mm: 1500.0,
            detector_count: 359,
            view_count: 270,
            image_rows: 250,
            image_cols: 250,
            pixel_pitch_mm: 1.0,
            detector_pitch_mm: None,
        }
    }
}

impl ScanGeometry {
    pub fn with_views(mut self, views: usize) -> Self {
        self.view_count = views;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.source_to_origin_mm) || !positive(self.source_to_detectors_mm) {
            return Err(Error::Config("distances must be positive and finite".into()));
        }
        if self.source_to_detectors_mm <= self.source_to_origin_mm {
            return Err(Error::Config(
                "source_to_detectors_mm must exceed source_to_origin_mm".into(),
            ));
        }
        if self.detector_count == 0 || self.view_count == 0 {
            return Err(Error::Config("detector and view counts must be positive".into()));
        }
        if self.image_rows == 0 || self.image_cols == 0 {
            return Err(Error::Config("image dimensions must be positive".into()));
        }
        if (self.image_rows as u64) * (self.image_cols as u64) > u32::MAX as u64 {
            return Err(Error::Config("image has too many cells".into()));
        }
        if !positive(self.pixel_pitch_mm) {
            return Err(Error::Config("pixel pitch must be positive".into()));
        }
        if let Some(p) = self.detector_pitch_mm {
            if !positive(p) {
                return Err(Error::Config("detector pitch must be positive".into()));
            }
        }
        Ok(())
    }

    /// Distance from the rotation centre to the detector line (`a`).
    pub fn origin_to_detectors_mm(&self) -> f64 {
        self.source_to_detectors_mm - self.source_to_origin_mm
    }

    /// Spacing of detector coordinates along the detector line.
    pub fn detector_pitch(&self) -> f64 {
        self.detector_pitch_mm
            .unwrap_or(self.source_to_detectors_mm / self.source_to_origin_mm)
    }

    /// Magnification from the isocentre line to the detector line, `(a + d) / d`.
    pub fn magnification(&self) -> f64 {
        self.source_to_detectors_mm / self.source_to_origin_mm
    }

    pub fn view_angle_step(&self) -> f64 {
        2.0 * PI / self.view_count as f64
    }

    pub fn view_angle(&self, view: usize) -> f64 {
        view as f64 * self.view_angle_step()
    }

    pub fn ray_count(&self) -> usize {
        self.detector_count * self.view_count
    }

    pub fn cell_count(&self) -> usize {
        self.image_rows * self.image_cols
    }

    /// Flat ray index `detector * views + view`.
    pub fn ray_index(&self, detector: usize, view: usize) -> Result<usize> {
        check_index("detector", detector, self.detector_count)?;
        check_index("view", view, self.view_count)?;
        Ok(detector * self.view_count + view)
    }

    /// Inverse of [`ray_index`](Self::ray_index): `(detector, view)`.
    pub fn ray_coords(&self, ray: usize) -> Result<(usize, usize)> {
        check_index("ray", ray, self.ray_count())?;
        Ok((ray / self.view_count, ray % self.view_count))
    }

    /// Coordinate of a detector along the detector line, centred on the
    /// middle detector.
    pub fn detector_coordinate(&self, detector: usize) -> f64 {
        (detector as f64 - (self.detector_count as f64 - 1.0) / 2.0) * self.detector_pitch()
    }

    pub fn source_position(&self, view: usize) -> Result<Point> {
        check_index("view", view, self.view_count)?;
        let phi = self.view_angle(view);
        let d = self.source_to_origin_mm;
        Ok(Point::new(d * math::sin(phi), -d * math::cos(phi)))
    }

    pub fn detector_position(&self, detector: usize, view: usize) -> Result<Point> {
        check_index("detector", detector, self.detector_count)?;
        check_index("view", view, self.view_count)?;
        let phi = self.view_angle(view);
        let (s, c) = (math::sin(phi), math::cos(phi));
        let dc = self.detector_coordinate(detector);
        let a = self.origin_to_detectors_mm();
        Ok(Point::new(c * dc - s * a, s * dc + c * a))
    }

    /// Traces the ray from the source to detector `detector` at view `view`.
    pub fn trace_ray(&self, detector: usize, view: usize) -> Result<RayPath> {
        let ray_index = self.ray_index(detector, view)?;
        let mut tracer = Tracer::default();
        let mut cells = Vec::new();
        let mut segments_mm = Vec::new();
        let sum_of_segments_mm =
            tracer.trace_geometry_ray(self, detector, view, &mut cells, &mut segments_mm);
        Ok(RayPath {
            ray_index,
            cells,
            segments_mm,
            sum_of_segments_mm,
        })
    }

    /// Stable 64-bit hash of every parameter, used to tie pair pools to a geometry.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let words = [
            self.source_to_origin_mm.to_bits(),
            self.source_to_detectors_mm.to_bits(),
            self.detector_count as u64,
            self.view_count as u64,
            self.image_rows as u64,
            self.image_cols as u64,
            self.pixel_pitch_mm.to_bits(),
            self.detector_pitch().to_bits(),
        ];
        let mut hash = OFFSET;
        for word in words {
            for byte in word.to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(PRIME);
            }
        }
        hash
    }
}

/// Cells crossed by one ray, in order from source to detector.
#[derive(Debug, Clone, PartialEq)]
pub struct RayPath {
    pub ray_index: usize,
    pub cells: Vec<u32>,
    pub segments_mm: Vec<f64>,
    pub sum_of_segments_mm: f64,
}

impl RayPath {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn view(&self) -> PathView<'_> {
        PathView {
            cells: &self.cells,
            segments: &self.segments_mm,
        }
    }
}

/// Borrowed cell/segment lists of one ray.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    pub cells: &'a [u32],
    pub segments: &'a [f64],
}

impl<'a> PathView<'a> {
    pub const EMPTY: PathView<'static> = PathView {
        cells: &[],
        segments: &[],
    };

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + 'a {
        self.cells.iter().copied().zip(self.segments.iter().copied())
    }
}

/// Intersects the segment `p0 → p1` (pixel units) with a `rows × cols` grid
/// of unit pixels centred on the origin. Returns `(cell, length)` pairs in
/// order of travel.
pub fn trace_segment(rows: usize, cols: usize, p0: Point, p1: Point) -> Vec<(u32, f64)> {
    let mut tracer = Tracer::default();
    let mut cells = Vec::new();
    let mut segs = Vec::new();
    tracer.trace(rows, cols, p0, p1, &mut cells, &mut segs);
    cells.into_iter().zip(segs).collect()
}

/// Reusable scratch space for tracing many rays.
#[derive(Debug, Default)]
pub(crate) struct Tracer {
    crossings: Vec<f64>,
}

impl Tracer {
    /// Appends the path of a geometry ray (segments in mm) and returns its
    /// sum of segments.
    pub(crate) fn trace_geometry_ray(
        &mut self,
        geometry: &ScanGeometry,
        detector: usize,
        view: usize,
        cells: &mut Vec<u32>,
        segments_mm: &mut Vec<f64>,
    ) -> f64 {
        let scale = 1.0 / geometry.pixel_pitch_mm;
        // Indices were validated by the caller.
        let src = geometry.source_position(view).expect("valid view").scaled(scale);
        let dst = geometry
            .detector_position(detector, view)
            .expect("valid ray")
            .scaled(scale);
        let start = segments_mm.len();
        self.trace(
            geometry.image_rows,
            geometry.image_cols,
            src,
            dst,
            cells,
            segments_mm,
        );
        let pitch = geometry.pixel_pitch_mm;
        let mut sum = 0.0;
        for s in &mut segments_mm[start..] {
            *s *= pitch;
            sum += *s;
        }
        sum
    }

    pub(crate) fn trace(
        &mut self,
        rows: usize,
        cols: usize,
        p0: Point,
        p1: Point,
        cells: &mut Vec<u32>,
        segs: &mut Vec<f64>,
    ) {
        let half_w = cols as f64 / 2.0;
        let half_h = rows as f64 / 2.0;
        let (dx, dy) = (p1.x - p0.x, p1.y - p0.y);
        let col_of = |x: f64| clamp_index(math::floor(x + half_w), cols);
        let row_of = |y: f64| clamp_index(math::floor(half_h - y), rows);

        if dx == 0.0 && dy == 0.0 {
            return;
        }
        if dx == 0.0 {
            // Vertical ray: walks whole pixels of one column.
            if p0.x < -half_w || p0.x > half_w {
                return;
            }
            let col = col_of(p0.x);
            let (lo, hi) = (p0.y.min(p1.y).max(-half_h), p0.y.max(p1.y).min(half_h));
            axis_walk(lo, hi, -half_h, dy > 0.0, |mid, len| {
                cells.push((row_of(mid) * cols + col) as u32);
                segs.push(len);
            });
            return;
        }
        if dy == 0.0 {
            if p0.y < -half_h || p0.y > half_h {
                return;
            }
            let row = row_of(p0.y);
            let (lo, hi) = (p0.x.min(p1.x).max(-half_w), p0.x.max(p1.x).min(half_w));
            axis_walk(lo, hi, -half_w, dx > 0.0, |mid, len| {
                cells.push((row * cols + col_of(mid)) as u32);
                segs.push(len);
            });
            return;
        }

        // Parametric clip of P(t) = p0 + t (p1 - p0), t in [0, 1], to the box.
        let (tx_a, tx_b) = ((-half_w - p0.x) / dx, (half_w - p0.x) / dx);
        let (ty_a, ty_b) = ((-half_h - p0.y) / dy, (half_h - p0.y) / dy);
        let t_enter = 0.0f64.max(tx_a.min(tx_b)).max(ty_a.min(ty_b));
        let t_exit = 1.0f64.min(tx_a.max(tx_b)).min(ty_a.max(ty_b));
        let length = math::hypot(dx, dy);
        if (t_exit - t_enter) * length <= CROSSING_MERGE_TOLERANCE {
            return;
        }

        let crossings = &mut self.crossings;
        crossings.clear();
        crossings.push(t_enter);
        push_line_crossings(crossings, p0.x, dx, half_w, cols, t_enter, t_exit);
        push_line_crossings(crossings, p0.y, dy, half_h, rows, t_enter, t_exit);
        crossings.push(t_exit);
        crossings.sort_unstable_by(f64::total_cmp);

        let start = cells.len();
        let mut prev = crossings[0];
        for &t in &crossings[1..] {
            if (t - prev) * length <= CROSSING_MERGE_TOLERANCE {
                continue;
            }
            let mid = 0.5 * (prev + t);
            let (xm, ym) = (p0.x + mid * dx, p0.y + mid * dy);
            let cell = (row_of(ym) * cols + col_of(xm)) as u32;
            let seg = (t - prev) * length;
            prev = t;
            // A line cannot re-enter a pixel; a repeat is a sliver next to a
            // corner whose midpoint rounded into the neighbour.
            if cells.len() > start && cells[cells.len() - 1] == cell {
                *segs.last_mut().unwrap() += seg;
                continue;
            }
            cells.push(cell);
            segs.push(seg);
        }
    }
}

/// Pushes the parameters at which the ray crosses the interior grid lines
/// `coord = -half + k` lying strictly inside `(t_enter, t_exit)`.
fn push_line_crossings(
    out: &mut Vec<f64>,
    origin: f64,
    delta: f64,
    half: f64,
    count: usize,
    t_enter: f64,
    t_exit: f64,
) {
    let a = origin + t_enter * delta;
    let b = origin + t_exit * delta;
    let (lo, hi) = (a.min(b), a.max(b));
    let k_lo = (math::floor(lo + half) - 1.0).max(0.0) as usize;
    let k_hi = ((math::floor(hi + half) + 1.0).max(0.0) as usize).min(count);
    for k in k_lo..=k_hi {
        let t = ((k as f64 - half) - origin) / delta;
        if t > t_enter && t < t_exit {
            out.push(t);
        }
    }
}

/// Splits `[lo, hi]` at integer offsets from `base` and reports each piece's
/// midpoint and length, ascending or descending.
fn axis_walk(lo: f64, hi: f64, base: f64, ascending: bool, mut emit: impl FnMut(f64, f64)) {
    if hi - lo <= CROSSING_MERGE_TOLERANCE {
        return;
    }
    let mut points = Vec::new();
    points.push(lo);
    let mut k = math::floor(lo - base) + 1.0;
    while base + k < hi {
        let p = base + k;
        if p - lo > CROSSING_MERGE_TOLERANCE && hi - p > CROSSING_MERGE_TOLERANCE {
            points.push(p);
        }
        k += 1.0;
    }
    points.push(hi);
    if !ascending {
        points.reverse();
    }
    for w in points.windows(2) {
        emit(0.5 * (w[0] + w[1]), (w[1] - w[0]).abs());
    }
}

fn clamp_index(v: f64, len: usize) -> usize {
    if v < 0.0 {
        0
    } else {
        (v as usize).min(len - 1)
    }
}
