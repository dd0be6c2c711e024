//! Ellipse phantoms.
//!
//! Ellipse parameters live in normalised coordinates: the image spans
//! `[-1, 1]` in both `x` (left to right) and `y` (bottom to top).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::image::Image;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub center_x: f64,
    pub center_y: f64,
    pub semi_axis_x: f64,
    pub semi_axis_y: f64,
    pub rotation_deg: f64,
    pub intensity: f64,
}

impl Ellipse {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let theta = self.rotation_deg * PI / 180.0;
        let (s, c) = (math::sin(theta), math::cos(theta));
        let (dx, dy) = (x - self.center_x, y - self.center_y);
        let u = (dx * c + dy * s) / self.semi_axis_x;
        let v = (-dx * s + dy * c) / self.semi_axis_y;
        u * u + v * v <= 1.0
    }
}

/// A sum of constant-intensity ellipses.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EllipsePhantomSpec {
    pub ellipses: Vec<Ellipse>,
}

impl EllipsePhantomSpec {
    pub fn circle(center_x: f64, center_y: f64, radius: f64, intensity: f64) -> Self {
        Self {
            ellipses: vec![Ellipse {
                center_x,
                center_y,
                semi_axis_x: radius,
                semi_axis_y: radius,
                rotation_deg: 0.0,
                intensity,
            }],
        }
    }

    /// The ten-ellipse Shepp-Logan head with the high-contrast intensities
    /// (outer skull 1.0, brain 0.2).
    pub fn shepp_logan() -> Self {
        #[rustfmt::skip]
        const TABLE: [[f64; 6]; 10] = [
            // cx,     cy,      a,      b,      theta, intensity
            [ 0.0,     0.0,     0.69,   0.92,    0.0,  1.0],
            [ 0.0,    -0.0184,  0.6624, 0.874,   0.0, -0.8],
            [ 0.22,    0.0,     0.11,   0.31,  -18.0, -0.2],
            [-0.22,    0.0,     0.16,   0.41,   18.0, -0.2],
            [ 0.0,     0.35,    0.21,   0.25,    0.0,  0.1],
            [ 0.0,     0.1,     0.046,  0.046,   0.0,  0.1],
            [ 0.0,    -0.1,     0.046,  0.046,   0.0,  0.1],
            [-0.08,   -0.605,   0.046,  0.023,   0.0,  0.1],
            [ 0.0,    -0.606,   0.023,  0.023,   0.0,  0.1],
            [ 0.06,   -0.605,   0.023,  0.046,   0.0,  0.1],
        ];
        Self {
            ellipses: TABLE
                .iter()
                .map(|r| Ellipse {
                    center_x: r[0],
                    center_y: r[1],
                    semi_axis_x: r[2],
                    semi_axis_y: r[3],
                    rotation_deg: r[4],
                    intensity: r[5],
                })
                .collect(),
        }
    }

    /// Value at a normalised point: sum of intensities of the ellipses
    /// containing it, clamped at zero.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        self.ellipses
            .iter()
            .filter(|e| e.contains(x, y))
            .map(|e| e.intensity)
            .sum::<f64>()
            .max(0.0)
    }

    /// Samples the phantom at pixel centres.
    pub fn render(&self, rows: usize, cols: usize) -> Image {
        let mut img = Image::zeros(rows, cols);
        let (hw, hh) = (cols as f64 / 2.0, rows as f64 / 2.0);
        let values = img.values_mut();
        for r in 0..rows {
            let y = (hh - r as f64 - 0.5) / hh;
            for c in 0..cols {
                let x = (c as f64 + 0.5 - hw) / hw;
                values[r * cols + c] = self.value_at(x, y);
            }
        }
        img
    }
}
