//! Fan-beam X-ray CT reconstruction with randomized pairwise correction.
//!
//! The crate is `no_std` (with `alloc`) when built without its default `std`
//! feature. It covers:
//!
//! * [`geometry`]: fan-beam scan geometry and exact ray/pixel-grid tracing,
//! * [`projector`]: line integrals, forward projection and the zero set,
//! * [`analytic`]: fan-beam filtered back-projection and direct integration
//!   of the inverse Radon transform, used as initial solutions,
//! * [`randomized`]: the single-ray and disjoint-pair multiplicative
//!   correction algorithms, the pair pool generator and the driver loop,
//! * [`phantom`]: ellipse phantoms (Shepp-Logan built in),
//! * [`metrics`]: RMSE, PSNR and sinogram residuals.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analytic;
pub mod error;
pub mod geometry;
pub mod image;
mod math;
pub mod metrics;
pub mod phantom;
pub mod projector;
pub mod randomized;

pub use error::{Error, Result};
pub use geometry::{Point, RayPath, ScanGeometry};
pub use image::{Image, Sinogram};
pub use projector::{RaySystem, ZeroMask};
