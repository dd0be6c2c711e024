//! Run configuration: defaults, `key = value` files and typed access.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use serde::Serialize;
use sparsect_core::analytic::{DerivativeScheme, InverseRadonParams, RampFilter};
use sparsect_core::randomized::{Algorithm, CorrectionConfig};
use sparsect_core::ScanGeometry;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterName {
    RamLak,
    Hamming,
}

impl From<FilterName> for RampFilter {
    fn from(f: FilterName) -> Self {
        match f {
            FilterName::RamLak => RampFilter::RamLak,
            FilterName::Hamming => RampFilter::Hamming,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeName {
    Forward,
    Central,
}

impl From<DerivativeName> for DerivativeScheme {
    fn from(d: DerivativeName) -> Self {
        match d {
            DerivativeName::Forward => DerivativeScheme::Forward,
            DerivativeName::Central => DerivativeScheme::Central,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmName {
    Pair,
    SingleRay,
}

impl From<AlgorithmName> for Algorithm {
    fn from(a: AlgorithmName) -> Self {
        match a {
            AlgorithmName::Pair => Algorithm::Pair,
            AlgorithmName::SingleRay => Algorithm::SingleRay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Fbp,
    Dint,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Fbp => "fbp",
            Method::Dint => "dint",
        })
    }
}

/// Everything a run depends on. Written verbatim into each manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub views: usize,
    /// View count of the full-scan references.
    pub reference_views: usize,
    pub detectors: usize,
    pub rows: usize,
    pub cols: usize,
    pub source_to_origin_mm: f64,
    pub source_to_detectors_mm: f64,
    pub pixel_pitch_mm: f64,
    pub detector_pitch_mm: Option<f64>,
    /// Phantom description file; the built-in Shepp-Logan set when absent.
    pub phantom: Option<PathBuf>,
    pub iterations: usize,
    pub seed: u64,
    pub algorithm: AlgorithmName,
    pub fbp_filter: FilterName,
    pub dint_derivative: DerivativeName,
    pub dint_epsilon_mm: Option<f64>,
    pub dint_p_samples: Option<usize>,
    pub residual_log_stride: usize,
    pub stop_residual: Option<f64>,
    /// Sinogram values at or below this count as zero when building the
    /// zero mask.
    pub zero_threshold: f64,
    pub sweep_views: Vec<usize>,
    pub sweep_corrected_views: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let g = ScanGeometry::default();
        Self {
            views: g.view_count,
            reference_views: 360,
            detectors: g.detector_count,
            rows: g.image_rows,
            cols: g.image_cols,
            source_to_origin_mm: g.source_to_origin_mm,
            source_to_detectors_mm: g.source_to_detectors_mm,
            pixel_pitch_mm: g.pixel_pitch_mm,
            detector_pitch_mm: g.detector_pitch_mm,
            phantom: None,
            iterations: CorrectionConfig::default().iteration_budget,
            seed: 1,
            algorithm: AlgorithmName::Pair,
            fbp_filter: FilterName::RamLak,
            dint_derivative: DerivativeName::Forward,
            dint_epsilon_mm: None,
            dint_p_samples: None,
            residual_log_stride: 0,
            stop_residual: None,
            zero_threshold: 0.0,
            sweep_views: vec![234, 270, 306, 360],
            sweep_corrected_views: vec![234, 270],
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.is_empty() || value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T> {
    T::from_str(value, true).map_err(|_| {
        let names: Vec<String> = T::value_variants()
            .iter()
            .filter_map(|v| v.to_possible_value().map(|p| p.get_name().to_owned()))
            .collect();
        Error::Config(format!("{key}: {value:?} is not one of {}", names.join(", ")))
    })
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl RunConfig {
    /// Sets one field from its textual form, as found in a config file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "views" => self.views = parse(key, v)?,
            "reference_views" => self.reference_views = parse(key, v)?,
            "detectors" => self.detectors = parse(key, v)?,
            "rows" => self.rows = parse(key, v)?,
            "cols" => self.cols = parse(key, v)?,
            "source_to_origin_mm" => self.source_to_origin_mm = parse(key, v)?,
            "source_to_detectors_mm" => self.source_to_detectors_mm = parse(key, v)?,
            "pixel_pitch_mm" => self.pixel_pitch_mm = parse(key, v)?,
            "detector_pitch_mm" => self.detector_pitch_mm = parse_opt(key, v)?,
            "phantom" => self.phantom = parse_opt(key, v)?,
            "iterations" => self.iterations = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "algorithm" => self.algorithm = parse_enum(key, v)?,
            "fbp_filter" => self.fbp_filter = parse_enum(key, v)?,
            "dint_derivative" => self.dint_derivative = parse_enum(key, v)?,
            "dint_epsilon_mm" => self.dint_epsilon_mm = parse_opt(key, v)?,
            "dint_p_samples" => self.dint_p_samples = parse_opt(key, v)?,
            "residual_log_stride" => self.residual_log_stride = parse(key, v)?,
            "stop_residual" => self.stop_residual = parse_opt(key, v)?,
            "zero_threshold" => self.zero_threshold = parse(key, v)?,
            "sweep_views" => self.sweep_views = parse_list(key, v)?,
            "sweep_corrected_views" => self.sweep_corrected_views = parse_list(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let located = |message: String| Error::Format {
                path: path.to_path_buf(),
                line: line_no + 1,
                token: None,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| located("expected `key = value`".into()))?;
            self.set(key.trim(), value).map_err(|e| match e {
                Error::Config(m) => located(m),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::default();
        config.apply_text(&text, path)?;
        Ok(config)
    }

    pub fn geometry(&self, views: usize) -> Result<ScanGeometry> {
        let g = ScanGeometry {
            source_to_origin_mm: self.source_to_origin_mm,
            source_to_detectors_mm: self.source_to_detectors_mm,
            detector_count: self.detectors,
            view_count: views,
            image_rows: self.rows,
            image_cols: self.cols,
            pixel_pitch_mm: self.pixel_pitch_mm,
            detector_pitch_mm: self.detector_pitch_mm,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn dint_params(&self, geometry: &ScanGeometry) -> InverseRadonParams {
        let mut p = InverseRadonParams::for_geometry(geometry);
        p.derivative_scheme = self.dint_derivative.into();
        if let Some(eps) = self.dint_epsilon_mm {
            p.singularity_epsilon = eps;
        }
        if let Some(n) = self.dint_p_samples {
            p.p_samples = n;
        }
        p
    }

    pub fn correction(&self) -> CorrectionConfig {
        CorrectionConfig {
            iteration_budget: self.iterations,
            seed: self.seed,
            algorithm: self.algorithm.into(),
            residual_log_stride: self.residual_log_stride,
            stop_residual: self.stop_residual,
        }
    }
}
