//! Simulation, reconstruction and correction stages, and the two canned
//! experiments built from them.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sparsect_core::analytic::{direct_integration_reconstruct, fbp_reconstruct};
use sparsect_core::metrics::QualityReport;
use sparsect_core::phantom::EllipsePhantomSpec;
use sparsect_core::projector::{build_ray_system, build_zero_mask_with_threshold, filter_ray_paths};
use sparsect_core::randomized::{generate_pair_pool_for_budget, run_correction, Algorithm, PairPool, RunReport};
use sparsect_core::{Image, RaySystem, ScanGeometry, Sinogram};

use crate::config::{Method, RunConfig};
use crate::error::{Error, Result};
use crate::formats::{
    write_image_ascii, write_image_pgm, write_pair_pool, write_phantom, write_sinogram_ascii,
    PoolFormat,
};
use crate::report::{
    write_csv, Artifact, ArtifactKind, Manifest, ReportRow, RunSummary, MANIFEST_FILE,
};

/// Progress sink; receives one line per stage.
pub type Progress<'a> = &'a mut dyn FnMut(&str);

/// An output directory being filled, with its manifest.
pub struct Output {
    dir: PathBuf,
    manifest_file: String,
    pub manifest: Manifest,
}

impl Output {
    /// Output with the manifest in `manifest.json`.
    pub fn create(dir: &Path, command: &str, config: &RunConfig) -> Result<Self> {
        Self::with_manifest(dir, command, config, MANIFEST_FILE)
    }

    pub fn with_manifest(
        dir: &Path,
        command: &str,
        config: &RunConfig,
        manifest_file: &str,
    ) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest_file: manifest_file.to_owned(),
            manifest: Manifest::new(command, config),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn record(&mut self, kind: ArtifactKind, name: &str, files: Vec<String>, views: Option<usize>) {
        self.manifest.artifacts.push(Artifact {
            kind,
            name: name.to_owned(),
            files,
            views,
        });
    }

    /// Writes `<name>.txt` and a normalised `<name>.pgm`.
    pub fn save_image(&mut self, name: &str, image: &Image, views: Option<usize>) -> Result<()> {
        let (txt, pgm) = (format!("{name}.txt"), format!("{name}.pgm"));
        write_image_ascii(image, &self.dir.join(&txt))?;
        write_image_pgm(image, &self.dir.join(&pgm), true)?;
        self.record(ArtifactKind::Image, name, vec![txt, pgm], views);
        Ok(())
    }

    pub fn save_phantom(&mut self, spec: &EllipsePhantomSpec, image: &Image) -> Result<()> {
        let files = ["phantom.txt", "phantom.pgm", "phantom-ellipses.txt"];
        write_image_ascii(image, &self.dir.join(files[0]))?;
        write_image_pgm(image, &self.dir.join(files[1]), true)?;
        write_phantom(spec, &self.dir.join(files[2]))?;
        self.record(ArtifactKind::Phantom, "phantom", files.map(String::from).to_vec(), None);
        Ok(())
    }

    pub fn save_sinogram(&mut self, name: &str, sinogram: &Sinogram) -> Result<()> {
        let file = format!("{name}.txt");
        write_sinogram_ascii(sinogram, &self.dir.join(&file))?;
        self.record(ArtifactKind::Sinogram, name, vec![file], Some(sinogram.views()));
        Ok(())
    }

    pub fn save_pool(&mut self, name: &str, pool: &PairPool, format: PoolFormat) -> Result<()> {
        let file = match format {
            PoolFormat::Text => format!("{name}.txt"),
            PoolFormat::Binary => format!("{name}.bin"),
        };
        write_pair_pool(pool, &self.dir.join(&file), format)?;
        self.record(ArtifactKind::Pairs, name, vec![file], None);
        Ok(())
    }

    pub fn save_report(&mut self, name: &str, rows: &[ReportRow]) -> Result<()> {
        let file = format!("{name}.csv");
        write_csv(rows, &self.dir.join(&file))?;
        self.record(ArtifactKind::Report, name, vec![file], None);
        Ok(())
    }

    /// Writes the manifest and hands it back.
    pub fn finish(self) -> Result<Manifest> {
        self.manifest.write(&self.dir.join(&self.manifest_file))?;
        Ok(self.manifest)
    }
}

pub fn phantom_spec(config: &RunConfig) -> Result<EllipsePhantomSpec> {
    match &config.phantom {
        Some(path) => crate::formats::read_phantom(path),
        None => Ok(EllipsePhantomSpec::shepp_logan()),
    }
}

/// Geometry, traced ray system and simulated sinogram of one scan.
pub struct Scan {
    pub geometry: ScanGeometry,
    pub system: RaySystem,
    pub sinogram: Sinogram,
}

pub fn simulate(config: &RunConfig, truth: &Image, views: usize) -> Result<Scan> {
    let geometry = config.geometry(views)?;
    let (system, sinogram) = build_ray_system(&geometry, truth)?;
    Ok(Scan {
        geometry,
        system,
        sinogram,
    })
}

pub fn reconstruct(
    method: Method,
    sinogram: &Sinogram,
    geometry: &ScanGeometry,
    config: &RunConfig,
) -> Result<Image> {
    Ok(match method {
        Method::Fbp => fbp_reconstruct(sinogram, geometry, config.fbp_filter.into())?,
        Method::Dint => {
            direct_integration_reconstruct(sinogram, geometry, &config.dint_params(geometry))?.0
        }
    })
}

/// Zero mask from the sinogram and filtered paths, ready for correction.
pub fn prepare(system: RaySystem, sinogram: &Sinogram, config: &RunConfig) -> Result<RaySystem> {
    let mask = build_zero_mask_with_threshold(sinogram, &system, config.zero_threshold)?;
    Ok(filter_ray_paths(system, mask)?)
}

/// Pool with `config.iterations` usable pairs, or an empty one for the
/// single-ray algorithm (which draws its own rays).
pub fn pair_pool(system: &RaySystem, sinogram: &Sinogram, config: &RunConfig) -> Result<PairPool> {
    let budget = match Algorithm::from(config.algorithm) {
        Algorithm::Pair => config.iterations,
        Algorithm::SingleRay => 0,
    };
    Ok(generate_pair_pool_for_budget(system, sinogram, budget, config.seed, None)?)
}

pub fn correct(
    initial: &Image,
    sinogram: &Sinogram,
    prepared: &RaySystem,
    pool: &PairPool,
    config: &RunConfig,
) -> Result<(Image, RunReport)> {
    Ok(run_correction(initial, sinogram, prepared, pool, &config.correction())?)
}

pub struct ExperimentResult {
    pub rows: Vec<ReportRow>,
    pub manifest: Manifest,
}

fn evaluate(
    method: &str,
    iterations: usize,
    image: &Image,
    truth: &Image,
    scan: &Scan,
) -> Result<ReportRow> {
    Ok(ReportRow {
        method: method.to_owned(),
        views: scan.geometry.view_count,
        iterations,
        quality: QualityReport::evaluate(image, truth, &scan.sinogram, &scan.system)?,
    })
}

/// Stage timer that records into the manifest.
fn timed<T>(out: &mut Output, stage: String, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let value = f()?;
    out.manifest.time(stage, start.elapsed());
    Ok(value)
}

/// Analytic reconstructions of one scan, both corrected when `corrected`.
fn run_scan(
    config: &RunConfig,
    truth: &Image,
    views: usize,
    corrected: bool,
    out: &mut Output,
    rows: &mut Vec<ReportRow>,
    progress: Progress<'_>,
) -> Result<()> {
    progress(&format!("tracing {views} views"));
    let scan = timed(out, format!("trace-{views}"), || simulate(config, truth, views))?;
    out.save_sinogram(&format!("sinogram-{views}"), &scan.sinogram)?;
    let mut initials = Vec::new();
    for method in [Method::Fbp, Method::Dint] {
        progress(&format!("{method} reconstruction, {views} views"));
        let image = timed(out, format!("{method}-{views}"), || {
            reconstruct(method, &scan.sinogram, &scan.geometry, config)
        })?;
        let name = format!("{method}-{views}");
        out.save_image(&name, &image, Some(views))?;
        rows.push(evaluate(&method.to_string(), 0, &image, truth, &scan)?);
        initials.push((method, image));
    }
    if !corrected {
        return Ok(());
    }

    progress(&format!("preparing correction, {views} views"));
    let Scan {
        geometry,
        system,
        sinogram,
    } = scan;
    let prepared = timed(out, format!("prepare-{views}"), || prepare(system, &sinogram, config))?;
    let pool = timed(out, format!("pool-{views}"), || pair_pool(&prepared, &sinogram, config))?;
    let scan = Scan {
        geometry,
        system: prepared,
        sinogram,
    };
    for (method, initial) in &initials {
        progress(&format!("correcting {method}-{views}, {} iterations", config.iterations));
        let (image, report) = correct(initial, &scan.sinogram, &scan.system, &pool, config)?;
        let name = format!("{method}-{views}-corrected");
        if let Some(elapsed) = report.elapsed {
            out.manifest.time(format!("correct-{method}-{views}"), elapsed);
        }
        out.manifest.runs.push(RunSummary::new(&name, pool.len(), &report));
        out.save_image(&name, &image, Some(views))?;
        rows.push(evaluate(
            &format!("{method}-corrected"),
            report.usable_iterations,
            &image,
            truth,
            &scan,
        )?);
    }
    Ok(())
}

fn setup(config: &RunConfig, out: &mut Output) -> Result<Image> {
    let spec = phantom_spec(config)?;
    let truth = spec.render(config.rows, config.cols);
    out.save_phantom(&spec, &truth)?;
    Ok(truth)
}

/// Phantom, sparse scan (`config.views`), both analytic initials and their
/// corrections, plus both analytic reconstructions at `reference_views`.
/// Writes the images, `report.csv` and the manifest into `dir`.
pub fn paper270(config: &RunConfig, dir: &Path, progress: Progress<'_>) -> Result<ExperimentResult> {
    let mut out = Output::create(dir, "experiment paper270", config)?;
    let truth = setup(config, &mut out)?;
    let mut rows = Vec::new();
    run_scan(config, &truth, config.views, true, &mut out, &mut rows, progress)?;
    run_scan(config, &truth, config.reference_views, false, &mut out, &mut rows, progress)?;
    out.save_report("report", &rows)?;
    Ok(ExperimentResult {
        rows,
        manifest: out.finish()?,
    })
}

/// Analytic reconstructions for every view count in `sweep_views`, corrected
/// for those also in `sweep_corrected_views`. Writes `sweep.csv`.
pub fn sweep(config: &RunConfig, dir: &Path, progress: Progress<'_>) -> Result<ExperimentResult> {
    if config.sweep_views.is_empty() {
        return Err(Error::Config("sweep_views is empty".into()));
    }
    let mut out = Output::create(dir, "experiment sweep", config)?;
    let truth = setup(config, &mut out)?;
    let mut rows = Vec::new();
    for &views in &config.sweep_views {
        let corrected = config.sweep_corrected_views.contains(&views);
        run_scan(config, &truth, views, corrected, &mut out, &mut rows, progress)?;
    }
    out.save_report("sweep", &rows)?;
    Ok(ExperimentResult {
        rows,
        manifest: out.finish()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::parse_csv;

    fn small() -> RunConfig {
        RunConfig {
            views: 36,
            reference_views: 48,
            detectors: 61,
            rows: 40,
            cols: 40,
            iterations: 3000,
            sweep_views: vec![24, 36],
            sweep_corrected_views: vec![24],
            ..RunConfig::default()
        }
    }

    #[test]
    fn sparse_experiment_writes_everything() {
        let dir = tempfile::tempdir().unwrap();
        let mut lines = Vec::new();
        let result = paper270(&small(), dir.path(), &mut |l| lines.push(l.to_owned())).unwrap();
        let m = &result.manifest;
        let images: Vec<&str> = m.artifacts_of(ArtifactKind::Image).map(|a| a.name.as_str()).collect();
        assert_eq!(
            images,
            ["fbp-36", "dint-36", "fbp-36-corrected", "dint-36-corrected", "fbp-48", "dint-48"]
        );
        assert_eq!(m.artifacts_of(ArtifactKind::Report).count(), 1);
        for a in &m.artifacts {
            for f in &a.files {
                assert!(dir.path().join(f).is_file(), "{f}");
            }
        }
        assert!(dir.path().join("manifest.json").is_file());
        assert_eq!(m.runs.len(), 2);
        assert!(m.runs.iter().all(|r| r.usable_iterations == 3000 && r.sign_violations == 0));
        assert!(!lines.is_empty());

        let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
        let rows = parse_csv(&csv, Path::new("report.csv")).unwrap();
        let methods: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(methods, ["fbp", "dint", "fbp-corrected", "dint-corrected", "fbp", "dint"]);
        assert!(rows[2].quality.rmse < rows[0].quality.rmse);
        assert!(rows[3].quality.rmse < rows[1].quality.rmse);
    }

    #[test]
    fn sweep_rows() {
        let dir = tempfile::tempdir().unwrap();
        let result = sweep(&small(), dir.path(), &mut |_| {}).unwrap();
        let keys: Vec<(&str, usize)> = result.rows.iter().map(|r| (r.method.as_str(), r.views)).collect();
        assert_eq!(
            keys,
            [
                ("fbp", 24),
                ("dint", 24),
                ("fbp-corrected", 24),
                ("dint-corrected", 24),
                ("fbp", 36),
                ("dint", 36)
            ]
        );
        assert!(dir.path().join("sweep.csv").is_file());
    }

    #[test]
    fn custom_phantom_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("disk.txt");
        fs::write(&path, "0 0 0.5 0.5 0 1\n").unwrap();
        let config = RunConfig {
            phantom: Some(path),
            ..small()
        };
        let spec = phantom_spec(&config).unwrap();
        assert_eq!(spec, EllipsePhantomSpec::circle(0.0, 0.0, 0.5, 1.0));
    }
}
