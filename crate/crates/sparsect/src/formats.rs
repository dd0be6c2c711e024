//! Text and binary file formats.
//!
//! Images and sinograms are plain decimal reals separated by any whitespace,
//! row-major (`[row][col]` and `[detector][view]`). Writers put one value per
//! line using the shortest representation that round-trips exactly.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use sparsect_core::phantom::{Ellipse, EllipsePhantomSpec};
use sparsect_core::randomized::PairPool;
use sparsect_core::{Image, Sinogram};

use crate::error::{Error, Result};

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(mut out: BufWriter<File>, path: &Path) -> Result<()> {
    out.flush().map_err(|e| Error::io(path, e))
}

/// Parses whitespace-separated reals; negatives are clamped to 0.
pub fn parse_values(text: &str, expected: usize, path: &Path) -> Result<Vec<f64>> {
    let values = parse_all(text, path)?;
    if values.len() != expected {
        return Err(Error::Count {
            path: path.to_path_buf(),
            expected,
            found: values.len(),
        });
    }
    Ok(values)
}

fn parse_all(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        for (token_no, token) in line.split_whitespace().enumerate() {
            let v: f64 = token.parse().map_err(|_| Error::Format {
                path: path.to_path_buf(),
                line: line_no + 1,
                token: Some(token_no + 1),
                message: format!("cannot parse {token:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    line: line_no + 1,
                    token: Some(token_no + 1),
                    message: format!("non-finite value {token:?}"),
                });
            }
            values.push(v.max(0.0));
        }
    }
    Ok(values)
}

fn write_values(values: &[f64], path: &Path) -> Result<()> {
    let mut out = create(path)?;
    for v in values {
        writeln!(out, "{v}").map_err(|e| Error::io(path, e))?;
    }
    finish(out, path)
}

pub fn read_image_ascii(path: &Path, rows: usize, cols: usize) -> Result<Image> {
    let values = parse_values(&read_text(path)?, rows * cols, path)?;
    Ok(Image::from_values(rows, cols, values)?)
}

pub fn write_image_ascii(image: &Image, path: &Path) -> Result<()> {
    write_values(image.values(), path)
}

pub fn read_sinogram_ascii(path: &Path, detectors: usize, views: usize) -> Result<Sinogram> {
    let values = parse_values(&read_text(path)?, detectors * views, path)?;
    Ok(Sinogram::from_values(detectors, views, values)?)
}

/// Reads a sinogram whose view count follows from its length.
pub fn read_sinogram_ascii_any_views(path: &Path, detectors: usize) -> Result<Sinogram> {
    let values = parse_all(&read_text(path)?, path)?;
    if detectors == 0 || values.is_empty() || values.len() % detectors != 0 {
        return Err(Error::Count {
            path: path.to_path_buf(),
            expected: detectors * (values.len() / detectors.max(1)).max(1),
            found: values.len(),
        });
    }
    let views = values.len() / detectors;
    Ok(Sinogram::from_values(detectors, views, values)?)
}

pub fn write_sinogram_ascii(sinogram: &Sinogram, path: &Path) -> Result<()> {
    write_values(sinogram.values(), path)
}

/// Binary 8-bit PGM (P5). With `normalize` each pixel is
/// `floor(255 v / max)`; otherwise `floor(v)` clamped to `[0, 255]`.
pub fn encode_pgm(image: &Image, normalize: bool) -> Vec<u8> {
    let mut bytes = format!("P5\n{} {}\n255\n", image.cols(), image.rows()).into_bytes();
    let max = image.max_value();
    bytes.extend(image.values().iter().map(|&v| {
        let level = if normalize {
            if max > 0.0 {
                (v / max * 255.0).floor()
            } else {
                0.0
            }
        } else {
            v.floor()
        };
        level.clamp(0.0, 255.0) as u8
    }));
    bytes
}

pub fn write_image_pgm(image: &Image, path: &Path, normalize: bool) -> Result<()> {
    fs::write(path, encode_pgm(image, normalize)).map_err(|e| Error::io(path, e))
}

/// One ellipse per line: `cx cy a b theta_deg intensity`. Text after `#` is
/// ignored, as are blank lines.
pub fn parse_phantom(text: &str, path: &Path) -> Result<EllipsePhantomSpec> {
    let mut ellipses = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let bad = |token: Option<usize>, message: String| Error::Format {
            path: path.to_path_buf(),
            line: line_no + 1,
            token,
            message,
        };
        if tokens.len() != 6 {
            return Err(bad(None, format!("expected 6 fields, found {}", tokens.len())));
        }
        let mut f = [0.0; 6];
        for (i, token) in tokens.iter().enumerate() {
            f[i] = token
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(Some(i + 1), format!("cannot parse {token:?} as a number")))?;
        }
        if f[2] <= 0.0 || f[3] <= 0.0 {
            return Err(bad(None, "semi-axes must be positive".into()));
        }
        ellipses.push(Ellipse {
            center_x: f[0],
            center_y: f[1],
            semi_axis_x: f[2],
            semi_axis_y: f[3],
            rotation_deg: f[4],
            intensity: f[5],
        });
    }
    Ok(EllipsePhantomSpec { ellipses })
}

pub fn read_phantom(path: &Path) -> Result<EllipsePhantomSpec> {
    parse_phantom(&read_text(path)?, path)
}

pub fn write_phantom(spec: &EllipsePhantomSpec, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "# cx cy a b theta_deg intensity").map_err(io)?;
    for e in &spec.ellipses {
        writeln!(
            out,
            "{} {} {} {} {} {}",
            e.center_x, e.center_y, e.semi_axis_x, e.semi_axis_y, e.rotation_deg, e.intensity
        )
        .map_err(io)?;
    }
    finish(out, path)
}

/// First bytes of a binary pair pool.
pub const POOL_MAGIC: [u8; 4] = *b"SCPP";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolFormat {
    /// `a b` per line, flat ray indices (`detector * views + view`).
    #[default]
    Text,
    /// 16-byte header (magic, u32 count, u64 seed), then u32 pairs, all
    /// little-endian.
    Binary,
}

pub fn write_pair_pool(pool: &PairPool, path: &Path, format: PoolFormat) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    match format {
        PoolFormat::Text => {
            writeln!(out, "# seed {}", pool.seed).map_err(io)?;
            if let Some(fp) = pool.fingerprint {
                writeln!(out, "# geometry {fp:016x}").map_err(io)?;
            }
            for &(a, b) in &pool.pairs {
                writeln!(out, "{a} {b}").map_err(io)?;
            }
        }
        PoolFormat::Binary => {
            let count = u32::try_from(pool.len())
                .map_err(|_| Error::Config("pool too large for the binary format".into()))?;
            out.write_all(&POOL_MAGIC).map_err(io)?;
            out.write_all(&count.to_le_bytes()).map_err(io)?;
            out.write_all(&pool.seed.to_le_bytes()).map_err(io)?;
            for &(a, b) in &pool.pairs {
                out.write_all(&a.to_le_bytes()).map_err(io)?;
                out.write_all(&b.to_le_bytes()).map_err(io)?;
            }
        }
    }
    finish(out, path)
}

/// Reads either pool format, recognising the binary one by its magic.
///
/// Text pools recover seed and geometry fingerprint from the `# seed` and
/// `# geometry` comments the writer emits; without them the seed is 0 and the
/// fingerprint unknown. Binary pools never carry a fingerprint.
pub fn read_pair_pool(path: &Path) -> Result<PairPool> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&POOL_MAGIC) {
        decode_binary_pool(&bytes, path)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::Format {
            path: path.to_path_buf(),
            line: 1,
            token: None,
            message: "neither a binary pool nor UTF-8 text".into(),
        })?;
        parse_text_pool(&text, path)
    }
}

fn decode_binary_pool(bytes: &[u8], path: &Path) -> Result<PairPool> {
    let short = || Error::Format {
        path: path.to_path_buf(),
        line: 1,
        token: None,
        message: "truncated binary pool".into(),
    };
    if bytes.len() < 16 {
        return Err(short());
    }
    let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let seed = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let body = &bytes[16..];
    if body.len() != count * 8 {
        return Err(Error::Count {
            path: path.to_path_buf(),
            expected: count * 2,
            found: body.len() / 4,
        });
    }
    let word = |i: usize| u32::from_le_bytes(body[4 * i..4 * i + 4].try_into().unwrap());
    let pairs = (0..count).map(|k| (word(2 * k), word(2 * k + 1))).collect();
    Ok(PairPool::new(pairs, seed, None))
}

pub fn parse_text_pool(text: &str, path: &Path) -> Result<PairPool> {
    let (mut seed, mut fingerprint) = (0, None);
    let mut numbers: Vec<(u32, usize, usize)> = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let (line, comment) = match raw.split_once('#') {
            Some((l, c)) => (l, Some(c.trim())),
            None => (raw, None),
        };
        if let Some(c) = comment {
            let mut words = c.split_whitespace();
            match (words.next(), words.next()) {
                (Some("seed"), Some(v)) => seed = v.parse().unwrap_or(seed),
                (Some("geometry"), Some(v)) => fingerprint = u64::from_str_radix(v, 16).ok(),
                _ => {}
            }
        }
        for (token_no, token) in line.split_whitespace().enumerate() {
            let v = token.parse::<u32>().map_err(|_| Error::Format {
                path: path.to_path_buf(),
                line: line_no + 1,
                token: Some(token_no + 1),
                message: format!("{token:?} is not a ray index"),
            })?;
            numbers.push((v, line_no + 1, token_no + 1));
        }
    }
    if !numbers.len().is_multiple_of(2) {
        let &(_, line, _) = numbers.last().unwrap();
        return Err(Error::Format {
            path: path.to_path_buf(),
            line,
            token: None,
            message: "odd number of ray indices".into(),
        });
    }
    let pairs = numbers.chunks(2).map(|c| (c[0].0, c[1].0)).collect();
    Ok(PairPool::new(pairs, seed, fingerprint))
}
