//! File formats.
//!
//! UCVF is a tiny raw container: the ASCII header `UCVF1 <width> <height>
//! <channels>\n` followed by `channels × height × width` little-endian `f32`
//! values, channel-major and row-major within a channel. Ensembles store one
//! channel per member. Probability fields store four channels: `p_min`,
//! `p_max`, `p_saddle` and a 0/1 validity mask.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::critprob::{Pattern, ProbabilityTriple};
use crate::error::{Error, Result};
use crate::field::{ChannelField, EnsembleStack, ProbabilityField, UncertainField};

const MAGIC: &str = "UCVF1";
const MAX_HEADER: usize = 128;

/// Decoded UCVF payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub values: Vec<f32>,
}

pub fn write_ucvf<W: Write>(mut out: W, width: usize, height: usize, channels: usize, values: &[f32]) -> Result<()> {
    if values.len() != width * height * channels {
        return Err(Error::PayloadLength { expected: 4 * width * height * channels, actual: 4 * values.len() });
    }
    write!(out, "{MAGIC} {width} {height} {channels}\n")?;
    let mut bytes = Vec::with_capacity(4 * values.len());
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

pub fn read_ucvf<R: Read>(input: R) -> Result<Raster> {
    let mut input = BufReader::new(input);
    let mut header = Vec::new();
    input.by_ref().take(MAX_HEADER as u64).read_until(b'\n', &mut header)?;
    if header.last() != Some(&b'\n') {
        return Err(Error::Format("missing UCVF header line".into()));
    }
    let header = std::str::from_utf8(&header[..header.len() - 1])
        .map_err(|_| Error::Format("header is not ASCII".into()))?;
    let mut parts = header.split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(Error::Format(format!("bad magic, expected {MAGIC}")));
    }
    let mut dim = |name: &str| -> Result<usize> {
        parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("header field {name} missing or not an integer")))
    };
    let (width, height, channels) = (dim("width")?, dim("height")?, dim("channels")?);
    if parts.next().is_some() {
        return Err(Error::Format("trailing header fields".into()));
    }
    if width == 0 || height == 0 || channels == 0 {
        return Err(Error::ZeroDimensions);
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
    let mut payload = Vec::new();
    input.read_to_end(&mut payload)?;
    if payload.len() != expected {
        return Err(Error::PayloadLength { expected, actual: payload.len() });
    }
    let values: Vec<f32> = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(Raster { width, height, channels, values })
}

pub fn load_ensemble(path: impl AsRef<Path>) -> Result<EnsembleStack> {
    let r = read_ucvf(File::open(path)?)?;
    EnsembleStack::new(r.width, r.height, r.channels, r.values)
}

pub fn save_ensemble(stack: &EnsembleStack, path: impl AsRef<Path>) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    write_ucvf(out, stack.width(), stack.height(), stack.members(), stack.values())
}

/// Single-channel UCVF raster as `f64`, with its width and height.
pub fn load_scalar(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<f64>)> {
    let r = read_ucvf(File::open(path)?)?;
    if r.channels != 1 {
        return Err(Error::Format(format!("expected 1 channel, found {}", r.channels)));
    }
    Ok((r.width, r.height, r.values.into_iter().map(f64::from).collect()))
}

/// Reads a one-channel UCVF raster and wraps every value in a uniform
/// distribution of width `eb`.
pub fn uniform_field_from_scalar(path: impl AsRef<Path>, eb: f64) -> Result<UncertainField> {
    let (w, h, values) = load_scalar(path)?;
    UncertainField::uniform_from_scalar(w, h, &values, eb)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    Ucvf,
    Csv,
}

impl FieldFormat {
    /// `.csv` selects CSV, anything else UCVF.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => FieldFormat::Csv,
            _ => FieldFormat::Ucvf,
        }
    }
}

impl FromStr for FieldFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ucvf" => Ok(FieldFormat::Ucvf),
            "csv" => Ok(FieldFormat::Csv),
            _ => Err(Error::InvalidParameter(format!("unknown field format {s:?}"))),
        }
    }
}

const CSV_HEADER: &str = "x,y,p_min,p_max,p_saddle,valid";

pub fn write_probability_csv<W: Write>(mut out: W, field: &ProbabilityField) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for (i, (t, &v)) in field.triples.iter().zip(&field.valid).enumerate() {
        // `{:e}` prints the shortest exact round-trip representation.
        writeln!(
            out,
            "{},{},{:e},{:e},{:e},{}",
            i % field.width,
            i / field.width,
            t.p_min,
            t.p_max,
            t.p_saddle,
            v as u8
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_probability_csv<R: Read>(input: R) -> Result<ProbabilityField> {
    let mut lines = BufReader::new(input).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim_end() == CSV_HEADER => {}
        Some(Err(e)) => return Err(e.into()),
        _ => return Err(Error::Format(format!("expected CSV header {CSV_HEADER:?}"))),
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Format(format!("malformed CSV row {}", n + 2));
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 6 {
            return Err(bad());
        }
        let x: usize = f[0].parse().map_err(|_| bad())?;
        let y: usize = f[1].parse().map_err(|_| bad())?;
        let p = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let t = ProbabilityTriple { p_min: p(f[2])?, p_max: p(f[3])?, p_saddle: p(f[4])? };
        let valid = match f[5] {
            "0" => false,
            "1" => true,
            _ => return Err(bad()),
        };
        rows.push((x, y, t, valid));
    }
    let width = rows.iter().map(|r| r.0 + 1).max().ok_or(Error::ZeroDimensions)?;
    let height = rows.iter().map(|r| r.1 + 1).max().ok_or(Error::ZeroDimensions)?;
    if rows.len() != width * height {
        return Err(Error::Format(format!("{} rows do not cover a {width}x{height} grid", rows.len())));
    }
    let mut triples = vec![ProbabilityTriple::default(); width * height];
    let mut valid = vec![false; width * height];
    let mut seen = vec![false; width * height];
    for (x, y, t, v) in rows {
        let i = y * width + x;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::Format(format!("duplicate row for pixel ({x}, {y})")));
        }
        triples[i] = t;
        valid[i] = v;
    }
    ProbabilityField::new(width, height, triples, valid)
}

fn probability_channels(field: &ProbabilityField) -> Vec<f32> {
    let n = field.width * field.height;
    let mut values = Vec::with_capacity(4 * n);
    for pattern in Pattern::ALL {
        values.extend(field.triples.iter().map(|t| t.get(pattern) as f32));
    }
    values.extend(field.valid.iter().map(|&v| if v { 1.0 } else { 0.0 }));
    values
}

pub fn save_probability_field(field: &ProbabilityField, path: impl AsRef<Path>, format: FieldFormat) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    match format {
        FieldFormat::Csv => write_probability_csv(out, field),
        FieldFormat::Ucvf => write_ucvf(out, field.width, field.height, 4, &probability_channels(field)),
    }
}

/// Loads either format. UCVF values come back at single precision.
pub fn load_probability_field(path: impl AsRef<Path>, format: FieldFormat) -> Result<ProbabilityField> {
    let file = File::open(path)?;
    match format {
        FieldFormat::Csv => read_probability_csv(file),
        FieldFormat::Ucvf => {
            let r = read_ucvf(file)?;
            if r.channels != 4 {
                return Err(Error::Format(format!("probability field needs 4 channels, found {}", r.channels)));
            }
            let n = r.width * r.height;
            let ch = |c: usize, i: usize| f64::from(r.values[c * n + i]);
            let triples = (0..n)
                .map(|i| ProbabilityTriple { p_min: ch(0, i), p_max: ch(1, i), p_saddle: ch(2, i) })
                .collect();
            let valid = (0..n)
                .map(|i| match r.values[3 * n + i] {
                    0.0 => Ok(false),
                    1.0 => Ok(true),
                    v => Err(Error::Format(format!("mask value {v} is neither 0 nor 1"))),
                })
                .collect::<Result<_>>()?;
            ProbabilityField::new(r.width, r.height, triples, valid)
        }
    }
}

/// Gray level `round(255 · p^gamma)`, clamped to the byte range.
pub fn gray_level(p: f64, gamma: f64) -> u8 {
    (255.0 * p.clamp(0.0, 1.0).powf(gamma)).round() as u8
}

pub fn write_heatmap<W: Write>(mut out: W, channel: &ChannelField, gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    write!(out, "P5\n{} {}\n255\n", channel.width, channel.height)?;
    let pixels: Vec<u8> = channel
        .values
        .iter()
        .zip(&channel.valid)
        .map(|(&p, &v)| if v { gray_level(p, gamma) } else { 0 })
        .collect();
    out.write_all(&pixels)?;
    out.flush()?;
    Ok(())
}

/// Writes one channel as an 8-bit binary PGM image. Masked pixels are black.
pub fn export_heatmap(field: &ProbabilityField, pattern: Pattern, path: impl AsRef<Path>, gamma: f64) -> Result<()> {
    write_heatmap(BufWriter::new(File::create(path)?), &field.channel(pattern), gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> ProbabilityField {
        let (w, h) = (4, 3);
        let triples = (0..w * h)
            .map(|i| {
                let a = i as f64 / 37.0;
                ProbabilityTriple { p_min: a, p_max: 1.0 / 3.0 - a / 10.0, p_saddle: (a * 0.7).sin().abs() }
            })
            .collect();
        let valid = (0..w * h).map(|i| crate::field::is_interior(w, h, i % w, i / w)).collect();
        ProbabilityField::new(w, h, triples, valid).unwrap()
    }

    #[test]
    fn ucvf_header_and_layout() {
        let mut buf = Vec::new();
        write_ucvf(&mut buf, 2, 1, 2, &[1.0, 2.0, 3.0, -0.5]).unwrap();
        assert!(buf.starts_with(b"UCVF1 2 1 2\n"));
        assert_eq!(buf.len(), 12 + 16);
        assert_eq!(&buf[12..16], &1.0f32.to_le_bytes());
        assert_eq!(&buf[24..28], &(-0.5f32).to_le_bytes());
        let r = read_ucvf(&buf[..]).unwrap();
        assert_eq!(r.values, vec![1.0, 2.0, 3.0, -0.5]);
    }

    #[test]
    fn ucvf_errors_are_distinct() {
        let mut buf = Vec::new();
        write_ucvf(&mut buf, 2, 2, 1, &[0.0; 4]).unwrap();
        assert!(matches!(read_ucvf(&buf[..buf.len() - 1]), Err(Error::PayloadLength { expected: 16, actual: 15 })));
        let mut bad = buf.clone();
        bad[4] = b'2';
        assert!(matches!(read_ucvf(&bad[..]), Err(Error::Format(_))));
        let mut nan = buf.clone();
        let at = nan.len() - 4;
        nan[at..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(read_ucvf(&nan[..]), Err(Error::NonFinite)));
        assert!(matches!(read_ucvf(&b"UCVF1 0 2 1\n"[..]), Err(Error::ZeroDimensions)));
        assert!(matches!(read_ucvf(&b"UCVF1 2 x 1\n"[..]), Err(Error::Format(_))));
        assert!(matches!(read_ucvf(&[0u8; 300][..]), Err(Error::Format(_))));
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let f = sample_field();
        let mut buf = Vec::new();
        write_probability_csv(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 4 * 3 + 1);
        assert!(text.lines().nth(1).unwrap().ends_with(",0"));
        assert_eq!(read_probability_csv(&buf[..]).unwrap(), f);
    }

    #[test]
    fn heatmap_levels() {
        assert_eq!(gray_level(0.0, 1.0), 0);
        assert_eq!(gray_level(1.0, 1.0), 255);
        assert_eq!(gray_level(0.5, 1.0), 128);
        assert!(gray_level(0.25, 0.5) > gray_level(0.25, 1.0));
        let f = sample_field();
        let mut buf = Vec::new();
        write_heatmap(&mut buf, &f.channel(Pattern::Min), 1.0).unwrap();
        assert!(buf.starts_with(b"P5\n4 3\n255\n"));
        assert_eq!(buf.len(), 11 + 12);
        assert_eq!(buf[11], 0);
        assert!(write_heatmap(Vec::new(), &f.channel(Pattern::Min), 0.0).is_err());
    }
}
