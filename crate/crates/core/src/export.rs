//! Plot-ready exports: 16-bit binary PGM images and CSV tables.
//!
//! PGM (`P5`, maxval 65535, big-endian samples):
//!
//! ```text
//! P5\n<width> <height>\n65535\n<width*height u16>
//! ```
//!
//! A 2-D field of shape `rows x cols` becomes an image `cols` wide and
//! `rows` high. Values are min-max scaled to `0..=65535`; a constant image
//! is all zero.
//!
//! CSV is row-major with a header, `i,re,im` (1-D) or `i,j,re,im` (2-D).
//! Numbers use the shortest representation that reads back exactly.

use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, GridShape};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PgmOptions {
    /// Use `|z|` instead of the real part.
    pub abs: bool,
    /// Move the origin to the image centre (`fftshift`).
    pub center: bool,
}

/// Writes a grayscale image, scaling `[lo, hi]` to the full 16-bit range.
pub fn write_pgm16<W: Write>(w: &mut W, width: usize, height: usize, values: &[f64], range: (f64, f64)) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::ShapeMismatch {
            expected: format!("{} pixels", width * height),
            found: values.len().to_string(),
        });
    }
    let (lo, hi) = range;
    write!(w, "P5\n{width} {height}\n65535\n")?;
    let mut buf = Vec::with_capacity(2 * values.len());
    for &v in values {
        let s = if hi > lo {
            ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        buf.extend_from_slice(&((s * 65535.0).round() as u16).to_be_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

fn require_2d(shape: &GridShape) -> Result<(usize, usize)> {
    match shape.dims() {
        [r, c] => Ok((*r, *c)),
        _ => Err(Error::InvalidArgument(format!(
            "PGM export needs a 2-D field, got {shape}"
        ))),
    }
}

/// Pixel values of a 2-D field in row-major order.
pub fn pgm_values(field: &ComplexField, opts: PgmOptions) -> Result<Vec<f64>> {
    let (rows, cols) = require_2d(field.shape())?;
    let value = |z: Complex64| if opts.abs { z.norm() } else { z.re };
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let (si, sj) = if opts.center {
                ((i + rows - rows / 2) % rows, (j + cols - cols / 2) % cols)
            } else {
                (i, j)
            };
            out.push(value(field.get(&[si, sj])));
        }
    }
    Ok(out)
}

pub fn write_field_pgm<W: Write>(w: &mut W, field: &ComplexField, opts: PgmOptions) -> Result<()> {
    let (rows, cols) = require_2d(field.shape())?;
    let values = pgm_values(field, opts)?;
    write_pgm16(w, cols, rows, &values, min_max(&values))
}

/// Parses a `P5` 16-bit image back into `(width, height, samples)`.
pub fn read_pgm16(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let bad = |m: &str| Error::Format(format!("PGM: {m}"));
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "65535" {
        return Err(bad("expected P5 with maxval 65535"));
    }
    let width: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let height: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    let body = bytes.get(pos..).ok_or_else(|| bad("missing body"))?;
    if body.len() != 2 * width * height {
        return Err(bad("body length does not match the header"));
    }
    let px = body.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect();
    Ok((width, height, px))
}

pub fn field_to_csv(field: &ComplexField) -> Result<String> {
    let shape = field.shape();
    let mut s = String::new();
    match shape.ndim() {
        1 => s.push_str("i,re,im\n"),
        2 => s.push_str("i,j,re,im\n"),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "CSV export needs a 1-D or 2-D field, got {shape}"
            )))
        }
    }
    for (flat, z) in field.data().iter().enumerate() {
        for i in shape.unravel(flat) {
            write!(s, "{i},").unwrap();
        }
        writeln!(s, "{},{}", z.re, z.im).unwrap();
    }
    Ok(s)
}

/// Inverse of [`field_to_csv`]; rows must be complete and in row-major order.
pub fn csv_to_field(text: &str) -> Result<ComplexField> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Format("CSV: empty input".into()))?;
    let ndim = match header.trim() {
        "i,re,im" => 1,
        "i,j,re,im" => 2,
        h => return Err(Error::Format(format!("CSV: unexpected header {h:?}"))),
    };
    let mut indices = Vec::new();
    let mut data = Vec::new();
    for (n, line) in lines {
        let bad = || Error::Format(format!("CSV line {}: {line:?}", n + 1));
        let parts: Vec<&str> = line.trim().split(',').collect();
        if parts.len() != ndim + 2 {
            return Err(bad());
        }
        let idx = parts[..ndim]
            .iter()
            .map(|p| p.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let re = parts[ndim].parse::<f64>().map_err(|_| bad())?;
        let im = parts[ndim + 1].parse::<f64>().map_err(|_| bad())?;
        indices.push(idx);
        data.push(Complex64::new(re, im));
    }
    let last = indices
        .last()
        .ok_or_else(|| Error::Format("CSV: no data rows".into()))?;
    let shape = GridShape::new(last.iter().map(|i| i + 1).collect::<Vec<_>>())?;
    if data.len() != shape.len() || indices.iter().enumerate().any(|(flat, i)| shape.ravel(i) != flat) {
        return Err(Error::Format("CSV: rows are not a complete row-major grid".into()));
    }
    ComplexField::from_vec(shape, data)
}

/// `step,norm` table.
pub fn norm_trace_csv(norms: &[f64]) -> String {
    let mut s = String::from("step,norm\n");
    for (i, n) in norms.iter().enumerate() {
        writeln!(s, "{i},{n}").unwrap();
    }
    s
}
