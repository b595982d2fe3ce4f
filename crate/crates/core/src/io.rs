//! Plain-text and raster formats: headered numeric CSV tables, headerless
//! row-major grids, 16-bit PGM and 8-bit PPM.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A numeric row together with its 1-based line number in the source.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub line: usize,
    pub values: Vec<f64>,
}

/// Parses a CSV table with a mandatory header. Blank lines and lines starting
/// with `#` are skipped.
pub fn parse_table(text: &str, source_name: &str, header: &[&str]) -> Result<Vec<Row>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let Some((line, found)) = lines.next() else {
        return Err(Error::EmptyFile(source_name.to_string()));
    };
    let columns: Vec<&str> = found.split(',').map(str::trim).collect();
    if columns != header {
        return Err(Error::parse(
            source_name,
            line,
            format!("expected header `{}`, found `{found}`", header.join(",")),
        ));
    }

    let mut rows = Vec::new();
    for (line, l) in lines {
        let values = parse_fields(l, source_name, line)?;
        if values.len() != header.len() {
            return Err(Error::parse(
                source_name,
                line,
                format!("expected {} fields, found {}", header.len(), values.len()),
            ));
        }
        rows.push(Row { line, values });
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(source_name.to_string()));
    }
    Ok(rows)
}

fn parse_fields(line_text: &str, source_name: &str, line: usize) -> Result<Vec<f64>> {
    line_text
        .split(',')
        .map(|field| {
            let field = field.trim();
            field
                .parse::<f64>()
                .map_err(|_| Error::parse(source_name, line, format!("not a number: `{field}`")))
        })
        .collect()
}

/// Row-major grid of values, e.g. an image (rows = pixel rows) or a sinogram
/// (rows = views, columns = detector bins).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "grid data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 24);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    out.push(',');
                }
                out.push_str(&fmt_f64(self.data[r * self.cols + c]));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, source_name: &str) -> Result<Self> {
        let mut data = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for (i, l) in text.lines().enumerate() {
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let values = parse_fields(l, source_name, i + 1)?;
            match cols {
                None => cols = Some(values.len()),
                Some(c) if c != values.len() => {
                    return Err(Error::parse(
                        source_name,
                        i + 1,
                        format!("ragged row: expected {c} fields, found {}", values.len()),
                    ))
                }
                _ => {}
            }
            data.extend(values);
            rows += 1;
        }
        match cols {
            Some(cols) => Ok(Self { rows, cols, data }),
            None => Err(Error::EmptyFile(source_name.to_string())),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_csv(&text, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Encodes a grid as a binary 16-bit PGM, mapping `[lo, hi]` linearly onto
/// `[0, 65535]` and clamping outside the window.
pub fn encode_pgm16(grid: &Grid, lo: f64, hi: f64) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", grid.cols, grid.rows).into_bytes();
    let span = if hi > lo { hi - lo } else { 1.0 };
    for &v in &grid.data {
        let level = ((v - lo) / span).clamp(0.0, 1.0) * 65535.0;
        out.extend_from_slice(&(level.round() as u16).to_be_bytes());
    }
    out
}

/// Decodes a binary 16-bit PGM into `(width, height, levels)`.
pub fn decode_pgm16(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let (fields, offset) = pnm_header(bytes, "P5")?;
    let [width, height, maxval] = fields;
    if maxval != 65535 {
        return Err(Error::parse("pgm", 1, format!("expected maxval 65535, found {maxval}")));
    }
    let body = &bytes[offset..];
    if body.len() != width * height * 2 {
        return Err(Error::DimensionMismatch {
            what: "pgm raster bytes",
            expected: width * height * 2,
            found: body.len(),
        });
    }
    let levels = body
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    Ok((width, height, levels))
}

fn pnm_header(bytes: &[u8], magic: &str) -> Result<([usize; 3], usize)> {
    let mut fields = Vec::with_capacity(4);
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
            return Err(Error::parse("pnm", 1, "truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).unwrap_or("").to_string());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    if fields[0] != magic {
        return Err(Error::parse("pnm", 1, format!("expected magic {magic}, found {}", fields[0])));
    }
    let mut nums = [0usize; 3];
    for (slot, f) in nums.iter_mut().zip(&fields[1..]) {
        *slot = f
            .parse()
            .map_err(|_| Error::parse("pnm", 1, format!("bad header field `{f}`")))?;
    }
    Ok((nums, pos.min(bytes.len())))
}

/// Diverging blue-white-red colormap; `u` in `[-1, 1]` with white at 0.
pub fn diverging_rgb(u: f64) -> [u8; 3] {
    let u = u.clamp(-1.0, 1.0);
    let fade = |x: f64| (255.0 * (1.0 - x)).round() as u8;
    if u < 0.0 {
        [fade(-u), fade(-u), 255]
    } else {
        [255, fade(u), fade(u)]
    }
}

/// Encodes a grid as a binary PPM heatmap with the colormap pinned so that
/// `pivot` maps to white and `pivot ± half_range` to saturated blue/red.
pub fn encode_ppm_diverging(grid: &Grid, pivot: f64, half_range: f64) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", grid.cols, grid.rows).into_bytes();
    let half_range = if half_range > 0.0 { half_range } else { 1.0 };
    for &v in &grid.data {
        let rgb = if v.is_finite() {
            diverging_rgb((v - pivot) / half_range)
        } else {
            [0, 0, 0]
        };
        out.extend_from_slice(&rgb);
    }
    out
}

/// Formats a list of equally long named columns as a headered CSV.
pub fn columns_to_csv(header: &[&str], columns: &[&[f64]]) -> String {
    let len = columns.first().map_or(0, |c| c.len());
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..len {
        for (k, col) in columns.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_f64(col[i]));
        }
        out.push('\n');
    }
    out
}
