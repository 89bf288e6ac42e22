//! 8-bit grayscale images, the PGM codec, and bilinear resampling.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major 8-bit luminance image.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GrayImage {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyImage);
        }
        if pixels.len() != rows * cols {
            return Err(Error::Format(format!(
                "{} pixels supplied for a {rows}x{cols} image",
                pixels.len()
            )));
        }
        Ok(Self { rows, cols, pixels })
    }

    pub fn filled(rows: usize, cols: usize, value: u8) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                pixels.push(f(r, c));
            }
        }
        Self::new(rows, cols, pixels)
    }

    /// Builds an image from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Format("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.pixels[row * self.cols + col] = value;
    }

    /// Sum of squared pixel values.
    pub fn energy(&self) -> u64 {
        self.pixels.iter().map(|&p| u64::from(p) * u64::from(p)).sum()
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.pixels[row * self.cols..(row + 1) * self.cols]
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }
}

/// Reads a binary (`P5`) or ASCII (`P2`) PGM file.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    decode_pgm(&bytes)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };
    let magic = cursor.token()?;
    let ascii = match magic {
        b"P5" => false,
        b"P2" => true,
        other => {
            return Err(Error::Format(format!(
                "magic {:?} is not P5 or P2",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let cols = cursor.number("width")?;
    let rows = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if maxval == 0 {
        return Err(Error::Format("maxval must be positive".into()));
    }
    if maxval > 255 {
        return Err(Error::Unsupported(format!("maxval {maxval} exceeds 255")));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyImage);
    }
    let expected = rows * cols;

    let pixels = if ascii {
        let mut pixels = Vec::with_capacity(expected);
        while pixels.len() < expected {
            match cursor.try_token()? {
                Some(tok) => {
                    let v = parse_number(tok, "sample")?;
                    if v > maxval {
                        return Err(Error::Format(format!("sample {v} exceeds maxval {maxval}")));
                    }
                    pixels.push(v as u8);
                }
                None => {
                    return Err(Error::Truncated {
                        expected,
                        found: pixels.len(),
                    })
                }
            }
        }
        pixels
    } else {
        // exactly one whitespace byte separates the header from the raster
        let start = cursor.pos + 1;
        let data = bytes.get(start..).unwrap_or(&[]);
        if data.len() < expected {
            return Err(Error::Truncated {
                expected,
                found: data.len(),
            });
        }
        data[..expected].to_vec()
    };
    GrayImage::new(rows, cols, pixels)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn try_token(&mut self) -> Result<Option<&'a [u8]>> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Ok((self.pos > start).then(|| &self.bytes[start..self.pos]))
    }

    fn token(&mut self) -> Result<&'a [u8]> {
        self.try_token()?
            .ok_or_else(|| Error::Format("unexpected end of header".into()))
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        parse_number(tok, what)
    }
}

fn parse_number(tok: &[u8], what: &str) -> Result<usize> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad {what} {:?}", String::from_utf8_lossy(tok))))
}

/// Encodes as binary PGM (`P5`, maxval 255).
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    encode_pgm_with_comment(image, None)
}

/// Binary PGM with an optional single-line `#` comment after the magic number.
pub fn encode_pgm_with_comment(image: &GrayImage, comment: Option<&str>) -> Vec<u8> {
    let mut header = String::from("P5\n");
    if let Some(text) = comment {
        header.push_str(&format!("# {}\n", text.replace(['\n', '\r'], " ")));
    }
    header.push_str(&format!("{} {}\n255\n", image.cols, image.rows));
    let mut out = header.into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

pub fn write_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pgm(image))
}

pub fn write_pgm_with_comment(image: &GrayImage, path: impl AsRef<Path>, comment: &str) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pgm_with_comment(image, Some(comment)))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file =
        fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    file.write_all(bytes)
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Bilinear resampling with pixel-center alignment.
///
/// Output sample `(r, c)` reads the source at
/// `((r + 0.5) * in_rows / out_rows - 0.5, ...)`, clamped to the source grid.
pub fn resize(image: &GrayImage, out_rows: usize, out_cols: usize) -> Result<GrayImage> {
    if out_rows == 0 || out_cols == 0 {
        return Err(Error::Param(format!("target size {out_rows}x{out_cols}")));
    }
    if image.rows == 0 || image.cols == 0 {
        return Err(Error::EmptyImage);
    }
    let row_taps = sample_taps(image.rows, out_rows);
    let col_taps = sample_taps(image.cols, out_cols);
    let mut pixels = Vec::with_capacity(out_rows * out_cols);
    for &(r0, r1, wr) in &row_taps {
        for &(c0, c1, wc) in &col_taps {
            let p = |r: usize, c: usize| f64::from(image.get(r, c));
            let top = p(r0, c0) * (1.0 - wc) + p(r0, c1) * wc;
            let bottom = p(r1, c0) * (1.0 - wc) + p(r1, c1) * wc;
            let v = top * (1.0 - wr) + bottom * wr;
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::new(out_rows, out_cols, pixels)
}

fn sample_taps(len_in: usize, len_out: usize) -> Vec<(usize, usize, f64)> {
    let scale = len_in as f64 / len_out as f64;
    (0..len_out)
        .map(|i| {
            let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (len_in - 1) as f64);
            let lo = x.floor() as usize;
            let hi = (lo + 1).min(len_in - 1);
            (lo, hi, x - lo as f64)
        })
        .collect()
}

/// Row-major flattening to reals.
pub fn flatten(image: &GrayImage) -> Vec<f64> {
    image.pixels.iter().map(|&p| f64::from(p)).collect()
}

/// Inverse of [`flatten`] for vectors already in `[0, 255]`; values are rounded and clamped.
pub fn unflatten(values: &[f64], rows: usize, cols: usize) -> Result<GrayImage> {
    GrayImage::new(
        rows,
        cols,
        values.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect(),
    )
}

/// Min-max normalizes a real vector to `[0, 255]`; a constant vector maps to mid-gray 128.
pub fn normalize_to_image(values: &[f64], rows: usize, cols: usize) -> Result<GrayImage> {
    if values.len() != rows * cols {
        return Err(Error::Param(format!(
            "{} values cannot fill a {rows}x{cols} image",
            values.len()
        )));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let degenerate = !(span > 1e-12 * hi.abs().max(lo.abs()).max(1e-300));
    let pixels = values
        .iter()
        .map(|&v| {
            if degenerate {
                128
            } else {
                ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
            }
        })
        .collect();
    GrayImage::new(rows, cols, pixels)
}
