//! 8-bit grayscale images, PGM (P2/P5) I/O and region histograms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImageError {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("truncated pixel data: expected {expected} samples, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("unsupported maxval {0} (only 8-bit PGM is supported)")]
    UnsupportedMaxval(u32),
    #[error("malformed pixel data: {0}")]
    MalformedData(String),
    #[error("rectangle {0:?} lies outside the {1}x{2} image")]
    RectOutOfBounds(Rect, usize, usize),
    #[error("invalid image dimensions {width}x{height} for {len} pixels")]
    InvalidDimensions {
        width: usize,
        height: usize,
        len: usize,
    },
}

/// Row-major 8-bit grayscale image with a top-left origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || width.checked_mul(height) != Some(pixels.len()) {
            return Err(ImageError::InvalidDimensions {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, ImageError> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn full_rect(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    /// Row slice of `r` on image row `y`.
    pub(crate) fn row_span(&self, r: &Rect, y: usize) -> &[u8] {
        let start = y * self.width + r.x0;
        &self.pixels[start..start + r.w]
    }

    pub fn contains(&self, r: &Rect) -> bool {
        r.w >= 1
            && r.h >= 1
            && r.x0.checked_add(r.w).is_some_and(|e| e <= self.width)
            && r.y0.checked_add(r.h).is_some_and(|e| e <= self.height)
    }
}

/// Axis-aligned pixel rectangle; `(x0, y0)` is inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x0: usize, y0: usize, w: usize, h: usize) -> Self {
        Self { x0, y0, w, h }
    }

    pub const fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn x1(&self) -> usize {
        self.x0 + self.w
    }

    pub fn y1(&self) -> usize {
        self.y0 + self.h
    }
}

/// Gray-level counts of a region.
#[derive(Clone, PartialEq, Eq)]
pub struct Histogram256 {
    counts: [u64; 256],
}

impl std::fmt::Debug for Histogram256 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let nonzero: Vec<(usize, u64)> = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(g, &c)| (g, c))
            .collect();
        f.debug_struct("Histogram256")
            .field("nonzero", &nonzero)
            .finish()
    }
}

impl Default for Histogram256 {
    fn default() -> Self {
        Self { counts: [0; 256] }
    }
}

impl Histogram256 {
    pub fn from_counts(counts: [u64; 256]) -> Self {
        Self { counts }
    }

    pub fn from_values(values: impl IntoIterator<Item = u8>) -> Self {
        let mut h = Self::default();
        for v in values {
            h.counts[v as usize] += 1;
        }
        h
    }

    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn add(&mut self, other: &Histogram256) {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += b;
        }
    }
}

pub fn region_histogram(img: &GrayImage, r: &Rect) -> Result<Histogram256, ImageError> {
    if !img.contains(r) {
        return Err(ImageError::RectOutOfBounds(*r, img.width, img.height));
    }
    let mut h = Histogram256::default();
    for y in r.y0..r.y1() {
        for &v in img.row_span(r, y) {
            h.counts[v as usize] += 1;
        }
    }
    Ok(h)
}

/// Canonical binary output: `"P5\n<w> <h>\n255\n"` followed by raw pixels.
pub fn save_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.pixels.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&img.pixels);
    out
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u32, ImageError> {
        let tok = self
            .token()
            .ok_or_else(|| ImageError::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| {
                ImageError::MalformedHeader(format!(
                    "non-numeric {what}: {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }
}

/// Parses a binary (P5) or ASCII (P2) PGM with maxval at most 255.
///
/// Sample values are kept as stored; no rescaling to 255 is applied.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    let mut rd = HeaderReader { bytes, pos: 0 };
    let binary = match rd.token() {
        Some(b"P5") => true,
        Some(b"P2") => false,
        Some(other) => {
            return Err(ImageError::MalformedHeader(format!(
                "bad magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
        None => return Err(ImageError::MalformedHeader("empty input".into())),
    };
    let width = rd.number("width")? as usize;
    let height = rd.number("height")? as usize;
    let maxval = rd.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(ImageError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 255 {
        return Err(ImageError::UnsupportedMaxval(maxval));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| ImageError::MalformedHeader("dimensions overflow".into()))?;

    let pixels = if binary {
        // exactly one whitespace byte separates maxval from the raster
        match bytes.get(rd.pos) {
            Some(b) if b.is_ascii_whitespace() => rd.pos += 1,
            _ => {
                return Err(ImageError::MalformedHeader(
                    "missing whitespace after maxval".into(),
                ))
            }
        }
        let data = &bytes[rd.pos..];
        if data.len() < expected {
            return Err(ImageError::TruncatedData {
                expected,
                found: data.len(),
            });
        }
        data[..expected].to_vec()
    } else {
        let mut px = Vec::with_capacity(expected);
        while px.len() < expected {
            let Some(tok) = rd.token() else {
                return Err(ImageError::TruncatedData {
                    expected,
                    found: px.len(),
                });
            };
            let v = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse::<u32>().ok())
                .ok_or_else(|| {
                    ImageError::MalformedData(format!(
                        "non-numeric sample {:?}",
                        String::from_utf8_lossy(tok)
                    ))
                })?;
            if v > maxval {
                return Err(ImageError::MalformedData(format!(
                    "sample {v} exceeds maxval {maxval}"
                )));
            }
            px.push(v as u8);
        }
        px
    };
    GrayImage::new(width, height, pixels)
}
