//! Synthetic phantoms with exact ground truth.
//!
//! Rendering per pixel `(x, y)`, in raster order:
//!
//! 1. start from `background`; every shape containing the pixel overwrites
//!    it with its own intensity (later shapes win);
//! 2. add the illumination ramp `gradient * (x + y) / (width + height - 2)`;
//! 3. add `noise_sigma * z` with `z` standard normal;
//! 4. clamp to `[0, 255]` and round to nearest.
//!
//! The mask is 255 wherever some shape contains the pixel, else 0.
//!
//! Noise comes from ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`).
//! Each 64-bit output `w` becomes a uniform `((w >> 11) + 0.5) / 2^53` in
//! `(0, 1)`; consecutive uniform pairs `(u1, u2)` go through Box-Muller,
//! `r = sqrt(-2 ln u1)`, giving `r cos(2 pi u2)` for even pixels and
//! `r sin(2 pi u2)` for the following odd pixel. One pair is drawn per two
//! pixels whether or not `noise_sigma` is zero.

use quadseg::GrayImage;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    /// `((x - cx) / rx)^2 + ((y - cy) / ry)^2 <= 1`
    Ellipse {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        intensity: f64,
    },
    /// `|x - cx| <= hx` and `|y - cy| <= hy`
    Rectangle {
        cx: f64,
        cy: f64,
        hx: f64,
        hy: f64,
        intensity: f64,
    },
}

impl Shape {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Ellipse { cx, cy, rx, ry, .. } => {
                let (dx, dy) = ((x - cx) / rx, (y - cy) / ry);
                dx * dx + dy * dy <= 1.0
            }
            Shape::Rectangle { cx, cy, hx, hy, .. } => (x - cx).abs() <= hx && (y - cy).abs() <= hy,
        }
    }

    pub fn intensity(&self) -> f64 {
        match *self {
            Shape::Ellipse { intensity, .. } | Shape::Rectangle { intensity, .. } => intensity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub background: f64,
    #[serde(default)]
    pub shapes: Vec<Shape>,
    /// Ramp amplitude in gray levels from the top-left to the bottom-right corner.
    #[serde(default)]
    pub gradient: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn check_level(what: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && (0.0..=255.0).contains(&v) {
        Ok(())
    } else {
        Err(CliError::InvalidSpec(format!(
            "{what} {v} outside [0, 255]"
        )))
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.width == 0 || self.height == 0 {
            return Err(CliError::InvalidSpec(format!(
                "image size {}x{} is empty",
                self.width, self.height
            )));
        }
        check_level("background", self.background)?;
        if !self.gradient.is_finite() {
            return Err(CliError::InvalidSpec("gradient must be finite".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(CliError::InvalidSpec(format!(
                "noise_sigma {} must be finite and nonnegative",
                self.noise_sigma
            )));
        }
        for (i, s) in self.shapes.iter().enumerate() {
            check_level(&format!("shape {i} intensity"), s.intensity())?;
            let (cx, cy, a, b) = match *s {
                Shape::Ellipse { cx, cy, rx, ry, .. } => (cx, cy, rx, ry),
                Shape::Rectangle { cx, cy, hx, hy, .. } => (cx, cy, hx, hy),
            };
            if !(cx.is_finite() && cy.is_finite() && a.is_finite() && b.is_finite()) {
                return Err(CliError::InvalidSpec(format!(
                    "shape {i} has non-finite geometry"
                )));
            }
            if a <= 0.0 || b <= 0.0 {
                return Err(CliError::InvalidSpec(format!(
                    "shape {i} extents must be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let spec: PhantomSpec =
            serde_json::from_str(text).map_err(|e| CliError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (u1, u2) = (self.uniform(), self.uniform());
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Renders `(image, mask)`.
pub fn render_phantom(spec: &PhantomSpec) -> Result<(GrayImage, GrayImage), CliError> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let span = (w + h).saturating_sub(2);
    let mut noise = GaussianStream::new(spec.seed);
    let mut pixels = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            let mut v = spec.background;
            let mut inside = false;
            for s in &spec.shapes {
                if s.contains(fx, fy) {
                    v = s.intensity();
                    inside = true;
                }
            }
            if span > 0 {
                v += spec.gradient * (x + y) as f64 / span as f64;
            }
            v += spec.noise_sigma * noise.next();
            pixels.push(v.clamp(0.0, 255.0).round() as u8);
            mask.push(if inside { 255 } else { 0 });
        }
    }
    Ok((GrayImage::new(w, h, pixels)?, GrayImage::new(w, h, mask)?))
}
