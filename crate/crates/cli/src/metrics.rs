//! Segmentation quality against ground truth.
//!
//! * distortion: fraction of pixels whose label differs from the truth;
//! * reliability: Dice coefficient `2|A n B| / (|A| + |B|)` over foreground
//!   (255) pixels, taken as 1 when both masks are empty.

use quadseg::GrayImage;
use serde::Serialize;

use crate::error::CliError;

pub const DISTORTION_DEFINITION: &str =
    "fraction of pixels whose mask label differs from ground truth";
pub const RELIABILITY_DEFINITION: &str =
    "Dice coefficient 2|A and B| / (|A| + |B|) over foreground (255) pixels; 1 when both are empty";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegMetrics {
    pub distortion: f64,
    pub reliability: f64,
}

fn check_binary(name: &str, img: &GrayImage) -> Result<(), CliError> {
    match img.pixels().iter().position(|&p| p != 0 && p != 255) {
        None => Ok(()),
        Some(i) => Err(CliError::NonBinaryInput(format!(
            "{name} has value {} at pixel ({}, {})",
            img.pixels()[i],
            i % img.width(),
            i / img.width()
        ))),
    }
}

pub fn evaluate_masks(mask: &GrayImage, truth: &GrayImage) -> Result<SegMetrics, CliError> {
    if (mask.width(), mask.height()) != (truth.width(), truth.height()) {
        return Err(CliError::DimensionMismatch(format!(
            "mask is {}x{}, truth is {}x{}",
            mask.width(),
            mask.height(),
            truth.width(),
            truth.height()
        )));
    }
    check_binary("mask", mask)?;
    check_binary("truth", truth)?;
    let (mut differ, mut a, mut b, mut both) = (0u64, 0u64, 0u64, 0u64);
    for (&m, &t) in mask.pixels().iter().zip(truth.pixels()) {
        let (fm, ft) = (m == 255, t == 255);
        differ += (fm != ft) as u64;
        a += fm as u64;
        b += ft as u64;
        both += (fm && ft) as u64;
    }
    let n = mask.pixels().len() as f64;
    let reliability = if a + b == 0 {
        1.0
    } else {
        2.0 * both as f64 / (a + b) as f64
    };
    Ok(SegMetrics {
        distortion: differ as f64 / n,
        reliability,
    })
}

impl SegMetrics {
    /// JSON document with 4-decimal values and the metric definitions.
    pub fn to_report(&self) -> String {
        format!(
            "{{\n  \"distortion\": {:.4},\n  \"reliability\": {:.4},\n  \"definitions\": {{\n    \"distortion\": \"{}\",\n    \"reliability\": \"{}\"\n  }}\n}}\n",
            self.distortion, self.reliability, DISTORTION_DEFINITION, RELIABILITY_DEFINITION
        )
    }
}
